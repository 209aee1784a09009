"""Trajectory records and the regret / behavioral-error metrics."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(eq=False)
class TrajectoryLog:
    """Per-step record of one online run.

    ``horizon`` is the requested number of steps; ``len(log)`` may be
    smaller when the run was truncated by environment exhaustion.
    """

    arms: np.ndarray
    rewards: np.ndarray
    best_rewards: np.ndarray
    violations: np.ndarray
    horizon: int
    scenario: str = ""
    context_digest: str = ""

    def __post_init__(self):
        n = len(self.arms)
        for name in ("rewards", "best_rewards", "violations"):
            if len(getattr(self, name)) != n:
                raise ValueError(f"{name} length does not match arms ({n})")
        if np.any(self.rewards < 0) or np.any(self.rewards > 1):
            raise ValueError("rewards must lie in [0, 1]")
        if not np.all(np.isin(self.violations, (0, 1))):
            raise ValueError("violations must be 0/1")

    def __len__(self) -> int:
        return len(self.arms)

    @property
    def truncated(self) -> bool:
        return len(self) < self.horizon

    def __eq__(self, other) -> bool:
        if not isinstance(other, TrajectoryLog):
            return NotImplemented
        return (
            self.horizon == other.horizon
            and self.scenario == other.scenario
            and self.context_digest == other.context_digest
            and np.array_equal(self.arms, other.arms)
            and np.array_equal(self.rewards, other.rewards)
            and np.array_equal(self.best_rewards, other.best_rewards)
            and np.array_equal(self.violations, other.violations)
        )


def _check_prefix(log: TrajectoryLog, t: int) -> int:
    if not 1 <= t <= len(log):
        raise IndexError(f"t={t} outside [1, {len(log)}]")
    return int(t)


def cumulative_average_regret(log: TrajectoryLog, t: int) -> float:
    """Average per-step gap to the best achievable reward over the first t steps."""
    t = _check_prefix(log, t)
    gaps = log.best_rewards[:t] - log.rewards[:t]
    return float(gaps.sum() / t)


def behavioral_error(log: TrajectoryLog, t: int) -> int:
    """Count of constraint violations among the first t steps."""
    t = _check_prefix(log, t)
    return int(log.violations[:t].sum())


def regret_curve(log: TrajectoryLog) -> np.ndarray:
    """Cumulative average regret at every step, as one array."""
    gaps = log.best_rewards - log.rewards
    return np.cumsum(gaps) / np.arange(1, len(log) + 1)


def error_curve(log: TrajectoryLog) -> np.ndarray:
    """Cumulative violation count at every step."""
    return np.cumsum(log.violations)


def reference_rewards(env) -> np.ndarray:
    """Best realized reward per step: the regret reference sequence."""
    return env.rewards.max(axis=1)
