"""Environment container shared by every scenario.

An environment is a finite, immutable stream: one context per step, a
reward per (step, arm), and a binary allowed flag per (step, arm). Every
step is guaranteed to have at least one allowed arm so a masked agent is
never stranded.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import ParameterError, ShapeError


@dataclass(frozen=True)
class StepOutcome:
    """What one pull returned: the reward is delivered even on a violation."""

    reward: float
    allowed: int
    violation: int
    best_reward: float


@dataclass(frozen=True)
class EnvironmentSpec:
    """Immutable context/reward/allowed stream for one scenario."""

    contexts: np.ndarray  # (n_steps, d)
    rewards: np.ndarray  # (n_steps, K) in [0, 1]
    allowed: np.ndarray  # (n_steps, K) in {0, 1}
    scenario: str = "synthetic"

    def __post_init__(self):
        contexts = np.ascontiguousarray(self.contexts, dtype=float)
        rewards = np.ascontiguousarray(self.rewards, dtype=float)
        allowed = np.ascontiguousarray(self.allowed, dtype=np.int8)
        if contexts.ndim != 2 or rewards.ndim != 2:
            raise ShapeError("contexts and rewards must be 2-d arrays")
        if contexts.shape[1] < 1:
            raise ParameterError("context dimensionality must be at least 1")
        if rewards.shape[0] != contexts.shape[0]:
            raise ShapeError(
                f"rewards rows {rewards.shape[0]} != contexts rows {contexts.shape[0]}"
            )
        if allowed.shape != rewards.shape:
            raise ShapeError(
                f"allowed shape {allowed.shape} != rewards shape {rewards.shape}"
            )
        if rewards.shape[1] < 1:
            raise ParameterError("environment needs at least one arm")
        if not np.all(np.isfinite(contexts)):
            raise ParameterError("contexts contain non-finite entries")
        if np.any(rewards < 0) or np.any(rewards > 1):
            raise ParameterError("rewards must lie in [0, 1]; refusing to clamp")
        if not np.all(np.isin(allowed, (0, 1))):
            raise ParameterError("allowed flags must be 0/1")
        if np.any(allowed.sum(axis=1) == 0):
            bad = int(np.flatnonzero(allowed.sum(axis=1) == 0)[0])
            raise ParameterError(f"step {bad} has no allowed arm")
        for arr in (contexts, rewards, allowed):
            arr.flags.writeable = False
        object.__setattr__(self, "contexts", contexts)
        object.__setattr__(self, "rewards", rewards)
        object.__setattr__(self, "allowed", allowed)

    @property
    def n_steps(self) -> int:
        return self.contexts.shape[0]

    @property
    def n_arms(self) -> int:
        return self.rewards.shape[1]

    @property
    def d(self) -> int:
        return self.contexts.shape[1]

    def allowed_indices(self, t: int) -> np.ndarray:
        return np.flatnonzero(self.allowed[t])

    def step(self, t: int, arm: int) -> StepOutcome:
        return env_step(self, t, arm)

    def subset(self, indices) -> "EnvironmentSpec":
        """New environment visiting the given steps in the given order.

        Indices may repeat; this is how a short context pool is replayed
        out to a long presentation stream.
        """
        indices = np.asarray(indices, dtype=int)
        if indices.size == 0:
            raise ParameterError("subset needs at least one step")
        if indices.min() < 0 or indices.max() >= self.n_steps:
            raise IndexError(f"subset indices outside [0, {self.n_steps})")
        return EnvironmentSpec(
            contexts=self.contexts[indices],
            rewards=self.rewards[indices],
            allowed=self.allowed[indices],
            scenario=self.scenario,
        )


def env_step(env: EnvironmentSpec, t: int, arm: int) -> StepOutcome:
    """Resolve one pull: reward, allowed flag, violation, best achievable reward."""
    if not 0 <= t < env.n_steps:
        raise IndexError(f"step {t} outside [0, {env.n_steps})")
    if not 0 <= arm < env.n_arms:
        raise IndexError(f"arm {arm} outside [0, {env.n_arms})")
    allowed = int(env.allowed[t, arm])
    return StepOutcome(
        reward=float(env.rewards[t, arm]),
        allowed=allowed,
        violation=1 - allowed,
        best_reward=float(env.rewards[t].max()),
    )


def split_folds(
    contexts,
    n_folds: int = 5,
    train_size: int = 200,
    rng: np.random.Generator | None = None,
) -> list[tuple[np.ndarray, np.ndarray]]:
    """Disjoint training subsets with complementary test sets.

    ``contexts`` may be a count or any sized sequence. Each fold's
    training set has exactly ``train_size`` indices; training sets are
    pairwise disjoint; each test set is the sorted complement of its
    training set.
    """
    n = contexts if isinstance(contexts, (int, np.integer)) else len(contexts)
    n = int(n)
    if n_folds < 1 or train_size < 1:
        raise ParameterError("n_folds and train_size must be positive")
    if n_folds * train_size > n:
        raise ParameterError(
            f"need {n_folds * train_size} contexts for {n_folds} folds of "
            f"{train_size}, only {n} available"
        )
    if rng is None:
        rng = np.random.default_rng()
    perm = rng.permutation(n)
    folds = []
    for i in range(n_folds):
        train = np.sort(perm[i * train_size : (i + 1) * train_size])
        mask = np.ones(n, dtype=bool)
        mask[train] = False
        folds.append((train, np.flatnonzero(mask)))
    return folds
