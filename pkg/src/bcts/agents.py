"""Arm-selection policies and the two-phase agent loops.

Phase one (``learn_constraints``) queries a teacher environment for
binary allowed/disallowed feedback and fits one posterior per arm over
that signal. Phase two (``run_online``) runs reward-driven selection,
optionally blending sampled scores from the frozen constrained policy
with the online reward posteriors.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from enum import Enum
from pathlib import Path

import numpy as np

from .errors import (
    ConfigurationError,
    EmptyArmSetError,
    InfeasibleRoundError,
    ParameterError,
    TruncatedRunError,
)
from .metrics import TrajectoryLog
from .posterior import (
    ArmPosterior,
    SamplerParams,
    init_posterior,
    sample_weights,
    score,
    update_posterior,
)
from .rng import as_seedseq

POLICY_FORMAT_VERSION = 1


class TeachingMethod(str, Enum):
    CTS = "cts"
    RANDOM = "random"


class AgentKind(str, Enum):
    CTS = "cts"
    RANDOM = "random"
    BCTS = "bcts"
    MASK = "mask"


@dataclass
class BlendConfig:
    """Weight between the online-reward term and the constrained term.

    ``sigma_online = 1`` ignores the constrained policy entirely;
    ``sigma_online = 0`` ignores online rewards. ``constrained_term``
    selects whether the constrained score uses a posterior sample
    ("sampled") or the posterior mean ("mean").
    """

    sigma_online: float
    constrained_term: str = "sampled"

    def __post_init__(self):
        if not 0.0 <= self.sigma_online <= 1.0:
            raise ParameterError(
                f"sigma_online must lie in [0, 1], got {self.sigma_online}"
            )
        if self.constrained_term not in ("sampled", "mean"):
            raise ParameterError(
                f"constrained_term must be 'sampled' or 'mean', got "
                f"{self.constrained_term!r}"
            )


@dataclass
class ConstrainedPolicy:
    """Per-arm posteriors learned in the teaching phase, frozen afterwards."""

    posteriors: list[ArmPosterior]
    teaching_method: TeachingMethod
    teaching_budget: int

    def __post_init__(self):
        if not self.posteriors:
            raise ParameterError("constrained policy needs at least one arm")
        dims = {p.d for p in self.posteriors}
        if len(dims) != 1:
            raise ParameterError(f"arm posteriors disagree on dimension: {dims}")

    @property
    def n_arms(self) -> int:
        return len(self.posteriors)

    @property
    def d(self) -> int:
        return self.posteriors[0].d

    def freeze(self) -> "ConstrainedPolicy":
        """Mark all posterior arrays read-only; further updates raise."""
        for p in self.posteriors:
            for arr in (p.B, p.g, p.mu_hat, p.B_inv):
                arr.flags.writeable = False
        return self

    def state_bytes(self) -> bytes:
        """Canonical byte snapshot of every arm, for immutability checks."""
        h = hashlib.sha256()
        for p in self.posteriors:
            h.update(p.B.tobytes())
            h.update(p.g.tobytes())
            h.update(p.mu_hat.tobytes())
            h.update(p.update_count.to_bytes(8, "little"))
        return h.digest()


@dataclass
class Agent:
    """Selection state for one online run.

    ``kind`` picks the selection rule; BCTS additionally needs a frozen
    constrained policy and a blend weight. Online posteriors are mutated
    by ``run_online``; the constrained policy never is.
    """

    kind: AgentKind
    sampler: SamplerParams
    posteriors: list[ArmPosterior]
    policy: ConstrainedPolicy | None = None
    blend: BlendConfig | None = None
    constrained_sampler: SamplerParams | None = None

    def __post_init__(self):
        self.kind = AgentKind(self.kind)
        if not self.posteriors:
            raise EmptyArmSetError("agent needs at least one arm")
        if self.kind is AgentKind.BCTS:
            if self.policy is None or self.blend is None:
                raise ConfigurationError(
                    "bcts agent requires a constrained policy and a blend config"
                )
            if self.policy.n_arms != len(self.posteriors):
                raise ConfigurationError(
                    f"constrained policy has {self.policy.n_arms} arms, "
                    f"agent has {len(self.posteriors)}"
                )

    @property
    def n_arms(self) -> int:
        return len(self.posteriors)

    @classmethod
    def cts(cls, n_arms: int, sampler: SamplerParams) -> "Agent":
        return cls(AgentKind.CTS, sampler, _fresh_posteriors(n_arms, sampler.d))

    @classmethod
    def random(cls, n_arms: int, sampler: SamplerParams) -> "Agent":
        return cls(AgentKind.RANDOM, sampler, _fresh_posteriors(n_arms, sampler.d))

    @classmethod
    def mask(cls, n_arms: int, sampler: SamplerParams) -> "Agent":
        return cls(AgentKind.MASK, sampler, _fresh_posteriors(n_arms, sampler.d))

    @classmethod
    def bcts(
        cls,
        policy: ConstrainedPolicy,
        sigma_online: float,
        sampler: SamplerParams,
        constrained_sampler: SamplerParams | None = None,
        constrained_term: str = "sampled",
    ) -> "Agent":
        return cls(
            AgentKind.BCTS,
            sampler,
            _fresh_posteriors(policy.n_arms, sampler.d),
            policy=policy,
            blend=BlendConfig(sigma_online, constrained_term),
            constrained_sampler=constrained_sampler,
        )


def _fresh_posteriors(n_arms: int, d: int) -> list[ArmPosterior]:
    if n_arms < 1:
        raise EmptyArmSetError(f"arm count must be positive, got {n_arms}")
    return [init_posterior(d) for _ in range(n_arms)]


def _sampled_scores(posteriors, c, v, rng) -> np.ndarray:
    return np.array([score(sample_weights(p, v, rng), c) for p in posteriors])


def select_cts(
    posteriors: list[ArmPosterior], c: np.ndarray, v: float, rng: np.random.Generator
) -> int:
    """Thompson choice: argmax over arms of the sampled score, first index wins ties."""
    if not posteriors:
        raise EmptyArmSetError("no arms to select from")
    return int(np.argmax(_sampled_scores(posteriors, c, v, rng)))


def select_random(n_arms: int, rng: np.random.Generator) -> int:
    """Uniform arm choice."""
    if n_arms < 1:
        raise EmptyArmSetError(f"arm count must be positive, got {n_arms}")
    return int(rng.integers(n_arms))


def select_mask(
    posteriors: list[ArmPosterior],
    c: np.ndarray,
    v: float,
    allowed,
    rng: np.random.Generator,
) -> int:
    """Thompson choice restricted to the allowed arms.

    Samples every arm (so a full mask consumes the stream identically to
    ``select_cts``) and takes the argmax over the allowed subset.
    """
    if not posteriors:
        raise EmptyArmSetError("no arms to select from")
    allowed_idx = np.asarray(sorted(set(int(a) for a in allowed)), dtype=int)
    if allowed_idx.size == 0:
        raise InfeasibleRoundError("allowed set is empty")
    if allowed_idx[0] < 0 or allowed_idx[-1] >= len(posteriors):
        raise ParameterError(f"allowed indices {allowed_idx} out of range")
    scores = _sampled_scores(posteriors, c, v, rng)
    return int(allowed_idx[np.argmax(scores[allowed_idx])])


def blend_scores(
    online_scores: np.ndarray, constrained_scores: np.ndarray, sigma_online: float
) -> np.ndarray:
    """``sigma * online + (1 - sigma) * constrained``, elementwise."""
    online_scores = np.asarray(online_scores, dtype=float)
    constrained_scores = np.asarray(constrained_scores, dtype=float)
    return sigma_online * online_scores + (1.0 - sigma_online) * constrained_scores


def select_bcts(
    online: list[ArmPosterior],
    constrained: list[ArmPosterior],
    c: np.ndarray,
    v_online: float,
    v_constrained: float,
    sigma_online: float,
    rng_online: np.random.Generator,
    rng_constrained: np.random.Generator,
    constrained_term: str = "sampled",
) -> int:
    """Blended Thompson choice over online and constrained posteriors.

    Online and constrained samples come from separate generators; with
    weight 1 (or 0) the other term is multiplied by exactly zero, so the
    choice coincides exactly with the pure policy on the surviving stream.
    """
    if len(online) != len(constrained):
        raise ConfigurationError(
            f"arm count mismatch: {len(online)} online vs {len(constrained)} constrained"
        )
    on = _sampled_scores(online, c, v_online, rng_online)
    if constrained_term == "mean":
        co = np.array([score(p.mu_hat, c) for p in constrained])
    else:
        co = _sampled_scores(constrained, c, v_constrained, rng_constrained)
    return int(np.argmax(blend_scores(on, co, sigma_online)))


def learn_constraints(
    teacher_env,
    budget: int,
    method: TeachingMethod | str,
    sampler: SamplerParams,
    seed,
) -> ConstrainedPolicy:
    """Run the teaching phase and return the frozen constrained policy.

    Each round draws a context uniformly (with replacement) from the
    teacher environment's stream, picks an arm either by Thompson
    sampling over the constraint signal or uniformly at random, and
    updates that arm's posterior with the binary allowed score
    (1 = allowed).
    """
    method = TeachingMethod(method)
    if budget < 0:
        raise ParameterError(f"teaching budget must be nonnegative, got {budget}")
    if sampler.d != teacher_env.d:
        raise ConfigurationError(
            f"sampler dimension {sampler.d} does not match environment {teacher_env.d}"
        )
    ctx_ss, select_ss = as_seedseq(seed).spawn(2)
    ctx_rng = np.random.default_rng(ctx_ss)
    select_rng = np.random.default_rng(select_ss)

    posteriors = _fresh_posteriors(teacher_env.n_arms, teacher_env.d)
    for _ in range(budget):
        t = int(ctx_rng.integers(teacher_env.n_steps))
        c = teacher_env.contexts[t]
        if method is TeachingMethod.RANDOM:
            arm = select_random(teacher_env.n_arms, select_rng)
        else:
            arm = select_cts(posteriors, c, sampler.v, select_rng)
        update_posterior(posteriors[arm], c, float(teacher_env.allowed[t, arm]))
    return ConstrainedPolicy(posteriors, method, budget).freeze()


def run_online(env, agent: Agent, horizon: int, seed) -> TrajectoryLog:
    """Run the online recommendation phase for ``horizon`` steps.

    Updates only the online posterior of the chosen arm each round; no
    constraint feedback is consumed. Raises ``TruncatedRunError`` (with
    the partial log attached) if the environment stream is shorter than
    the horizon.
    """
    if horizon < 1:
        raise ParameterError(f"horizon must be positive, got {horizon}")
    if agent.sampler.d != env.d:
        raise ConfigurationError(
            f"sampler dimension {agent.sampler.d} does not match environment {env.d}"
        )
    online_ss, constrained_ss = as_seedseq(seed).spawn(2)
    rng_online = np.random.default_rng(online_ss)
    rng_constrained = np.random.default_rng(constrained_ss)
    v_online = agent.sampler.v
    v_constrained = (agent.constrained_sampler or agent.sampler).v

    steps = min(horizon, env.n_steps)
    arms = np.zeros(steps, dtype=np.int64)
    rewards = np.zeros(steps)
    best_rewards = np.zeros(steps)
    violations = np.zeros(steps, dtype=np.int64)

    for t in range(steps):
        c = env.contexts[t]
        if agent.kind is AgentKind.CTS:
            arm = select_cts(agent.posteriors, c, v_online, rng_online)
        elif agent.kind is AgentKind.RANDOM:
            arm = select_random(agent.n_arms, rng_online)
        elif agent.kind is AgentKind.MASK:
            arm = select_mask(
                agent.posteriors, c, v_online, env.allowed_indices(t), rng_online
            )
        else:
            arm = select_bcts(
                agent.posteriors,
                agent.policy.posteriors,
                c,
                v_online,
                v_constrained,
                agent.blend.sigma_online,
                rng_online,
                rng_constrained,
                agent.blend.constrained_term,
            )
        outcome = env.step(t, arm)
        update_posterior(agent.posteriors[arm], c, outcome.reward)
        arms[t] = arm
        rewards[t] = outcome.reward
        best_rewards[t] = outcome.best_reward
        violations[t] = outcome.violation

    log = TrajectoryLog(
        arms=arms,
        rewards=rewards,
        best_rewards=best_rewards,
        violations=violations,
        horizon=horizon,
        scenario=env.scenario,
        context_digest=hashlib.sha256(
            np.ascontiguousarray(env.contexts[:steps]).tobytes()
        ).hexdigest(),
    )
    if steps < horizon:
        raise TruncatedRunError(
            f"environment exhausted after {steps} of {horizon} steps", log
        )
    return log


def save_policy(policy: ConstrainedPolicy, path) -> None:
    """Persist a constrained policy as versioned JSON text."""
    doc = {
        "format_version": POLICY_FORMAT_VERSION,
        "teaching_method": policy.teaching_method.value,
        "teaching_budget": policy.teaching_budget,
        "n_arms": policy.n_arms,
        "d": policy.d,
        "arms": [
            {
                "B": p.B.tolist(),
                "g": p.g.tolist(),
                "mu_hat": p.mu_hat.tolist(),
                "update_count": p.update_count,
            }
            for p in policy.posteriors
        ],
    }
    Path(path).write_text(json.dumps(doc, indent=1) + "\n")


def load_policy(path) -> ConstrainedPolicy:
    """Load a policy persisted by ``save_policy``; returns it frozen."""
    doc = json.loads(Path(path).read_text())
    version = doc.get("format_version")
    if version != POLICY_FORMAT_VERSION:
        raise ConfigurationError(f"unsupported policy format version: {version}")
    d = int(doc["d"])
    posteriors = []
    for entry in doc["arms"]:
        B = np.asarray(entry["B"], dtype=float)
        g = np.asarray(entry["g"], dtype=float)
        mu_hat = np.asarray(entry["mu_hat"], dtype=float)
        if B.shape != (d, d) or g.shape != (d,) or mu_hat.shape != (d,):
            raise ConfigurationError(f"policy file arm shapes inconsistent with d={d}")
        posteriors.append(
            ArmPosterior(
                B=B, g=g, mu_hat=mu_hat, update_count=int(entry["update_count"])
            )
        )
    if len(posteriors) != int(doc["n_arms"]):
        raise ConfigurationError("policy file arm count mismatch")
    return ConstrainedPolicy(
        posteriors,
        TeachingMethod(doc["teaching_method"]),
        int(doc["teaching_budget"]),
    ).freeze()
