"""Anticoagulant-dosing scenario: arms are dose levels plus a no-dose option.

Patients carry a clinical feature vector plus two binary risk flags.
When both flags are present, prescribing any dose violates the behavior
constraint; only the no-dose arm is allowed. No-dose is never the
correct dose, so obeying the constraint always costs reward.
"""

from __future__ import annotations

import csv

import numpy as np

from ..errors import ParameterError
from .base import EnvironmentSpec

DOSE_ARMS = ("low", "medium", "high", "no_dose")
NO_DOSE_ARM = 3
DOSE_LABELS = ("low", "medium", "high")
DEFAULT_BASE_D = 39

# Fixed scoring weights for the synthetic dose rule; irregular but
# deterministic so regenerated datasets agree across runs.
def _dose_weights(base_d: int) -> np.ndarray:
    return np.cos(1.0 + np.arange(base_d))


def generate_warfarin_patients(
    num_patients: int, base_d: int, rng: np.random.Generator
) -> tuple[np.ndarray, np.ndarray]:
    """Synthetic patients: standard-normal features, dose label by score tercile."""
    if num_patients < 1:
        raise ParameterError(f"num_patients must be positive, got {num_patients}")
    if base_d < 1:
        raise ParameterError(f"base_d must be positive, got {base_d}")
    features = rng.standard_normal((num_patients, base_d))
    scores = features @ _dose_weights(base_d)
    lo, hi = np.quantile(scores, (1.0 / 3.0, 2.0 / 3.0))
    labels = np.where(scores <= lo, 0, np.where(scores <= hi, 1, 2))
    return features, labels.astype(int)


def warfarin_env_from_arrays(
    features: np.ndarray,
    labels: np.ndarray,
    flag_probability: float,
    rng: np.random.Generator,
) -> EnvironmentSpec:
    """Attach risk flags to given patients and assemble the environment."""
    features = np.asarray(features, dtype=float)
    labels = np.asarray(labels, dtype=int)
    if features.ndim != 2 or labels.shape != (features.shape[0],):
        raise ParameterError("features must be 2-d with one label per row")
    if labels.size and (labels.min() < 0 or labels.max() >= len(DOSE_LABELS)):
        raise ParameterError(f"labels must index {DOSE_LABELS}")
    if not 0.0 <= flag_probability <= 1.0:
        raise ParameterError(
            f"flag_probability must lie in [0, 1], got {flag_probability}"
        )
    n = features.shape[0]
    flags = (rng.random((n, 2)) < flag_probability).astype(float)

    contexts = np.hstack([features, flags])
    rewards = np.zeros((n, len(DOSE_ARMS)))
    rewards[np.arange(n), labels] = 1.0  # no-dose column stays 0

    allowed = np.ones((n, len(DOSE_ARMS)), dtype=np.int8)
    both = (flags[:, 0] == 1) & (flags[:, 1] == 1)
    allowed[both, :NO_DOSE_ARM] = 0  # no-dose always allowed

    return EnvironmentSpec(
        contexts=contexts, rewards=rewards, allowed=allowed, scenario="warfarin"
    )


def build_warfarin_env(
    num_patients: int,
    base_d: int = DEFAULT_BASE_D,
    flag_probability: float = 0.25,
    dose_model="linear",
    rng: np.random.Generator | None = None,
) -> EnvironmentSpec:
    """Generate patients and build the dosing environment.

    ``dose_model`` is either the built-in "linear" tercile rule or a
    callable mapping the feature matrix to integer labels.
    """
    if rng is None:
        rng = np.random.default_rng()
    if dose_model == "linear":
        features, labels = generate_warfarin_patients(num_patients, base_d, rng)
    elif callable(dose_model):
        if num_patients < 1:
            raise ParameterError(f"num_patients must be positive, got {num_patients}")
        features = rng.standard_normal((num_patients, base_d))
        labels = np.asarray(dose_model(features), dtype=int)
    else:
        raise ParameterError(f"unknown dose model: {dose_model!r}")
    return warfarin_env_from_arrays(features, labels, flag_probability, rng)


def save_warfarin_csv(features: np.ndarray, labels: np.ndarray, path) -> None:
    features = np.asarray(features, dtype=float)
    labels = np.asarray(labels, dtype=int)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow([f"f_{i + 1}" for i in range(features.shape[1])] + ["label"])
        for row, label in zip(features, labels):
            writer.writerow([repr(float(x)) for x in row] + [DOSE_LABELS[label]])


def load_warfarin_csv(path, base_d: int = DEFAULT_BASE_D) -> tuple[np.ndarray, np.ndarray]:
    """Read ``f_1,...,f_<d>,label`` rows; labels are low/medium/high."""
    expected = [f"f_{i + 1}" for i in range(base_d)] + ["label"]
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != expected:
            missing = [c for c in expected if c not in (header or [])]
            raise ParameterError(f"{path}: unexpected header (missing {missing[:4]})")
        features, labels = [], []
        label_index = {name: i for i, name in enumerate(DOSE_LABELS)}
        for row in reader:
            if not row:
                continue
            if len(row) != base_d + 1:
                raise ParameterError(f"{path}: row width {len(row)} != {base_d + 1}")
            if row[-1] not in label_index:
                raise ParameterError(f"{path}: unknown label {row[-1]!r}")
            features.append([float(x) for x in row[:-1]])
            labels.append(label_index[row[-1]])
    if not features:
        raise ParameterError(f"{path}: no patient rows")
    return np.array(features), np.array(labels, dtype=int)
