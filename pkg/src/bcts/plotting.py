"""Trajectory CSV schema and the regret / error line charts."""

from __future__ import annotations

import csv
import re
from pathlib import Path

import matplotlib

matplotlib.use("Agg")
import matplotlib.pyplot as plt  # noqa: E402

import numpy as np  # noqa: E402

from .errors import ParameterError  # noqa: E402
from .metrics import TrajectoryLog, error_curve, regret_curve  # noqa: E402

TRAJECTORY_COLUMNS = (
    "t",
    "arm",
    "reward",
    "best_reward",
    "violation",
    "cum_avg_regret",
    "cum_error",
)

_RUN_SUFFIX = re.compile(r"_fold\d+_seed\d+$")
_SIGMA_IN_LABEL = re.compile(r"sigma([0-9.]+)")

plt.rcParams["svg.hashsalt"] = "bcts"


def write_trajectory_csv(log: TrajectoryLog, path) -> None:
    """One row per step, t counted from 1, with both cumulative metrics."""
    r_curve = regret_curve(log)
    e_curve = error_curve(log)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(TRAJECTORY_COLUMNS)
        for i in range(len(log)):
            writer.writerow(
                [
                    i + 1,
                    int(log.arms[i]),
                    repr(float(log.rewards[i])),
                    repr(float(log.best_rewards[i])),
                    int(log.violations[i]),
                    repr(float(r_curve[i])),
                    repr(float(e_curve[i])),
                ]
            )


def read_trajectory_csv(path) -> dict:
    """Parse a trajectory CSV into column arrays; reject wrong or empty files."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != list(TRAJECTORY_COLUMNS):
            missing = [c for c in TRAJECTORY_COLUMNS if c not in (header or [])]
            raise ParameterError(f"{path}: bad trajectory header, missing {missing}")
        rows = [r for r in reader if r]
    if not rows:
        raise ParameterError(f"{path}: trajectory file has no steps")
    cols = list(zip(*rows))
    return {
        "t": np.array([int(x) for x in cols[0]]),
        "arm": np.array([int(x) for x in cols[1]]),
        "reward": np.array([float(x) for x in cols[2]]),
        "best_reward": np.array([float(x) for x in cols[3]]),
        "violation": np.array([int(x) for x in cols[4]]),
        "cum_avg_regret": np.array([float(x) for x in cols[5]]),
        "cum_error": np.array([float(x) for x in cols[6]]),
    }


def _group_label(stem: str) -> str:
    stem = stem[len("traj_"):] if stem.startswith("traj_") else stem
    return _RUN_SUFFIX.sub("", stem)


def _legend_order(label: str):
    if "mask" in label:
        return (-2.0, label)
    if "online" in label:
        return (-1.0, label)
    match = _SIGMA_IN_LABEL.search(label)
    return (float(match.group(1)) if match else 2.0, label)


def emit_plot(inputs, kind: str, out_path) -> Path:
    """Render one line per run group (mask baseline plus each sigma setting).

    ``inputs`` is a trajectory CSV, a list of them, or a directory of
    them; files sharing a stem up to the fold/seed suffix are averaged
    into one line. Nothing is written if any input is empty or
    malformed.
    """
    if kind not in ("regret", "error"):
        raise ParameterError(f"plot kind must be 'regret' or 'error', got {kind!r}")
    if isinstance(inputs, (str, Path)) and Path(inputs).is_dir():
        paths = sorted(Path(inputs).glob("*.csv"))
    elif isinstance(inputs, (str, Path)):
        paths = [Path(inputs)]
    else:
        paths = [Path(p) for p in inputs]
    if not paths:
        raise ParameterError("no trajectory files to plot")

    column = "cum_avg_regret" if kind == "regret" else "cum_error"
    groups: dict[str, list[np.ndarray]] = {}
    for path in paths:
        data = read_trajectory_csv(path)
        groups.setdefault(_group_label(path.stem), []).append(data[column])

    fig, ax = plt.subplots(figsize=(7, 4.5))
    for label in sorted(groups, key=_legend_order):
        curves = groups[label]
        n = min(len(c) for c in curves)
        mean = np.mean([c[:n] for c in curves], axis=0)
        ax.plot(np.arange(1, n + 1), mean, label=label, linewidth=1.2)
    ax.set_xlabel("t")
    ax.set_ylabel("R(t)" if kind == "regret" else "E(t)")
    ax.legend(fontsize=7)
    fig.tight_layout()
    out_path = Path(out_path)
    fig.savefig(out_path, format="svg", metadata={"Date": None})
    plt.close(fig)
    return out_path
