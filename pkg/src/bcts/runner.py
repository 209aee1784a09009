"""Cross-validated sweep runner.

One experiment = one scenario, one fold split, and a grid of
(teaching method x teaching budget x sigma x seed) runs per fold, plus
two baselines per (fold, seed): the omniscient mask agent and the pure
reward-driven agent ("online"). The presentation order of test contexts
is resampled once per fold and reused across the whole grid, so every
setting sees the identical stream.
"""

from __future__ import annotations

import csv
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .agents import Agent, ConstrainedPolicy, learn_constraints, load_policy, run_online
from .config import ExperimentConfig
from .environments import (
    DEFAULT_CONSTRAINT_MATRIX,
    MovieDataset,
    build_movie_env,
    cf_complete,
    generate_movie_dataset,
    generate_warfarin_patients,
    impute_ages,
    load_constraint_matrix,
    load_genres_csv,
    load_ratings_csv,
    load_warfarin_csv,
    split_folds,
    warfarin_env_from_arrays,
)
from .errors import ConfigurationError, ParameterError
from .posterior import SamplerParams
from .rng import BANDS, DATA, FLAGS, FOLDS, PRESENT, RUN, substream
from .metrics import TrajectoryLog, behavioral_error, cumulative_average_regret

RESULT_COLUMNS = ("scenario", "method", "N", "sigma", "fold", "seed", "R_T", "E_T")

RATINGS_FILE = "ratings.csv"
GENRES_FILE = "genres.csv"
CONSTRAINTS_FILE = "constraints.txt"
WARFARIN_FILE = "warfarin.csv"

_METHOD_ORDER = {"mask": 0, "online": 1, "cts": 2, "random": 3}

# Tags separating the per-run substream families.
_MASK_TAG, _ONLINE_TAG, _TEACH_TAG, _BCTS_TAG = 0, 1, 2, 3


@dataclass(frozen=True)
class RunRow:
    """One summary line; aggregate rows use fold AGG/AGGMIN/AGGMAX and no seed."""

    scenario: str
    method: str
    N: int
    sigma: float | None
    fold: str
    seed: str
    R_T: float
    E_T: float


@dataclass
class ResultTable:
    rows: list
    aggregates: list

    def all_rows(self) -> list:
        return list(self.rows) + list(self.aggregates)

    def to_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(RESULT_COLUMNS)
            for row in self.all_rows():
                writer.writerow(
                    [
                        row.scenario,
                        row.method,
                        row.N,
                        "" if row.sigma is None else repr(float(row.sigma)),
                        row.fold,
                        row.seed,
                        repr(float(row.R_T)),
                        repr(float(row.E_T)),
                    ]
                )

    @classmethod
    def from_csv(cls, path) -> "ResultTable":
        rows, aggregates = [], []
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader, None)
            if header != list(RESULT_COLUMNS):
                missing = [c for c in RESULT_COLUMNS if c not in (header or [])]
                raise ParameterError(
                    f"{path}: bad summary header (missing {missing})"
                )
            for cells in reader:
                if not cells:
                    continue
                row = RunRow(
                    scenario=cells[0],
                    method=cells[1],
                    N=int(cells[2]),
                    sigma=None if cells[3] == "" else float(cells[3]),
                    fold=cells[4],
                    seed=cells[5],
                    R_T=float(cells[6]),
                    E_T=float(cells[7]),
                )
                (aggregates if row.fold.startswith("AGG") else rows).append(row)
        return cls(rows, aggregates)


def recompute_aggregates(rows: list) -> list:
    """Mean / min / max over (fold, seed) per grid point, in a fixed order."""
    groups: dict = {}
    for row in rows:
        groups.setdefault((row.scenario, row.method, row.N, row.sigma), []).append(row)
    out = []
    for key in sorted(groups, key=lambda k: (_METHOD_ORDER.get(k[1], 99), k[2],
                                             -1.0 if k[3] is None else k[3])):
        scenario, method, n, sigma = key
        r_vals = np.array([r.R_T for r in groups[key]])
        e_vals = np.array([r.E_T for r in groups[key]])
        for fold, reduce in (("AGG", np.mean), ("AGGMIN", np.min), ("AGGMAX", np.max)):
            out.append(
                RunRow(scenario, method, n, sigma, fold, "",
                       float(reduce(r_vals)), float(reduce(e_vals)))
            )
    return out


@dataclass
class ExperimentResult:
    table: ResultTable
    trajectories: dict  # label -> TrajectoryLog


def trajectory_label(scenario, method, fold, seed, N=None, sigma=None) -> str:
    parts = [scenario, method]
    if N is not None:
        parts.append(f"N{N}")
    if sigma is not None:
        parts.append(f"sigma{float(sigma)!r}")
    parts.append(f"fold{fold}")
    parts.append(f"seed{seed}")
    return "_".join(parts)


def synthesize_movie_dataset(config: ExperimentConfig, master_seed: int) -> MovieDataset:
    m = config.movie
    # Bands come from their own substream so a dataset reloaded from the
    # gen-data CSVs (which do not persist bands) gets the same assignment.
    bands = impute_ages(m.n_users, m.band_weights, substream(master_seed, BANDS))
    return generate_movie_dataset(
        n_users=m.n_users,
        n_movies=m.n_movies,
        rng=substream(master_seed, DATA),
        band_weights=m.band_weights,
        density=m.density,
        anticorrelated=m.anticorrelated,
        preference_scale=m.preference_scale,
        restricted_boost=m.restricted_boost,
        noise_scale=m.noise_scale,
        genre_count_probs=tuple(m.genre_count_probs),
        bands=bands,
    )


def load_movie_dataset(data_dir, config: ExperimentConfig, master_seed: int) -> MovieDataset:
    data_dir = Path(data_dir)
    ratings, user_ids, movie_ids = load_ratings_csv(data_dir / RATINGS_FILE)
    genres = load_genres_csv(data_dir / GENRES_FILE, movie_ids)
    cm_path = data_dir / CONSTRAINTS_FILE
    cm = load_constraint_matrix(cm_path) if cm_path.exists() else DEFAULT_CONSTRAINT_MATRIX
    bands = impute_ages(
        len(user_ids), config.movie.band_weights, substream(master_seed, BANDS)
    )
    return MovieDataset(ratings=ratings, genres=genres, bands=bands, cm=cm)


def build_base_env(config: ExperimentConfig, master_seed: int):
    """Build the full context/reward/allowed stream for the scenario."""
    if config.scenario == "movie":
        if config.data_dir is not None:
            dataset = load_movie_dataset(config.data_dir, config, master_seed)
        else:
            dataset = synthesize_movie_dataset(config, master_seed)
        ratings = dataset.ratings
        if not ratings.complete:
            ratings = cf_complete(ratings)
        return build_movie_env(ratings, dataset.genres, dataset.bands, dataset.cm)

    w = config.warfarin
    if config.data_dir is not None:
        features, labels = load_warfarin_csv(
            Path(config.data_dir) / WARFARIN_FILE, base_d=w.base_d
        )
    else:
        features, labels = generate_warfarin_patients(
            w.num_patients, w.base_d, substream(master_seed, DATA)
        )
    return warfarin_env_from_arrays(
        features, labels, w.flag_probability, substream(master_seed, FLAGS)
    )


def _run_seedseq(master_seed: int, *key: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(int(master_seed), spawn_key=(RUN,) + tuple(key))


def run_experiment(
    config: ExperimentConfig,
    master_seed: int | None = None,
    parallel: int = 1,
    policy: ConstrainedPolicy | None = None,
) -> ExperimentResult:
    """Run the whole grid and return per-run rows, aggregates, trajectories.

    When a persisted policy is supplied (directly or through
    ``config.policy_path``) the teaching stage is skipped and the grid
    collapses to that policy's method and budget.
    """
    master = config.master_seed if master_seed is None else int(master_seed)
    if policy is None and config.policy_path is not None:
        policy = load_policy(config.policy_path)

    env = build_base_env(config, master)
    folds = split_folds(
        env.n_steps, config.n_folds, config.train_size, substream(master, FOLDS)
    )
    sampler = SamplerParams(
        R=config.sampler.R, z=config.sampler.z, gamma=config.sampler.gamma, d=env.d
    )
    c_settings = config.constrained_sampler or config.sampler
    constrained_sampler = SamplerParams(
        R=c_settings.R, z=c_settings.z, gamma=c_settings.gamma, d=env.d
    )
    if policy is not None and policy.d != env.d:
        raise ConfigurationError(
            f"persisted policy dimension {policy.d} != environment {env.d}"
        )

    if policy is not None:
        grid = [(policy.teaching_method.value, policy.teaching_budget)]
    else:
        grid = [(m, n) for m in config.teaching_methods for n in config.teaching_budgets]

    tasks = []  # (label ignored, callable) in deterministic emission order

    for f, (train_idx, test_idx) in enumerate(folds):
        pres_rng = substream(master, PRESENT, f)
        presentation = test_idx[
            pres_rng.integers(0, len(test_idx), size=config.horizon)
        ]
        test_env = env.subset(presentation)
        train_env = env.subset(train_idx)

        for seed_entry in config.seeds:
            tasks.append(_baseline_task(config, test_env, sampler, master, f, seed_entry))

        for m_idx, (method, budget) in enumerate(grid):
            for seed_entry in config.seeds:
                tasks.append(
                    _bcts_task(
                        config,
                        train_env,
                        test_env,
                        sampler,
                        constrained_sampler,
                        master,
                        f,
                        m_idx,
                        method,
                        budget,
                        seed_entry,
                        policy,
                    )
                )

    if parallel > 1:
        with ThreadPoolExecutor(max_workers=parallel) as pool:
            outcomes = list(pool.map(lambda fn: fn(), tasks))
    else:
        outcomes = [fn() for fn in tasks]

    rows, trajectories = [], {}
    digests: dict = {}
    for chunk in outcomes:
        for label, row, log in chunk:
            rows.append(row)
            trajectories[label] = log
            digests.setdefault(row.fold, set()).add(log.context_digest)
    for fold, seen in digests.items():
        if len(seen) != 1:  # pragma: no cover - pinning invariant
            raise RuntimeError(f"fold {fold}: context stream differed across runs")

    table = ResultTable(rows=rows, aggregates=recompute_aggregates(rows))
    return ExperimentResult(table=table, trajectories=trajectories)


def _finish(log: TrajectoryLog, scenario, method, N, sigma, fold, seed):
    t = len(log)
    row = RunRow(
        scenario=scenario,
        method=method,
        N=N,
        sigma=sigma,
        fold=str(fold),
        seed=str(seed),
        R_T=cumulative_average_regret(log, t),
        E_T=float(behavioral_error(log, t)),
    )
    # Baselines have no grid coordinates; grid runs always carry both.
    label = trajectory_label(
        scenario, method, fold, seed,
        N=N if sigma is not None else None, sigma=sigma,
    )
    return label, row, log


def _baseline_task(config, test_env, sampler, master, fold, seed_entry):
    def run():
        out = []
        mask_agent = Agent.mask(test_env.n_arms, sampler)
        log = run_online(
            test_env, mask_agent, config.horizon,
            _run_seedseq(master, fold, seed_entry, _MASK_TAG),
        )
        out.append(_finish(log, config.scenario, "mask", 0, None, fold, seed_entry))

        online_agent = Agent.cts(test_env.n_arms, sampler)
        log = run_online(
            test_env, online_agent, config.horizon,
            _run_seedseq(master, fold, seed_entry, _ONLINE_TAG),
        )
        out.append(_finish(log, config.scenario, "online", 0, None, fold, seed_entry))
        return out

    return run


def _bcts_task(
    config,
    train_env,
    test_env,
    sampler,
    constrained_sampler,
    master,
    fold,
    m_idx,
    method,
    budget,
    seed_entry,
    preloaded_policy,
):
    def run():
        if preloaded_policy is not None:
            policy = preloaded_policy
        else:
            policy = learn_constraints(
                train_env,
                budget,
                method,
                constrained_sampler,
                _run_seedseq(master, fold, seed_entry, _TEACH_TAG, m_idx),
            )
        out = []
        for sigma in config.sigma_grid:
            agent = Agent.bcts(
                policy,
                float(sigma),
                sampler,
                constrained_sampler=constrained_sampler,
                constrained_term=config.constrained_term,
            )
            # The online seed is shared across sigma: every setting faces
            # the same stream and the same online sample draws.
            log = run_online(
                test_env, agent, config.horizon,
                _run_seedseq(master, fold, seed_entry, _BCTS_TAG, m_idx),
            )
            out.append(
                _finish(
                    log, config.scenario, method, budget, float(sigma),
                    fold, seed_entry,
                )
            )
        return out

    return run
