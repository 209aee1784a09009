"""Experiment configuration: schema, defaults, validation, YAML round trip.

The config file is a single YAML document with nested sections. Unknown
keys are rejected with the offending key path so typos fail loudly
instead of silently running defaults.
"""

from __future__ import annotations

from dataclasses import asdict, dataclass, field
from pathlib import Path

import yaml

from .errors import ConfigurationError

SCENARIOS = ("movie", "warfarin")
TEACHING_METHODS = ("cts", "random")


@dataclass
class SamplerSettings:
    """R / z / gamma constants; the derived sampling scale picks up the
    environment's dimensionality at build time."""

    R: float = 1.0
    z: float = 0.5
    gamma: float = 0.1


@dataclass
class MovieSettings:
    n_users: int = 25
    n_movies: int = 1400
    density: float = 1.0
    anticorrelated: bool = True
    band_weights: list = field(default_factory=lambda: [1.0] * 7)
    preference_scale: float = 0.35
    restricted_boost: float = 0.9
    noise_scale: float = 0.3
    genre_count_probs: list = field(default_factory=lambda: [0.55, 0.35, 0.10])


@dataclass
class WarfarinSettings:
    num_patients: int = 4000
    base_d: int = 39
    flag_probability: float = 0.25


@dataclass
class ExperimentConfig:
    scenario: str
    horizon: int
    teaching_budgets: list = field(default_factory=lambda: [1000])
    teaching_methods: list = field(default_factory=lambda: ["random"])
    sigma_grid: list = field(default_factory=lambda: [0.0, 0.25, 0.5, 0.75, 1.0])
    n_folds: int = 5
    train_size: int = 200
    seeds: list = field(default_factory=lambda: [0])
    master_seed: int = 0
    sampler: SamplerSettings = field(default_factory=SamplerSettings)
    constrained_sampler: SamplerSettings | None = None
    constrained_term: str = "sampled"
    movie: MovieSettings = field(default_factory=MovieSettings)
    warfarin: WarfarinSettings = field(default_factory=WarfarinSettings)
    data_dir: str | None = None
    out_dir: str = "out"
    policy_path: str | None = None


def _reject_unknown(section: dict, allowed, path: str) -> None:
    unknown = sorted(set(section) - set(allowed))
    if unknown:
        raise ConfigurationError(f"{path}: unknown key(s) {unknown}")


def _require(cond: bool, path: str, message: str) -> None:
    if not cond:
        raise ConfigurationError(f"{path}: {message}")


def _section(raw: dict, key: str, cls, path: str):
    value = raw.get(key)
    if value is None:
        return cls()
    _require(isinstance(value, dict), f"{path}.{key}", "must be a mapping")
    fields = cls.__dataclass_fields__
    _reject_unknown(value, fields, f"{path}.{key}")
    return cls(**value)


def config_from_dict(raw: dict, path: str = "config") -> ExperimentConfig:
    """Validate a parsed mapping and apply defaults."""
    _require(isinstance(raw, dict), path, "top level must be a mapping")
    _reject_unknown(raw, ExperimentConfig.__dataclass_fields__, path)
    _require("scenario" in raw, path, "missing required key 'scenario'")
    _require("horizon" in raw, path, "missing required key 'horizon'")

    cfg = ExperimentConfig(
        scenario=raw["scenario"],
        horizon=raw["horizon"],
        sampler=_section(raw, "sampler", SamplerSettings, path),
        movie=_section(raw, "movie", MovieSettings, path),
        warfarin=_section(raw, "warfarin", WarfarinSettings, path),
    )
    if raw.get("constrained_sampler") is not None:
        cfg.constrained_sampler = _section(
            raw, "constrained_sampler", SamplerSettings, path
        )
    for key in (
        "teaching_budgets",
        "teaching_methods",
        "sigma_grid",
        "n_folds",
        "train_size",
        "seeds",
        "master_seed",
        "constrained_term",
        "data_dir",
        "out_dir",
        "policy_path",
    ):
        if key in raw and raw[key] is not None:
            setattr(cfg, key, raw[key])
    validate_config(cfg, path)
    return cfg


def validate_config(cfg: ExperimentConfig, path: str = "config") -> None:
    _require(cfg.scenario in SCENARIOS, f"{path}.scenario",
             f"{cfg.scenario!r} not one of {SCENARIOS}")
    _require(isinstance(cfg.horizon, int) and cfg.horizon >= 1,
             f"{path}.horizon", f"{cfg.horizon!r} must be a positive integer")
    _require(isinstance(cfg.teaching_budgets, list) and cfg.teaching_budgets,
             f"{path}.teaching_budgets", "must be a nonempty list")
    for i, n in enumerate(cfg.teaching_budgets):
        _require(isinstance(n, int) and n >= 0,
                 f"{path}.teaching_budgets[{i}]", f"{n!r} must be an integer >= 0")
    _require(isinstance(cfg.teaching_methods, list) and cfg.teaching_methods,
             f"{path}.teaching_methods", "must be a nonempty list")
    for i, m in enumerate(cfg.teaching_methods):
        _require(m in TEACHING_METHODS,
                 f"{path}.teaching_methods[{i}]", f"{m!r} not one of {TEACHING_METHODS}")
    _require(isinstance(cfg.sigma_grid, list) and cfg.sigma_grid,
             f"{path}.sigma_grid", "must be a nonempty list")
    for i, s in enumerate(cfg.sigma_grid):
        _require(isinstance(s, (int, float)) and 0.0 <= float(s) <= 1.0,
                 f"{path}.sigma_grid[{i}]", f"{s!r} outside [0, 1]")
    _require(isinstance(cfg.n_folds, int) and cfg.n_folds >= 1,
             f"{path}.n_folds", "must be a positive integer")
    _require(isinstance(cfg.train_size, int) and cfg.train_size >= 1,
             f"{path}.train_size", "must be a positive integer")
    _require(isinstance(cfg.seeds, list) and cfg.seeds,
             f"{path}.seeds", "must be a nonempty list")
    for i, s in enumerate(cfg.seeds):
        _require(isinstance(s, int) and s >= 0,
                 f"{path}.seeds[{i}]", f"{s!r} must be a nonnegative integer")
    _require(isinstance(cfg.master_seed, int) and cfg.master_seed >= 0,
             f"{path}.master_seed", "must be a nonnegative integer")
    _require(cfg.constrained_term in ("sampled", "mean"),
             f"{path}.constrained_term",
             f"{cfg.constrained_term!r} not one of ('sampled', 'mean')")

    for name, sampler in (("sampler", cfg.sampler),
                          ("constrained_sampler", cfg.constrained_sampler)):
        if sampler is None:
            continue
        _require(sampler.R > 0, f"{path}.{name}.R", "must be positive")
        _require(0 < sampler.z <= 1, f"{path}.{name}.z", "must lie in (0, 1]")
        _require(0 < sampler.gamma < 1, f"{path}.{name}.gamma", "must lie in (0, 1)")

    m = cfg.movie
    _require(m.n_users >= 1, f"{path}.movie.n_users", "must be positive")
    _require(m.n_movies >= 1, f"{path}.movie.n_movies", "must be positive")
    _require(0 < m.density <= 1, f"{path}.movie.density", "must lie in (0, 1]")
    _require(isinstance(m.band_weights, list) and len(m.band_weights) == 7,
             f"{path}.movie.band_weights", "must list 7 weights")
    _require(
        isinstance(m.genre_count_probs, list)
        and m.genre_count_probs
        and abs(sum(m.genre_count_probs) - 1.0) < 1e-9,
        f"{path}.movie.genre_count_probs", "must be probabilities summing to 1",
    )
    w = cfg.warfarin
    _require(w.num_patients >= 1, f"{path}.warfarin.num_patients", "must be positive")
    _require(w.base_d >= 1, f"{path}.warfarin.base_d", "must be positive")
    _require(0 <= w.flag_probability <= 1,
             f"{path}.warfarin.flag_probability", "must lie in [0, 1]")

    n_contexts = m.n_movies if cfg.scenario == "movie" else w.num_patients
    _require(cfg.n_folds * cfg.train_size <= n_contexts,
             f"{path}.n_folds",
             f"{cfg.n_folds} folds x {cfg.train_size} training contexts exceed "
             f"the {n_contexts} available")


def config_to_dict(cfg: ExperimentConfig) -> dict:
    doc = asdict(cfg)
    if doc["constrained_sampler"] is None:
        del doc["constrained_sampler"]
    return doc


def parse_config(path) -> ExperimentConfig:
    """Read and validate a YAML config file."""
    path = Path(path)
    if not path.exists():
        raise ConfigurationError(f"config file not found: {path}")
    try:
        raw = yaml.safe_load(path.read_text())
    except yaml.YAMLError as exc:
        raise ConfigurationError(f"{path}: not valid YAML: {exc}") from exc
    if raw is None:
        raise ConfigurationError(f"{path}: empty config")
    return config_from_dict(raw, path=str(path))


def serialize_config(cfg: ExperimentConfig) -> str:
    return yaml.safe_dump(config_to_dict(cfg), sort_keys=True)
