"""Movie-recommendation scenario: arms are users, contexts are genre vectors.

Includes the data-preparation steps (collaborative-filtering completion
of a sparse rating matrix, categorical age-band imputation), the
age-band x genre constraint matrix, a synthetic dataset generator, and
the CSV formats used by the CLI.
"""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..errors import ParameterError, ShapeError
from .base import EnvironmentSpec

AGE_BANDS = ("12-17", "18-24", "25-34", "35-44", "45-54", "55-64", "65+")

DEFAULT_GENRES = (
    "Action",
    "Adventure",
    "Comedy",
    "Drama",
    "Fantasy",
    "Horror",
    "Romance",
    "Sci-Fi",
    "Thriller",
    "Other",
)

# Rows = age bands, columns = genres, 1 = allowed. Younger bands lose
# horror/thriller, older bands lose horror/action; one band is fully
# unrestricted so feasibility is easy to satisfy.
DEFAULT_CONSTRAINT_MATRIX = np.array(
    [
        [1, 1, 1, 1, 1, 0, 1, 1, 0, 1],  # 12-17: no Horror, no Thriller
        [1, 1, 1, 1, 1, 0, 1, 1, 1, 1],  # 18-24: no Horror
        [1, 1, 1, 1, 1, 1, 1, 1, 1, 1],  # 25-34: unrestricted
        [1, 1, 1, 1, 1, 1, 1, 1, 1, 0],  # 35-44: no Other
        [1, 1, 1, 1, 1, 1, 1, 0, 1, 1],  # 45-54: no Sci-Fi
        [0, 1, 1, 1, 1, 1, 1, 1, 1, 1],  # 55-64: no Action
        [0, 1, 1, 1, 1, 0, 1, 1, 1, 1],  # 65+:   no Action, no Horror
    ],
    dtype=np.int8,
)

RATING_MIN = 0.5
RATING_MAX = 5.0


@dataclass
class RatingMatrix:
    """Users x movies ratings on the half-point grid, with an observed mask."""

    values: np.ndarray
    observed: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float)
        self.observed = np.asarray(self.observed, dtype=bool)
        if self.values.ndim != 2 or self.values.shape != self.observed.shape:
            raise ShapeError("values and observed mask must be equal 2-d shapes")
        seen = self.values[self.observed]
        if seen.size and (
            np.any(seen < RATING_MIN)
            or np.any(seen > RATING_MAX)
            or np.any(np.abs(seen * 2 - np.round(seen * 2)) > 1e-9)
        ):
            raise ParameterError(
                f"observed ratings must lie on the 0.5 grid in "
                f"[{RATING_MIN}, {RATING_MAX}]"
            )

    @property
    def n_users(self) -> int:
        return self.values.shape[0]

    @property
    def n_movies(self) -> int:
        return self.values.shape[1]

    @property
    def complete(self) -> bool:
        return bool(self.observed.all())


def round_to_half(x: np.ndarray) -> np.ndarray:
    """Round to the nearest 0.5, halves away from zero toward the next slot up."""
    return np.floor(np.asarray(x, dtype=float) * 2.0 + 0.5) / 2.0


def cf_complete(sparse: RatingMatrix) -> RatingMatrix:
    """Fill missing ratings by user-based collaborative filtering.

    Similarity is the cosine over co-rated items; the prediction is the
    similarity-weighted mean of the ratings given to the movie by other
    users, falling back to the movie's plain mean, then the user's mean,
    then the global mean. Predictions are rounded to the 0.5 grid and
    clamped to the rating range; observed entries pass through untouched.
    """
    values = sparse.values
    observed = sparse.observed
    if observed.all():
        return RatingMatrix(values.copy(), observed.copy())

    empty_users = np.flatnonzero(~observed.any(axis=1))
    if empty_users.size:
        warnings.warn(
            f"users {empty_users.tolist()} have no observed ratings; "
            "filling with the global mean",
            stacklevel=2,
        )
    if not observed.any():
        raise ParameterError("rating matrix has no observed entries at all")

    masked = np.where(observed, values, 0.0)
    masked_sq = masked**2
    obs = observed.astype(float)

    # Cosine over co-rated items: numerator and the two restricted norms
    # are all plain matrix products against the mask.
    num = masked @ masked.T
    norm_self = masked_sq @ obs.T  # [u, v] = sum over co-rated of r_u^2
    norm_other = obs @ masked_sq.T  # [u, v] = sum over co-rated of r_v^2
    denom = np.sqrt(norm_self * norm_other)
    with np.errstate(invalid="ignore", divide="ignore"):
        sim = np.where(denom > 0, num / denom, 0.0)
    np.fill_diagonal(sim, 0.0)

    pred_num = sim @ masked
    pred_den = sim @ obs
    global_mean = masked.sum() / obs.sum()
    movie_counts = obs.sum(axis=0)
    with np.errstate(invalid="ignore", divide="ignore"):
        movie_mean = np.where(movie_counts > 0, masked.sum(axis=0) / movie_counts, 0.0)
        user_counts = obs.sum(axis=1)
        user_mean = np.where(user_counts > 0, masked.sum(axis=1) / user_counts, 0.0)
        weighted = np.where(pred_den > 0, pred_num / pred_den, 0.0)

    fill = np.where(
        pred_den > 0,
        weighted,
        np.where(
            movie_counts[None, :] > 0,
            np.broadcast_to(movie_mean, values.shape),
            np.where(
                user_counts[:, None] > 0,
                np.broadcast_to(user_mean[:, None], values.shape),
                global_mean,
            ),
        ),
    )
    if empty_users.size:
        fill[empty_users, :] = global_mean

    fill = np.clip(round_to_half(fill), RATING_MIN, RATING_MAX)
    completed = np.where(observed, values, fill)
    return RatingMatrix(completed, np.ones_like(observed, dtype=bool))


def impute_ages(
    num_users: int, band_weights, rng: np.random.Generator
) -> np.ndarray:
    """Independent categorical band draws proportional to the weights."""
    w = np.asarray(band_weights, dtype=float)
    if w.shape != (len(AGE_BANDS),):
        raise ParameterError(f"expected {len(AGE_BANDS)} band weights, got {w.shape}")
    if np.any(w < 0):
        raise ParameterError("band weights must be nonnegative")
    total = w.sum()
    if total <= 0:
        raise ParameterError("band weights must not all be zero")
    if num_users < 0:
        raise ParameterError(f"num_users must be nonnegative, got {num_users}")
    return rng.choice(len(AGE_BANDS), size=num_users, p=w / total)


def movie_allowed(cm: np.ndarray, band: int, genres: np.ndarray) -> int:
    """1 iff every active genre of the movie is allowed for the band.

    A movie with several genres is restricted as soon as any one of them
    is; an all-zero genre vector is vacuously allowed.
    """
    cm = np.asarray(cm)
    genres = np.asarray(genres)
    if cm.ndim != 2:
        raise ShapeError(f"constraint matrix must be 2-d, got {cm.ndim}-d")
    if genres.shape != (cm.shape[1],):
        raise ShapeError(
            f"genre vector length {genres.shape} does not match matrix width "
            f"{cm.shape[1]}"
        )
    if not 0 <= band < cm.shape[0]:
        raise ShapeError(f"band index {band} outside [0, {cm.shape[0]})")
    if not np.all(np.isin(genres, (0, 1))):
        raise ParameterError("genre vector must be binary")
    return int(np.all(cm[band][genres == 1] == 1))


def build_movie_env(
    ratings: RatingMatrix,
    genres: np.ndarray,
    bands: np.ndarray,
    cm: np.ndarray = DEFAULT_CONSTRAINT_MATRIX,
    order: np.ndarray | None = None,
    divisor: float = 5.0,
) -> EnvironmentSpec:
    """Assemble the movie environment: one step per movie, one arm per user.

    Rewards are ratings divided by ``divisor``; a movie restricted for
    every user is dropped from the stream (with a warning) so a masked
    agent always has a choice.
    """
    genres = np.asarray(genres)
    bands = np.asarray(bands, dtype=int)
    cm = np.asarray(cm)
    n_users, n_movies = ratings.values.shape
    if genres.shape != (n_movies, cm.shape[1]):
        raise ShapeError(
            f"genres shape {genres.shape} inconsistent with {n_movies} movies "
            f"and {cm.shape[1]} genre columns"
        )
    if bands.shape != (n_users,):
        raise ShapeError(f"bands shape {bands.shape} != ({n_users},)")
    if bands.size and (bands.min() < 0 or bands.max() >= cm.shape[0]):
        raise ParameterError("band assignment outside the constraint matrix rows")
    if not np.all(np.isin(genres, (0, 1))):
        raise ParameterError("genre matrix must be binary")
    if divisor <= 0:
        raise ParameterError(f"divisor must be positive, got {divisor}")

    if order is None:
        order = np.arange(n_movies)
    else:
        order = np.asarray(order, dtype=int)
        if sorted(order.tolist()) != list(range(n_movies)):
            raise ParameterError("order must be a permutation of the movie indices")

    # allowed_band[m, a] = 1 iff movie m has no active genre restricted for band a
    restricted_hits = genres.astype(int) @ (1 - cm.astype(int)).T
    allowed_band = (restricted_hits == 0).astype(np.int8)
    allowed = allowed_band[:, bands]  # (n_movies, n_users)

    feasible = allowed.sum(axis=1) > 0
    stream = np.array([m for m in order if feasible[m]], dtype=int)
    dropped = int(n_movies - feasible.sum())
    if dropped:
        warnings.warn(
            f"dropping {dropped} movie(s) restricted for every user", stacklevel=2
        )
    if stream.size == 0:
        raise ParameterError("every movie is restricted for every user")

    return EnvironmentSpec(
        contexts=genres[stream].astype(float),
        rewards=ratings.values[:, stream].T / divisor,
        allowed=allowed[stream],
        scenario="movie",
    )


@dataclass
class MovieDataset:
    """Everything the movie scenario is built from."""

    ratings: RatingMatrix
    genres: np.ndarray
    bands: np.ndarray
    cm: np.ndarray
    genre_names: tuple[str, ...] = DEFAULT_GENRES


def generate_movie_dataset(
    n_users: int,
    n_movies: int,
    rng: np.random.Generator,
    band_weights=None,
    cm: np.ndarray = DEFAULT_CONSTRAINT_MATRIX,
    density: float = 1.0,
    anticorrelated: bool = True,
    preference_scale: float = 0.35,
    restricted_boost: float = 0.9,
    noise_scale: float = 0.3,
    genre_count_probs=(0.55, 0.35, 0.10),
    bands: np.ndarray | None = None,
) -> MovieDataset:
    """Synthetic desk-scale analogue of the ratings corpus.

    Each user gets a genre-preference vector; with ``anticorrelated``
    the preferences for the genres restricted to that user's age band
    are boosted, so reward-greedy recommendation collides with the
    constraints (the regime the sigma trade-off is interesting in).
    Bands may be supplied (they are not persisted in the dataset CSVs,
    so callers that reload from disk regenerate them the same way).
    """
    if n_users < 1 or n_movies < 1:
        raise ParameterError("need at least one user and one movie")
    if not 0 < density <= 1:
        raise ParameterError(f"density must lie in (0, 1], got {density}")
    cm = np.asarray(cm)
    n_genres = cm.shape[1]
    if band_weights is None:
        band_weights = np.ones(len(AGE_BANDS))

    if bands is None:
        bands = impute_ages(n_users, band_weights, rng)
    else:
        bands = np.asarray(bands, dtype=int)
        if bands.shape != (n_users,):
            raise ShapeError(f"bands shape {bands.shape} != ({n_users},)")
        if bands.size and (bands.min() < 0 or bands.max() >= cm.shape[0]):
            raise ParameterError("band assignment outside the constraint matrix rows")

    probs = np.asarray(genre_count_probs, dtype=float)
    if probs.ndim != 1 or probs.size < 1 or abs(probs.sum() - 1.0) > 1e-9:
        raise ParameterError("genre_count_probs must be probabilities summing to 1")
    counts = rng.choice(np.arange(1, probs.size + 1), size=n_movies, p=probs)
    genres = np.zeros((n_movies, n_genres), dtype=np.int8)
    for m in range(n_movies):
        genres[m, rng.choice(n_genres, size=counts[m], replace=False)] = 1

    prefs = rng.normal(0.0, preference_scale, size=(n_users, n_genres))
    if anticorrelated:
        restricted = cm == 0  # (bands, genres)
        prefs += restricted[bands].astype(float) * restricted_boost

    raw = 2.75 + prefs @ genres.T.astype(float)
    raw += rng.normal(0.0, noise_scale, size=raw.shape)
    values = np.clip(round_to_half(raw), RATING_MIN, RATING_MAX)

    if density >= 1.0:
        observed = np.ones_like(values, dtype=bool)
    else:
        observed = rng.random(values.shape) < density
        for u in range(n_users):  # every user keeps at least one rating
            if not observed[u].any():
                observed[u, int(rng.integers(n_movies))] = True
        values = np.where(observed, values, 0.0)

    return MovieDataset(
        ratings=RatingMatrix(values, observed),
        genres=genres,
        bands=bands,
        cm=cm,
        genre_names=tuple(f"g{i}" for i in range(n_genres))
        if n_genres != len(DEFAULT_GENRES)
        else DEFAULT_GENRES,
    )


def save_ratings_csv(ratings: RatingMatrix, path) -> None:
    """Write observed cells as ``user_id,movie_id,rating`` rows."""
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["user_id", "movie_id", "rating"])
        users, movies = np.nonzero(ratings.observed)
        for u, m in zip(users.tolist(), movies.tolist()):
            writer.writerow([u, m, repr(float(ratings.values[u, m]))])


def load_ratings_csv(path) -> tuple[RatingMatrix, list[int], list[int]]:
    """Read a ratings CSV; returns the matrix plus the sorted id vocabularies."""
    rows = _read_csv(path, ["user_id", "movie_id", "rating"])
    if not rows:
        raise ParameterError(f"{path}: no rating rows")
    triples = [(int(r["user_id"]), int(r["movie_id"]), float(r["rating"])) for r in rows]
    user_ids = sorted({u for u, _, _ in triples})
    movie_ids = sorted({m for _, m, _ in triples})
    u_index = {u: i for i, u in enumerate(user_ids)}
    m_index = {m: i for i, m in enumerate(movie_ids)}
    values = np.zeros((len(user_ids), len(movie_ids)))
    observed = np.zeros_like(values, dtype=bool)
    for u, m, r in triples:
        values[u_index[u], m_index[m]] = r
        observed[u_index[u], m_index[m]] = True
    return RatingMatrix(values, observed), user_ids, movie_ids


def save_genres_csv(genres: np.ndarray, path) -> None:
    genres = np.asarray(genres, dtype=int)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["movie_id"] + [f"genre_{g + 1}" for g in range(genres.shape[1])])
        for m in range(genres.shape[0]):
            writer.writerow([m] + genres[m].tolist())


def load_genres_csv(path, movie_ids=None) -> np.ndarray:
    """Read the genre matrix, ordered by movie id (or the provided id list)."""
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if not header or header[0] != "movie_id" or len(header) < 2:
            raise ParameterError(f"{path}: expected header movie_id,genre_1,...")
        d = len(header) - 1
        by_id = {}
        for row in reader:
            if not row:
                continue
            if len(row) != d + 1:
                raise ParameterError(f"{path}: row width {len(row)} != {d + 1}")
            cells = [int(x) for x in row[1:]]
            if any(c not in (0, 1) for c in cells):
                raise ParameterError(f"{path}: genre cells must be binary")
            by_id[int(row[0])] = cells
    ids = sorted(by_id) if movie_ids is None else list(movie_ids)
    missing = [m for m in ids if m not in by_id]
    if missing:
        raise ParameterError(f"{path}: missing genre rows for movies {missing[:5]}")
    return np.array([by_id[m] for m in ids], dtype=np.int8)


def save_constraint_matrix(cm: np.ndarray, path) -> None:
    cm = np.asarray(cm, dtype=int)
    Path(path).write_text(
        "\n".join(" ".join(str(v) for v in row) for row in cm.tolist()) + "\n"
    )


def load_constraint_matrix(path) -> np.ndarray:
    """Read a whitespace-separated binary grid, one age band per row."""
    rows = []
    for line in Path(path).read_text().splitlines():
        line = line.strip()
        if not line:
            continue
        rows.append([int(tok) for tok in line.split()])
    if not rows:
        raise ParameterError(f"{path}: empty constraint matrix")
    width = len(rows[0])
    if any(len(r) != width for r in rows):
        raise ParameterError(f"{path}: ragged constraint matrix")
    cm = np.array(rows, dtype=np.int8)
    if not np.all(np.isin(cm, (0, 1))):
        raise ParameterError(f"{path}: constraint cells must be 0/1")
    return cm


def _read_csv(path, expected_header: list[str]) -> list[dict]:
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        if reader.fieldnames != expected_header:
            missing = [c for c in expected_header if c not in (reader.fieldnames or [])]
            raise ParameterError(
                f"{path}: header {reader.fieldnames} does not match "
                f"{expected_header} (missing {missing})"
            )
        return list(reader)
