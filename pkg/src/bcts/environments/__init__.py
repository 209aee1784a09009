from .base import EnvironmentSpec, StepOutcome, env_step, split_folds
from .movies import (
    AGE_BANDS,
    DEFAULT_CONSTRAINT_MATRIX,
    DEFAULT_GENRES,
    MovieDataset,
    RatingMatrix,
    build_movie_env,
    cf_complete,
    generate_movie_dataset,
    impute_ages,
    load_constraint_matrix,
    load_genres_csv,
    load_ratings_csv,
    movie_allowed,
    save_constraint_matrix,
    save_genres_csv,
    save_ratings_csv,
)
from .warfarin import (
    DOSE_ARMS,
    DOSE_LABELS,
    NO_DOSE_ARM,
    build_warfarin_env,
    generate_warfarin_patients,
    load_warfarin_csv,
    save_warfarin_csv,
    warfarin_env_from_arrays,
)

__all__ = [
    "AGE_BANDS",
    "DEFAULT_CONSTRAINT_MATRIX",
    "DEFAULT_GENRES",
    "DOSE_ARMS",
    "DOSE_LABELS",
    "EnvironmentSpec",
    "MovieDataset",
    "NO_DOSE_ARM",
    "RatingMatrix",
    "StepOutcome",
    "build_movie_env",
    "build_warfarin_env",
    "cf_complete",
    "env_step",
    "generate_movie_dataset",
    "generate_warfarin_patients",
    "impute_ages",
    "load_constraint_matrix",
    "load_genres_csv",
    "load_ratings_csv",
    "load_warfarin_csv",
    "movie_allowed",
    "save_constraint_matrix",
    "save_genres_csv",
    "save_ratings_csv",
    "save_warfarin_csv",
    "split_folds",
    "warfarin_env_from_arrays",
]
