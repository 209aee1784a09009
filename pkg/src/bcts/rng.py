"""Deterministic random-stream derivation.

Every consumer of randomness (teaching draws, online draws, constrained
draws, data synthesis, fold splitting, ...) pulls from its own substream
derived from a master seed plus a purpose key. Keeping the streams
separate is what makes the blend-degeneracy identities exact: a sigma=1
agent and a plain reward-only agent consume identical online streams even
though only one of them also draws constrained samples.
"""

from __future__ import annotations

import numpy as np

# Purpose keys. Values are part of the reproducibility contract: changing
# them changes every seeded result.
DATA = 0
FOLDS = 1
BANDS = 2
FLAGS = 3
PRESENT = 4
TEACH_CONTEXTS = 5
TEACH_SELECT = 6
ONLINE_DRAWS = 7
CONSTRAINED_DRAWS = 8
RUN = 9
LEARN_CLI = 10


def substream(master_seed: int, *key: int) -> np.random.Generator:
    """Return a generator for the substream identified by ``key``.

    The same (master_seed, key) pair always yields an identical stream,
    independent of any other substream having been consumed.
    """
    ss = np.random.SeedSequence(int(master_seed), spawn_key=tuple(int(k) for k in key))
    return np.random.default_rng(ss)


def as_seedseq(seed) -> np.random.SeedSequence:
    """Coerce an int seed (or pass through a SeedSequence) for spawning.

    Callers that spawn substreams need a *fresh* SeedSequence per call;
    spawning twice from the same object yields different children.
    """
    if isinstance(seed, np.random.SeedSequence):
        return seed
    return np.random.SeedSequence(int(seed))


def as_generator(seed) -> np.random.Generator:
    """Coerce an int seed, SeedSequence, or Generator into a Generator."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)
