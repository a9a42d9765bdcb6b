"""Seed handling.

Every random routine in the package takes either an integer seed or a
ready ``numpy.random.Generator``.  Routines that need several internal
streams derive them with :func:`derive_rng`, which maps a
``(seed, stage, index)`` triple to an independent generator:

    SeedSequence(entropy=seed, spawn_key=(crc32(stage), index))

Same triple, same stream; distinct stages or indices give statistically
independent streams.  This keeps multi-stage pipelines reproducible and
safe to parallelize by cell.
"""

import zlib

import numpy as np


def as_generator(seed):
    """Coerce an int seed (or an existing Generator) to a Generator."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


def derive_rng(seed, stage, index=0):
    """Independent generator for the (seed, stage, index) triple.

    ``seed`` must be a nonnegative int; ``stage`` is a short string tag.
    """
    tag = zlib.crc32(stage.encode("ascii"))
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(tag, int(index)))
    return np.random.default_rng(ss)


def derive_seed(seed, stage, index=0):
    """Integer seed derived from the same scheme, for APIs that want ints."""
    tag = zlib.crc32(stage.encode("ascii"))
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(tag, int(index)))
    return int(ss.generate_state(1)[0])
