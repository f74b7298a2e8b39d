"""Deterministic, splittable random streams built on the Philox counter.

Every stochastic routine in this package draws from a stream obtained via
``derive_stream(seed, *path)``.  Distinct paths select disjoint 2**128-draw
blocks of the Philox counter space, so streams are statistically independent
and can be consumed in any order (or in parallel) without changing results.
The mapping from ``(seed, path)`` to a stream is part of the public contract
and will not change between versions.
"""

from __future__ import annotations

import numpy as np

# Philox counter layout (little-endian 64-bit words):
#   word 0: draw counter inside the stream (starts at 0)
#   word 1: number of path components (separates paths of different lengths)
#   word 2: first path component
#   word 3: second path component
_MAX_PATH = 2


def derive_stream(seed: int, *path: int) -> np.random.Generator:
    """Return the random generator for the stream addressed by (seed, path).

    Parameters
    ----------
    seed : int
        Master seed, an unsigned 64-bit integer.
    *path : int
        Up to two nonnegative stream selectors (for example a replicate
        index, or a replication index plus a role tag).

    Returns
    -------
    numpy.random.Generator
        Generator backed by a Philox counter positioned at the start of the
        selected stream.
    """
    seed = int(seed)
    if not 0 <= seed < 2**64:
        raise ValueError(f"seed must be an unsigned 64-bit integer, got {seed}")
    if len(path) > _MAX_PATH:
        raise ValueError(f"at most {_MAX_PATH} path components are supported")
    words = [0, len(path), 0, 0]
    for i, component in enumerate(path):
        component = int(component)
        if not 0 <= component < 2**64:
            raise ValueError(f"path component {component} out of range")
        words[2 + i] = component
    counter = np.array(words, dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=seed, counter=counter))


def replicate_streams(seed: int, B: int):
    """Yield ``(r, generator)`` for ``r = 0..B-1``, each positioned exactly
    where ``derive_stream(seed, r)`` starts.

    One generator object is reused and its Philox state reset between
    replicates, which avoids the construction cost of ``B`` generators; the
    draws are bit-identical to fresh per-replicate streams.  The yielded
    generator is only valid until the next iteration step.
    """
    gen = derive_stream(seed, 0)
    bit_generator = gen.bit_generator
    template = bit_generator.state
    counter = np.array([0, 1, 0, 0], dtype=np.uint64)
    template["state"]["counter"] = counter
    template["buffer_pos"] = 4
    template["has_uint32"] = 0
    template["uinteger"] = 0
    for r in range(B):
        counter[2] = r
        bit_generator.state = template
        yield r, gen
