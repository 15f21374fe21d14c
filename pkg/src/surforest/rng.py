"""Deterministic, counter-based pseudo-random number generation.

The generator is a pure function of (seed, counter), which makes streams
replayable on every platform and trivially batchable across replications:

    output_i(seed) = mix64(seed + (i + 1) * GAMMA)         (i = 0, 1, 2, ...)

where all arithmetic is modulo 2**64 and mix64 is the SplitMix64 finalizer

    z ^= z >> 30;  z *= 0xBF58476D1CE4E5B9
    z ^= z >> 27;  z *= 0x94D049BB133111EB
    z ^= z >> 31

with GAMMA = 0x9E3779B97F4A7C15.  Uniform doubles in [0, 1) are obtained as
(output >> 11) * 2**-53.

Replication r of an experiment with base seed b uses the derived stream seed

    derive_seed(b, r) = mix64(b + (r + 1) * 0xD1342543DE82EF95)

so distinct replications never share a stream.
"""

from __future__ import annotations

import numpy as np

_MASK = (1 << 64) - 1
GAMMA = 0x9E3779B97F4A7C15
_MIX1 = 0xBF58476D1CE4E5B9
_MIX2 = 0x94D049BB133111EB
_REP_GAMMA = 0xD1342543DE82EF95

_U64 = np.uint64


def mix64(z: np.ndarray) -> np.ndarray:
    """SplitMix64 finalizer, elementwise on uint64 arrays."""
    with np.errstate(over="ignore"):
        z = (z ^ (z >> _U64(30))) * _U64(_MIX1)
        z = (z ^ (z >> _U64(27))) * _U64(_MIX2)
        return z ^ (z >> _U64(31))


def derive_seed(base: int, rep: int) -> int:
    """Stream seed for replication `rep` of an experiment seeded by `base`."""
    z = (base + (rep + 1) * _REP_GAMMA) & _MASK
    return int(mix64(np.asarray(z, dtype=np.uint64)))


def rep_seeds(base: int, r0: int, r1: int) -> np.ndarray:
    """derive_seed(base, r) for r = r0..r1-1, vectorized."""
    idx = np.arange(r0 + 1, r1 + 1, dtype=np.uint64)
    with np.errstate(over="ignore"):
        return mix64(_U64(base & _MASK) + idx * _U64(_REP_GAMMA))


def uniforms_from_seed(seed: int, count: int, offset: int = 0) -> np.ndarray:
    """The uniforms at stream positions offset..offset+count-1 of `seed`."""
    idx = np.arange(offset + 1, offset + count + 1, dtype=np.uint64)
    with np.errstate(over="ignore"):
        out = mix64(_U64(seed & _MASK) + idx * _U64(GAMMA))
    return (out >> _U64(11)) * 2.0**-53


def uniform_matrix(seeds: np.ndarray, count: int) -> np.ndarray:
    """Row r holds the first `count` uniforms of stream seeds[r]."""
    seeds = np.asarray(seeds, dtype=np.uint64)
    idx = np.arange(1, count + 1, dtype=np.uint64)
    with np.errstate(over="ignore"):
        out = mix64(seeds[:, None] + idx[None, :] * _U64(GAMMA))
    return (out >> _U64(11)) * 2.0**-53


class RandomStream:
    """Stateful view over one counter-based stream.

    Owned by exactly one replication; never share an instance between
    threads.  Consuming k uniforms advances the counter by k.
    """

    def __init__(self, seed: int):
        self.seed = seed & _MASK
        self.counter = 0

    def next_uniform(self, count: int) -> np.ndarray:
        u = uniforms_from_seed(self.seed, count, offset=self.counter)
        self.counter += count
        return u
