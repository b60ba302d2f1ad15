"""Deterministic, splittable random number generation.

Every sampling routine is a pure function of a :class:`SeededRng` value.
Streams are keyed by a (seed, stream_id) pair fed into a counter-based
Philox generator, so replication r of a bootstrap can be drawn on any
worker, in any order, and still produce bit-identical output.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.random import Generator, Philox

_MASK64 = (1 << 64) - 1


def _splitmix64(x: int) -> int:
    x = (x + 0x9E3779B97F4A7C15) & _MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def derive_seed(seed: int, *indices: int) -> int:
    """Fold integer indices into a seed, one splitmix64 round per index.

    Used to give nested simulation layers (experiment -> replication ->
    bootstrap) their own seed spaces without any shared state.
    """
    h = seed & _MASK64
    for ix in indices:
        h = _splitmix64(h ^ _splitmix64(ix & _MASK64))
    return h


@dataclass(frozen=True)
class SeededRng:
    """Value identifying one reproducible random stream.

    Same (seed, stream_id) always yields the same draws, independent of
    thread count or draw batching.
    """

    seed: int
    stream_id: int = 0

    def __post_init__(self):
        if not 0 <= self.seed <= _MASK64:
            object.__setattr__(self, "seed", self.seed & _MASK64)
        if not 0 <= self.stream_id <= _MASK64:
            object.__setattr__(self, "stream_id", self.stream_id & _MASK64)

    def generator(self) -> Generator:
        return Generator(Philox(key=[self.seed, self.stream_id]))

    def stream(self, stream_id: int) -> "SeededRng":
        """Sibling stream under the same seed (replication streams)."""
        return SeededRng(self.seed, stream_id)

    def child(self, *indices: int) -> "SeededRng":
        """Independent child seed for a nested simulation layer."""
        return SeededRng(derive_seed(self.seed, self.stream_id, *indices), 0)


def sample_normal(rng: SeededRng, count: int) -> np.ndarray:
    """`count` i.i.d. N(0,1) draws from the given stream."""
    if count < 0:
        raise ValueError("count must be >= 0")
    return rng.generator().standard_normal(count)


def sample_uniform(rng: SeededRng, count: int) -> np.ndarray:
    if count < 0:
        raise ValueError("count must be >= 0")
    return rng.generator().random(count)


def sample_student_t(
    rng: SeededRng, dof: int, count: int, unit_variance: bool = False
) -> np.ndarray:
    """Student-t draws built as N(0,1) / sqrt(chi2(dof)/dof).

    dof must be >= 3 so the variance exists. With ``unit_variance`` the
    draws are scaled by sqrt((dof-2)/dof), forcing variance exactly 1.
    """
    if dof < 3:
        raise ValueError("dof must be >= 3 (finite variance required)")
    if count < 0:
        raise ValueError("count must be >= 0")
    gen = rng.generator()
    z = gen.standard_normal(count)
    w = gen.chisquare(dof, count)
    t = z / np.sqrt(w / dof)
    if unit_variance:
        t *= np.sqrt((dof - 2) / dof)
    return t


class _StreamBatch:
    """Fast per-stream batch draws.

    Reuses one Philox bit generator and rewrites its key/counter between
    streams, which is ~3x faster than constructing a Generator per stream
    while producing bit-identical output (asserted in tests).
    """

    def __init__(self, seed: int):
        self._seed = seed & _MASK64
        self._bg = Philox(key=[0, 0])
        self._gen = Generator(self._bg)
        self._state = self._bg.state

    def _reset(self, stream_id: int):
        st = self._state
        st["state"]["key"][0] = self._seed
        st["state"]["key"][1] = stream_id & _MASK64
        st["state"]["counter"][:] = 0
        st["buffer_pos"] = 4
        st["has_uint32"] = 0
        st["uinteger"] = 0
        self._bg.state = st

    def normal(self, stream_id: int, count: int) -> np.ndarray:
        self._reset(stream_id)
        return self._gen.standard_normal(count)

    def integers(self, stream_id: int, high: int, count: int) -> np.ndarray:
        self._reset(stream_id)
        return self._gen.integers(0, high, size=count)


def normal_matrix(rng: SeededRng, replications: int, count: int) -> np.ndarray:
    """(replications, count) matrix whose row r is sample_normal(rng.stream(r), count)."""
    batch = _StreamBatch(rng.seed)
    out = np.empty((replications, count))
    for r in range(replications):
        out[r] = batch.normal(r, count)
    return out


def resample_index_matrix(rng: SeededRng, replications: int, n: int) -> np.ndarray:
    """(replications, n) matrix of with-replacement row indices, one stream per row."""
    batch = _StreamBatch(rng.seed)
    out = np.empty((replications, n), dtype=np.int64)
    for r in range(replications):
        out[r] = batch.integers(r, n, n)
    return out
