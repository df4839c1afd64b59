"""Path sampling: unit-rate jump times, random shifts, lattice projections.

Two engines share the same law.  The per-path functions (`sample_path`,
`sample_shifted`) draw exponential interarrivals one path at a time and are
the reference implementation behind the CLI path dumps.  `PathBatch` holds
many paths in flat arrays (jump counts, sorted times, marks) and backs the
Monte Carlo estimators; given a chunk's stream it draws counts, then raw
times, then marks, then shift times, then shift marks, in that fixed order.

Both engines are pure functions of (inputs, stream state), so fixed seeds
give bit-identical output regardless of worker count.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .intensity import IntensityMeasure, project_mark
from .path import JumpPath

_SEED_MASK = (1 << 64) - 1


@dataclass(frozen=True)
class StreamConfig:
    """Root of a family of independent, reproducible random streams."""

    seed: int
    stream_index: int = 0

    def rng(self) -> np.random.Generator:
        ss = np.random.SeedSequence(self.seed & _SEED_MASK,
                                    spawn_key=(self.stream_index,))
        return np.random.Generator(np.random.PCG64(ss))

    def chunk_rng(self, chunk: int) -> np.random.Generator:
        """Independent substream for one fixed chunk of sample indices."""
        ss = np.random.SeedSequence(self.seed & _SEED_MASK,
                                    spawn_key=(self.stream_index, chunk))
        return np.random.Generator(np.random.PCG64(ss))


# -- per-path reference engine ----------------------------------------------

def sample_path(measure: IntensityMeasure, horizon: float,
                rng: np.random.Generator) -> JumpPath:
    """One path: cumulative unit-mean exponentials as jump times, truncated
    at the horizon, then i.i.d. marks.  Zero marks (possible only for
    flagged discretized measures) are dropped as no-op jumps."""
    measure.validate()
    times = []
    acc = rng.exponential()
    while acc <= horizon:
        times.append(acc)
        acc += rng.exponential()
    marks = measure.sample_batch(rng, len(times))
    if len(times):
        keep = ~np.all(marks == 0.0, axis=1)
        times = np.asarray(times)[keep]
        marks = marks[keep]
    return JumpPath(float(horizon), measure.dimension,
                    np.asarray(times, dtype=float),
                    np.asarray(marks, dtype=float).reshape(-1, measure.dimension))


@dataclass(frozen=True)
class ShiftedSample:
    """A base path together with its randomly shifted copy."""

    base: JumpPath
    tau: float
    xi: np.ndarray
    shifted: JumpPath


def sample_shifted(measure: IntensityMeasure, horizon: float,
                   rng: np.random.Generator) -> ShiftedSample:
    """Draw the base path, then tau ~ Uniform[0, T], then the shift mark,
    in that order from the one stream."""
    base = sample_path(measure, horizon, rng)
    tau = float(rng.uniform(0.0, horizon))
    while tau == 0.0:  # probability-zero guard; shift requires t > 0
        tau = float(rng.uniform(0.0, horizon))
    xi = measure.sample(rng)
    if np.all(xi == 0.0):
        shifted = base
    else:
        shifted = base.shift(tau, xi)
    return ShiftedSample(base=base, tau=tau, xi=xi, shifted=shifted)


def project_path(path: JumpPath, n: int) -> JumpPath:
    """Same jump times, marks snapped to 2^{-n} Z^d; zero projections drop."""
    if path.n_jumps == 0:
        return path
    marks = project_mark(path.marks, n)
    keep = ~np.all(marks == 0.0, axis=1)
    return JumpPath(path.horizon, path.dimension,
                    path.times[keep], marks[keep])


# -- flat batch engine -------------------------------------------------------

@dataclass(frozen=True)
class PathBatch:
    """`size` paths stored flat: per-path jump counts plus concatenated,
    per-path-sorted jump times and marks."""

    horizon: float
    dimension: int
    counts: np.ndarray    # (B,) int64
    times: np.ndarray     # (J,) sorted within each path
    marks: np.ndarray     # (J, d)
    path_ids: np.ndarray  # (J,) int64, nondecreasing

    @property
    def size(self) -> int:
        return len(self.counts)

    def coords_at(self, query_times) -> np.ndarray:
        """Path values at each query time: (B, n, d) array."""
        q = np.asarray(query_times, dtype=float)
        B, d = self.size, self.dimension
        out = np.zeros((B, len(q), d))
        for j, t in enumerate(q):
            sel = self.times <= t
            ids = self.path_ids[sel]
            for c in range(d):
                out[:, j, c] = np.bincount(ids, weights=self.marks[sel, c],
                                           minlength=B)
        return out

    def project(self, n: int) -> "PathBatch":
        """Lattice projection of every path, zero projections dropped."""
        marks = project_mark(self.marks, n)
        keep = ~np.all(marks == 0.0, axis=1)
        counts = np.bincount(self.path_ids[keep], minlength=self.size)
        return PathBatch(self.horizon, self.dimension, counts,
                         self.times[keep], marks[keep], self.path_ids[keep])

    def projection_gap(self, n: int) -> np.ndarray:
        """Per-path sup distance to the level-n projection: (B,) array.

        The difference path jumps only at the original jump times, so the
        sup is the largest norm of a within-path prefix sum of mark errors.
        """
        B = self.size
        if len(self.times) == 0:
            return np.zeros(B)
        err = self.marks - project_mark(self.marks, n)
        csum = np.cumsum(err, axis=0)
        offsets = np.concatenate([[0], np.cumsum(self.counts)])[:-1]
        nonempty_idx = np.flatnonzero(self.counts > 0)
        starts = offsets[nonempty_idx]
        # within-path prefix sums: subtract the global cumsum just before
        # each path's first jump
        start_base = np.zeros((B, err.shape[1]))
        later = starts > 0
        start_base[nonempty_idx[later]] = csum[starts[later] - 1]
        prefix = csum - start_base[self.path_ids]
        norms = np.linalg.norm(prefix, axis=1)
        out = np.zeros(B)
        out[nonempty_idx] = np.maximum.reduceat(norms, starts)
        return out

    def path(self, i: int) -> JumpPath:
        """Materialize one path as a JumpPath (spot checks, dumps)."""
        sel = self.path_ids == i
        return JumpPath(self.horizon, self.dimension,
                        self.times[sel], self.marks[sel])


def sample_path_batch(measure: IntensityMeasure, horizon: float,
                      rng: np.random.Generator, size: int) -> PathBatch:
    """Vectorized equivalent of `sample_path`: Poisson(T) jump counts, jump
    times as per-path-sorted uniforms, then i.i.d. marks."""
    measure.validate()
    counts = rng.poisson(lam=horizon, size=size)
    total = int(counts.sum())
    raw_times = rng.uniform(0.0, horizon, size=total)
    path_ids = np.repeat(np.arange(size, dtype=np.int64), counts)
    order = np.lexsort((raw_times, path_ids))
    times = raw_times[order]
    marks = measure.sample_batch(rng, total)
    keep = ~np.all(marks == 0.0, axis=1)
    if not np.all(keep):
        path_ids = path_ids[keep]
        times = times[keep]
        marks = marks[keep]
        counts = np.bincount(path_ids, minlength=size)
    return PathBatch(float(horizon), measure.dimension, counts,
                     times, marks, path_ids)


@dataclass(frozen=True)
class ShiftedBatch:
    """A batch of base paths with per-path shift times and shift marks."""

    base: PathBatch
    tau: np.ndarray  # (B,)
    xi: np.ndarray   # (B, d)

    def shifted_coords(self, query_times, base_coords: Optional[np.ndarray] = None
                       ) -> np.ndarray:
        """Coordinates of base + xi*1_{[tau, T]}: base plus xi wherever the
        query time is >= tau."""
        q = np.asarray(query_times, dtype=float)
        if base_coords is None:
            base_coords = self.base.coords_at(q)
        mask = (q[None, :] >= self.tau[:, None]).astype(float)
        return base_coords + self.xi[:, None, :] * mask[:, :, None]

    def shifted_counts(self) -> np.ndarray:
        """Jump counts of the shifted paths (zero shift marks are no-ops)."""
        incr = (~np.all(self.xi == 0.0, axis=1)).astype(np.int64)
        return self.base.counts + incr


def sample_shifted_batch(measure: IntensityMeasure, horizon: float,
                         rng: np.random.Generator, size: int) -> ShiftedBatch:
    """Batch analogue of `sample_shifted`; draw order is paths, then shift
    times, then shift marks."""
    base = sample_path_batch(measure, horizon, rng, size)
    tau = rng.uniform(0.0, horizon, size=size)
    xi = measure.sample_batch(rng, size)
    return ShiftedBatch(base=base, tau=tau, xi=xi)
