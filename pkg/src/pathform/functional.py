"""Functionals on path space, the squared-difference field, and the Monte
Carlo estimators built on random shifts.

The estimators all follow the same deterministic-reduction scheme: the
sample range is cut into fixed-size chunks, chunk i draws from its own
substream, and per-chunk partial sums are combined in chunk order.  Worker
count (PATHFORM_THREADS) therefore never changes a result, only wall time.

A cylindrical functional F(path) = f(path(t_1), ..., path(t_n)) sees a shift
by x at time t only through the coordinates with t_j >= t, which is what lets
the estimators evaluate shifted paths without rebuilding them, and the exact
lattice routines collapse time integrals to finite sums over the coordinate
grid.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, List, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.special import xlogy

from .errors import (
    BoundViolation,
    HorizonMismatch,
    NoSuchJump,
    UnsortedTimes,
    ZeroMark,
)
from .intensity import IntensityMeasure
from .path import JumpPath
from .sampler import (
    PathBatch,
    ShiftedBatch,
    StreamConfig,
    sample_path_batch,
    sample_shifted_batch,
)

DEFAULT_CHUNK = 1 << 16


# -- functional types --------------------------------------------------------

@dataclass(frozen=True)
class CylindricalFunctional:
    """F(path) = f(path(t_1), ..., path(t_n)) with a declared sup bound.

    `f` takes one argument per coordinate time: a float when d = 1, a (d,)
    array otherwise.  `batch`, when given, must accept an (N, n) array for
    d = 1 (or (N, n, d) in general) and return N values; it is what makes
    the estimators fast, the scalar `f` is the fallback and the reference.
    """

    times: Tuple[float, ...]
    f: Callable[..., float]
    bound: float = math.inf
    batch: Optional[Callable[[np.ndarray], np.ndarray]] = None
    name: str = ""

    def __post_init__(self):
        times = tuple(float(t) for t in self.times)
        if not times:
            raise UnsortedTimes("a cylindrical functional needs at least one time")
        if times[0] <= 0 or any(b <= a for a, b in zip(times, times[1:])):
            raise UnsortedTimes("coordinate times must be strictly increasing and > 0")
        object.__setattr__(self, "times", times)

    def __call__(self, path: JumpPath) -> float:
        return evaluate(self, path)


@dataclass(frozen=True)
class CountFunctional:
    """F(path) = g(total number of jumps)."""

    g: Callable[[int], float]
    batch: Optional[Callable[[np.ndarray], np.ndarray]] = None
    name: str = ""

    def __call__(self, path: JumpPath) -> float:
        return float(self.g(path.count_jumps()))


PathFunctional = Union[CylindricalFunctional, CountFunctional]


@dataclass(frozen=True)
class MCEstimate:
    """Monte Carlo estimate: mean, standard error, sample count."""

    mean: float
    stderr: float
    n: int


@dataclass(frozen=True)
class JumpTimeDistribution:
    """Atomic distribution over jump times of one path."""

    support: Tuple[Tuple[float, float], ...]

    def __post_init__(self):
        total = sum(w for _, w in self.support)
        if self.support and abs(total - 1.0) > 1e-12:
            raise ValueError(f"weights sum to {total!r}, not 1")


class Moments(NamedTuple):
    mean: MCEstimate
    second_moment: MCEstimate
    entropy: MCEstimate


@dataclass(frozen=True)
class QIComparison:
    """Both sides of the shifted-law identity on common samples.

    lhs estimates E F(shifted path); rhs estimates E[F(base) * N_T] / T;
    diff is the per-sample difference, whose stderr is the right width for
    a band test because the two sides share their randomness.
    """

    lhs: MCEstimate
    rhs: MCEstimate
    diff: MCEstimate


@dataclass(frozen=True)
class PairingResult:
    """Coupled estimates on one sample set for the form/generator pairing.

    `identity_fg` averages the per-sample sum of the polarized squared
    difference and G * LF (mean zero when the pairing identity holds);
    `symmetry` averages G * LF - F * LG.
    """

    form: MCEstimate
    pairing_fg: MCEstimate
    pairing_gf: MCEstimate
    identity_fg: MCEstimate
    identity_gf: MCEstimate
    symmetry: MCEstimate


# -- evaluation helpers -------------------------------------------------------

def _apply_rows(F: CylindricalFunctional, coords: np.ndarray) -> np.ndarray:
    """Evaluate f on (N, n, d) coordinate rows, enforcing the sup bound."""
    N, n, d = coords.shape
    if F.batch is not None:
        arg = coords[:, :, 0] if d == 1 else coords
        vals = np.asarray(F.batch(arg), dtype=float).reshape(N)
    elif d == 1:
        flat = coords[:, :, 0]
        vals = np.fromiter((F.f(*row) for row in flat), dtype=float, count=N)
    else:
        vals = np.fromiter((F.f(*row) for row in coords), dtype=float, count=N)
    if N and float(np.max(np.abs(vals))) > F.bound:
        raise BoundViolation(
            f"functional {F.name or F.f!r} exceeded declared bound {F.bound}")
    return vals


def _apply_counts(F: CountFunctional, counts: np.ndarray) -> np.ndarray:
    counts = np.asarray(counts)
    if F.batch is not None:
        return np.asarray(F.batch(counts), dtype=float).reshape(len(counts))
    return np.fromiter((F.g(int(m)) for m in counts), dtype=float,
                       count=len(counts))


def evaluate(F: PathFunctional, path: JumpPath) -> float:
    """F at one path; BoundViolation flags a misdeclared functional."""
    if isinstance(F, CountFunctional):
        return float(F.g(path.count_jumps()))
    if F.times[-1] > path.horizon:
        raise HorizonMismatch(
            f"functional needs t={F.times[-1]} but the path ends at {path.horizon}")
    coords = path.coordinates(np.asarray(F.times))
    return float(_apply_rows(F, coords[None, :, :])[0])


def evaluate_batch(F: PathFunctional, batch: PathBatch) -> np.ndarray:
    """F at every path of a batch, as a (B,) array."""
    if isinstance(F, CountFunctional):
        return _apply_counts(F, batch.counts)
    if F.times[-1] > batch.horizon:
        raise HorizonMismatch(
            f"functional needs t={F.times[-1]} but paths end at {batch.horizon}")
    return _apply_rows(F, batch.coords_at(F.times))


def gamma(F: PathFunctional, G: PathFunctional, t: float, x,
          path: JumpPath) -> float:
    """Squared-difference field: the product of the two shift increments."""
    shifted = path.shift(t, x)
    return ((evaluate(F, shifted) - evaluate(F, path))
            * (evaluate(G, shifted) - evaluate(G, path)))


def _shifted_pair_values(F: PathFunctional, sb: ShiftedBatch):
    """(base values, shifted values) for a batch, without path rebuilding."""
    if isinstance(F, CountFunctional):
        return (_apply_counts(F, sb.base.counts),
                _apply_counts(F, sb.shifted_counts()))
    base_coords = sb.base.coords_at(F.times)
    vb = _apply_rows(F, base_coords)
    vs = _apply_rows(F, sb.shifted_coords(F.times, base_coords))
    return vb, vs


# -- chunked deterministic reduction ------------------------------------------

def worker_count() -> int:
    raw = os.environ.get("PATHFORM_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def _chunk_sizes(n_samples: int, chunk_size: int) -> List[int]:
    if n_samples < 2:
        raise ValueError("estimators need n_samples >= 2")
    full, rem = divmod(n_samples, chunk_size)
    return [chunk_size] * full + ([rem] if rem else [])


def _map_chunks(fn, n_chunks: int) -> list:
    workers = worker_count()
    if workers <= 1 or n_chunks <= 1:
        return [fn(i) for i in range(n_chunks)]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, range(n_chunks)))


def _run_chunked(n_samples: int, cfg: StreamConfig, chunk_fn,
                 chunk_size: int = DEFAULT_CHUNK) -> List[MCEstimate]:
    """Reduce chunk_fn(rng, size) -> [value arrays] into MCEstimates.

    Partial (sum, sum of squares, count) triples are combined in chunk
    order, so the outcome is bit-identical for any worker count.
    """
    sizes = _chunk_sizes(n_samples, chunk_size)

    def work(i: int):
        arrays = chunk_fn(cfg.chunk_rng(i), sizes[i])
        return [(float(a.sum()), float(np.dot(a, a)), len(a)) for a in arrays]

    partials = _map_chunks(work, len(sizes))
    n_stats = len(partials[0])
    out = []
    for j in range(n_stats):
        total = sumsq = 0.0
        count = 0
        for p in partials:
            total += p[j][0]
            sumsq += p[j][1]
            count += p[j][2]
        mean = total / count
        var = max(sumsq - count * mean * mean, 0.0) / (count - 1)
        out.append(MCEstimate(mean=mean, stderr=math.sqrt(var / count), n=count))
    return out


# -- Monte Carlo estimators ---------------------------------------------------

def energy_mc(F: PathFunctional, measure: IntensityMeasure, horizon: float,
              n_samples: int, cfg: StreamConfig,
              chunk_size: int = DEFAULT_CHUNK) -> MCEstimate:
    """Quadratic form of F: mean of (F(shifted) - F(base))^2 over random
    shifts.  The 1/T normalization and the uniform shift-time density
    cancel, so the plain mean is the estimator."""

    def chunk(rng, size):
        sb = sample_shifted_batch(measure, horizon, rng, size)
        vb, vs = _shifted_pair_values(F, sb)
        d = vs - vb
        return [d * d]

    return _run_chunked(n_samples, cfg, chunk, chunk_size)[0]


def moments_mc(F: PathFunctional, measure: IntensityMeasure, horizon: float,
               n_samples: int, cfg: StreamConfig,
               chunk_size: int = DEFAULT_CHUNK) -> Moments:
    """Plug-in estimates of mean, second moment and F^2 log F^2 (natural
    log, 0 log 0 = 0) over base paths."""

    def chunk(rng, size):
        batch = sample_path_batch(measure, horizon, rng, size)
        if isinstance(F, CountFunctional):
            v = _apply_counts(F, batch.counts)
        else:
            v = _apply_rows(F, batch.coords_at(F.times))
        sq = v * v
        return [v, sq, xlogy(sq, sq)]

    mean, second, entropy = _run_chunked(n_samples, cfg, chunk, chunk_size)
    return Moments(mean=mean, second_moment=second, entropy=entropy)


def qi_mc(F: PathFunctional, measure: IntensityMeasure, horizon: float,
          n_samples: int, cfg: StreamConfig,
          chunk_size: int = DEFAULT_CHUNK) -> QIComparison:
    """Statistical check of the shifted-path law: E F(shifted) against
    E[F(base) * N_T] / T on common samples."""

    def chunk(rng, size):
        sb = sample_shifted_batch(measure, horizon, rng, size)
        vb, vs = _shifted_pair_values(F, sb)
        rhs = vb * sb.base.counts / horizon
        return [vs, rhs, vs - rhs]

    lhs, rhs, diff = _run_chunked(n_samples, cfg, chunk, chunk_size)
    return QIComparison(lhs=lhs, rhs=rhs, diff=diff)


# -- exact-lattice bridge -------------------------------------------------------

def energy_exact_cylindrical(F: CylindricalFunctional, model, horizon: float) -> float:
    """Deterministic quadratic form for lattice measures: the shift time
    integral collapses to the coordinate grid, each cell weighted by its
    length, and expectations run over the truncated increment chain."""
    from .oracle import exact_energy  # deferred: oracle imports this module

    return exact_energy(model, horizon, F)


# -- conditional shift-time distribution ---------------------------------------

def pi_k(path: JumpPath, k) -> JumpTimeDistribution:
    """Conditional law of the shift time given the shifted path: uniform
    over the jump times whose mark equals k exactly (every completion of
    the path is equally likely, certified by the rank-uniformity test)."""
    times = path.jump_times_of_mark(k)
    if len(times) == 0:
        raise NoSuchJump(f"path has no jump of mark {k!r}")
    w = 1.0 / len(times)
    return JumpTimeDistribution(tuple((float(t), w) for t in times))


def pi_k_rank_counts(measure: IntensityMeasure, horizon: float, k,
                     n_samples: int, cfg: StreamConfig, max_count: int = 6,
                     chunk_size: int = DEFAULT_CHUNK) -> dict:
    """Histogram the rank of the shift time among same-mark jump times.

    Draw base paths and a uniform shift time, form base + k 1_[tau, T], and
    record (j, rank) where j counts the shifted path's mark-k jumps.  Under
    the uniform conditional law each rank 1..j is equally likely given j.
    Returns {j: array of rank counts} for j = 1..max_count.
    """
    kvec = np.atleast_1d(np.asarray(k, dtype=float))
    if np.all(kvec == 0.0):
        raise ZeroMark("mark must be nonzero")
    sizes = _chunk_sizes(n_samples, chunk_size)

    def work(i: int):
        rng = cfg.chunk_rng(i)
        batch = sample_path_batch(measure, horizon, rng, sizes[i])
        tau = rng.uniform(0.0, horizon, size=sizes[i])
        sel = np.all(batch.marks == kvec, axis=1)
        ids = batch.path_ids[sel]
        n_k = np.bincount(ids, minlength=batch.size)
        earlier = np.bincount(ids[batch.times[sel] < tau[ids]],
                              minlength=batch.size)
        return n_k + 1, earlier + 1

    out = {j: np.zeros(j, dtype=np.int64) for j in range(1, max_count + 1)}
    for j_arr, rank_arr in _map_chunks(work, len(sizes)):
        for j in range(1, max_count + 1):
            mask = j_arr == j
            if mask.any():
                out[j] += np.bincount(rank_arr[mask] - 1, minlength=j)[:j]
    return out


# -- generator ------------------------------------------------------------------

def generator_apply(F: PathFunctional, path: JumpPath, model,
                    horizon: float) -> float:
    """Jump generator at one path: insertion term summed exactly over the
    lattice support and the coordinate grid, removal term summed over the
    path's own jumps with the uniform conditional weights."""
    T = float(horizon)
    if isinstance(F, CountFunctional):
        n = path.count_jumps()
        up = F.g(n + 1) - F.g(n)
        down = n * (F.g(n - 1) - F.g(n)) / T if n > 0 else 0.0
        return float(up + down)
    base = evaluate(F, path)
    first = 0.0
    for key, w in model.pmf.items():
        kvec = np.asarray(key, dtype=float)
        prev = 0.0
        acc = 0.0
        for t in F.times:
            acc += (t - prev) * (evaluate(F, path.shift(t, kvec)) - base)
            prev = t
        first += w * acc
    second = 0.0
    for t, mark in zip(path.times, path.marks):
        second += evaluate(F, path.shift(t, -mark)) - base
    return (first + second) / T


def _generator_values_batch(F: PathFunctional, batch: PathBatch, model,
                            horizon: float) -> np.ndarray:
    """Vectorized generator values for every path in a batch."""
    T = float(horizon)
    if isinstance(F, CountFunctional):
        c = batch.counts
        up = _apply_counts(F, c + 1) - _apply_counts(F, c)
        down = np.zeros(len(c))
        pos = c > 0
        if pos.any():
            down[pos] = c[pos] * (_apply_counts(F, c[pos] - 1)
                                  - _apply_counts(F, c[pos])) / T
        return up + down
    base_coords = batch.coords_at(F.times)
    vb = _apply_rows(F, base_coords)
    times = np.asarray(F.times)
    deltas = np.diff(np.concatenate([[0.0], times]))
    first = np.zeros(batch.size)
    for key, w in model.pmf.items():
        kvec = np.asarray(key, dtype=float)
        for i in range(len(times)):
            shifted = base_coords.copy()
            shifted[:, i:, :] += kvec
            first += w * deltas[i] * (_apply_rows(F, shifted) - vb)
    second = np.zeros(batch.size)
    if len(batch.times):
        per_jump = base_coords[batch.path_ids]
        mask = (times[None, :] >= batch.times[:, None]).astype(float)
        mod = per_jump - batch.marks[:, None, :] * mask[:, :, None]
        diff = _apply_rows(F, mod) - vb[batch.path_ids]
        second = np.bincount(batch.path_ids, weights=diff, minlength=batch.size)
    return (first + second) / T


def pairing_mc(F: PathFunctional, G: PathFunctional, model, horizon: float,
               n_samples: int, cfg: StreamConfig,
               chunk_size: int = DEFAULT_CHUNK) -> PairingResult:
    """Quadratic form and both generator pairings on one sample set.

    Sampling uses the lattice model's own jump measure.  Per-sample residual
    statistics are included because the estimates share samples and their
    difference has a directly estimable standard error.
    """
    measure = model.to_measure()

    def chunk(rng, size):
        sb = sample_shifted_batch(measure, horizon, rng, size)
        fb, fs = _shifted_pair_values(F, sb)
        gb, gs = _shifted_pair_values(G, sb)
        lf = _generator_values_batch(F, sb.base, model, horizon)
        lg = _generator_values_batch(G, sb.base, model, horizon)
        form = (fs - fb) * (gs - gb)
        fg = gb * lf
        gf = fb * lg
        return [form, fg, gf, form + fg, form + gf, fg - gf]

    form, fg, gf, idfg, idgf, sym = _run_chunked(n_samples, cfg, chunk, chunk_size)
    return PairingResult(form=form, pairing_fg=fg, pairing_gf=gf,
                         identity_fg=idfg, identity_gf=idgf, symmetry=sym)


# -- builtin functional families ------------------------------------------------

def coordinate(time: float, lo: Optional[float] = None,
               hi: Optional[float] = None, bound: float = math.inf,
               name: str = "") -> CylindricalFunctional:
    """Value of the path at one time (d = 1), optionally clipped to [lo, hi]."""
    if lo is None and hi is None:
        return CylindricalFunctional(
            times=(time,), f=lambda a: float(a),
            batch=lambda c: np.asarray(c[:, 0], dtype=float),
            bound=bound, name=name or f"coord@{time}")
    lo = -math.inf if lo is None else float(lo)
    hi = math.inf if hi is None else float(hi)
    b = max(abs(v) for v in (lo, hi) if math.isfinite(v))
    return CylindricalFunctional(
        times=(time,), f=lambda a: float(min(max(a, lo), hi)),
        batch=lambda c: np.clip(c[:, 0], lo, hi),
        bound=min(bound, b), name=name or f"clip[{lo},{hi}]@{time}")


def indicator_at(time: float, value: float, name: str = "") -> CylindricalFunctional:
    """1 when the path equals `value` exactly at `time` (d = 1, lattice use)."""
    v = float(value)
    return CylindricalFunctional(
        times=(time,), f=lambda a: 1.0 if a == v else 0.0,
        batch=lambda c: (c[:, 0] == v).astype(float),
        bound=1.0, name=name or f"ind[{v}]@{time}")


def product_indicator(times: Sequence[float], values: Sequence[float],
                      name: str = "") -> CylindricalFunctional:
    """Product of exact-value indicators over several times (d = 1)."""
    vals = np.asarray(values, dtype=float)
    if len(vals) != len(times):
        raise UnsortedTimes("times and values must have equal length")

    def scalar(*coords):
        return 1.0 if all(c == v for c, v in zip(coords, vals)) else 0.0

    return CylindricalFunctional(
        times=tuple(times), f=scalar,
        batch=lambda c: np.all(c == vals[None, :], axis=1).astype(float),
        bound=1.0, name=name or f"prod_ind@{list(times)}")


def capped_count(cap: int, name: str = "") -> CountFunctional:
    """min(number of jumps, cap)."""
    cap = int(cap)
    return CountFunctional(g=lambda m: float(min(m, cap)),
                           batch=lambda c: np.minimum(c, cap).astype(float),
                           name=name or f"count^{cap}")
