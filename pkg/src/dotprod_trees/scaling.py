"""Scaling experiments: epsilon ladders, bound checks, packing/covering and dimension estimates."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.spatial import cKDTree

from .counting import embedding_count, enumerate_embeddings, tree_dp_count
from .errors import (
    AllZeroValues,
    BinTooSmall,
    DegenerateInterval,
    ExperimentError,
    LadderOutOfRange,
    NoEmbeddingsFound,
    NotACover,
    ResolutionFloor,
)
from .kernels import GapSpec, normalization
from .measures import DiscreteMeasure, diameter, min_gap
from .trees import Tree, is_isomorphic, symmetric_cover

DEFAULT_LADDER = tuple(2.0**-i for i in range(3, 9))
DEFAULT_DRIFT = 4.0


def fit_loglog(x, y) -> tuple[float, float, float]:
    """Least-squares line through (log x, log y); returns slope, intercept, RMS residual."""
    lx, ly = np.log(np.asarray(x, float)), np.log(np.asarray(y, float))
    if lx.size < 2:
        raise ExperimentError("need at least two positive points to fit a slope")
    A = np.stack([lx, np.ones_like(lx)], axis=1)
    (slope, icpt), *_ = np.linalg.lstsq(A, ly, rcond=None)
    resid = float(np.sqrt(np.mean((A @ [slope, icpt] - ly) ** 2)))
    return float(slope), float(icpt), resid


def _rng(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.PCG64(seed))


def dot_resolution(m: DiscreteMeasure) -> float:
    """Smallest support norm times the minimum point gap: the coarsest dot-product step the cloud resolves."""
    norms = np.sqrt((m.points**2).sum(axis=1))
    return float(norms.min()) * min_gap(m)


# --- interval selection -----------------------------------------------------


@dataclass(frozen=True)
class IntervalSelection:
    lo: float
    hi: float
    quantiles: tuple[float, float]
    median: float

    @property
    def midpoint(self) -> float:
        return 0.5 * (self.lo + self.hi)

    def samples(self, count: int) -> list[float]:
        """``count`` evenly spaced interior points of the open interval."""
        return [self.lo + (self.hi - self.lo) * (i + 1) / (count + 1) for i in range(count)]


def sample_pair_dots(m: DiscreteMeasure, sample_pairs: int, seed: int) -> np.ndarray:
    rng = _rng(seed)
    idx = rng.choice(m.n, size=(sample_pairs, 2), p=m.weights)
    a, b = m.points[idx[:, 0]], m.points[idx[:, 1]]
    return (a * b).sum(axis=1)


def select_interval(
    m: DiscreteMeasure,
    q_lo: float = 0.35,
    q_hi: float = 0.65,
    sample_pairs: int = 100_000,
    seed: int = 0,
) -> IntervalSelection:
    """Empirical quantile band of x.y over mu x mu-sampled pairs."""
    if not 0 <= q_lo < q_hi <= 1:
        raise ExperimentError(f"need 0 <= q_lo < q_hi <= 1, got ({q_lo}, {q_hi})")
    dots = sample_pair_dots(m, sample_pairs, seed)
    if np.ptp(dots) == 0:
        raise DegenerateInterval(f"every sampled dot product equals {dots[0]!r}")
    lo, hi, med = np.quantile(dots, [q_lo, q_hi, 0.5])
    if not lo < hi:
        raise DegenerateInterval(f"quantiles {q_lo}, {q_hi} coincide at {lo!r}")
    return IntervalSelection(float(lo), float(hi), (q_lo, q_hi), float(med))


# --- epsilon scaling ----------------------------------------------------------


@dataclass
class ScalingSeries:
    epsilons: list[float]
    values: list[float]
    fitted_slope: float
    fitted_intercept: float
    residual: float
    kernel: str = "indicator"
    k: int = 0
    normalized_values: list[float] = field(default_factory=list)

    def ratios(self, k: int | None = None) -> list[float]:
        k = self.k if k is None else k
        return [v / e**k for e, v in zip(self.epsilons, self.values)]


def _check_ladder(eps_ladder, min_len: int = 4) -> list[float]:
    eps = [float(e) for e in eps_ladder]
    if len(eps) < min_len:
        raise ExperimentError(f"ladder needs at least {min_len} entries, got {len(eps)}")
    if any(e <= 0 for e in eps) or any(b >= a for a, b in zip(eps, eps[1:])):
        raise ExperimentError("ladder must be positive and strictly decreasing")
    return eps


def _check_floor(m: DiscreteMeasure, eps: list[float]) -> None:
    floor = 2.0 * dot_resolution(m)
    if eps[-1] < floor:
        raise ResolutionFloor(f"epsilon {eps[-1]!r} is below the cloud's resolution floor {floor!r}")


def scaling_series(
    m: DiscreteMeasure,
    tree: Tree,
    t,
    eps_ladder=DEFAULT_LADDER,
    kernel: str = "triangle",
    pruning: bool = True,
    enforce_floor: bool = True,
    threads: int = 1,
) -> ScalingSeries:
    """Counts along a decreasing epsilon ladder and their log-log slope.

    ``values`` hold the raw-kernel (peak one) counts, which track the
    mu^(k+1) mass of the epsilon-window and scale like eps**k;
    ``normalized_values`` hold the unit-mass kernel version of the same sums.
    """
    eps = _check_ladder(eps_ladder)
    if enforce_floor:
        _check_floor(m, eps)
    values = [
        tree_dp_count(m, tree, GapSpec(t, e, kernel), pruning=pruning, threads=threads).value for e in eps
    ]
    pos = [(e, v) for e, v in zip(eps, values) if v > 0]
    if len(pos) < 2:
        raise AllZeroValues("fewer than two ladder points have a positive count")
    slope, icpt, resid = fit_loglog(*zip(*pos))
    normed = [v * normalization(kernel, e) ** tree.k for e, v in zip(eps, values)]
    return ScalingSeries(eps, values, slope, icpt, resid, kernel, tree.k, normed)


@dataclass(frozen=True)
class BoundVerdict:
    ratios: tuple[float, ...]
    max_ratio: float
    min_ratio: float
    drift: float
    passed: bool


def upper_bound_check(series: ScalingSeries, k: int, factor: float = DEFAULT_DRIFT) -> BoundVerdict:
    """V / eps**k along the ladder; fails if it grows by more than ``factor`` end to end."""
    ratios = series.ratios(k)
    first, last = ratios[0], ratios[-1]
    if first > 0:
        drift = last / first
    else:
        drift = math.inf if last > 0 else 1.0
    ok = all(math.isfinite(r) for r in ratios) and drift <= factor
    return BoundVerdict(tuple(ratios), max(ratios), min(ratios), drift, ok)


@dataclass(frozen=True)
class LowerBoundResult:
    t_values: tuple[float, ...]
    epsilons: tuple[float, ...]
    ratios: tuple[tuple[float, ...], ...]  # one row per t
    min_ratio: float
    max_drift: float
    passed: bool
    k: int


def lower_bound_check(
    m: DiscreteMeasure,
    tree: Tree,
    eps_ladder,
    interval: IntervalSelection | tuple[float, float],
    samples_t: int = 5,
    cover_of: Tree | None = None,
    kernel: str = "indicator",
    factor: float = DEFAULT_DRIFT,
    pruning: bool = True,
    threads: int = 1,
) -> LowerBoundResult:
    """min over t in the interval and over the ladder of V / eps**k, k = edges of ``tree``.

    ``tree`` must be a symmetric cover: either ``cover_of`` is given and its
    cover is isomorphic to ``tree``, or ``tree`` is its own cover.
    """
    source = cover_of if cover_of is not None else tree
    if tree.k < 1 or not is_isomorphic(symmetric_cover(source)[0], tree):
        raise NotACover("tree is not the symmetric cover of the stated source tree")
    eps = _check_ladder(eps_ladder, min_len=2)
    if isinstance(interval, IntervalSelection):
        ts = interval.samples(samples_t)
    else:
        lo, hi = interval
        ts = IntervalSelection(lo, hi, (0.0, 1.0), 0.5 * (lo + hi)).samples(samples_t)
    k = tree.k
    rows, drifts = [], []
    for t in ts:
        vals = [tree_dp_count(m, tree, GapSpec(t, e, kernel), pruning=pruning, threads=threads).value for e in eps]
        ratios = tuple(v / e**k for e, v in zip(eps, vals))
        rows.append(ratios)
        drifts.append(ratios[0] / ratios[-1] if ratios[-1] > 0 else math.inf)
    min_ratio = min(min(r) for r in rows)
    max_drift = max(drifts)
    return LowerBoundResult(tuple(ts), tuple(eps), tuple(rows), min_ratio, max_drift,
                            min_ratio > 0 and max_drift <= factor, k)


# --- packing and covering -----------------------------------------------------


def greedy_separated(points, sep: float) -> np.ndarray:
    """First-fit indices whose pairwise distances are all >= ``sep``."""
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts.reshape(-1, 1)
    n = len(pts)
    if n == 0:
        return np.zeros(0, dtype=np.int64)
    tree = cKDTree(pts)
    blocked = np.zeros(n, dtype=bool)
    chosen = []
    for i in range(n):
        if blocked[i]:
            continue
        chosen.append(i)
        near = np.asarray(tree.query_ball_point(pts[i], sep), dtype=np.int64)
        if near.size:
            dist = np.sqrt(((pts[near] - pts[i]) ** 2).sum(axis=1))
            blocked[near[dist < sep]] = True
    return np.asarray(chosen, dtype=np.int64)


def packing_number(points, r: float) -> int:
    """Greedy count of disjoint open r-balls centred at the points (centres >= 2r apart)."""
    if not r > 0:
        raise ExperimentError("radius must be positive")
    return int(greedy_separated(points, 2.0 * r).size)


def covering_number(points, r: float) -> int:
    """Greedy open r-ball cover: each uncovered point in order becomes a centre."""
    if not r > 0:
        raise ExperimentError("radius must be positive")
    return int(greedy_separated(points, r).size)


@dataclass
class DimensionEstimate:
    scales: list[float]
    counts: list[int]
    slope: float
    kind: str
    intercept: float = 0.0
    residual: float = 0.0


def dim_estimate(m: DiscreteMeasure, r_ladder) -> DimensionEstimate:
    """Box-counting dimension: slope of log N(E, r) against log(1/r) with greedy covers."""
    radii = [float(r) for r in r_ladder]
    if len(radii) < 2 or any(r <= 0 for r in radii):
        raise LadderOutOfRange("need at least two positive radii")
    if m.n > 1:
        diam, gap = diameter(m), min_gap(m)
        bad = [r for r in radii if r > diam or r < 0.5 * gap]
        if bad:
            raise LadderOutOfRange(f"radii {bad} outside [{0.5 * gap!r}, {diam!r}]")
    counts = [covering_number(m.points, r) for r in radii]
    slope, icpt, resid = fit_loglog([1.0 / r for r in radii], counts)
    return DimensionEstimate(radii, counts, slope, "covering", icpt, resid)


def minkowski_dim_embedding(
    m_levels,
    tree: Tree,
    t: float,
    slack: float = 2.0,
    radius_factor: float = 0.5,
    enumerate_cap: int = 200_000,
) -> DimensionEstimate:
    """Packing-number dimension of the embedding set across increasingly fine clouds.

    At each level the packing radius is ``radius_factor`` times the minimum
    point gap and tuples are taken in the window ``|x_i.x_j - t| < slack * r``.
    Tuples are packed in R^(d(k+1)).  When ``radius_factor <= 1/2`` distinct
    tuples are automatically 2r-separated, so levels whose embedding set
    exceeds ``enumerate_cap`` use the exact count from elimination instead.
    """
    scales, counts = [], []
    for m in m_levels:
        r = radius_factor * min_gap(m)
        if r <= 0:
            raise ExperimentError("level has a single point; no scale to pack at")
        window = slack * r
        total = embedding_count(m, tree, t, window, pruning=True)
        if total == 0:
            count = 0
        elif total <= enumerate_cap:
            tup = enumerate_embeddings(m, tree, GapSpec(t, window), cap=enumerate_cap)
            flat = m.points[tup].reshape(len(tup), -1)
            count = packing_number(flat, r)
        elif radius_factor <= 0.5:
            count = total
        else:
            raise ExperimentError(f"{total} embeddings exceed enumerate_cap={enumerate_cap}")
        scales.append(r)
        counts.append(count)
    pos = [(1.0 / s, c) for s, c in zip(scales, counts) if c > 0]
    if len(pos) < 2:
        raise NoEmbeddingsFound(f"t={t!r} yields embeddings at fewer than two levels")
    slope, icpt, resid = fit_loglog(*zip(*pos))
    return DimensionEstimate(scales, counts, slope, "packing", icpt, resid)


# --- dot-product configuration volume -----------------------------------------


@dataclass(frozen=True)
class LambdaBin:
    size: float
    occupied_volume: float
    occupied_bins: int
    tuples: int


def _tuple_dots(m: DiscreteMeasure, tree: Tree, idx: np.ndarray) -> np.ndarray:
    P = m.points
    return np.stack([(P[idx[:, i]] * P[idx[:, j]]).sum(axis=1) for i, j in tree.edges], axis=1)


def lambda_measure_lower(
    m: DiscreteMeasure,
    tree: Tree,
    bin_sizes,
    samples: int = 1 << 22,
    seed: int = 0,
    exhaustive_limit: int = 10**8,
    min_per_bin: float = 2.0,
) -> list[LambdaBin]:
    """Occupied-bin volume of the edge dot-product vectors at each bin size.

    Every tuple is used when ``n**(k+1) <= exhaustive_limit``; otherwise
    ``samples`` tuples are drawn from mu^(k+1).  In sampling mode a bin size is
    rejected if it leaves fewer than ``min_per_bin`` tuples per occupied bin.
    """
    k = tree.k
    if not 1 <= k <= 4:
        raise ExperimentError(f"lambda binning supports 1..4 edges, got {k}")
    sizes = [float(s) for s in bin_sizes]
    if any(s <= 0 for s in sizes):
        raise ExperimentError("bin sizes must be positive")
    space = m.n ** (k + 1)
    exhaustive = space <= exhaustive_limit
    max_norm2 = float((m.points**2).sum(axis=1).max())
    lo_dot = -max_norm2
    occupied: list[list[np.ndarray]] = [[] for _ in sizes]
    dense = []
    for s in sizes:
        per_axis = int(math.floor(2 * max_norm2 / s)) + 2
        dense.append(per_axis if per_axis**k <= 1 << 26 else None)
    masks = [np.zeros(p**k, dtype=bool) if p else None for p in dense]

    def absorb(dots):
        for b, s in enumerate(sizes):
            key = np.floor((dots - lo_dot) / s).astype(np.int64)
            if dense[b]:
                flat = np.ravel_multi_index(tuple(key.T), (dense[b],) * k)
                masks[b][flat] = True
            else:
                occupied[b].append(np.unique(key, axis=0))

    chunk = 1 << 20
    if exhaustive:
        used = space
        shape = (m.n,) * (k + 1)
        for a in range(0, space, chunk):
            flat = np.arange(a, min(a + chunk, space), dtype=np.int64)
            idx = np.stack(np.unravel_index(flat, shape), axis=1)
            absorb(_tuple_dots(m, tree, idx))
    else:
        used = samples
        rng = _rng(seed)
        for a in range(0, samples, chunk):
            size = min(chunk, samples - a)
            idx = rng.choice(m.n, size=(size, k + 1), p=m.weights)
            absorb(_tuple_dots(m, tree, idx))

    out = []
    for b, s in enumerate(sizes):
        if dense[b]:
            nb = int(masks[b].sum())
        else:
            nb = len(np.unique(np.concatenate(occupied[b]), axis=0))
        if not exhaustive and used < min_per_bin * nb:
            raise BinTooSmall(f"bin size {s!r}: {nb} occupied bins for only {used} sampled tuples")
        out.append(LambdaBin(s, nb * s**k, nb, used))
    return out
