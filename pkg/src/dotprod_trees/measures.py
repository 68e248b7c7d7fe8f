"""Weighted point clouds approximating self-similar sets, and ball-mass regularity checks."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.spatial import cKDTree

from .errors import EmptyRadiusList, MeasureError, OverlappingBranches, TooManyPoints

RNG_NAME = "numpy.random.PCG64"
DEFAULT_C = 0.3
DEFAULT_POINT_CAP = 10**6
WEIGHT_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class DiscreteMeasure:
    points: np.ndarray  # shape (n, d)
    weights: np.ndarray  # shape (n,)
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        pts = np.ascontiguousarray(np.asarray(self.points, dtype=float))
        if pts.ndim == 1:
            pts = pts.reshape(-1, 1)
        w = np.ascontiguousarray(np.asarray(self.weights, dtype=float).reshape(-1))
        if pts.shape[0] != w.shape[0] or pts.shape[0] == 0:
            raise MeasureError(f"{pts.shape[0]} points but {w.shape[0]} weights")
        if np.any(w < 0) or not np.all(np.isfinite(w)):
            raise MeasureError("weights must be finite and nonnegative")
        total = math.fsum(w)
        if abs(total - 1.0) > WEIGHT_TOL:
            raise MeasureError(f"weights sum to {total!r}, not 1")
        pts.setflags(write=False)
        w.setflags(write=False)
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)

    @property
    def n(self) -> int:
        return self.points.shape[0]

    @property
    def d(self) -> int:
        return self.points.shape[1]

    @property
    def s(self) -> float | None:
        return self.meta.get("s")

    def equals(self, other: "DiscreteMeasure") -> bool:
        return (
            self.points.shape == other.points.shape
            and np.array_equal(self.points, other.points)
            and np.array_equal(self.weights, other.weights)
            and self.meta == other.meta
        )


@dataclass(frozen=True)
class RegularityReport:
    s: float
    max_upper_ratio: float
    min_lower_ratio: float
    radii: tuple[float, ...]


def _offsets(ratio: float, branches: int) -> np.ndarray:
    # children evenly spread: first flush left, last flush right
    return np.arange(branches) * ((1.0 - ratio) / (branches - 1))


def cantor_1d(ratio: float, branches: int, level: int) -> DiscreteMeasure:
    """Left endpoints of the level-``level`` intervals of a uniform Cantor construction."""
    if not 0 < ratio <= 0.5:
        raise MeasureError(f"ratio must lie in (0, 1/2], got {ratio}")
    if branches < 2 or level < 0:
        raise MeasureError("need branches >= 2 and level >= 0")
    if branches * ratio > 1 + 1e-15:
        raise OverlappingBranches(f"{branches} branches of ratio {ratio} overlap")
    offs = _offsets(ratio, branches)
    pts = np.zeros(1)
    scale = 1.0
    for _ in range(level):
        pts = (pts[:, None] + scale * offs[None, :]).reshape(-1)
        scale *= ratio
    n = pts.size
    meta = {
        "family": "cantor",
        "ratio": ratio,
        "branches": branches,
        "level": level,
        "s": math.log(branches) / math.log(1.0 / ratio),
        "c": None,
    }
    return DiscreteMeasure(pts.reshape(-1, 1), np.full(n, 1.0 / n), meta)


def cantor_min_gap(ratio: float, branches: int, level: int) -> float:
    """Exact smallest distance between left endpoints of ``cantor_1d`` (level >= 1)."""
    return ratio ** (level - 1) * (1.0 - ratio) / (branches - 1)


def product_measure(m1: DiscreteMeasure, m2: DiscreteMeasure, cap: int = DEFAULT_POINT_CAP) -> DiscreteMeasure:
    n1, n2 = m1.n, m2.n
    if n1 * n2 > cap:
        raise TooManyPoints(f"product would have {n1 * n2} points (cap {cap})")
    pts = np.concatenate(
        [np.repeat(m1.points, n2, axis=0), np.tile(m2.points, (n1, 1))], axis=1
    )
    w = np.outer(m1.weights, m2.weights).reshape(-1)
    s1, s2 = m1.meta.get("s"), m2.meta.get("s")
    meta = {
        "family": "product",
        "factors": [m1.meta, m2.meta],
        "s": None if s1 is None or s2 is None else s1 + s2,
        "c": None,
    }
    return DiscreteMeasure(pts, w, meta)


def cantor_product(ratio: float, branches: int, level: int, dims: int) -> DiscreteMeasure:
    """``dims``-fold product of :func:`cantor_1d` with itself."""
    base = cantor_1d(ratio, branches, level)
    m = base
    for _ in range(dims - 1):
        m = product_measure(m, base)
    return m


def shift_to_box(m: DiscreteMeasure, c: float) -> DiscreteMeasure:
    """Map [0,1]^d affinely onto [c,1]^d; weights are untouched."""
    if not 0 < c < 1:
        raise MeasureError(f"c must lie in (0, 1), got {c}")
    meta = dict(m.meta)
    prev = meta.get("c")
    # composing x -> c1 + (1-c1)x with x -> c2 + (1-c2)x is again of this form
    meta["c"] = c if prev is None else c + (1 - c) * prev
    return DiscreteMeasure(c + (1.0 - c) * m.points, m.weights, meta)


def uniform_cube_sample(n: int, d: int, c: float = DEFAULT_C, seed: int = 0) -> DiscreteMeasure:
    if n < 1 or d < 1:
        raise MeasureError("need n >= 1 and d >= 1")
    rng = np.random.Generator(np.random.PCG64(seed))
    pts = c + (1.0 - c) * rng.random((n, d))
    meta = {
        "family": "uniform",
        "n": n,
        "d": d,
        "seed": seed,
        "rng": RNG_NAME,
        "s": float(d),
        "c": c,
    }
    return DiscreteMeasure(pts, np.full(n, 1.0 / n), meta)


def point_measure(points, weights=None, meta=None) -> DiscreteMeasure:
    pts = np.asarray(points, dtype=float)
    if pts.ndim == 1:
        pts = pts.reshape(-1, 1)
    if weights is None:
        weights = np.full(pts.shape[0], 1.0 / pts.shape[0])
    else:
        weights = np.asarray(weights, dtype=float).reshape(-1)
        total = weights.sum()
        if not np.isfinite(total) or total <= 0 or np.any(weights < 0):
            raise MeasureError("weights must be nonnegative with a positive finite total")
        weights = weights / total
    return DiscreteMeasure(pts, weights, dict(meta or {"family": "points", "s": None, "c": None}))


def min_gap(m: DiscreteMeasure) -> float:
    """Smallest distance between two distinct support points (0.0 for one point)."""
    if m.n < 2:
        return 0.0
    dist, _ = cKDTree(m.points).query(m.points, k=2)
    return float(dist[:, 1].min())


def diameter(m: DiscreteMeasure) -> float:
    if m.n < 2:
        return 0.0
    if m.n <= 4096:
        diff = m.points[:, None, :] - m.points[None, :, :]
        return float(np.sqrt((diff**2).sum(-1)).max())
    # large clouds: bounding-box diagonal, an upper bound (exact for products of intervals)
    return float(np.linalg.norm(m.points.max(axis=0) - m.points.min(axis=0)))


def ball_masses(m: DiscreteMeasure, centers: np.ndarray, r: float) -> np.ndarray:
    """mu(B(x, r)) for each centre, with open Euclidean balls."""
    out = np.empty(len(centers))
    block = max(1, 2_000_000 // max(m.n, 1))
    for a in range(0, len(centers), block):
        c = centers[a : a + block]
        d2 = ((c[:, None, :] - m.points[None, :, :]) ** 2).sum(-1)
        out[a : a + block] = np.where(d2 < r * r, m.weights[None, :], 0.0).sum(axis=1)
    return out


def regularity_check(
    m: DiscreteMeasure, s: float, radii, sample_centers: int = 200, seed: int = 0
) -> RegularityReport:
    """Extremes of mu(B(x, r)) / r**s over sampled support centres and the given radii."""
    radii = tuple(float(r) for r in radii)
    if not radii:
        raise EmptyRadiusList("no radii supplied")
    if m.n <= sample_centers:
        idx = np.arange(m.n)
    else:
        rng = np.random.Generator(np.random.PCG64(seed))
        idx = np.sort(rng.choice(m.n, size=sample_centers, replace=False))
    centers = m.points[idx]
    ratios = np.stack([ball_masses(m, centers, r) / r**s for r in radii])
    return RegularityReport(float(s), float(ratios.max()), float(ratios.min()), radii)


def with_meta(m: DiscreteMeasure, **updates) -> DiscreteMeasure:
    return replace(m, meta={**m.meta, **updates})
