"""Low-frequency L2 mass of the Fourier transform of f mu, sampled on a uniform grid."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DimensionTooHigh, GridTooCoarse, SpectralError
from .measures import DiscreteMeasure, min_gap
from .scaling import fit_loglog

MIN_DENSITY = 4.0
_BLOCK_ELEMS = 1 << 21


@dataclass
class SpectralProbe:
    j_values: list[int]
    masses: list[float]
    slope: float
    intercept: float = 0.0
    residual: float = 0.0
    target: float | None = None
    quadrature_change: float | None = None


def _grid(R: float, d: int, density: float) -> tuple[np.ndarray, np.ndarray]:
    """Frequency nodes filling |xi| <= R and their quadrature weights."""
    h = 1.0 / density
    if d == 1:
        m = int(round(R * density))
        xi = np.arange(-m, m + 1) * h
        w = np.full(xi.size, h)
        # trapezoid ends; exact when R is a multiple of h
        w[0] = w[-1] = 0.5 * h
        tail = R - m * h
        if abs(tail) > 1e-12 * R:
            w[0] += tail
            w[-1] += tail
        return xi.reshape(-1, 1), w
    m = int(math.ceil(R * density))
    axis = (np.arange(-m, m) + 0.5) * h
    gx, gy = np.meshgrid(axis, axis, indexing="ij")
    xi = np.stack([gx.ravel(), gy.ravel()], axis=1)
    keep = (xi**2).sum(axis=1) <= R * R
    return xi[keep], np.full(int(keep.sum()), h * h)


def transform(m: DiscreteMeasure, f, xi: np.ndarray) -> np.ndarray:
    """sum_m w_m f(x_m) exp(-2 pi i x_m . xi) at each row of ``xi``."""
    g = m.weights * np.asarray(f, dtype=float)
    live = np.nonzero(g)[0]
    out = np.zeros(len(xi), dtype=complex)
    if live.size == 0:
        return out
    X, g = m.points[live], g[live]
    rows = max(1, _BLOCK_ELEMS // live.size)
    for a in range(0, len(xi), rows):
        phase = xi[a : a + rows] @ X.T
        out[a : a + rows] = np.exp(-2j * np.pi * phase) @ g
    return out


def windowed_fourier_mass(m: DiscreteMeasure, f, j: int, grid_density: float = 8.0) -> float:
    """sqrt of the integral of |transform(f mu)|^2 over the ball |xi| <= 2**j."""
    if m.d > 2:
        raise DimensionTooHigh(f"d={m.d}; frequency grids are limited to d <= 2")
    max_norm = float(np.sqrt((m.points**2).sum(axis=1)).max())
    need = max(MIN_DENSITY, MIN_DENSITY * max_norm)
    if grid_density < need:
        raise GridTooCoarse(f"grid density {grid_density} below {need} samples per unit frequency")
    f = np.asarray(f, dtype=float)
    if f.shape != (m.n,):
        raise SpectralError(f"f has shape {f.shape}, expected ({m.n},)")
    xi, w = _grid(2.0**j, m.d, grid_density)
    F = transform(m, f, xi)
    return float(math.sqrt(float(np.sum(w * (F.real**2 + F.imag**2)))))


def frostman_fourier_slope(
    m: DiscreteMeasure,
    f=None,
    j_range=range(2, 8),
    grid_density: float = 8.0,
    check_quadrature: bool = True,
) -> SpectralProbe:
    """Growth exponent of the windowed mass in 2**j; about (d - s)/2 for s-regular mu."""
    js = [int(j) for j in j_range]
    if len(js) < 4:
        raise SpectralError("j_range needs at least four values")
    gap = min_gap(m)
    if gap > 0 and 2.0 ** max(js) * gap >= 1.0:
        # above this the atoms dominate and the mass flattens out
        raise SpectralError(f"2**{max(js)} exceeds 1/min_gap = {1.0 / gap!r}; lower the j window")
    f = np.ones(m.n) if f is None else np.asarray(f, dtype=float)
    masses = [windowed_fourier_mass(m, f, j, grid_density) for j in js]
    if min(masses) <= 0:
        raise SpectralError("masses must be positive to fit a slope")
    slope, icpt, resid = fit_loglog([2.0**j for j in js], masses)
    change = None
    if check_quadrature:
        fine = [windowed_fourier_mass(m, f, j, 2 * grid_density) for j in js]
        change = max(abs(a - b) / b for a, b in zip(masses, fine))
    s = m.meta.get("s")
    target = None if s is None else (m.d - s) / 2
    return SpectralProbe(js, masses, slope, icpt, resid, target, change)
