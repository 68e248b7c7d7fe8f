"""Window kernels rho^eps(u) = eps^-1 rho(u / eps) and their raw (peak-one) variants."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.integrate import quad

from .errors import CountError, UnknownKernel

KERNELS = ("indicator", "triangle", "bump")


def _bump_profile(v):
    v = np.asarray(v, dtype=float)
    out = np.zeros_like(v)
    inside = np.abs(v) < 1.0
    vi = v[inside]
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - vi * vi))
    return out


# integral of exp(1 - 1/(1 - v^2)) over (-1, 1)
_BUMP_MASS = quad(lambda v: math.exp(1.0 - 1.0 / (1.0 - v * v)), -1.0, 1.0, epsabs=1e-13, epsrel=1e-13)[0]

# area under each raw profile on (-1, 1); normalised kernel = raw / (eps * mass)
_MASS = {"indicator": 2.0, "triangle": 1.0, "bump": _BUMP_MASS}


def _check(kernel: str) -> str:
    if kernel == "smooth-bump":
        kernel = "bump"
    if kernel not in _MASS:
        raise UnknownKernel(f"unknown kernel {kernel!r}; expected one of {KERNELS}")
    return kernel


def raw_profile(kernel: str, v):
    """Peak-one profile on the unit window; vanishes for |v| >= 1."""
    kernel = _check(kernel)
    v = np.asarray(v, dtype=float)
    if kernel == "indicator":
        return (np.abs(v) < 1.0).astype(float)
    if kernel == "triangle":
        return np.maximum(0.0, 1.0 - np.abs(v))
    return _bump_profile(v)


def kernel_eval(kernel: str, epsilon: float, u, normalized: bool = False):
    """Evaluate the window kernel at offset(s) ``u``.

    The raw variants peak at one; normalized variants integrate to one.
    """
    kernel = _check(kernel)
    if not epsilon > 0:
        raise CountError(f"epsilon must be positive, got {epsilon}")
    u = np.asarray(u, dtype=float)
    if kernel == "indicator":
        val = (np.abs(u) < epsilon).astype(float)
    elif kernel == "triangle":
        val = np.maximum(0.0, 1.0 - np.abs(u) / epsilon)
    else:
        val = _bump_profile(u / epsilon)
    if normalized:
        val = val / (epsilon * _MASS[kernel])
    return val if val.ndim else float(val)


def normalization(kernel: str, epsilon: float) -> float:
    """Factor turning a raw kernel value into the normalized one."""
    return 1.0 / (epsilon * _MASS[_check(kernel)])


@dataclass(frozen=True)
class GapSpec:
    """Per-edge dot-product targets, window width and kernel choice.

    ``targets`` is either one float applied to every edge or a mapping from
    edges ``(i, j)`` with ``i < j`` to floats.
    """

    targets: float | dict
    epsilon: float
    kernel: str = "indicator"
    normalized: bool = False

    def __post_init__(self):
        if not (self.epsilon > 0 and math.isfinite(self.epsilon)):
            raise CountError(f"epsilon must be positive and finite, got {self.epsilon}")
        object.__setattr__(self, "kernel", _check(self.kernel))
        if isinstance(self.targets, dict):
            clean = {tuple(sorted((int(a), int(b)))): float(v) for (a, b), v in self.targets.items()}
            object.__setattr__(self, "targets", clean)
        else:
            object.__setattr__(self, "targets", float(self.targets))
        if self.normalized:
            mass = quad(
                lambda u: kernel_eval(self.kernel, self.epsilon, u, True),
                -self.epsilon,
                self.epsilon,
                epsabs=1e-13,
                epsrel=1e-12,
                points=[0.0],
            )[0]
            if abs(mass - 1.0) > 1e-9:
                raise CountError(f"normalized {self.kernel} kernel integrates to {mass!r}")

    def target(self, edge) -> float:
        if isinstance(self.targets, float):
            return self.targets
        key = tuple(sorted(edge))
        try:
            return self.targets[key]
        except KeyError:
            raise CountError(f"no dot-product target for edge {key}") from None

    def check_tree(self, tree) -> None:
        for e in tree.edges:
            self.target(e)

    def __call__(self, u):
        return kernel_eval(self.kernel, self.epsilon, u, self.normalized)

    def to_dict(self) -> dict:
        if isinstance(self.targets, float):
            t = self.targets
        else:
            t = [[i, j, v] for (i, j), v in sorted(self.targets.items())]
        return {"targets": t, "epsilon": self.epsilon, "kernel": self.kernel, "normalized": self.normalized}
