"""Uniform spatial hash used to skip point blocks whose dot products miss a window."""

from __future__ import annotations

import math

import numpy as np

MAX_CELLS = 4096


class CellGrid:
    """Points bucketed into axis-aligned cells.

    ``order`` lists point indices grouped by cell; cell ``c`` owns
    ``order[starts[c]:starts[c + 1]]``.  ``centers``/``radii`` give, for each
    non-empty cell, the box centre and the largest distance from it to a member.
    """

    def __init__(self, points: np.ndarray, cell_size: float):
        n, d = points.shape
        lo = points.min(axis=0)
        extent = float((points.max(axis=0) - lo).max())
        per_axis_cap = max(1, int(MAX_CELLS ** (1.0 / d)))
        if extent > 0:
            cell_size = max(cell_size, extent / per_axis_cap)
        else:
            cell_size = max(cell_size, 1.0)
        self.cell_size = cell_size
        ijk = np.minimum(np.floor((points - lo) / cell_size).astype(np.int64), per_axis_cap - 1)
        ijk = np.maximum(ijk, 0)
        key = np.zeros(n, dtype=np.int64)
        for c in range(d):
            key = key * per_axis_cap + ijk[:, c]
        order = np.argsort(key, kind="stable")
        sorted_keys = key[order]
        uniq, starts = np.unique(sorted_keys, return_index=True)
        self.order = order
        self.starts = np.append(starts, n)
        self.keys = uniq
        centers = np.empty((len(uniq), d))
        radii = np.empty(len(uniq))
        for c in range(len(uniq)):
            members = points[order[self.starts[c] : self.starts[c + 1]]]
            box_lo = lo + ijk[order[self.starts[c]]] * cell_size
            centers[c] = box_lo + 0.5 * cell_size
            radii[c] = math.sqrt(float(((members - centers[c]) ** 2).sum(axis=1).max()))
        self.centers = centers
        self.radii = radii
        self.center_norms = np.sqrt((centers**2).sum(axis=1))

    def __len__(self) -> int:
        return len(self.keys)

    def members(self, c: int) -> np.ndarray:
        return self.order[self.starts[c] : self.starts[c + 1]]

    def dot_bounds(self, other: "CellGrid", a: int) -> tuple[np.ndarray, np.ndarray]:
        """Bounds on x.y for x in cell ``a`` of self and y in each cell of ``other``."""
        mid = other.centers @ self.centers[a]
        slack = (
            self.center_norms[a] * other.radii
            + other.center_norms * self.radii[a]
            + self.radii[a] * other.radii
        )
        return mid - slack, mid + slack


def default_cell_size(points: np.ndarray, epsilon: float) -> float:
    """eps / (sqrt(d) * max norm): a cell's dot-product spread with any fixed x stays below eps."""
    d = points.shape[1]
    max_norm = float(np.sqrt((points**2).sum(axis=1)).max())
    return epsilon / (math.sqrt(d) * max(max_norm, 1e-300))
