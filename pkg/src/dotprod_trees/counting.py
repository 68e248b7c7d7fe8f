"""Mollified tree-configuration counts: brute-force oracle and leaf-ripping elimination."""

from __future__ import annotations

import itertools
import os
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .errors import CountError, OutputTooLarge, TupleSpaceTooLarge
from .grid import CellGrid, default_cell_size
from .kernels import GapSpec, kernel_eval
from .measures import DiscreteMeasure
from .trees import Tree

CAP_ENV = "DOTPROD_TREES_CAP"
DEFAULT_CAP = 10**9
DEFAULT_OUTPUT_CAP = 10**6
_BLOCK_ELEMS = 1 << 21
# guards float rounding in the pruning bounds
_PRUNE_MARGIN = 1e-12


def evaluation_cap() -> int:
    raw = os.environ.get(CAP_ENV)
    return int(float(raw)) if raw else DEFAULT_CAP


@dataclass
class CountResult:
    value: float
    method: str
    tuple_space_size: int
    elapsed: float
    kernel_evals: int = 0
    extra: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "value": self.value,
            "method": self.method,
            "tuple_space_size": self.tuple_space_size,
            "elapsed_seconds": self.elapsed,
            "kernel_evals": self.kernel_evals,
        }


@dataclass
class VertexPotential:
    """Per-point values of a subtree pinned at one of its vertices."""

    values: np.ndarray
    subtree: tuple = ()
    pinned_vertex: int = 0


def dot_block(X: np.ndarray, Y: np.ndarray) -> np.ndarray:
    """All x.y for rows of X against rows of Y, with a fixed summation order."""
    out = X[:, 0, None] * Y[None, :, 0]
    for c in range(1, X.shape[1]):
        out += X[:, c, None] * Y[None, :, c]
    return out


def _dense_rows(X, Y, g, t, epsilon, kernel, normalized):
    K = kernel_eval(kernel, epsilon, dot_block(X, Y) - t, normalized)
    return np.sum(K * g[None, :], axis=1)


def edge_sum(
    m: DiscreteMeasure,
    f,
    t: float,
    epsilon: float,
    kernel: str = "indicator",
    pruning: bool = False,
    normalized: bool = False,
    threads: int = 1,
    stats: dict | None = None,
    cell_size: float | None = None,
) -> np.ndarray:
    """Discrete Radon-type average: out[x] = sum_y w_y f(y) rho(x.y - t).

    With ``pruning`` the points are hashed into cells and cell pairs whose
    dot-product range misses the window are never evaluated.  Either way each
    output entry is reduced independently, so results do not depend on
    ``threads``.
    """
    f = np.asarray(getattr(f, "values", f), dtype=float)
    if f.shape != (m.n,):
        raise CountError(f"potential has shape {f.shape}, expected ({m.n},)")
    P = m.points
    g = m.weights * f
    out = np.zeros(m.n)
    live = np.nonzero(g)[0]
    if live.size == 0:
        return out
    Y, gy = P[live], g[live]
    if not pruning:
        rows = max(1, _BLOCK_ELEMS // live.size)
        blocks = [(a, min(a + rows, m.n)) for a in range(0, m.n, rows)]

        def work(block):
            a, b = block
            out[a:b] = _dense_rows(P[a:b], Y, gy, t, epsilon, kernel, normalized)

        _run(work, blocks, threads)
        if stats is not None:
            stats["kernel_evals"] = stats.get("kernel_evals", 0) + m.n * live.size
        return out

    size = cell_size if cell_size is not None else default_cell_size(P, epsilon)
    xgrid = CellGrid(P, size)
    ygrid = CellGrid(Y, size)
    lo_w, hi_w = t - epsilon - _PRUNE_MARGIN, t + epsilon + _PRUNE_MARGIN
    evals = [0] * len(xgrid)

    def work_cell(a):
        lo, hi = xgrid.dot_bounds(ygrid, a)
        keep = np.nonzero((hi > lo_w) & (lo < hi_w))[0]
        xs = xgrid.members(a)
        if keep.size == 0:
            return
        ys = np.concatenate([ygrid.members(c) for c in keep])
        out[xs] = _dense_rows(P[xs], Y[ys], gy[ys], t, epsilon, kernel, normalized)
        evals[a] = xs.size * ys.size

    _run(work_cell, range(len(xgrid)), threads)
    if stats is not None:
        stats["kernel_evals"] = stats.get("kernel_evals", 0) + sum(evals)
    return out


def _run(fn, items, threads):
    if threads <= 1:
        for it in items:
            fn(it)
        return
    with ThreadPoolExecutor(max_workers=threads) as pool:
        list(pool.map(fn, items))


def naive_count(m: DiscreteMeasure, tree: Tree, gaps: GapSpec, cap: int | None = None) -> CountResult:
    """Sum over every ordered (k+1)-tuple of support points, repetitions included."""
    start = time.perf_counter()
    gaps.check_tree(tree)
    n, nv = m.n, tree.vertex_count
    space = n**nv
    cap = evaluation_cap() if cap is None else cap
    if space > cap:
        raise TupleSpaceTooLarge(f"{n}^{nv} = {space} tuples exceeds cap {cap}")
    gram = dot_block(m.points, m.points)
    edge_k = [gaps(gram - gaps.target(e)) for e in tree.edges]

    # enumerate the leading vertices explicitly, broadcast over the rest
    lead = 0
    while lead < nv and n ** (nv - lead) > (1 << 20):
        lead += 1
    total = 0.0
    rest = nv - lead
    for prefix in itertools.product(range(n), repeat=lead):
        block = np.ones([n] * rest) if rest else np.ones(())
        w_pre = 1.0
        for v in range(lead):
            w_pre *= m.weights[prefix[v]]
        for v in range(rest):
            sh = [1] * rest
            sh[v] = n
            block = block * m.weights.reshape(sh)
        for (i, j), K in zip(tree.edges, edge_k):
            if i < lead and j < lead:
                block = block * K[prefix[i], prefix[j]]
            elif i < lead or j < lead:
                fixed, free = (i, j) if i < lead else (j, i)
                sh = [1] * rest
                sh[free - lead] = n
                block = block * K[prefix[fixed]].reshape(sh)
            else:
                sh = [1] * rest
                sh[i - lead] = n
                sh[j - lead] = n
                block = block * K.reshape(sh)
        total += w_pre * float(block.sum())
    return CountResult(total, "oracle", space, time.perf_counter() - start, space * tree.k)


def _elimination_order(tree: Tree, leaf_order=None) -> list[tuple[int, int]]:
    """(leaf, neighbour) pairs in ripping order; default rips the smallest leaf first."""
    adj = [set(a) for a in tree.adjacency]
    alive = set(range(tree.vertex_count))
    order = []
    queue = list(leaf_order) if leaf_order is not None else None
    while len(alive) > 1:
        cands = [v for v in alive if len(adj[v]) == 1]
        if queue is not None:
            leaf = next((v for v in queue if v in cands), None)
            if leaf is None:
                raise CountError("leaf_order does not name a current leaf")
            queue.remove(leaf)
        else:
            leaf = min(cands)
        (nbr,) = adj[leaf]
        order.append((leaf, nbr))
        adj[nbr].discard(leaf)
        adj[leaf].clear()
        alive.discard(leaf)
    return order


def tree_dp_count(
    m: DiscreteMeasure,
    tree: Tree,
    gaps: GapSpec,
    pruning: bool = False,
    leaf_order=None,
    threads: int = 1,
) -> CountResult:
    """Leaf-ripping elimination: each removed leaf edge folds its potential into the neighbour."""
    start = time.perf_counter()
    gaps.check_tree(tree)
    pot = [np.ones(m.n) for _ in range(tree.vertex_count)]
    stats: dict = {}
    order = _elimination_order(tree, leaf_order)
    for leaf, nbr in order:
        msg = edge_sum(
            m, pot[leaf], gaps.target((leaf, nbr)), gaps.epsilon, gaps.kernel,
            pruning, gaps.normalized, threads, stats,
        )
        pot[nbr] = pot[nbr] * msg
        pot[leaf] = None
    root = order[-1][1] if order else 0
    value = float(np.sum(m.weights * pot[root]))
    return CountResult(
        value, "tree_dp", m.n**tree.vertex_count, time.perf_counter() - start,
        stats.get("kernel_evals", 0), {"root": root},
    )


def _window(X, Y, t, eps):
    return np.abs(dot_block(X, Y) - t) < eps


def enumerate_embeddings(
    m: DiscreteMeasure,
    tree: Tree,
    gaps: GapSpec,
    cap: int = DEFAULT_OUTPUT_CAP,
    exclude_repeats: bool = False,
) -> np.ndarray:
    """All ordered tuples (rows of point indices) with |x_i.x_j - t_ij| < eps on every edge.

    A bottom-up pass counts completions of each subtree; the top-down
    expansion only extends partial tuples with nonzero completion counts.
    Rows are in lexicographic order of the BFS vertex order from vertex 0.
    """
    gaps.check_tree(tree)
    n, P = m.n, m.points
    nv = tree.vertex_count
    parent = [-1] * nv
    bfs = [0]
    for v in bfs:
        for w in tree.adjacency[v]:
            if w != parent[v] and w != 0:
                parent[w] = v
                bfs.append(w)
    counts = [np.ones(n) for _ in range(nv)]
    for v in reversed(bfs[1:]):
        p = parent[v]
        t = gaps.target((v, p))
        msg = np.zeros(n)
        rows = max(1, _BLOCK_ELEMS // n)
        for a in range(0, n, rows):
            msg[a : a + rows] = (_window(P[a : a + rows], P, t, gaps.epsilon) * counts[v][None, :]).sum(axis=1)
        counts[p] = counts[p] * msg
    total = int(round(float(counts[0].sum())))
    if not exclude_repeats and total > cap:
        raise OutputTooLarge(f"{total} embeddings exceed cap {cap}")

    tuples = np.nonzero(counts[0] > 0)[0].reshape(-1, 1)
    cols = {0: 0}
    for v in bfs[1:]:
        p = parent[v]
        t = gaps.target((v, p))
        live = np.nonzero(counts[v] > 0)[0]
        pieces = []
        rows = max(1, _BLOCK_ELEMS // max(live.size, 1))
        for a in range(0, len(tuples), rows):
            part = tuples[a : a + rows]
            ok = _window(P[part[:, cols[p]]], P[live], t, gaps.epsilon)
            r, c = np.nonzero(ok)
            pieces.append(np.concatenate([part[r], live[c].reshape(-1, 1)], axis=1))
        tuples = np.concatenate(pieces) if pieces else np.zeros((0, len(cols) + 1), dtype=np.int64)
        cols[v] = len(cols)
        if exclude_repeats:
            tuples = tuples[np.all(tuples[:, :-1] != tuples[:, -1:], axis=1)]
        if len(tuples) > cap * max(n, 1):
            raise OutputTooLarge(f"partial expansion reached {len(tuples)} rows")
    # reorder columns to vertex labels 0..nv-1
    out = np.empty((len(tuples), nv), dtype=np.int64)
    for v, col in cols.items():
        out[:, v] = tuples[:, col]
    if len(out) > cap:
        raise OutputTooLarge(f"{len(out)} embeddings exceed cap {cap}")
    return out


def embedding_count(m: DiscreteMeasure, tree: Tree, t, epsilon: float, pruning: bool = False) -> int:
    """Number of ordered tuples in the open window on every edge, via elimination with unit weights."""
    # uniform weights 1/n turn the tuple count into value / n^(k+1)
    uniform = DiscreteMeasure(m.points, np.full(m.n, 1.0 / m.n), m.meta)
    gaps = GapSpec(t, epsilon, "indicator")
    value = tree_dp_count(uniform, tree, gaps, pruning=pruning).value
    return int(round(value * float(m.n) ** tree.vertex_count))
