"""Finite trees: validation, leaf ripping, neighbour collapsing and symmetric covers."""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass, field
from functools import cached_property

from .errors import (
    CycleDetected,
    Disconnected,
    DuplicateEdge,
    InvalidVertex,
    IsLeaf,
    IsolatedVertex,
    NotALeaf,
    SelfLoop,
    TooLarge,
)

Edge = tuple[int, int]

PIVOT_POLICIES = ("max_degree", "min_degree")
MAX_ENUMERATED_EDGES = 8


def _norm(i: int, j: int) -> Edge:
    return (i, j) if i < j else (j, i)


@dataclass(frozen=True)
class Tree:
    vertex_count: int
    edges: tuple[Edge, ...]

    @property
    def k(self) -> int:
        return len(self.edges)

    @cached_property
    def adjacency(self) -> tuple[tuple[int, ...], ...]:
        adj: list[list[int]] = [[] for _ in range(self.vertex_count)]
        for i, j in self.edges:
            adj[i].append(j)
            adj[j].append(i)
        return tuple(tuple(sorted(a)) for a in adj)

    def degree(self, v: int) -> int:
        return len(self.adjacency[v])

    def has_edge(self, i: int, j: int) -> bool:
        return _norm(i, j) in self._edge_set

    @cached_property
    def _edge_set(self) -> frozenset[Edge]:
        return frozenset(self.edges)


@dataclass(frozen=True)
class EmbeddingCertificate:
    """Injective vertex map of a tree into its cover, with the induced edge map."""

    vertex_map: tuple[int, ...]
    edge_map: dict[Edge, Edge] = field(hash=False, compare=False)

    def verify(self, tree: Tree, cover: Tree) -> bool:
        vm = self.vertex_map
        if len(vm) != tree.vertex_count or len(set(vm)) != len(vm):
            return False
        if any(not 0 <= v < cover.vertex_count for v in vm):
            return False
        for i, j in tree.edges:
            image = _norm(vm[i], vm[j])
            if not cover.has_edge(*image) or self.edge_map.get((i, j)) != image:
                return False
        return True


def validate_tree(vertex_count: int, edges) -> Tree:
    """Build a :class:`Tree`, raising a specific error for any structural defect."""
    if vertex_count < 1:
        raise InvalidVertex(f"vertex_count must be >= 1, got {vertex_count}")
    seen: set[Edge] = set()
    normed: list[Edge] = []
    for raw in edges:
        i, j = (int(x) for x in raw)
        for v in (i, j):
            if not 0 <= v < vertex_count:
                raise InvalidVertex(f"edge ({i}, {j}) references vertex {v} outside 0..{vertex_count - 1}")
        if i == j:
            raise SelfLoop(f"self-loop at vertex {i}: edge ({i}, {j})")
        e = _norm(i, j)
        if e in seen:
            raise DuplicateEdge(f"duplicate edge ({e[0]}, {e[1]})")
        seen.add(e)
        normed.append(e)

    parent = list(range(vertex_count))

    def find(v: int) -> int:
        while parent[v] != v:
            parent[v] = parent[parent[v]]
            v = parent[v]
        return v

    for i, j in normed:
        ri, rj = find(i), find(j)
        if ri == rj:
            raise CycleDetected(f"edge ({i}, {j}) closes a cycle")
        parent[ri] = rj
    root = find(0)
    for v in range(vertex_count):
        if find(v) != root:
            raise Disconnected(f"vertex {v} is not reachable from vertex 0")
    return Tree(vertex_count, tuple(sorted(normed)))


def single_vertex() -> Tree:
    return Tree(1, ())


def path_tree(k: int) -> Tree:
    """Path with ``k`` edges on vertices 0..k."""
    return validate_tree(k + 1, [(i, i + 1) for i in range(k)])


def star_tree(k: int) -> Tree:
    """Star with centre 0 and ``k`` leaves."""
    return validate_tree(k + 1, [(0, i) for i in range(1, k + 1)])


def leaves(tree: Tree) -> list[int]:
    return [v for v in range(tree.vertex_count) if tree.degree(v) == 1]


def rip_leaf(tree: Tree, leaf: int) -> tuple[Tree, Edge, dict[int, int]]:
    """Remove ``leaf`` and its edge.

    Returns the smaller tree, the removed edge (original labels) and the
    old-to-new relabel map of the surviving vertices.
    """
    if not 0 <= leaf < tree.vertex_count or tree.degree(leaf) != 1:
        raise NotALeaf(f"vertex {leaf} is not a leaf")
    (nbr,) = tree.adjacency[leaf]
    relabel = {v: (v if v < leaf else v - 1) for v in range(tree.vertex_count) if v != leaf}
    rest = [(relabel[i], relabel[j]) for i, j in tree.edges if leaf not in (i, j)]
    return Tree(tree.vertex_count - 1, tuple(sorted(_norm(i, j) for i, j in rest))), _norm(leaf, nbr), relabel


def _collapse(tree: Tree, u: int) -> tuple[Tree, list[int]]:
    deg = tree.degree(u)
    if deg == 0:
        raise IsolatedVertex(f"vertex {u} has no neighbours")
    if deg == 1:
        raise IsLeaf(f"vertex {u} is a leaf")
    nbrs = set(tree.adjacency[u])
    # u -> 0, collapsed neighbours -> 1, everything else keeps its relative order
    vmap = [0] * tree.vertex_count
    nxt = 2
    for v in range(tree.vertex_count):
        if v == u:
            vmap[v] = 0
        elif v in nbrs:
            vmap[v] = 1
        else:
            vmap[v] = nxt
            nxt += 1
    new_edges = {(0, 1)}
    for i, j in tree.edges:
        if u in (i, j):
            continue
        new_edges.add(_norm(vmap[i], vmap[j]))
    return Tree(nxt, tuple(sorted(new_edges))), vmap


def collapse_neighbors(tree: Tree, u: int) -> Tree:
    """Identify all neighbours of ``u`` into one vertex attached to ``u``.

    In the result ``u`` is vertex 0 and the merged neighbour is vertex 1.
    """
    return _collapse(tree, u)[0]


def choose_pivot(tree: Tree, policy: str = "max_degree") -> int:
    inner = [v for v in range(tree.vertex_count) if tree.degree(v) >= 2]
    if not inner:
        raise IsLeaf("tree has no non-leaf vertex")
    if policy == "max_degree":
        return min(inner, key=lambda v: (-tree.degree(v), v))
    if policy == "min_degree":
        return min(inner, key=lambda v: (tree.degree(v), v))
    raise ValueError(f"unknown pivot policy {policy!r}; expected one of {PIVOT_POLICIES}")


def _component(tree: Tree, start: int, blocked: int) -> list[int]:
    seen = {start}
    queue = deque([start])
    while queue:
        v = queue.popleft()
        for w in tree.adjacency[v]:
            if w != blocked and w not in seen:
                seen.add(w)
                queue.append(w)
    return sorted(seen)


def _cover(tree: Tree, policy: str) -> tuple[Tree, list[int]]:
    if tree.k == 1:
        return tree, list(range(tree.vertex_count))
    u = choose_pivot(tree, policy)
    tu, pi = _collapse(tree, u)
    sub, phi = _cover(tu, policy)
    anchor = phi[pi[u]]
    others = [v for v in range(sub.vertex_count) if v != anchor]
    rank = {v: r for r, v in enumerate(others)}
    per_copy = len(others)

    def label(copy: int, v: int) -> int:
        return 0 if v == anchor else 1 + copy * per_copy + rank[v]

    deg = tree.degree(u)
    edges = [_norm(label(c, i), label(c, j)) for c in range(deg) for i, j in sub.edges]
    cover = Tree(1 + deg * per_copy, tuple(sorted(edges)))

    vertex_map = [0] * tree.vertex_count
    for c, nbr in enumerate(tree.adjacency[u]):
        for x in _component(tree, nbr, blocked=u):
            vertex_map[x] = label(c, phi[pi[x]])
    return cover, vertex_map


def symmetric_cover(tree: Tree, pivot_policy: str = "max_degree") -> tuple[Tree, EmbeddingCertificate]:
    """Recursive symmetric cover together with a certificate that ``tree`` embeds in it.

    Each stage collapses the neighbours of a pivot ``u``, covers the collapsed
    tree, and glues ``deg(u)`` copies of that cover at the image of ``u``.
    """
    if tree.k < 1:
        raise IsolatedVertex("symmetric cover needs at least one edge")
    if pivot_policy not in PIVOT_POLICIES:
        raise ValueError(f"unknown pivot policy {pivot_policy!r}; expected one of {PIVOT_POLICIES}")
    cover, vm = _cover(tree, pivot_policy)
    edge_map = {(i, j): _norm(vm[i], vm[j]) for i, j in tree.edges}
    return cover, EmbeddingCertificate(tuple(vm), edge_map)


def _rooted_code(tree: Tree, root: int) -> str:
    # iterative post-order to avoid recursion limits on long paths
    order, parent = [], {root: -1}
    stack = [root]
    while stack:
        v = stack.pop()
        order.append(v)
        for w in tree.adjacency[v]:
            if w != parent[v]:
                parent[w] = v
                stack.append(w)
    code: dict[int, str] = {}
    for v in reversed(order):
        kids = sorted(code[w] for w in tree.adjacency[v] if w != parent[v])
        code[v] = "(" + "".join(kids) + ")"
    return code[root]


def centers(tree: Tree) -> list[int]:
    if tree.vertex_count <= 2:
        return list(range(tree.vertex_count))
    deg = [tree.degree(v) for v in range(tree.vertex_count)]
    layer = [v for v in range(tree.vertex_count) if deg[v] == 1]
    remaining = tree.vertex_count
    while remaining > 2:
        remaining -= len(layer)
        nxt = []
        for v in layer:
            for w in tree.adjacency[v]:
                deg[w] -= 1
                if deg[w] == 1:
                    nxt.append(w)
        layer = nxt
    return sorted(layer)


def canonical_form(tree: Tree) -> str:
    """Isomorphism-invariant string (sorted-subtree encoding rooted at the centre)."""
    return min(_rooted_code(tree, c) for c in centers(tree))


def is_isomorphic(a: Tree, b: Tree) -> bool:
    return a.vertex_count == b.vertex_count and canonical_form(a) == canonical_form(b)


def enumerate_small_trees(max_edges: int) -> list[Tree]:
    """All non-isomorphic trees with 1..max_edges edges, grown leaf by leaf."""
    if max_edges > MAX_ENUMERATED_EDGES:
        raise TooLarge(f"max_edges={max_edges} exceeds {MAX_ENUMERATED_EDGES}")
    out: list[Tree] = []
    level = [path_tree(1)] if max_edges >= 1 else []
    while level:
        out.extend(level)
        if level[0].k >= max_edges:
            break
        grown: dict[str, Tree] = {}
        for t in level:
            n = t.vertex_count
            for v in range(n):
                child = Tree(n + 1, tuple(sorted(t.edges + ((v, n),))))
                grown.setdefault(canonical_form(child), child)
        level = [grown[key] for key in sorted(grown)]
    return out
