"""Exact pattern counting: induced and noninduced copies.

Counts are numbers of vertex subsets carrying a copy of the pattern
(noninduced: the pattern's edges are present; induced: the subset's edge
set equals the pattern exactly), i.e. labeled embeddings divided by
|Aut(R)|.  All arithmetic is exact integer arithmetic.

Order-3 patterns (2-stars and triangles) take closed-form fast paths so
they stay cheap on large sparse graphs; everything else goes through an
injective backtracking search with an optional node budget.
"""

from __future__ import annotations

import numpy as np

from .errors import BudgetExceededError
from .graph import Graph
from .patterns import PatternGraph, automorphism_count


def _scipy_adjacency(g: Graph):
    from scipy import sparse

    data = np.ones(g.indices.size, dtype=np.int64)
    return sparse.csr_matrix((data, g.indices, g.indptr), shape=(g.n, g.n))


def wedge_count(g: Graph) -> int:
    """Number of paths on 3 vertices (noninduced 2-star copies)."""
    d = g.degrees.astype(object)
    return int(sum(x * (x - 1) // 2 for x in d))


def triangle_count(g: Graph) -> int:
    if g.edge_count == 0:
        return 0
    a = _scipy_adjacency(g)
    # (A @ A) ∘ A sums closed 2-paths over adjacent pairs: 6 per triangle
    t = int((a @ a).multiply(a).sum())
    assert t % 6 == 0
    return t // 6


def triangles_per_vertex(g: Graph) -> np.ndarray:
    if g.edge_count == 0:
        return np.zeros(g.n, dtype=np.int64)
    a = _scipy_adjacency(g)
    b = np.asarray((a @ a).multiply(a).sum(axis=1)).ravel()
    assert not np.any(b % 2)
    return (b // 2).astype(np.int64)


def _classify_p3(r: PatternGraph) -> str:
    return "triangle" if r.q == 3 else "twostar"


def _count_p3(g: Graph, r: PatternGraph, induced: bool) -> int:
    kind = _classify_p3(r)
    t = triangle_count(g)
    if kind == "triangle":
        return t
    w = wedge_count(g)
    # each triangle's three 2-subsets of edges are noninduced 2-stars but
    # not induced ones
    return w - 3 * t if induced else w


def _embedding_count(g: Graph, r: PatternGraph, induced: bool, budget: int | None) -> int:
    """Count injective vertex maps preserving edges (and non-edges if induced)."""
    p = r.p
    padj = r.adjacency
    # visit each connected component in a BFS order so new vertices anchor
    # on already-mapped neighbors whenever possible
    order: list[int] = []
    placed = set()
    while len(order) < p:
        root = max(
            (v for v in range(p) if v not in placed),
            key=lambda v: len(padj[v]),
        )
        queue = [root]
        placed.add(root)
        while queue:
            v = queue.pop(0)
            order.append(v)
            for u in sorted(padj[v], key=lambda x: -len(padj[x])):
                if u not in placed:
                    placed.add(u)
                    queue.append(u)
    anchors = []
    non_anchors = []
    for idx, v in enumerate(order):
        before = order[:idx]
        anchors.append([u for u in before if u in padj[v]])
        non_anchors.append([u for u in before if u not in padj[v]])

    nbr = [set(g.neighbors(i).tolist()) for i in range(g.n)]
    gdeg = g.degrees
    pdeg = r.degree_sequence
    image = [-1] * p
    used = set()
    count = 0
    nodes = 0
    all_vertices = range(g.n)

    def extend(idx: int):
        nonlocal count, nodes
        if idx == p:
            count += 1
            return
        nodes += 1
        if budget is not None and nodes > budget:
            raise BudgetExceededError(
                f"embedding search exceeded budget of {budget} nodes"
            )
        v = order[idx]
        anc = anchors[idx]
        if anc:
            base = min((nbr[image[u]] for u in anc), key=len)
            candidates = [x for x in base if x not in used]
        else:
            candidates = [x for x in all_vertices if x not in used]
        for x in candidates:
            if gdeg[x] < pdeg[v]:
                continue
            ok = True
            for u in anc:
                if x not in nbr[image[u]]:
                    ok = False
                    break
            if ok and induced:
                for u in non_anchors[idx]:
                    if x in nbr[image[u]]:
                        ok = False
                        break
            if not ok:
                continue
            image[v] = x
            used.add(x)
            extend(idx + 1)
            used.discard(x)
            image[v] = -1

    extend(0)
    return count


def count_noninduced(g: Graph, r: PatternGraph, budget: int | None = None) -> int:
    """Subsets of V(g) carrying every edge of r (extra edges allowed)."""
    if r.p > g.n:
        return 0
    if r.p == 2:
        return g.edge_count
    if r.p == 3:
        return _count_p3(g, r, induced=False)
    emb = _embedding_count(g, r, induced=False, budget=budget)
    a = automorphism_count(r)
    assert emb % a == 0
    return emb // a


def count_induced(g: Graph, r: PatternGraph, budget: int | None = None) -> int:
    """Subsets of V(g) whose induced edge set equals r exactly."""
    if r.p > g.n:
        return 0
    if r.p == 2:
        # a 2-subset induces exactly one possible nonempty edge set
        return g.edge_count
    if r.p == 3:
        return _count_p3(g, r, induced=True)
    emb = _embedding_count(g, r, induced=True, budget=budget)
    a = automorphism_count(r)
    assert emb % a == 0
    return emb // a


def supergraphs_on_same_vertices(r: PatternGraph) -> list[PatternGraph]:
    """All patterns S ⊇ R on V(R) (including R itself), one per edge superset."""
    from itertools import combinations

    existing = set(r.edges)
    non_edges = [
        (u, v) for u, v in combinations(range(r.p), 2) if (u, v) not in existing
    ]
    out = []
    for size in range(len(non_edges) + 1):
        for extra in combinations(non_edges, size):
            out.append(PatternGraph(p=r.p, edges=r.edges + tuple(extra)))
    return out
