"""Per-hub wheel counting.

For a wheel specification (ks, ls), the per-hub count n_i is the number of
ways to choose, for each spoke length k_j, an unordered set of l_j k-edge
paths starting at i, all paths pairwise vertex-disjoint away from the hub.
Summed over hubs this equals hub_multiplicity(spec) times the noninduced
copy count of the wheel pattern, which is what the moment estimators and
the subsampling bootstrap consume.

Fast paths:
  * k = 1:               binomial(degree, l)
  * l = 1:               order-k degrees (path counts)
  * k = 2, l in {2, 3}:  closed-form independent-set counts in the
                         conflict graph of 2-paths, fully vectorized
Everything else runs an exact per-hub enumeration with a work budget.
"""

from __future__ import annotations

import math

import numpy as np

from .errors import BudgetExceededError, DomainError
from .graph import Graph
from .patterns import WheelSpec, hub_multiplicity

DEFAULT_BUDGET = 1_000_000


def _comb_column(x: np.ndarray, l: int) -> np.ndarray:
    """binomial(x, l) elementwise, exact, object dtype if int64 is unsafe."""
    x = np.asarray(x, dtype=np.int64)
    hi = int(x.max()) if x.size else 0
    if l == 0:
        return np.ones(x.shape, dtype=np.int64)
    if hi >= l and hi**l >= 2**62:
        vals, inv = np.unique(x, return_inverse=True)
        cb = np.array([math.comb(int(v), l) for v in vals], dtype=object)
        return cb[inv]
    out = np.maximum(x, 0).astype(np.int64)
    acc = out.copy()
    for j in range(1, l):
        acc *= np.maximum(x - j, 0)
    acc //= math.factorial(l)
    return acc


def _sparse_adj(g: Graph):
    from scipy import sparse

    return sparse.csr_matrix(
        (np.ones(g.indices.size, dtype=np.int64), g.indices, g.indptr),
        shape=(g.n, g.n),
    )


def _edge_key_table(g: Graph) -> np.ndarray:
    """Sorted int64 keys i*n + j for every directed adjacency entry."""
    src = np.repeat(np.arange(g.n, dtype=np.int64), np.diff(g.indptr))
    return src * g.n + g.indices  # sorted because rows ascend and rows are sorted


def _has_edge_bulk(keys_sorted: np.ndarray, i: np.ndarray, j: np.ndarray, n: int) -> np.ndarray:
    q = i.astype(np.int64) * n + j
    pos = np.searchsorted(keys_sorted, q)
    pos = np.minimum(pos, keys_sorted.size - 1) if keys_sorted.size else pos
    if keys_sorted.size == 0:
        return np.zeros(q.shape, dtype=bool)
    return keys_sorted[pos] == q


def _hub_counts_k2_l2(g: Graph) -> np.ndarray:
    """Disjoint pairs of 2-paths per hub.

    With m_i available 2-paths, count pairs and subtract conflicts: for
    each non-hub vertex v used by t_v paths there are C(t_v, 2) clashing
    pairs, a pair sharing both vertices (a path and its reversal, one per
    edge inside the hub's neighborhood) having been double-counted once.
    """
    from .counting import triangles_per_vertex

    a = _sparse_adj(g)
    d = g.degrees.astype(np.int64)
    m = np.asarray(a @ d).ravel() - d
    a2 = a @ a
    b = a2.multiply(a)  # common-neighbor counts on edges
    # t_v per hub i splits into mid(v) = [v ~ i](d_v - 1) and
    # end(v) = |N(v) ∩ N(i)|; sum_v C(t_v,2) = (sum t^2 - sum t)/2 with
    # sum_v t_v = 2 m_i
    sum_mid2 = np.asarray(a @ ((d - 1) ** 2)).ravel()
    sum_midend = np.asarray(b @ (d - 1)).ravel()
    sq = a2.copy()
    sq.data = sq.data**2
    sum_end2 = np.asarray(sq.sum(axis=1)).ravel() - d * d  # drop v = i (a2_ii = d_i)
    sum_t2 = sum_mid2 + 2 * sum_midend + sum_end2
    sum_comb_t = (sum_t2 - 2 * m) // 2
    reversals = triangles_per_vertex(g)
    conflicts = sum_comb_t - reversals
    return _comb_column(m, 2) - conflicts


def _path_table_k2(g: Graph):
    """All 2-paths as parallel arrays (hub, mid, end), built per midpoint."""
    hubs_parts, mids_parts, ends_parts = [], [], []
    for j in range(g.n):
        nb = g.neighbors(j)
        dj = nb.size
        if dj < 2:
            continue
        hubs = np.repeat(nb, dj)
        ends = np.tile(nb, dj)
        keep = hubs != ends
        hubs_parts.append(hubs[keep])
        ends_parts.append(ends[keep])
        mids_parts.append(np.full(hubs_parts[-1].size, j, dtype=np.int64))
    if not hubs_parts:
        z = np.zeros(0, dtype=np.int64)
        return z, z, z
    return (
        np.concatenate(hubs_parts),
        np.concatenate(mids_parts),
        np.concatenate(ends_parts),
    )


def _triangle_list(g: Graph) -> np.ndarray:
    """(T, 3) array of triangles x < y < z."""
    out = []
    for x, y in g.edges():
        nx = g.neighbors(x)
        ny = g.neighbors(y)
        common = np.intersect1d(nx, ny, assume_unique=True)
        common = common[common > y]
        for z in common:
            out.append((x, y, int(z)))
    return np.array(out, dtype=np.int64).reshape(-1, 3)


def _hub_counts_k2_l3(g: Graph) -> np.ndarray:
    """Disjoint triples of 2-paths per hub via conflict-graph counting.

    Independent 3-sets in a graph with m nodes, E edges, degrees dc and
    t triangles: C(m,3) - E (m-2) + sum_p C(dc_p, 2) - t.
    """
    from .counting import triangles_per_vertex

    n = g.n
    hubs, mids, ends = _path_table_k2(g)
    m = np.zeros(n, dtype=np.int64)
    if hubs.size:
        np.add.at(m, hubs, 1)

    # usage counts t_{(hub, v)} for v in {mid, end} of each path
    keys = np.concatenate([hubs * n + mids, hubs * n + ends]) if hubs.size else np.zeros(0, np.int64)
    ukeys, inv, t_counts = (
        np.unique(keys, return_inverse=True, return_counts=True)
        if keys.size
        else (np.zeros(0, np.int64), np.zeros(0, np.int64), np.zeros(0, np.int64))
    )
    key_hub = ukeys // n

    # conflict-edge count per hub: sum_v C(t_v, 2) - reversal pairs
    comb2_t = t_counts * (t_counts - 1) // 2
    sum_comb2 = np.zeros(n, dtype=np.int64)
    np.add.at(sum_comb2, key_hub, comb2_t)
    reversals = triangles_per_vertex(g)
    e_conf = sum_comb2 - reversals

    # per-path conflict degree dc = (t_mid - 1) + (t_end - 1) - [reversal exists]
    if hubs.size:
        t_mid = t_counts[inv[: hubs.size]]
        t_end = t_counts[inv[hubs.size :]]
        ekeys = _edge_key_table(g)
        rev = _has_edge_bulk(ekeys, hubs, ends, n).astype(np.int64)
        dc = t_mid + t_end - 2 - rev
        comb2_dc = dc * (dc - 1) // 2
        sum_comb2_dc = np.zeros(n, dtype=np.int64)
        np.add.at(sum_comb2_dc, hubs, comb2_dc)
    else:
        sum_comb2_dc = np.zeros(n, dtype=np.int64)

    # conflict triangles: triples through a shared vertex, plus 3-cycles of
    # pairwise-overlapping paths, which trace triangles of the graph whose
    # every edge has an endpoint adjacent to the hub
    comb3_t = t_counts * (t_counts - 1) * (t_counts - 2) // 6
    tri_conf = np.zeros(n, dtype=np.int64)
    np.add.at(tri_conf, key_hub, comb3_t)

    cyc = np.zeros(n, dtype=np.int64)
    tris = _triangle_list(g)
    for x, y, z in tris:
        nx, ny, nz = g.neighbors(x), g.neighbors(y), g.neighbors(z)
        cxy = np.intersect1d(nx, ny, assume_unique=True)
        cyz = np.intersect1d(ny, nz, assume_unique=True)
        cxz = np.intersect1d(nx, nz, assume_unique=True)
        # hubs adjacent to exactly two of {x,y,z} contribute 2, to all
        # three contribute 8 = 2*3 + 2
        for pairc, other in ((cxy, z), (cyz, x), (cxz, y)):
            sel = pairc[pairc != other]
            np.add.at(cyc, sel, 2)
        c3 = np.intersect1d(cxy, cyz, assume_unique=True)
        np.add.at(cyc, c3, 2)
    tri_conf += cyc

    return (
        _comb_column(m, 3)
        - e_conf * np.maximum(m - 2, 0)
        + sum_comb2_dc
        - tri_conf
    )


def _paths_from_hub(g: Graph, hub: int, k: int, budget: int | None) -> list[frozenset]:
    """All loopless k-edge paths from hub, as frozensets of non-hub vertices."""
    out: list[frozenset] = []
    stack: list[int] = []
    steps = 0

    def walk(v: int, depth: int):
        nonlocal steps
        for u in g.neighbors(v):
            if u == hub or u in stack:
                continue
            steps += 1
            if budget is not None and steps > budget:
                raise BudgetExceededError(
                    f"spoke enumeration at hub {hub} exceeded {budget} steps; "
                    "consider the falling-factorial degree approximation"
                )
            if depth == k:
                out.append(frozenset(stack + [u]))
            else:
                stack.append(u)
                walk(u, depth + 1)
                stack.pop()

    walk(hub, 1)
    return out


def _count_disjoint_selections(groups: list[tuple[list[frozenset], int]], budget: int | None) -> int:
    """Number of ways to pick l_j paths from group j, all pairwise disjoint."""
    nodes = 0

    def rec(gi: int, start: int, need: int, used: frozenset) -> int:
        nonlocal nodes
        nodes += 1
        if budget is not None and nodes > budget:
            raise BudgetExceededError(
                f"disjoint-selection search exceeded {budget} nodes; "
                "consider the falling-factorial degree approximation"
            )
        if need == 0:
            if gi + 1 == len(groups):
                return 1
            return rec(gi + 1, 0, groups[gi + 1][1], used)
        paths = groups[gi][0]
        remaining = len(paths) - start
        if remaining < need:
            return 0
        total = 0
        for idx in range(start, len(paths)):
            ps = paths[idx]
            if used & ps:
                continue
            total += rec(gi, idx + 1, need - 1, used | ps)
        return total

    if not groups:
        return 1
    return rec(0, 0, groups[0][1], frozenset())


def _hub_counts_generic(g: Graph, spec: WheelSpec, budget: int | None) -> np.ndarray:
    counts = np.zeros(g.n, dtype=object)
    order = sorted(zip(spec.ks, spec.ls), key=lambda kl: -kl[0])
    for i in range(g.n):
        groups = []
        feasible = True
        for k, l in order:
            paths = _paths_from_hub(g, i, k, budget)
            if len(paths) < l:
                feasible = False
                break
            groups.append((paths, l))
        counts[i] = _count_disjoint_selections(groups, budget) if feasible else 0
    if g.n == 0 or max(int(c) for c in counts) < 2**63:
        return counts.astype(np.int64)
    return counts


def wheel_counts_per_hub(
    g: Graph, spec: WheelSpec, budget: int | None = DEFAULT_BUDGET
) -> np.ndarray:
    """Exact per-hub wheel counts n_i for every vertex.

    Dispatches to closed forms where available (no enumeration, so the
    budget does not apply there); otherwise runs the budget-guarded exact
    enumerator.  Returns int64 when safe, Python ints (object dtype) when
    counts could overflow.
    """
    if spec.is_simple:
        k, l = spec.ks[0], spec.ls[0]
        if k == 1:
            return _comb_column(g.degrees, l)
        if l == 1:
            from .degrees import m_degrees

            return m_degrees(g, k, budget=budget).counts[:, k - 1].copy()
        if k == 2 and l == 2:
            return _hub_counts_k2_l2(g)
        if k == 2 and l == 3:
            return _hub_counts_k2_l3(g)
    return _hub_counts_generic(g, spec, budget)


def wheel_noninduced_count(g: Graph, spec: WheelSpec, budget: int | None = DEFAULT_BUDGET) -> int:
    """Noninduced copy count of the wheel, from per-hub counts."""
    counts = wheel_counts_per_hub(g, spec, budget)
    total = sum(int(c) for c in counts)
    mult = hub_multiplicity(spec)
    assert total % mult == 0
    return total // mult
