"""Higher-order degrees, latent profiles, and coupling diagnostics.

The order-m degree D_i^(m) is the number of loopless m-edge paths starting
at vertex i.  Normalized by powers of the mean degree these approximate the
operator iterates evaluated at the vertex's latent position, which is what
the coupling diagnostics quantify.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import BudgetExceededError, DomainError, NormalizationError
from .graph import Graph, average_degree
from .patterns import WheelSpec


@dataclass(frozen=True)
class DegreeProfile:
    """Per-vertex path counts D^(1..m) plus the graph's mean degree.

    counts has shape (n, m); column j-1 holds D^(j).  Exact integers.
    """

    counts: np.ndarray
    mean_degree: float

    @property
    def n(self) -> int:
        return self.counts.shape[0]

    @property
    def m(self) -> int:
        return self.counts.shape[1]

    def normalized(self) -> np.ndarray:
        """counts[:, j-1] / mean_degree**j, the scale-free profile."""
        if self.mean_degree == 0:
            raise NormalizationError("normalized profile undefined on an empty graph")
        powers = self.mean_degree ** np.arange(1, self.m + 1)
        return self.counts.astype(float) / powers


@dataclass(frozen=True)
class ThetaProfile:
    """Population counterpart of DegreeProfile: operator iterates at each
    vertex's latent position, shape (n, m)."""

    values: np.ndarray

    @property
    def m(self) -> int:
        return self.values.shape[1]


def _paths_order3(g: Graph) -> np.ndarray:
    """D^(3) closed form: summing d_l choices over i~j~k and excluding the
    revisits l in {j, i} gives A^2 (d-1) - d(d-1) - 2 * triangles."""
    from scipy import sparse

    from .counting import triangles_per_vertex

    d = g.degrees.astype(np.int64)
    a = sparse.csr_matrix(
        (np.ones(g.indices.size, dtype=np.int64), g.indices, g.indptr),
        shape=(g.n, g.n),
    )
    t1 = np.asarray(a @ (a @ (d - 1))).ravel()
    return t1 - d * (d - 1) - 2 * triangles_per_vertex(g)


def _paths_dfs(g: Graph, m: int, budget: int | None) -> np.ndarray:
    """Loopless path counts of every order up to m by depth-first search."""
    counts = np.zeros((g.n, m), dtype=np.int64)
    visited = np.zeros(g.n, dtype=bool)
    steps = 0

    def walk(v: int, depth: int, row) -> None:
        nonlocal steps
        for u in g.neighbors(v):
            if visited[u]:
                continue
            steps += 1
            if budget is not None and steps > budget:
                raise BudgetExceededError(
                    f"path enumeration exceeded budget of {budget} steps; "
                    "consider the falling-factorial degree approximation"
                )
            row[depth] += 1
            if depth + 1 < m:
                visited[u] = True
                walk(u, depth + 1, row)
                visited[u] = False

    for i in range(g.n):
        visited[i] = True
        walk(i, 0, counts[i])
        visited[i] = False
    return counts


def m_degrees(g: Graph, m: int, budget: int | None = 50_000_000) -> DegreeProfile:
    """Exact D^(1..m) for every vertex.

    Orders 1 and 2 use closed forms; higher orders fall back to DFS whose
    step count is budget-guarded (work grows like n * mean_degree^m).
    """
    if m < 1:
        raise DomainError("m must be >= 1")
    d = g.degrees.astype(np.int64)
    if m <= 3:
        cols = [d]
        if m >= 2:
            from scipy import sparse

            a = sparse.csr_matrix(
                (np.ones(g.indices.size, dtype=np.int64), g.indices, g.indptr),
                shape=(g.n, g.n),
            )
            # paths i-j-k, k != i: sum over neighbors of (deg - 1)
            cols.append(np.asarray(a @ d).ravel() - d)
        if m == 3:
            cols.append(_paths_order3(g))
        counts = np.column_stack(cols)
    else:
        counts = _paths_dfs(g, m, budget)
    return DegreeProfile(counts=counts, mean_degree=average_degree(g))


def _block_positions(xi: np.ndarray, bounds: np.ndarray) -> np.ndarray:
    return np.minimum(np.searchsorted(bounds, xi, side="right"), bounds.size - 1)


def theta_profile(model, xi: np.ndarray, m: int) -> ThetaProfile:
    """Operator iterates (T1, T^2 1, ..., T^m 1) at each latent position.

    Accepts a BlockModel or Graphon; for the canonical parameterization the
    first coordinate is monotone nondecreasing in xi.
    """
    from .models import BlockModel, Graphon
    from .theory import iterate_operator_block, iterate_operator_graphon

    xi = np.asarray(xi, dtype=float)
    if np.any(xi < 0) or np.any(xi > 1):
        raise DomainError("latent positions must lie in [0, 1]")
    if isinstance(model, BlockModel):
        it = iterate_operator_block(model, m)
        order = model.canonical_order()
        bounds = np.cumsum(model.pi[order])
        pos = _block_positions(xi, bounds)
        # iterate rows are in the model's own block order; latent intervals
        # follow the canonical order, so map positions back through it
        return ThetaProfile(values=it.values[order[pos]])
    if isinstance(model, Graphon):
        it = iterate_operator_graphon(model, m)
        cells = np.minimum((xi * model.resolution).astype(np.int64), model.resolution - 1)
        return ThetaProfile(values=it.values[cells])
    raise DomainError(f"unsupported model type {type(model).__name__}")


def joint_coupling_error(profile: DegreeProfile, theta: ThetaProfile) -> float:
    """Mean squared distance between the normalized degree profile and the
    latent iterate profile: (1/n) sum_i ||D~_i - theta(xi_i)||^2."""
    if profile.counts.shape != theta.values.shape:
        raise DomainError("profile and theta shapes differ")
    diff = profile.normalized() - theta.values
    return float(np.mean(np.sum(diff * diff, axis=1)))


def mallows2_1d(a: np.ndarray, b: np.ndarray) -> float:
    """Order-2 Mallows (quantile-coupling L2) distance between two samples.

    Equal sizes couple sorted values directly; unequal sizes couple through
    a common quantile grid of the coarser resolution's refinement.
    """
    a = np.sort(np.asarray(a, dtype=float))
    b = np.sort(np.asarray(b, dtype=float))
    if a.size == 0 or b.size == 0:
        raise DomainError("mallows2_1d needs non-empty samples")
    if a.size == b.size:
        return float(np.sqrt(np.mean((a - b) ** 2)))
    # quantile coupling: integrate (F_a^{-1} - F_b^{-1})^2 over the merged
    # breakpoints i/na, j/nb — exact and O(na + nb)
    na, nb = a.size, b.size
    cuts = np.union1d(np.arange(1, na) / na, np.arange(1, nb) / nb)
    edges = np.concatenate([[0.0], cuts, [1.0]])
    lens = np.diff(edges)
    mids = (edges[:-1] + edges[1:]) / 2
    ia = np.minimum((mids * na).astype(np.int64), na - 1)
    ib = np.minimum((mids * nb).astype(np.int64), nb - 1)
    return float(np.sqrt(np.sum(lens * (a[ia] - b[ib]) ** 2)))


def _falling_factorial_column(x: np.ndarray, l: int) -> np.ndarray:
    """(x)_l with exact integers, object dtype when int64 could overflow."""
    x = np.asarray(x)
    hi = int(x.max()) if x.size else 0
    if l == 0:
        return np.ones(x.shape, dtype=np.int64)
    if hi**l < 2**62:
        out = x.astype(np.int64).copy()
        for j in range(1, l):
            out *= x - j
        return out
    vals, inv = np.unique(x, return_inverse=True)
    ff = np.array(
        [math.prod(int(v) - j for j in range(l)) for v in vals], dtype=object
    )
    return ff[inv]


def falling_factorial(x: int, l: int) -> int:
    """Scalar (x)_l = x (x-1) ... (x-l+1)."""
    return math.prod(x - j for j in range(l))


def degree_moment_approx(profile: DegreeProfile, key: WheelSpec | tuple) -> float:
    """Moment estimate from degree counts alone:
    (1/n) sum_i prod_j (D_i^(k_j))_{l_j} / mean_degree^(sum k_j l_j).

    Ignores overlap between the counted paths, so it is an approximation of
    the exact wheel-based estimate except where paths cannot overlap (all
    k_j = 1, or k_j <= its depth on a tree).
    """
    spec = key if isinstance(key, WheelSpec) else WheelSpec.simple(*key)
    if max(spec.ks) > profile.m:
        raise DomainError(
            f"profile holds orders up to {profile.m}, key needs {max(spec.ks)}"
        )
    if profile.mean_degree == 0:
        raise NormalizationError("degree approximation undefined on an empty graph")
    cols = [
        _falling_factorial_column(profile.counts[:, k - 1], l)
        for k, l in zip(spec.ks, spec.ls)
    ]
    bound = math.prod(max(1, int(c.max())) for c in cols) if profile.n else 0
    num = np.ones(profile.n, dtype=np.int64 if bound < 2**62 else object)
    for c in cols:
        num = num * c
    total = sum(int(v) for v in num)
    return total / (profile.n * profile.mean_degree ** spec.q)
