"""Block-model parameter recovery from wheel moments.

The density-free wheel moments of a K-block model are the moments of a
K-atom distribution per spoke length: tau_{k,l} = sum_a pi_a (v^(k)_a)^l.
Recovery proceeds in stages:

  1. atoms_from_moments: for each k, solve the 1-d moment problem
     (Hankel system -> monic polynomial -> roots -> Vandermonde weights)
     giving the iterate values v^(k)_a and weights pi_a,
  2. align_stages: assign atoms across stages to consistent blocks,
  3. recover_S: M = V2 V1^{-1} with V1 = [1, v^(1), .., v^(K-1)],
     V2 = [v^(1), .., v^(K)], then S = M diag(pi)^{-1} symmetrized,
  4. nls_refine: trust-region least squares projecting the full moment
     vector onto the model manifold, initialized at the direct estimate.

Outputs are in canonical block order (ascending v^(1)).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
from scipy.optimize import least_squares

from .degrees import degree_moment_approx, m_degrees
from .errors import (
    AtomSeparationError,
    BudgetExceededError,
    DomainError,
    HankelIllPosedError,
    IdentifiabilityError,
    MomentProblemError,
    NormalizationError,
    StageInconsistencyError,
)
from .graph import Graph, rho_hat
from .hubs import DEFAULT_BUDGET
from .moments import MomentTable, wheel_moment_estimates
from .patterns import WheelSpec

SCHEMA_VERSION = "1"


@dataclass(frozen=True)
class FitConfig:
    """Configuration for the moment-based fit.

    The moment keys are derived from K: all (k, l) with 1 <= k <= K and
    1 <= l <= 2K-1 (the k >= 2 rows are the (K-1)(2K-1) identifying keys;
    the k=1 row feeds the first-stage moment problem).

    weights, when given, maps keys (WheelSpec, (k,l) tuple, or name) to
    residual weights w_kl, e.g. 1/sigma^2 from the bootstrap.
    """

    K: int
    estimator: str = "qcheck"
    weights: dict | None = None
    stage_weight_tol: float = 1e-2
    hankel_cond_max: float = 1e12
    vander_cond_max: float = 1e10
    identifiability_cond_max: float = 1e10
    weight_floor: float = 1e-8
    multistart: int = 4
    max_iter: int = 400
    xtol: float = 1e-14
    ftol: float = 1e-14
    gtol: float = 1e-14
    seed: int = 0
    budget: int | None = None
    on_stage_error: str = "raise"

    def __post_init__(self):
        if self.K < 1:
            raise DomainError("K must be >= 1")
        if self.estimator not in ("qcheck", "pcheck"):
            raise DomainError(f"bad estimator {self.estimator!r}")
        if self.on_stage_error not in ("raise", "fallback"):
            raise DomainError(f"bad on_stage_error {self.on_stage_error!r}")
        if self.multistart < 1:
            raise DomainError("multistart must be >= 1")

    def keys(self) -> list[WheelSpec]:
        return [
            WheelSpec.simple(k, l)
            for k in range(1, self.K + 1)
            for l in range(1, 2 * self.K)
        ]


@dataclass
class FitResult:
    """Fitted block model plus the intermediate (direct) estimate.

    pi/S are the refined (least-squares projected) estimate in canonical
    order; pi_direct/S_direct the stage-wise construction that initialized
    it; atoms the per-stage iterate matrix (column k-1 = aligned v^(k));
    residual the weighted squared moment mismatch at the refined estimate.
    """

    K: int
    pi: np.ndarray
    S: np.ndarray
    rho: float
    residual: float
    converged: bool
    pi_direct: np.ndarray | None = None
    S_direct: np.ndarray | None = None
    atoms: np.ndarray | None = None
    residual_init: float | None = None
    tau_hat: dict = field(default_factory=dict)
    diagnostics: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        diag = dict(self.diagnostics)
        diag["residual_init"] = self.residual_init
        diag["pi_direct"] = None if self.pi_direct is None else list(map(float, self.pi_direct))
        diag["S_direct"] = None if self.S_direct is None else [
            list(map(float, row)) for row in np.asarray(self.S_direct)
        ]
        diag["atoms"] = None if self.atoms is None else [
            list(map(float, row)) for row in np.asarray(self.atoms)
        ]
        diag["tau_hat"] = {k.name() if isinstance(k, WheelSpec) else str(k): float(v)
                           for k, v in self.tau_hat.items()}
        diag["projection_distance"] = math.sqrt(max(self.residual, 0.0))
        return {
            "schema_version": SCHEMA_VERSION,
            "K": self.K,
            "pi": list(map(float, self.pi)),
            "S": [list(map(float, row)) for row in np.asarray(self.S)],
            "rho_hat": float(self.rho),
            "residual": float(self.residual),
            "converged": bool(self.converged),
            "diagnostics": diag,
        }


def power_moments(atoms, weights, count: int) -> np.ndarray:
    """Forward map of the 1-d moment problem: m_l = sum_a w_a atoms_a^l,
    l = 1..count."""
    a = np.asarray(atoms, dtype=float)
    w = np.asarray(weights, dtype=float)
    return np.array([float(w @ a**l) for l in range(1, count + 1)])


def atoms_from_moments(
    moments,
    K: int,
    *,
    hankel_cond_max: float = 1e12,
    vander_cond_max: float = 1e10,
    weight_floor: float = 1e-8,
) -> tuple[np.ndarray, np.ndarray, dict]:
    """Solve the K-atom moment problem given m_1..m_{2K-1} (m_0 = 1).

    Returns (atoms ascending, weights, diagnostics).  The Hankel system
    yields the monic polynomial whose roots are the atoms; the Vandermonde
    system yields the weights.  Near-coincident atoms surface as an
    ill-posed Hankel matrix or as complex/repeated roots.
    """
    m = np.asarray(moments, dtype=float)
    if m.shape != (2 * K - 1,):
        raise DomainError(f"need 2K-1 = {2 * K - 1} moments, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise DomainError("moments must be finite")
    diag: dict = {"hankel_cond": 1.0, "vander_cond": 1.0, "weights_clipped": False}
    if K == 1:
        return np.array([m[0]]), np.array([1.0]), diag

    mm = np.concatenate(([1.0], m))  # mm[l] = m_l
    h = scipy.linalg.hankel(mm[:K], mm[K - 1 : 2 * K - 1])
    cond = float(np.linalg.cond(h))
    diag["hankel_cond"] = cond
    if not np.isfinite(cond) or cond > hankel_cond_max:
        raise HankelIllPosedError(
            f"Hankel condition number {cond:.3g} exceeds {hankel_cond_max:.3g} "
            "(near-coincident atoms or fewer than K distinct values)"
        )
    coeffs = np.linalg.solve(h, -mm[K : 2 * K])
    roots = np.roots(np.concatenate(([1.0], coeffs[::-1])))

    scale = max(1.0, float(np.max(np.abs(roots))))
    if np.max(np.abs(roots.imag)) > 1e-6 * scale:
        raise AtomSeparationError(
            f"complex atom estimates {roots} (moment vector not realizable by "
            f"{K} well-separated atoms)"
        )
    atoms = np.sort(roots.real)
    if np.min(np.diff(atoms)) < 1e-9 * scale:
        raise AtomSeparationError(f"repeated atoms {atoms}")

    vander = np.vander(atoms, N=K, increasing=True).T  # row l = atoms**l
    vcond = float(np.linalg.cond(vander))
    diag["vander_cond"] = vcond
    if not np.isfinite(vcond) or vcond > vander_cond_max:
        raise AtomSeparationError(
            f"Vandermonde condition number {vcond:.3g} exceeds {vander_cond_max:.3g}"
        )
    weights = np.linalg.solve(vander, mm[:K])
    if np.any(weights < weight_floor) or np.any(weights > 1.0):
        weights = np.clip(weights, weight_floor, 1.0)
        weights = weights / weights.sum()
        diag["weights_clipped"] = True
    return atoms, weights, diag


def align_stages(
    stages,
    pi=None,
    *,
    weight_tol: float = 1e-2,
    tie_eps: float = 1e-3,
) -> tuple[np.ndarray, dict]:
    """Assign per-stage atoms to blocks.

    stages is a sequence of (atoms, weights) pairs for k = 1, 2, ...; the
    first stage (ascending atoms) defines the block order.  Later stages
    are matched by weights, with rank agreement against the previous stage
    breaking ties (the only information available when weights are equal).
    Returns (iterates matrix with column k-1 = aligned v^(k), diagnostics).
    """
    stages = [(np.asarray(a, dtype=float), np.asarray(w, dtype=float)) for a, w in stages]
    if not stages:
        raise DomainError("need at least one stage")
    K = stages[0][0].shape[0]
    for a, w in stages:
        if a.shape != (K,) or w.shape != (K,):
            raise DomainError("ragged stage shapes")
    if pi is None:
        pi = stages[0][1]
    pi = np.asarray(pi, dtype=float)

    diag: dict = {"ambiguous_stages": [], "stage_weight_mismatch": []}
    iterates = np.empty((K, len(stages)))
    mismatch0 = float(np.max(np.abs(np.sort(stages[0][1]) - np.sort(pi))))
    diag["stage_weight_mismatch"].append(mismatch0)
    if mismatch0 > weight_tol:
        raise StageInconsistencyError(
            f"stage 1 weights {stages[0][1]} deviate from pi {pi} by {mismatch0:.3g}"
        )
    iterates[:, 0] = stages[0][0]
    prev = stages[0][0]

    for j, (atoms, w) in enumerate(stages[1:], start=2):
        scored = []
        for perm in itertools.permutations(range(K)):
            mismatch = float(np.max(np.abs(w[list(perm)] - pi)))
            scored.append((mismatch, perm))
        best_mismatch = min(s for s, _ in scored)
        candidates = [perm for s, perm in scored if s <= best_mismatch + tie_eps]
        if len(candidates) > 1:
            diag["ambiguous_stages"].append(j)

        def concordance(perm):
            ap = atoms[list(perm)]
            return sum(
                1
                for a in range(K)
                for b in range(a + 1, K)
                if (ap[a] - ap[b]) * (prev[a] - prev[b]) > 0
            )

        perm = max(candidates, key=lambda q: (concordance(q), q))
        aligned_w = w[list(perm)]
        mismatch = float(np.max(np.abs(aligned_w - pi)))
        diag["stage_weight_mismatch"].append(mismatch)
        if mismatch > weight_tol:
            raise StageInconsistencyError(
                f"stage {j} weights {aligned_w} deviate from pi {pi} by "
                f"{mismatch:.3g} (tolerance {weight_tol:g})"
            )
        iterates[:, j - 1] = atoms[list(perm)]
        prev = iterates[:, j - 1]
    return iterates, diag


def recover_S(pi, iterates, *, cond_max: float = 1e10) -> tuple[np.ndarray, dict]:
    """S from aligned iterates: M = V2 V1^{-1}, S = M diag(pi)^{-1}, symmetrized.

    V1 = [1, v^(1), .., v^(K-1)], V2 = [v^(1), .., v^(K)]; a near-singular
    V1 (e.g. flat v^(1), i.e. the all-ones vector is an eigenvector of the
    kernel) is an identifiability failure of the moment route.
    """
    pi = np.asarray(pi, dtype=float)
    iterates = np.atleast_2d(np.asarray(iterates, dtype=float))
    K = pi.shape[0]
    if K == 1:
        return np.array([[1.0]]), {"v1_cond": 1.0, "s_asymmetry": 0.0}
    if iterates.shape[0] != K or iterates.shape[1] < K:
        raise DomainError(f"need a {K}x{K} iterate matrix, got {iterates.shape}")
    v1 = np.column_stack([np.ones(K), iterates[:, : K - 1]])
    v2 = iterates[:, :K]
    cond = float(np.linalg.cond(v1))
    if not np.isfinite(cond) or cond > cond_max:
        raise IdentifiabilityError(
            f"iterate matrix condition number {cond:.3g} exceeds {cond_max:.3g}; "
            "the constant vector is (numerically) an eigenvector of the kernel, "
            "so the moment sequence cannot separate the blocks"
        )
    m = np.linalg.solve(v1.T, v2.T).T
    s_raw = m / pi[None, :]
    asym = float(np.max(np.abs(s_raw - s_raw.T)))
    s = 0.5 * (s_raw + s_raw.T)
    return s, {"v1_cond": cond, "s_asymmetry": asym}


def tau_forward(pi, S, keys) -> np.ndarray:
    """Wheel moments of a (pi, S) pair for the given WheelSpec keys."""
    pi = np.asarray(pi, dtype=float)
    s = np.asarray(S, dtype=float)
    depth = max(max(k.ks) for k in keys)
    m = s * pi[None, :]
    iterates = np.empty((pi.shape[0], depth))
    v = np.ones(pi.shape[0])
    for j in range(depth):
        v = m @ v
        iterates[:, j] = v
    out = np.empty(len(keys))
    for i, spec in enumerate(keys):
        prod = np.ones(pi.shape[0])
        for k, l in zip(spec.ks, spec.ls):
            prod = prod * iterates[:, k - 1] ** l
        out[i] = pi @ prod
    return out


def _as_key(key) -> WheelSpec:
    if isinstance(key, WheelSpec):
        return key
    if isinstance(key, str):
        from .patterns import parse_pattern_name

        parsed = parse_pattern_name(key)
        if not isinstance(parsed, WheelSpec):
            raise DomainError(f"{key!r} is not a wheel key")
        return parsed
    k, l = key
    return WheelSpec.simple(int(k), int(l))


def _tau_dict(tau_hat, estimator: str) -> dict[WheelSpec, float]:
    if isinstance(tau_hat, MomentTable):
        out = {}
        for e in tau_hat.entries:
            val = e.tau
            if val is None:
                val = e.q_check if estimator == "qcheck" else e.p_check
            if val is None:
                continue
            spec = _as_key(e.name)
            out[spec] = float(val)
        return out
    return {_as_key(k): float(v) for k, v in tau_hat.items()}


def _canonical_block_order(pi: np.ndarray, s: np.ndarray) -> np.ndarray:
    v = s @ pi
    return np.lexsort((pi, v))


def _softmax(logits: np.ndarray) -> np.ndarray:
    z = logits - logits.max()
    e = np.exp(z)
    return e / e.sum()


class _Parameterization:
    """Unconstrained coordinates: pi = softmax(t, 0); S = U^2 / (pi' U^2 pi)
    with U symmetric from the packed upper triangle.  The in-map
    normalization absorbs the scale gauge, so no entry is pinned."""

    def __init__(self, K: int):
        self.K = K
        self.iu = np.triu_indices(K)
        self.nparams = (K - 1) + len(self.iu[0])

    def pack(self, pi, S) -> np.ndarray:
        pi = np.maximum(np.asarray(pi, dtype=float), 1e-12)
        pi = pi / pi.sum()
        t = np.log(pi[:-1]) - np.log(pi[-1])
        scale = float(pi @ np.asarray(S, dtype=float) @ pi)
        if scale <= 0:
            raise DomainError("initial S has nonpositive normalization")
        s0 = np.maximum(np.asarray(S, dtype=float) / scale, 0.0)
        u = np.sqrt(s0[self.iu])
        return np.concatenate([t, u])

    def unpack(self, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        K = self.K
        pi = _softmax(np.concatenate([x[: K - 1], [0.0]]))
        s = np.zeros((K, K))
        s[self.iu] = x[K - 1 :] ** 2
        s = s + np.triu(s, 1).T
        scale = float(pi @ s @ pi)
        if scale <= 0:
            return pi, np.full((K, K), np.nan)
        return pi, s / scale


def nls_refine(
    tau_hat,
    init,
    cfg: FitConfig,
    *,
    rho: float = 0.0,
    atoms=None,
    extra_diagnostics: dict | None = None,
) -> FitResult:
    """Project the estimated moments onto the block-model manifold.

    Minimizes sum_keys w_kl (tau_hat_kl - tau_kl(pi, S))^2 over the
    constraint set via an unconstrained reparameterization and a
    trust-region least-squares solver, taking the best of cfg.multistart
    runs started at `init` and jittered copies of it.  Never returns a
    residual above the initialization's.
    """
    taus = _tau_dict(tau_hat, cfg.estimator)
    keys = sorted(taus, key=lambda s: (s.ks, s.ls))
    target = np.array([taus[k] for k in keys])
    if cfg.weights:
        wmap = {_as_key(k): float(v) for k, v in cfg.weights.items()}
        sqrtw = np.sqrt(np.array([wmap.get(k, 1.0) for k in keys]))
    else:
        sqrtw = np.ones(len(keys))

    K = cfg.K
    pi0, s0 = init
    pi0 = np.asarray(pi0, dtype=float)
    s0 = np.asarray(s0, dtype=float)
    if K == 1:
        residual = float(np.sum((sqrtw * (tau_forward(pi0, s0, keys) - target)) ** 2))
        return FitResult(
            K=1,
            pi=np.array([1.0]),
            S=np.array([[1.0]]),
            rho=rho,
            residual=residual,
            converged=True,
            pi_direct=np.array([1.0]),
            S_direct=np.array([[1.0]]),
            atoms=np.ones((1, 1)) if atoms is None else np.asarray(atoms, dtype=float),
            residual_init=residual,
            tau_hat=taus,
            diagnostics=dict(extra_diagnostics or {}),
        )

    par = _Parameterization(K)
    x0 = par.pack(pi0, s0)

    def resid(x):
        pi, s = par.unpack(x)
        if not np.all(np.isfinite(s)):
            return np.full(len(keys), 1e6)
        return sqrtw * (tau_forward(pi, s, keys) - target)

    def sq(x):
        r = resid(x)
        return float(r @ r)

    residual_init = sq(x0)
    rng = np.random.default_rng(cfg.seed)
    starts = [x0]
    for _ in range(cfg.multistart - 1):
        jitter = rng.normal(size=x0.shape)
        jitter[: K - 1] *= 0.3
        jitter[K - 1 :] *= 0.15 * (np.abs(x0[K - 1 :]) + 0.1)
        starts.append(x0 + jitter)

    best_x, best_val, best_status = x0, residual_init, -1
    for x_start in starts:
        sol = least_squares(
            resid,
            x_start,
            method="trf",
            xtol=cfg.xtol,
            ftol=cfg.ftol,
            gtol=cfg.gtol,
            max_nfev=cfg.max_iter,
        )
        val = sq(sol.x)
        if val < best_val:
            best_x, best_val, best_status = sol.x, val, sol.status
    converged = best_status > 0 or best_val <= residual_init
    if best_status == 0:
        converged = False

    pi_hat, s_hat = par.unpack(best_x)
    order = _canonical_block_order(pi_hat, s_hat)
    pi_hat = pi_hat[order]
    s_hat = s_hat[np.ix_(order, order)]

    diagnostics = dict(extra_diagnostics or {})
    diagnostics["nls_status"] = int(best_status)
    diagnostics["multistart"] = cfg.multistart
    return FitResult(
        K=K,
        pi=pi_hat,
        S=s_hat,
        rho=rho,
        residual=best_val,
        converged=bool(converged),
        pi_direct=pi0,
        S_direct=s0,
        atoms=None if atoms is None else np.asarray(atoms, dtype=float),
        residual_init=residual_init,
        tau_hat=taus,
        diagnostics=diagnostics,
    )


def _fallback_init(K: int) -> tuple[np.ndarray, np.ndarray]:
    pi = np.full(K, 1.0 / K)
    s = np.ones((K, K)) + 0.2 * np.diag(np.linspace(-1.0, 1.0, K))
    s = s / float(pi @ s @ pi)
    return pi, s


def fit_block_model(g: Graph, cfg: FitConfig) -> FitResult:
    """Full pipeline: wheel moments -> stage recovery -> NLS projection.

    Wheel moments use cfg.estimator; if exact counting exceeds the budget
    the falling-factorial degree approximation is substituted and flagged
    in diagnostics["approximation"].  Stage errors (ill-posed Hankel,
    misaligned weights, unidentifiable iterates) propagate unless
    cfg.on_stage_error == "fallback", which starts the least-squares
    refinement from a neutral point instead.
    """
    rho = rho_hat(g)
    if rho <= 0:
        raise NormalizationError("cannot fit an empty graph (rho_hat = 0)")
    if cfg.K == 1:
        return FitResult(
            K=1,
            pi=np.array([1.0]),
            S=np.array([[1.0]]),
            rho=rho,
            residual=0.0,
            converged=True,
            pi_direct=np.array([1.0]),
            S_direct=np.array([[1.0]]),
            atoms=np.ones((1, 1)),
            residual_init=0.0,
            tau_hat={WheelSpec.simple(1, 1): 1.0},
            diagnostics={"approximation": None},
        )

    keys = cfg.keys()
    budget = DEFAULT_BUDGET if cfg.budget is None else cfg.budget
    diagnostics: dict = {"approximation": None}
    try:
        taus = wheel_moment_estimates(g, keys, estimator=cfg.estimator, budget=budget)
    except BudgetExceededError:
        profile = m_degrees(g, cfg.K)
        taus = {k: degree_moment_approx(profile, k) for k in keys}
        diagnostics["approximation"] = "degree"

    stage_diags = []
    atoms_matrix = None
    try:
        stages = []
        for k in range(1, cfg.K + 1):
            mom = [taus[WheelSpec.simple(k, l)] for l in range(1, 2 * cfg.K)]
            atoms, wts, sdiag = atoms_from_moments(
                mom,
                cfg.K,
                hankel_cond_max=cfg.hankel_cond_max,
                vander_cond_max=cfg.vander_cond_max,
                weight_floor=cfg.weight_floor,
            )
            stages.append((atoms, wts))
            stage_diags.append(sdiag)
        pi0 = stages[0][1]
        atoms_matrix, align_diag = align_stages(
            stages, pi0, weight_tol=cfg.stage_weight_tol
        )
        s0, rec_diag = recover_S(
            pi0, atoms_matrix, cond_max=cfg.identifiability_cond_max
        )
        scale = float(pi0 @ s0 @ pi0)
        if scale <= 0:
            raise IdentifiabilityError(f"direct estimate has normalization {scale:.3g}")
        s0 = np.maximum(s0 / scale, 0.0)
        diagnostics.update(
            {
                "stages": stage_diags,
                "align": align_diag,
                "recover": rec_diag,
                "direct_scale": scale,
            }
        )
    except (MomentProblemError, IdentifiabilityError, StageInconsistencyError) as exc:
        if cfg.on_stage_error != "fallback":
            raise
        diagnostics["stage_error"] = f"{type(exc).__name__}: {exc}"
        diagnostics["stages"] = stage_diags
        pi0, s0 = _fallback_init(cfg.K)
        atoms_matrix = None

    return nls_refine(
        taus,
        (pi0, s0),
        cfg,
        rho=rho,
        atoms=atoms_matrix,
        extra_diagnostics=diagnostics,
    )
