"""Vertex-subsampling bootstrap for normalized moment estimators.

Replicates resample m of the n vertices without replacement and recompute
the hub-count moment estimate from the full-graph per-vertex statistics:

    D-bar* = (1/m) sum_j D_{i_j}
    P-hat* = (n/m) sum_j n_{i_j} / (C(n,p) p!/prod(ls!))
    P-check* = P-hat* rho*^{-q}

with rho* = D-bar*/(n-1) by default (this reproduces the full-sample
estimator at m = n; the literal D-bar*/m normalization is available for
comparison).  The variance estimate sigma2 = (m/n) (1/B) sum_b (P-check*_b
- mean)^2 targets the sampling variance of the full-sample estimator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, NormalizationError
from .graph import Graph
from .hubs import DEFAULT_BUDGET, wheel_counts_per_hub
from .patterns import WheelSpec, wheel_rooted_count

SCHEMA_VERSION = "1"

_NORMALIZATIONS = ("rho_star", "literal")


@dataclass(frozen=True)
class HubCountCache:
    """Per-vertex wheel counts for a key set, plus degrees.

    Totals are exactly consistent with the global counting path because
    they are computed by the same per-hub kernels.
    """

    n: int
    keys: tuple[WheelSpec, ...]
    counts: dict
    degrees: np.ndarray

    @classmethod
    def build(cls, g: Graph, keys, budget: int | None = DEFAULT_BUDGET) -> "HubCountCache":
        specs = tuple(
            k if isinstance(k, WheelSpec) else WheelSpec.simple(*k) for k in keys
        )
        counts = {spec: wheel_counts_per_hub(g, spec, budget) for spec in specs}
        return cls(n=g.n, keys=specs, counts=counts, degrees=g.degrees.copy())

    def get(self, key) -> np.ndarray:
        spec = key if isinstance(key, WheelSpec) else WheelSpec.simple(*key)
        try:
            return self.counts[spec]
        except KeyError:
            raise DomainError(f"key {spec.name()} not in cache") from None


@dataclass(frozen=True)
class BootstrapResult:
    key: WheelSpec
    m: int
    B: int
    seed: int
    normalization: str
    sigma2_hat: float
    replicates: np.ndarray
    full_sample_value: float

    def to_json(self) -> dict:
        reps = np.asarray(self.replicates, dtype=float)
        qs = np.quantile(reps, [0.05, 0.25, 0.5, 0.75, 0.95])
        return {
            "schema_version": SCHEMA_VERSION,
            "key": self.key.name(),
            "m": self.m,
            "B": self.B,
            "seed": self.seed,
            "normalization": self.normalization,
            "sigma2_hat": float(self.sigma2_hat),
            "full_sample_value": float(self.full_sample_value),
            "replicates_summary": {
                "mean": float(reps.mean()),
                "sd": float(reps.std(ddof=0)),
                "quantiles": {
                    "p05": float(qs[0]),
                    "p25": float(qs[1]),
                    "p50": float(qs[2]),
                    "p75": float(qs[3]),
                    "p95": float(qs[4]),
                },
            },
        }


def _partial_fisher_yates(n: int, m: int, rng: np.random.Generator) -> np.ndarray:
    arr = np.arange(n)
    draws = rng.integers(0, n - np.arange(m), dtype=np.int64)
    for j in range(m):
        k = j + int(draws[j])
        arr[j], arr[k] = arr[k], arr[j]
    return arr[:m]


def bootstrap_variance(
    g: Graph,
    cache: HubCountCache,
    key,
    m: int | None = None,
    B: int = 500,
    seed: int = 0,
    normalization: str = "rho_star",
) -> BootstrapResult:
    """Subsampling variance estimate for the hub-count moment estimator.

    m defaults to ceil(n^0.7).  Deterministic given (graph, key, m, B,
    seed); replicates use independent child seeds of `seed`.
    """
    spec = key if isinstance(key, WheelSpec) else WheelSpec.simple(*key)
    n = g.n
    if m is None:
        m = math.ceil(n**0.7)
    if not (1 <= m <= n):
        raise DomainError(f"subsample size {m} outside 1..{n}")
    if B < 2:
        raise DomainError(f"need B >= 2 replicates, got {B}")
    if normalization not in _NORMALIZATIONS:
        raise DomainError(f"normalization must be one of {_NORMALIZATIONS}")

    counts = np.asarray(cache.get(spec))
    degrees = cache.degrees
    denom = math.comb(n, spec.p) * wheel_rooted_count(spec)
    if denom == 0:
        raise DomainError(f"pattern order {spec.p} exceeds graph order {n}")

    # integer sums keep replicates exactly order-independent (m = n must
    # reproduce the full-sample value bit for bit)
    full_dbar = int(degrees.sum()) / n
    if full_dbar == 0:
        raise NormalizationError("cannot bootstrap an empty graph")
    full_rho = full_dbar / (n - 1)
    full_value = int(counts.sum()) / denom * full_rho**-spec.q

    seeds = np.random.SeedSequence(seed).spawn(B)
    reps = np.empty(B)
    for b in range(B):
        rng = np.random.default_rng(seeds[b])
        idx = _partial_fisher_yates(n, m, rng)
        dbar = int(degrees[idx].sum()) / m
        if dbar == 0:
            raise NormalizationError(
                f"replicate {b} drew an isolated vertex set; increase m"
            )
        p_hat = (n / m) * int(counts[idx].sum()) / denom
        rho_star = dbar / (n - 1) if normalization == "rho_star" else dbar / m
        reps[b] = p_hat * rho_star**-spec.q

    sigma2 = (m / n) * float(np.mean((reps - reps.mean()) ** 2))
    return BootstrapResult(
        key=spec,
        m=m,
        B=B,
        seed=seed,
        normalization=normalization,
        sigma2_hat=sigma2,
        replicates=reps,
        full_sample_value=full_value,
    )
