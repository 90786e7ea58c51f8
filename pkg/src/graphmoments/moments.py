"""Empirical moment tables for patterns and wheels.

For a pattern R on p vertices with q edges and N(R) isomorphism classes:

    P_hat = (induced copies)    / (C(n, p) N(R))   — unbiased for P(R)
    Q_hat = (noninduced copies) / (C(n, p) N(R))   — unbiased for Q(R)
    P_check = rho_hat^-q P_hat,  Q_check = rho_hat^-q Q_hat

P_check and Q_check both estimate the density-free moment of an acyclic
pattern; P_check carries an O(lambda/n) truncation bias downward (extra
edges excluded), Q_check does not, so fitting code defaults to Q_check
while reporting defaults to P_check.

Wheel noninduced counts come from per-hub counting; the per-hub sums are
normalized by the hub-rooted labeling count p!/prod(ls!), which absorbs
the hub multiplicity of single-spoke wheels.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .counting import count_induced, count_noninduced
from .errors import BudgetExceededError, DomainError, NormalizationError
from .graph import Graph, rho_hat
from .hubs import DEFAULT_BUDGET, wheel_counts_per_hub
from .patterns import (
    PatternGraph,
    WheelSpec,
    count_isomorphism_classes,
    parse_pattern_name,
    wheel_isomorphism_count,
    wheel_rooted_count,
    wheel_to_pattern,
)

SCHEMA_VERSION = "1"


@dataclass(frozen=True)
class MomentEntry:
    """One pattern's counts and normalized moments.

    Count fields are None when that mode was not computed; *_check fields
    are None on an empty graph (no density to normalize by).
    """

    name: str
    p: int
    q: int
    n_isoclasses: int
    induced_count: int | None
    noninduced_count: int | None
    p_hat: float | None
    q_hat: float | None
    p_check: float | None
    q_check: float | None
    tau: float | None = None

    def to_json(self) -> dict:
        return {
            "pattern": self.name,
            "p": self.p,
            "q": self.q,
            "N_R": self.n_isoclasses,
            "raw_count": {
                "induced": self.induced_count,
                "noninduced": self.noninduced_count,
            },
            "p_hat": self.p_hat,
            "q_hat": self.q_hat,
            "p_check": self.p_check,
            "q_check": self.q_check,
            "tau": self.tau,
        }


@dataclass(frozen=True)
class MomentTable:
    """Moment entries plus the graph-level context they were computed in."""

    n: int
    edge_count: int
    rho: float
    entries: tuple[MomentEntry, ...]
    kind: str = "empirical"

    def get(self, name: str) -> MomentEntry:
        for e in self.entries:
            if e.name == name:
                return e
        raise KeyError(name)

    def to_json(self) -> dict:
        return {
            "schema_version": SCHEMA_VERSION,
            "kind": self.kind,
            "n": self.n,
            "edge_count": self.edge_count,
            "rho_hat": self.rho,
            "entries": [e.to_json() for e in self.entries],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "MomentTable":
        entries = tuple(
            MomentEntry(
                name=e["pattern"],
                p=e["p"],
                q=e["q"],
                n_isoclasses=e["N_R"],
                induced_count=e["raw_count"]["induced"],
                noninduced_count=e["raw_count"]["noninduced"],
                p_hat=e["p_hat"],
                q_hat=e["q_hat"],
                p_check=e["p_check"],
                q_check=e["q_check"],
                tau=e.get("tau"),
            )
            for e in obj["entries"]
        )
        return cls(
            n=obj["n"],
            edge_count=obj["edge_count"],
            rho=obj["rho_hat"],
            entries=entries,
            kind=obj.get("kind", "empirical"),
        )


def _as_item(item) -> PatternGraph | WheelSpec:
    if isinstance(item, (PatternGraph, WheelSpec)):
        return item
    if isinstance(item, str):
        return parse_pattern_name(item)
    raise DomainError(f"unsupported pattern item {item!r}")


def wheel_noninduced_total(g: Graph, spec: WheelSpec, budget: int | None = DEFAULT_BUDGET):
    """(per-hub sum, rooted normalizer) for a wheel; sum/hub_multiplicity
    is the plain noninduced copy count."""
    counts = wheel_counts_per_hub(g, spec, budget)
    total = sum(int(c) for c in counts)
    return total, wheel_rooted_count(spec)


def _q_hat_wheel(g: Graph, spec: WheelSpec, budget) -> tuple[float, int]:
    total, rooted = wheel_noninduced_total(g, spec, budget)
    denom = math.comb(g.n, spec.p) * rooted
    if denom == 0:
        return 0.0, 0
    from .patterns import hub_multiplicity

    copies = total // hub_multiplicity(spec)
    return total / denom, copies


def moment_table(
    g: Graph,
    patterns,
    mode: str = "both",
    budget: int | None = DEFAULT_BUDGET,
) -> MomentTable:
    """Compute counts and normalized moments for each requested pattern.

    Args:
        g: graph.
        patterns: iterable of PatternGraph, WheelSpec, or their names.
        mode: "induced", "noninduced", or "both" — which counts to compute.
            Induced counting of large patterns on large graphs may exceed
            the budget; request only what you need.
        budget: enumeration budget passed to the counting kernels.

    Raises:
        NormalizationError: only when a requested normalized moment needs a
            positive density (entries keep None checks on an empty graph).
    """
    if mode not in ("induced", "noninduced", "both"):
        raise DomainError(f"bad mode {mode!r}")
    rho = rho_hat(g)
    entries = []
    for raw in patterns:
        item = _as_item(raw)
        if isinstance(item, WheelSpec):
            name = item.name()
            p, q = item.p, item.q
            n_iso = wheel_isomorphism_count(item)
            pattern = wheel_to_pattern(item) if p <= 10 else None
        else:
            name = item.name()
            p, q = item.p, item.q
            n_iso = count_isomorphism_classes(item)
            pattern = item

        denom = math.comb(g.n, p) * n_iso

        noninduced = induced = None
        if mode in ("noninduced", "both"):
            if isinstance(item, WheelSpec):
                total, rooted = wheel_noninduced_total(g, item, budget)
                q_hat = total / (math.comb(g.n, p) * rooted) if g.n >= p else 0.0
                from .patterns import hub_multiplicity

                noninduced = total // hub_multiplicity(item)
            else:
                noninduced = count_noninduced(g, pattern, budget)
                q_hat = noninduced / denom if denom else 0.0
        else:
            q_hat = None
        if mode in ("induced", "both"):
            if pattern is None:
                raise BudgetExceededError(
                    f"induced counting unavailable for {name} (order {p} > 10); "
                    "the noninduced estimator (qcheck) has no such limit"
                )
            try:
                induced = count_induced(g, pattern, budget)
            except BudgetExceededError as exc:
                raise BudgetExceededError(
                    f"induced count for {name}: {exc}; "
                    "the noninduced estimator (qcheck) is far cheaper for wheels"
                ) from exc
            p_hat = induced / denom if denom else 0.0
        else:
            p_hat = None

        p_check = q_check = None
        if rho > 0:
            if p_hat is not None:
                p_check = p_hat * rho**-q
            if q_hat is not None:
                q_check = q_hat * rho**-q
        entries.append(
            MomentEntry(
                name=name,
                p=p,
                q=q,
                n_isoclasses=n_iso,
                induced_count=induced,
                noninduced_count=noninduced,
                p_hat=p_hat,
                q_hat=q_hat,
                p_check=p_check,
                q_check=q_check,
            )
        )
    return MomentTable(n=g.n, edge_count=g.edge_count, rho=rho, entries=tuple(entries))


def wheel_moment_estimates(
    g: Graph,
    keys,
    estimator: str = "qcheck",
    budget: int | None = DEFAULT_BUDGET,
) -> dict[WheelSpec, float]:
    """Density-free moment estimates tau_check for a set of wheel keys.

    estimator "qcheck" uses noninduced per-hub counts (exact at any scale
    for the supported keys); "pcheck" uses induced counts and is only
    feasible when the pattern is small enough to count induced copies.
    """
    if estimator not in ("qcheck", "pcheck"):
        raise DomainError(f"bad estimator {estimator!r}")
    rho = rho_hat(g)
    if rho == 0:
        raise NormalizationError("moment estimates need at least one edge")
    out = {}
    for key in keys:
        spec = key if isinstance(key, WheelSpec) else WheelSpec.simple(*key)
        if estimator == "qcheck":
            q_hat, _ = _q_hat_wheel(g, spec, budget)
            out[spec] = q_hat * rho**-spec.q
        else:
            pattern = wheel_to_pattern(spec)
            n_iso = wheel_isomorphism_count(spec)
            ind = count_induced(g, pattern, budget)
            out[spec] = ind / (math.comb(g.n, spec.p) * n_iso) * rho**-spec.q
    return out


def theory_table(model, keys) -> MomentTable:
    """Population tau values in the same table shape (kind="theory")."""
    from .models import BlockModel, Graphon
    from .theory import tau_block, tau_graphon

    entries = []
    for key in keys:
        spec = key if isinstance(key, WheelSpec) else WheelSpec.simple(*key)
        if isinstance(model, BlockModel):
            tau = tau_block(model, spec)
        elif isinstance(model, Graphon):
            tau = tau_graphon(model, spec)
        else:
            raise DomainError(f"unsupported model type {type(model).__name__}")
        entries.append(
            MomentEntry(
                name=spec.name(),
                p=spec.p,
                q=spec.q,
                n_isoclasses=wheel_isomorphism_count(spec),
                induced_count=None,
                noninduced_count=None,
                p_hat=None,
                q_hat=None,
                p_check=None,
                q_check=None,
                tau=tau,
            )
        )
    return MomentTable(n=0, edge_count=0, rho=0.0, entries=tuple(entries), kind="theory")
