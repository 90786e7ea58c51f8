"""Command-line front end.

Subcommands: gen, moments, fit, degrees, bootstrap, sweep.  Every command
is deterministic given its manifest; results embed a timing-free manifest
object, and non-JSON outputs (edge lists, CSV, JSONL) get a sidecar
``<out>.manifest.json`` carrying the same manifest plus wall-clock data.

Exit codes: 0 success, 2 input error, 3 numerical/identifiability error,
4 budget exceeded.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import csv
import hashlib
import json
import math
import os
import sys
import time
from dataclasses import dataclass
from datetime import datetime, timezone

import numpy as np

from . import __version__
from .blockfit import FitConfig, fit_block_model
from .bootstrap import HubCountCache, bootstrap_variance
from .degrees import (
    degree_moment_approx,
    joint_coupling_error,
    m_degrees,
    theta_profile,
)
from .errors import (
    BudgetExceededError,
    DomainError,
    InputError,
    NumericalError,
)
from .graph import Graph, lambda_hat, load_edge_list, rho_hat, write_edge_list
from .hubs import DEFAULT_BUDGET
from .models import BlockModel, Graphon, load_model, sample_block_model, sample_graphon
from .moments import MomentEntry, MomentTable, moment_table, wheel_moment_estimates
from .patterns import WheelSpec, parse_pattern_name, wheel_isomorphism_count
from .theory import tau_block, tau_graphon

SCHEMA_VERSION = "1"


# ---------------------------------------------------------------------------
# manifests


@dataclass
class RunManifest:
    command: str
    parameters: dict
    seed: int | None
    inputs: list
    outputs: list
    version: str
    started_at: str
    wall_clock_s: float | None = None

    @property
    def manifest_id(self) -> str:
        blob = json.dumps(
            {
                "command": self.command,
                "parameters": self.parameters,
                "seed": self.seed,
                "version": self.version,
            },
            sort_keys=True,
        )
        return hashlib.sha256(blob.encode()).hexdigest()[:16]

    def to_json(self, timing: bool = True) -> dict:
        out = {
            "manifest_id": self.manifest_id,
            "command": self.command,
            "parameters": self.parameters,
            "seed": self.seed,
            "inputs": list(self.inputs),
            "outputs": list(self.outputs),
            "version": self.version,
        }
        if timing:
            out["started_at"] = self.started_at
            if self.wall_clock_s is not None:
                out["wall_clock_s"] = self.wall_clock_s
        return out


def _manifest(command: str, args: argparse.Namespace, inputs, outputs) -> RunManifest:
    # threads is an execution detail: it cannot change results, so it must
    # not change the manifest identity
    skip = {"func", "out", "summary", "graph", "model", "config", "threads"}
    params = {
        k: v
        for k, v in sorted(vars(args).items())
        if k not in skip and not callable(v)
    }
    return RunManifest(
        command=command,
        parameters=params,
        seed=getattr(args, "seed", None),
        inputs=[str(p) for p in inputs],
        outputs=[str(p) for p in outputs],
        version=__version__,
        started_at=datetime.now(timezone.utc).isoformat(timespec="seconds"),
    )


def _emit_json(payload: dict, manifest: RunManifest, out: str | None) -> None:
    payload = dict(payload)
    payload["manifest"] = manifest.to_json(timing=False)
    text = json.dumps(payload, indent=2, sort_keys=True) + "\n"
    if out:
        with open(out, "w") as fh:
            fh.write(text)
        print(f"wrote {out}")
    else:
        sys.stdout.write(text)


def _emit_sidecar(manifest: RunManifest, out: str) -> None:
    with open(f"{out}.manifest.json", "w") as fh:
        json.dump(manifest.to_json(timing=True), fh, indent=2, sort_keys=True)
        fh.write("\n")


# ---------------------------------------------------------------------------
# subcommands


def _load_any_model(path: str):
    try:
        return load_model(path)
    except FileNotFoundError as exc:
        raise InputError(f"model file not found: {path}") from exc


def _load_graph(path: str) -> Graph:
    try:
        return load_edge_list(path)
    except FileNotFoundError as exc:
        raise InputError(f"graph file not found: {path}") from exc


def cmd_gen(args) -> int:
    model = _load_any_model(args.model)
    manifest = _manifest("gen", args, [args.model], [args.out])
    t0 = time.monotonic()
    if isinstance(model, Graphon):
        if args.rho is None:
            raise InputError("sampling a graphon needs --rho")
        sample = sample_graphon(model, args.rho, args.n, args.seed, keep_latents=args.latents)
    else:
        if args.rho is not None:
            model = model.with_rho(args.rho)
        sample = sample_block_model(model, args.n, args.seed, keep_latents=args.latents)
    write_edge_list(sample.graph, args.out)
    outputs = [args.out]
    if args.latents:
        lat_path = f"{args.out}.latents"
        with open(lat_path, "w") as fh:
            for x in sample.xi:
                fh.write("%.17g\n" % x)
        outputs.append(lat_path)
    manifest.outputs = outputs
    manifest.wall_clock_s = time.monotonic() - t0
    _emit_sidecar(manifest, args.out)
    g = sample.graph
    print(
        f"wrote {args.out}: n={g.n} edges={g.edge_count} "
        f"rho_hat={rho_hat(g):.6g} lambda_hat={lambda_hat(g):.6g}"
    )
    return 0


def _approx_table(g: Graph, items) -> MomentTable:
    specs = []
    for item in items:
        if not isinstance(item, WheelSpec):
            raise DomainError(
                f"--approx=degree supports wheel keys only, got {item.name()}"
            )
        specs.append(item)
    depth = max(max(s.ks) for s in specs)
    profile = m_degrees(g, depth)
    entries = []
    for spec in specs:
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
                tau=degree_moment_approx(profile, spec),
            )
        )
    return MomentTable(
        n=g.n,
        edge_count=g.edge_count,
        rho=rho_hat(g),
        entries=tuple(entries),
        kind="degree-approx",
    )


def cmd_moments(args) -> int:
    g = _load_graph(args.graph)
    if rho_hat(g) == 0:
        raise NumericalError("graph has no edges; moments are undefined")
    items = [parse_pattern_name(name) for name in args.pattern]
    if not items:
        raise InputError("give at least one --pattern")
    manifest = _manifest("moments", args, [args.graph], [args.out] if args.out else [])
    t0 = time.monotonic()
    if args.approx == "degree":
        table = _approx_table(g, items)
    else:
        mode = "both" if args.estimator == "pcheck" else "noninduced"
        table = moment_table(g, items, mode=mode, budget=args.budget)
    manifest.wall_clock_s = time.monotonic() - t0
    _emit_json(table.to_json(), manifest, args.out)
    return 0


def _bootstrap_weights(g: Graph, cfg: FitConfig, seed: int, budget) -> dict:
    cache = HubCountCache.build(g, cfg.keys(), budget)
    weights = {}
    for i, key in enumerate(cfg.keys()):
        res = bootstrap_variance(g, cache, key, seed=seed + i)
        weights[key] = 1.0 / max(res.sigma2_hat, 1e-300)
    return weights


def cmd_fit(args) -> int:
    g = _load_graph(args.graph)
    manifest = _manifest("fit", args, [args.graph], [args.out] if args.out else [])
    budget = args.budget if args.budget is not None else DEFAULT_BUDGET
    cfg = FitConfig(
        K=args.K,
        estimator=args.estimator,
        stage_weight_tol=args.stage_tol,
        multistart=args.multistart,
        seed=args.seed,
        budget=budget,
        on_stage_error=args.on_stage_error,
    )
    t0 = time.monotonic()
    if args.weights == "bootstrap":
        weights = _bootstrap_weights(g, cfg, args.seed, budget)
        cfg = FitConfig(
            K=cfg.K,
            estimator=cfg.estimator,
            weights=weights,
            stage_weight_tol=cfg.stage_weight_tol,
            multistart=cfg.multistart,
            seed=cfg.seed,
            budget=cfg.budget,
            on_stage_error=cfg.on_stage_error,
        )
    result = fit_block_model(g, cfg)
    manifest.wall_clock_s = time.monotonic() - t0
    payload = result.to_json()
    if not args.report_stages:
        payload["diagnostics"].pop("stages", None)
        payload["diagnostics"].pop("align", None)
    _emit_json(payload, manifest, args.out)
    return 0


def _quantile_dict(col: np.ndarray) -> dict:
    qs = np.quantile(col.astype(float), [0.0, 0.05, 0.25, 0.5, 0.75, 0.95, 1.0])
    names = ["min", "p05", "p25", "p50", "p75", "p95", "max"]
    return {k: float(v) for k, v in zip(names, qs)}


def cmd_degrees(args) -> int:
    g = _load_graph(args.graph)
    outputs = [p for p in (args.out, args.summary) if p]
    manifest = _manifest("degrees", args, [args.graph], outputs)
    t0 = time.monotonic()
    budget = args.budget if args.budget is not None else 50_000_000
    profile = m_degrees(g, args.m, budget=budget)
    manifest.wall_clock_s = time.monotonic() - t0
    if args.out:
        with open(args.out, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["vertex"] + [f"D{j}" for j in range(1, args.m + 1)])
            for i in range(g.n):
                writer.writerow([i] + [int(x) for x in profile.counts[i]])
        _emit_sidecar(manifest, args.out)
        print(f"wrote {args.out}")
    normalized = profile.normalized() if profile.mean_degree > 0 else None
    summary = {
        "schema_version": SCHEMA_VERSION,
        "n": g.n,
        "m": args.m,
        "mean_degree": profile.mean_degree,
        "columns": [
            {
                "order": j + 1,
                "quantiles": _quantile_dict(profile.counts[:, j]),
                "normalized_quantiles": (
                    _quantile_dict(normalized[:, j]) if normalized is not None else None
                ),
            }
            for j in range(args.m)
        ],
    }
    _emit_json(summary, manifest, args.summary)
    return 0


def _parse_key(text: str) -> WheelSpec:
    if text.startswith("wheel:"):
        spec = parse_pattern_name(text)
        if not isinstance(spec, WheelSpec):
            raise InputError(f"{text!r} is not a wheel key")
        return spec
    try:
        k, l = (int(x) for x in text.split(","))
    except ValueError as exc:
        raise InputError(f"bad key {text!r}; use 'k,l' or 'wheel:k=..,l=..'") from exc
    return WheelSpec.simple(k, l)


def cmd_bootstrap(args) -> int:
    g = _load_graph(args.graph)
    key = _parse_key(args.key)
    manifest = _manifest("bootstrap", args, [args.graph], [args.out] if args.out else [])
    t0 = time.monotonic()
    budget = args.budget if args.budget is not None else DEFAULT_BUDGET
    cache = HubCountCache.build(g, [key], budget)
    result = bootstrap_variance(
        g,
        cache,
        key,
        m=args.m,
        B=args.B,
        seed=args.seed,
        normalization=args.normalization,
    )
    manifest.wall_clock_s = time.monotonic() - t0
    _emit_json(result.to_json(), manifest, args.out)
    return 0


# ---------------------------------------------------------------------------
# sweep


def _lambda_for(rule, n: int, fallback_rho: float | None) -> tuple[float, float]:
    """Return (lambda, rho) for a cell."""
    if rule is None:
        if fallback_rho is None:
            raise InputError("sweep config needs a lambda rule or models with rho")
        return fallback_rho * (n - 1), fallback_rho
    kind = rule.get("kind")
    if kind == "fixed":
        lam = float(rule["value"])
    elif kind == "power":
        lam = float(rule["c"]) * n ** float(rule["exponent"])
    else:
        raise InputError(f"unknown lambda rule kind {kind!r}")
    return lam, lam / (n - 1)


def _metric_params(spec: str) -> tuple[str, dict]:
    if ":" not in spec:
        return spec, {}
    name, body = spec.split(":", 1)
    params = {}
    for part in body.split(","):
        k, v = part.split("=", 1)
        params[k] = int(v)
    return name, params


def _canonical_truth(model: BlockModel) -> tuple[np.ndarray, np.ndarray]:
    order = model.canonical_order()
    return model.pi[order], model.S[np.ix_(order, order)]


def _sweep_cell(task: dict) -> dict:
    """Evaluate one (model, n, rep) cell; returns the JSONL record."""
    record = {
        "schema_version": SCHEMA_VERSION,
        "manifest_id": task["manifest_id"],
        "cell_id": task["cell_id"],
        "rep": task["rep"],
        "seed": task["seed"],
        "model": task["model_name"],
        "n": task["n"],
        "lambda": task["lambda"],
        "rho": task["rho"],
        "metrics": {},
        "error": None,
    }
    try:
        model = _model_from_obj(task["model_obj"])
        need_latents = any(m.startswith("coupling") for m in task["metrics"])
        if isinstance(model, Graphon):
            sample = sample_graphon(
                model, task["rho"], task["n"], task["seed"], keep_latents=need_latents
            )
        else:
            model = model.with_rho(task["rho"])
            sample = sample_block_model(
                model, task["n"], task["seed"], keep_latents=need_latents
            )
        g = sample.graph
        budget = task["budget"]
        estimator = task["estimator"]
        metrics = record["metrics"]
        for spec in task["metrics"]:
            name, params = _metric_params(spec)
            if name == "rho_hat":
                metrics[spec] = rho_hat(g)
            elif name == "lambda_hat":
                metrics[spec] = lambda_hat(g)
            elif name == "edges":
                metrics[spec] = g.edge_count
            elif name in ("tau_check", "tau_error"):
                key = WheelSpec.simple(params["k"], params["l"])
                val = wheel_moment_estimates(g, [key], estimator=estimator, budget=budget)[key]
                if name == "tau_check":
                    metrics[spec] = val
                else:
                    tau = (
                        tau_block(model, key)
                        if isinstance(model, BlockModel)
                        else tau_graphon(model, key)
                    )
                    metrics[spec] = val - tau
            elif name == "approx_gap":
                key = WheelSpec.simple(params["k"], params["l"])
                exact = wheel_moment_estimates(g, [key], estimator=estimator, budget=budget)[key]
                profile = m_degrees(g, params["k"])
                metrics[spec] = abs(degree_moment_approx(profile, key) - exact)
            elif name == "coupling":
                depth = params["m"]
                profile = m_degrees(g, depth)
                theta = theta_profile(model, sample.xi, depth)
                metrics[spec] = joint_coupling_error(profile, theta)
            elif name == "fit":
                cfg = FitConfig(
                    K=params["K"],
                    estimator=estimator,
                    budget=budget,
                    **task["fit_options"],
                )
                res = fit_block_model(g, cfg)
                metrics[f"{spec}.residual"] = res.residual
                metrics[f"{spec}.converged"] = res.converged
                if isinstance(model, BlockModel) and model.K == params["K"]:
                    pi_true, s_true = _canonical_truth(model)
                    metrics[f"{spec}.pi_error"] = float(
                        np.max(np.abs(res.pi - pi_true))
                    )
                    metrics[f"{spec}.S_error"] = float(np.max(np.abs(res.S - s_true)))
            else:
                raise InputError(f"unknown metric {name!r}")
    except Exception as exc:  # per-line failure; sweep continues
        record["error"] = f"{type(exc).__name__}: {exc}"
    return record


def _model_from_obj(obj: dict):
    if "grid" in obj:
        return Graphon.from_json(obj)
    return BlockModel.from_json(obj)


def _resolve_threads(args) -> int:
    if args.threads is not None:
        return max(1, args.threads)
    env = os.environ.get("GRAPHMOMENTS_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError as exc:
            raise InputError(f"bad GRAPHMOMENTS_THREADS value {env!r}") from exc
    return os.cpu_count() or 1


def cmd_sweep(args) -> int:
    try:
        with open(args.config) as fh:
            config = json.load(fh)
    except FileNotFoundError as exc:
        raise InputError(f"config file not found: {args.config}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"config is not valid JSON: {exc}") from exc

    for field in ("models", "n", "replicates", "metrics"):
        if field not in config:
            raise InputError(f"sweep config missing {field!r}")
    base_seed = int(config.get("seed", args.seed))
    estimator = config.get("estimator", "qcheck")
    budget = args.budget if args.budget is not None else config.get("budget", DEFAULT_BUDGET)
    fit_options = config.get("fit", {})
    rule = config.get("lambda")

    models = []
    for entry in config["models"]:
        name = entry.get("name")
        if not name:
            raise InputError("each sweep model needs a name")
        if "model" in entry:
            obj = entry["model"]
        elif "path" in entry:
            with open(entry["path"]) as fh:
                obj = json.load(fh)
        else:
            raise InputError(f"model {name!r} needs 'model' or 'path'")
        models.append((name, obj))

    manifest = _manifest(
        "sweep",
        args,
        [args.config],
        [args.out],
    )
    manifest.parameters["config"] = config
    mid = manifest.manifest_id

    tasks = []
    for mi, (name, obj) in enumerate(models):
        fallback_rho = obj.get("rho")
        for ni, n in enumerate(config["n"]):
            lam, rho = _lambda_for(rule, int(n), fallback_rho)
            cell_id = f"{name}/n={int(n)}/lambda={lam:g}"
            for rep in range(int(config["replicates"])):
                seed = int(
                    np.random.SeedSequence([base_seed, mi, ni, rep]).generate_state(1)[0]
                )
                tasks.append(
                    {
                        "manifest_id": mid,
                        "cell_id": cell_id,
                        "model_name": name,
                        "model_obj": obj,
                        "n": int(n),
                        "lambda": lam,
                        "rho": rho,
                        "rep": rep,
                        "seed": seed,
                        "metrics": config["metrics"],
                        "estimator": estimator,
                        "budget": budget,
                        "fit_options": fit_options,
                    }
                )

    t0 = time.monotonic()
    threads = _resolve_threads(args)
    if threads > 1 and len(tasks) > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=threads) as pool:
            records = list(pool.map(_sweep_cell, tasks, chunksize=1))
    else:
        records = [_sweep_cell(t) for t in tasks]
    records.sort(key=lambda r: (r["cell_id"], r["rep"]))
    with open(args.out, "w") as fh:
        for rec in records:
            fh.write(json.dumps(rec, sort_keys=True) + "\n")
    manifest.wall_clock_s = time.monotonic() - t0
    _emit_sidecar(manifest, args.out)
    failures = sum(1 for r in records if r["error"])
    print(f"wrote {args.out}: {len(records)} lines, {failures} failed")
    return 0


# ---------------------------------------------------------------------------
# parser


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--seed", type=int, default=0, help="RNG seed (default 0)")
    common.add_argument(
        "--threads",
        type=int,
        default=None,
        help="worker count (default: GRAPHMOMENTS_THREADS or CPU count)",
    )
    common.add_argument(
        "--budget",
        type=int,
        default=None,
        help="enumeration budget for counting kernels",
    )

    parser = argparse.ArgumentParser(
        prog="graphmoments",
        description="Moment-based analysis of exchangeable random graphs.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", parents=[common], help="sample a graph from a model file")
    p.add_argument("model", help="model JSON (block model or gridded graphon)")
    p.add_argument("--n", type=int, required=True, help="number of vertices")
    p.add_argument("--rho", type=float, default=None, help="edge density (required for graphons)")
    p.add_argument("--out", required=True, help="output edge-list path")
    p.add_argument("--latents", action="store_true", help="write latent uniforms sidecar")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("moments", parents=[common], help="pattern/wheel moment table")
    p.add_argument("graph", help="edge-list file")
    p.add_argument(
        "--pattern",
        action="append",
        default=[],
        help="pattern name (repeatable): wheel:k=2,l=1 | wheel:k=1+2,l=2+1 | edges:0-1,0-2",
    )
    p.add_argument(
        "--estimator",
        choices=("pcheck", "qcheck"),
        default="pcheck",
        help="pcheck computes induced+noninduced counts; qcheck noninduced only",
    )
    p.add_argument(
        "--approx",
        choices=("degree",),
        default=None,
        help="degree: falling-factorial approximation instead of exact counts",
    )
    p.add_argument("--out", default=None, help="output JSON path (default stdout)")
    p.set_defaults(func=cmd_moments)

    p = sub.add_parser("fit", parents=[common], help="fit a K-block model")
    p.add_argument("graph", help="edge-list file")
    p.add_argument("--K", type=int, required=True, help="block count")
    p.add_argument("--estimator", choices=("qcheck", "pcheck"), default="qcheck")
    p.add_argument(
        "--weights",
        choices=("bootstrap",),
        default=None,
        help="bootstrap: weighted least squares with 1/sigma^2 from subsampling",
    )
    p.add_argument("--report-stages", action="store_true", help="keep stage diagnostics in output")
    p.add_argument("--multistart", type=int, default=4)
    p.add_argument("--stage-tol", type=float, default=1e-2, help="stage weight tolerance")
    p.add_argument(
        "--on-stage-error",
        choices=("raise", "fallback"),
        default="raise",
        help="fallback: refine from a neutral start when stage recovery fails",
    )
    p.add_argument("--out", default=None, help="output JSON path (default stdout)")
    p.set_defaults(func=cmd_fit)

    p = sub.add_parser("degrees", parents=[common], help="m-degree profile")
    p.add_argument("graph", help="edge-list file")
    p.add_argument("--m", type=int, required=True, help="maximum path length")
    p.add_argument("--out", default=None, help="per-vertex CSV path")
    p.add_argument("--summary", default=None, help="summary JSON path (default stdout)")
    p.set_defaults(func=cmd_degrees)

    p = sub.add_parser("bootstrap", parents=[common], help="subsampling variance estimate")
    p.add_argument("graph", help="edge-list file")
    p.add_argument("--key", required=True, help="wheel key: 'k,l' or wheel:k=..,l=..")
    p.add_argument("--m", type=int, default=None, help="subsample size (default ceil(n^0.7))")
    p.add_argument("--B", type=int, default=500, help="replicate count")
    p.add_argument(
        "--normalization",
        choices=("rho_star", "literal"),
        default="rho_star",
        help="rho_star: D-bar*/(n-1); literal: the as-written D-bar*/m",
    )
    p.add_argument("--out", default=None, help="output JSON path (default stdout)")
    p.set_defaults(func=cmd_bootstrap)

    p = sub.add_parser("sweep", parents=[common], help="simulation sweep to JSONL")
    p.add_argument("config", help="sweep config JSON")
    p.add_argument("--out", required=True, help="output JSONL path")
    p.set_defaults(func=cmd_sweep)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except BudgetExceededError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 4
    except NumericalError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 3
    except InputError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
