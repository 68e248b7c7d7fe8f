"""Experiment orchestration: one config in, result JSON + CSV files out."""

from __future__ import annotations

import logging
import math
import time
from datetime import datetime, timezone
from pathlib import Path

from . import __version__
from .config import ExperimentConfig, build_measure
from .counting import evaluation_cap, naive_count, tree_dp_count
from .errors import ConfigInvalid
from .io import certificate_to_dict, dumps, write_json, write_measure, write_rows, write_tree
from .kernels import GapSpec
from .measures import RNG_NAME, regularity_check
from .scaling import (
    DEFAULT_DRIFT,
    DEFAULT_LADDER,
    lambda_measure_lower,
    lower_bound_check,
    minkowski_dim_embedding,
    scaling_series,
    select_interval,
    upper_bound_check,
)
from .spectral import frostman_fourier_slope
from .trees import symmetric_cover

log = logging.getLogger(__name__)

RESULT_FILE = "result.json"
LOG_FILE = "run.log"


def _interval(cfg: ExperimentConfig, m):
    spec = cfg.get("interval", {})
    return select_interval(
        m,
        float(spec.get("q_lo", 0.35)),
        float(spec.get("q_hi", 0.65)),
        int(spec.get("sample_pairs", 100_000)),
        int(spec.get("seed", cfg.seed)),
    )


def resolve_targets(cfg: ExperimentConfig, m):
    """Turn ``t_spec`` into a float or per-edge dict; default is the selected interval midpoint."""
    spec = cfg.get("t_spec", "interval")
    if isinstance(spec, (int, float)) and not isinstance(spec, bool):
        return float(spec), None
    if spec == "interval":
        sel = _interval(cfg, m)
        return sel.midpoint, sel
    if isinstance(spec, dict) and isinstance(spec.get("edges"), list):
        targets = {}
        for pos, item in enumerate(spec["edges"]):
            if not (isinstance(item, list) and len(item) == 3):
                raise ConfigInvalid(f"t_spec.edges[{pos}]", "expected [i, j, t]")
            i, j, t = item
            targets[(int(i), int(j))] = float(t)
        missing = [e for e in cfg.tree.edges if e not in targets]
        if missing:
            raise ConfigInvalid("t_spec.edges", f"no target for edges {missing}")
        return targets, None
    raise ConfigInvalid("t_spec", f"expected a number, 'interval' or {{'edges': [...]}}, got {spec!r}")


def _ladder(cfg, key="eps_ladder", default=DEFAULT_LADDER):
    return [float(e) for e in cfg.get(key, list(default))]


def _measure_summary(m) -> dict:
    return {"n": m.n, "d": m.d, "meta": m.meta}


def _tree_summary(cfg) -> dict:
    t = cfg.tree
    return {"source": cfg.tree_file or cfg.get("tree"), "vertices": t.vertex_count, "edges": [list(e) for e in t.edges]}


def run(cfg: ExperimentConfig, out_dir, threads: int = 1) -> dict:
    """Run one experiment, writing ``result.json`` (deterministic) and timing to ``run.log``."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    started = time.perf_counter()
    stamp = datetime.now(timezone.utc).isoformat()
    m = build_measure(cfg.measure, cfg.base_dir, cfg.seed)
    handler = _EXPERIMENTS[cfg.experiment]
    result = {
        "experiment": cfg.experiment,
        "version": __version__,
        "rng": RNG_NAME,
        "seed": cfg.seed,
        "measure": _measure_summary(m),
    }
    result.update(handler(cfg, m, out, threads))
    write_json(out / RESULT_FILE, result)
    elapsed = time.perf_counter() - started
    with (out / LOG_FILE).open("a") as fh:
        fh.write(f"{stamp} experiment={cfg.experiment} elapsed_seconds={elapsed:.6f} threads={threads}\n")
    log.info("%s finished in %.3f s", cfg.experiment, elapsed)
    return result


def _gen(cfg, m, out, threads):
    write_measure(out / "measure.csv", m)
    return {"files": ["measure.csv", "measure.meta.json"]}


def _cover(cfg, m, out, threads):
    policy = cfg.get("pivot_policy", "max_degree")
    cover, cert = symmetric_cover(cfg.tree, policy)
    write_tree(out / "cover.tree", cover)
    write_json(out / "certificate.json", certificate_to_dict(cert))
    return {
        "tree": _tree_summary(cfg),
        "pivot_policy": policy,
        "cover": {"vertices": cover.vertex_count, "edges": [list(e) for e in cover.edges]},
        "certificate_verified": cert.verify(cfg.tree, cover),
        "files": ["cover.tree", "certificate.json"],
    }


def _gaps(cfg, targets, epsilon):
    return GapSpec(targets, epsilon, cfg.get("kernel", "indicator"), bool(cfg.get("normalized", False)))


def _count(cfg, m, out, threads):
    targets, sel = resolve_targets(cfg, m)
    if "epsilon" not in cfg.raw:
        raise ConfigInvalid("epsilon", "missing")
    gaps = _gaps(cfg, targets, float(cfg.get("epsilon")))
    method = cfg.get("method", "tree_dp")
    if method not in ("tree_dp", "naive", "both"):
        raise ConfigInvalid("method", f"expected tree_dp, naive or both, got {method!r}")
    results = []
    if method in ("tree_dp", "both"):
        results.append(tree_dp_count(m, cfg.tree, gaps, pruning=bool(cfg.get("pruning", False)), threads=threads))
    if method in ("naive", "both"):
        results.append(naive_count(m, cfg.tree, gaps))
    primary = results[0]
    doc = {
        "value": primary.value,
        "method": primary.method,
        "tree_file": cfg.tree_file,
        "measure_meta": m.meta,
        "gaps": gaps.to_dict(),
        # timings live in run.log so this file stays byte-identical across runs
        "elapsed_seconds": None,
        "kernel_evals": primary.kernel_evals,
        "tuple_space_size": primary.tuple_space_size,
    }
    if len(results) > 1:
        doc["oracle_value"] = results[1].value
    if sel is not None:
        doc["interval"] = [sel.lo, sel.hi]
    return doc


def _scaling(cfg, m, out, threads):
    targets, sel = resolve_targets(cfg, m)
    eps = _ladder(cfg)
    kernel = cfg.get("kernel", "triangle")
    series = scaling_series(m, cfg.tree, targets, eps, kernel, pruning=bool(cfg.get("pruning", True)), threads=threads)
    k = cfg.tree.k
    factor = float(cfg.thresholds.get("drift", DEFAULT_DRIFT))
    band = float(cfg.thresholds.get("slope_band", 0.5))
    verdict = upper_bound_check(series, k, factor)
    ratios = series.ratios(k)
    write_rows(out / "series.csv", ["epsilon", "value", "ratio"], zip(series.epsilons, series.values, ratios))
    write_rows(
        out / "loglog.csv",
        ["log_epsilon", "log_value"],
        [(math.log(e), math.log(v)) for e, v in zip(series.epsilons, series.values) if v > 0],
    )
    slope_ok = abs(series.fitted_slope - k) <= band
    return {
        "tree": _tree_summary(cfg),
        "t": targets if isinstance(targets, float) else [[i, j, v] for (i, j), v in sorted(targets.items())],
        "interval": None if sel is None else [sel.lo, sel.hi],
        "kernel": kernel,
        "epsilons": series.epsilons,
        "values": series.values,
        "normalized_values": series.normalized_values,
        "slope": series.fitted_slope,
        "intercept": series.fitted_intercept,
        "residual": series.residual,
        "k": k,
        "upper_bound": {"max_ratio": verdict.max_ratio, "drift": verdict.drift, "factor": factor, "pass": verdict.passed},
        "slope_within_band": slope_ok,
        "pass": verdict.passed and slope_ok,
    }


def _lower(cfg, m, out, threads):
    policy = cfg.get("pivot_policy", "max_degree")
    cover, _ = symmetric_cover(cfg.tree, policy)
    sel = _interval(cfg, m)
    eps = _ladder(cfg)
    factor = float(cfg.thresholds.get("drift", DEFAULT_DRIFT))
    samples_t = int(cfg.thresholds.get("samples_t", cfg.get("samples_t", 5)))
    res = lower_bound_check(
        m, cover, eps, sel, samples_t, cover_of=cfg.tree, kernel=cfg.get("kernel", "indicator"),
        factor=factor, pruning=bool(cfg.get("pruning", True)), threads=threads,
    )
    rows = [(t, e, r) for t, row in zip(res.t_values, res.ratios) for e, r in zip(res.epsilons, row)]
    write_rows(out / "ratios.csv", ["t", "epsilon", "ratio"], rows)
    return {
        "tree": _tree_summary(cfg),
        "cover": {"vertices": cover.vertex_count, "edges": [list(e) for e in cover.edges]},
        "interval": [sel.lo, sel.hi],
        "t_values": list(res.t_values),
        "k": res.k,
        "min_ratio": res.min_ratio,
        "max_drift": res.max_drift,
        "factor": factor,
        "pass": res.passed,
    }


def _dim_embed(cfg, m, out, threads):
    levels = cfg.get("levels")
    if levels is None:
        raise ConfigInvalid("levels", "dim-embed needs a list of construction levels")
    if cfg.measure.get("family") != "cantor":
        raise ConfigInvalid("measure.family", "dim-embed needs the cantor family (levels index its resolution)")
    ms = [build_measure(cfg.measure, cfg.base_dir, cfg.seed, level=int(L)) for L in levels]
    targets, sel = resolve_targets(cfg, ms[-1])
    if not isinstance(targets, float):
        raise ConfigInvalid("t_spec", "dim-embed uses a scalar target")
    est = minkowski_dim_embedding(ms, cfg.tree, targets, float(cfg.get("slack", 2.0)), float(cfg.get("radius_factor", 0.5)))
    write_rows(out / "packing.csv", ["level", "scale", "count"], zip(levels, est.scales, est.counts))
    s = m.meta.get("s")
    k = cfg.tree.k
    bound = None if s is None else (k + 1) * s - k
    margin = float(cfg.thresholds.get("dim_margin", 0.5))
    return {
        "tree": _tree_summary(cfg),
        "t": targets,
        "levels": list(levels),
        "scales": est.scales,
        "counts": est.counts,
        "estimate": est.slope,
        "residual": est.residual,
        "bound": bound,
        "pass": None if bound is None else est.slope <= bound + margin,
    }


def _lambda(cfg, m, out, threads):
    sizes = _ladder(cfg, "bin_sizes", [2.0**-i for i in range(4, 8)])
    bins = lambda_measure_lower(m, cfg.tree, sizes, int(cfg.get("samples", 1 << 22)), cfg.seed)
    write_rows(out / "lambda.csv", ["size", "occupied_volume", "occupied_bins"],
               [(b.size, b.occupied_volume, b.occupied_bins) for b in bins])
    vols = [b.occupied_volume for b in bins]
    floor = float(cfg.thresholds.get("floor_fraction", 0.5))
    return {
        "tree": _tree_summary(cfg),
        "sizes": sizes,
        "occupied_volume": vols,
        "occupied_bins": [b.occupied_bins for b in bins],
        "tuples": bins[0].tuples,
        "evidence": min(vols[-2:]),
        "pass": min(vols) >= floor * vols[0],
    }


def _fourier(cfg, m, out, threads):
    js = [int(j) for j in cfg.get("j_range", list(range(2, 8)))]
    density = float(cfg.get("grid_density", 8.0))
    probe = frostman_fourier_slope(m, None, js, density)
    s = m.meta.get("s")
    refs = [2.0 ** (j * (m.d - s) / 2) if s is not None else None for j in js]
    write_rows(out / "fourier.csv", ["j", "mass", "reference"], zip(js, probe.masses, refs))
    band = float(cfg.thresholds.get("slope_band", 0.15))
    max_change = float(cfg.thresholds.get("quadrature_change", 0.02))
    quad_ok = probe.quadrature_change is not None and probe.quadrature_change < max_change
    return {
        "j_values": js,
        "masses": probe.masses,
        "slope": probe.slope,
        "target": probe.target,
        "residual": probe.residual,
        "quadrature_change": probe.quadrature_change,
        "quadrature_ok": quad_ok,
        "pass": None if probe.target is None else abs(probe.slope - probe.target) <= band and quad_ok,
    }


def _regularity(cfg, m, out, threads):
    s = cfg.get("s", m.meta.get("s"))
    if s is None:
        raise ConfigInvalid("s", "no exponent given and the measure does not record one")
    radii = cfg.get("radii")
    if radii is None:
        raise ConfigInvalid("radii", "missing")
    rep = regularity_check(m, float(s), radii, int(cfg.get("sample_centers", 200)), cfg.seed)
    return {"s": rep.s, "radii": list(rep.radii), "max_upper_ratio": rep.max_upper_ratio, "min_lower_ratio": rep.min_lower_ratio}


_EXPERIMENTS = {
    "gen": _gen,
    "cover": _cover,
    "count": _count,
    "scaling": _scaling,
    "lower": _lower,
    "dim-embed": _dim_embed,
    "lambda": _lambda,
    "fourier": _fourier,
    "regularity": _regularity,
}


def describe(cfg: ExperimentConfig) -> dict:
    """Dry-run plan: sizes, estimated kernel evaluations and caps that would trigger."""
    m = build_measure(cfg.measure, cfg.base_dir, cfg.seed)
    plan = {"experiment": cfg.experiment, "n": m.n, "d": m.d, "flags": []}
    if cfg.tree is not None:
        k = cfg.tree.k
        plan["k"] = k
        plan["tuple_space_size"] = m.n ** (k + 1)
        plan["dp_kernel_evals_per_epsilon"] = k * m.n * m.n
        ladder = cfg.get("eps_ladder")
        if ladder:
            plan["ladder_points"] = len(ladder)
        method = cfg.get("method", "tree_dp")
        cap = evaluation_cap()
        if method in ("naive", "both") and m.n ** (k + 1) > cap:
            plan["flags"].append(f"TupleSpaceTooLarge: {m.n}^{k + 1} tuples exceed cap {cap}")
    if cfg.experiment == "fourier" and m.d > 2:
        plan["flags"].append(f"DimensionTooHigh: d={m.d} > 2")
    return plan


def format_plan(plan: dict) -> str:
    lines = [f"experiment: {plan['experiment']}", f"measure: n={plan['n']} d={plan['d']}"]
    if "k" in plan:
        lines.append(f"tree: k={plan['k']}  tuple space n^(k+1)={plan['tuple_space_size']}")
        lines.append(f"elimination cost: {plan['k']} x n^2 = {plan['dp_kernel_evals_per_epsilon']} kernel evals per epsilon")
    for flag in plan["flags"]:
        lines.append(f"WOULD FAIL {flag}")
    return "\n".join(lines) + "\n"


def result_text(result: dict) -> str:
    return dumps(result)


__all__ = ["run", "describe", "format_plan", "result_text"]
