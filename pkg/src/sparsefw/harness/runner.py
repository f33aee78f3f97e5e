"""Experiment orchestration.

An experiment is a list of independent work items (trials or grid points).
Each item is a pure function of ``(config, index)`` with its own RNG stream,
so results merged in index order are identical for any worker count.
"""
from __future__ import annotations

import json
import math
import os
import platform
import time
import traceback
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import scipy

from .. import __version__
from .. import bounds as B
from .. import fw, geometry, randpoly, statlab
from ..rng import make_rng
from .config import ConfigError, ExperimentConfig, make_domain
from .csvio import write_csv

__all__ = ["RunResult", "run_experiment", "work_items", "resolve_workers", "OutputLocked",
           "EXIT_OK", "EXIT_CONFIG", "EXIT_VIOLATION"]

EXIT_OK, EXIT_CONFIG, EXIT_VIOLATION = 0, 2, 3
LOCK_NAME = ".sparsefw.lock"


class OutputLocked(RuntimeError):
    pass


@dataclass
class RunResult:
    status: int
    files: dict = field(default_factory=dict)
    violations: list = field(default_factory=list)
    errors: list = field(default_factory=list)
    summary: dict = field(default_factory=dict)


# -- work items ------------------------------------------------------------------

def work_items(cfg: ExperimentConfig) -> list:
    p = cfg.params
    if cfg.kind == "bounds_table":
        return [(f, d, e) for f in p["formulas"] for d in p["d_grid"] for e in p["eps_grid"]]
    if cfg.kind == "cap_study":
        rs = p["r_grid"] or [None]
        return [(d, r) for d in p["d_grid"] for r in rs]
    if cfg.kind == "fast_rate":
        return [(n, t) for n in p["n_grid"] for t in range(cfg.trials)]
    if cfg.kind == "linear_rate":
        return [(r, t) for r in p["r_grid"] for t in range(cfg.trials)]
    return list(range(cfg.trials))


def _item_fw_run(cfg, p, trial):
    dom = make_domain(p)
    rng = make_rng(cfg.seed, trial, "fw_run")
    if p["target"] == "random":
        target = geometry.random_point(dom, rng) * p["outside_scale"]
    else:
        target = np.asarray(p["target"], dtype=float)
    kw = {"inner_iters": p["inner_iters"]} if p["algo"] == "fully_corrective" else {}
    tr = fw.run_algorithm(p["algo"], dom, target, p["steps"], rng=rng, **kw)
    problems = []
    if (tr.sparsity > tr.iters + 1).any():
        problems.append(f"trial {trial}: sparsity exceeds t + 1")
    if p["algo"] != "vanilla_harmonic" and (np.diff(tr.f) > 1e-12 * max(1.0, tr.f[0])).any():
        problems.append(f"trial {trial}: objective increased under line search")
    summary = {"trial": trial, "seed": cfg.seed, "config_hash": cfg.hash(), "algo": tr.algorithm,
               "status": tr.status, "steps": len(tr) - 1, "f_final": tr.f_final,
               "sparsity": tr.final.sparsity(), "lmo_calls": tr.lmo_calls, "inexact_lmo": tr.inexact_lmo}
    return {"trace": tr.to_csv(), "summary": summary, "violations": problems}


def _item_compressibility(cfg, p, trial):
    dom = make_domain(p)
    rng = make_rng(cfg.seed, trial, "compressibility")
    target = geometry.random_point(dom, rng)
    est = fw.min_sparsity_to_tolerance(dom, [target], p["eps"], p["algo"], p["max_steps"], rng=rng)
    return {"row": {"trial": trial, "seed": cfg.seed, "config_hash": cfg.hash(), "domain": p["domain"],
                    "d": dom.dim, "eps": p["eps"], "algo": p["algo"], "k": est.k, "saturated": est.saturated}}


def _table_report(formula, d, eps):
    if formula == "ex_l1":
        return B.lower_bound_l1(d, eps * math.sqrt(d) / 4.0)
    if formula == "ex_l1_general":
        return B.lower_bound_l1_general(d, eps * math.sqrt(d) / 4.0)
    if formula == "ex_cube":
        return B.lower_bound_cube(d, eps)
    if formula == "ex_cube_general":
        return B.lower_bound_cube_general(d, eps)
    if formula == "ex_nuclear":
        return B.lower_bound_nuclear(d, d, eps)
    if formula == "ex_nuclear_general":
        return B.lower_bound_nuclear_general(d, d, eps)
    if formula == "l1_volume":
        return B.lower_bound_volume(B.varv_root("l1", d), d, 2 * d, eps)
    return B.lower_bound_simplex(d, eps)


def _item_bounds_table(cfg, p, item):
    formula, d, eps = item
    rep = _table_report(formula, d, eps)
    row = rep.row()
    row["formula"] = formula
    row["d"] = d
    return {"row": row}


def _item_randpoly_study(cfg, p, trial):
    rep = randpoly.randpoly_bound_pipeline(p["d"], p["m"], p["delta"], cfg.seed, kind=p["polytope"],
                                           n_dirs=p["n_dirs"], trial_index=trial)
    refuted = rep.flagged("containment_refuted")
    return {"row": {"d": p["d"], "m": p["m"], "kind": p["polytope"], "seed": trial, "r": rep.inputs["r"],
                    "n_dirs": p["n_dirs"], "result": "violated" if refuted else "no_violation_found",
                    "bound_value": rep.value},
            "exponent": rep.inputs["exponent"]}


def _item_cap_study(cfg, p, item):
    d, r = item
    r = 1.0 / (2.0 * math.sqrt(d)) if r is None else r
    idx = p["d_grid"].index(d)
    exact = randpoly.cap_measure(r, d)
    mc, se = randpoly.cap_measure_mc(r, d, p["samples"], make_rng(cfg.seed, idx, f"cap/{r!r}"))
    eps = r * (1.0 + p["t"])
    b2 = randpoly.cap_lower_bound_prop_b2(eps, p["t"], d) if 0.0 < eps < 1.0 else math.nan
    problems = []
    if not math.isnan(b2) and b2 > exact + 1e-12:
        problems.append(f"d={d} r={r}: cap lower bound {b2} exceeds exact {exact}")
    return {"row": {"d": d, "r": r, "exact": exact, "mc": mc, "se": se,
                    "z": (mc - exact) / se if se > 0 else 0.0, "t": p["t"], "prop_b2": b2},
            "violations": problems}


def _item_aggregation(cfg, p, trial):
    inst = statlab.make_instance(p["n"], p["m"], cfg.seed, trial_index=trial, kind=p["dictionary"])
    recs = statlab.run_aggregation(inst, p["k_steps"], p["algo"], eta=p["eta"])
    rows = [{"n": p["n"], "m": p["m"], "alpha": "", "k": r.k, "seed": trial, "opt_err": r.opt_err,
             "excess_risk": r.excess_risk, "bound_value": max(r.opt_err, 0.0) + r.sparse_term + r.tail_term}
            for r in recs]
    return {"rows": rows}


def _item_fast_rate(cfg, p, item):
    n, trial = item
    if p["study"] == "interior":
        row = statlab.fast_rate_trial(n, trial, alpha=p["alpha"], c=p["c"], m=p["m"], eta=p["eta"],
                                      seed=cfg.seed, kind=p["dictionary"], persistence=p["persistence"])
    else:
        row = statlab.exterior_trial(n, trial, m=p["m"], seed=cfg.seed, kind=p["dictionary"],
                                     offset=p["offset"])
    return {"row": row}


def _item_linear_rate(cfg, p, item):
    r, trial = item
    row = statlab.linear_rate_trial(make_domain(p), r, p["k_max"], cfg.seed, trial)
    row["seed"] = trial
    problems = [f"r={r} trial={trial}: {row['violations']} envelope violations"] if row["violations"] else []
    return {"row": row, "violations": problems}


_ITEMS = {
    "fw_run": _item_fw_run, "compressibility": _item_compressibility, "bounds_table": _item_bounds_table,
    "randpoly_study": _item_randpoly_study, "cap_study": _item_cap_study, "aggregation": _item_aggregation,
    "fast_rate": _item_fast_rate, "linear_rate": _item_linear_rate,
}


def _run_item(args):
    cfg_dict, index, item = args
    from .config import parse_config

    cfg = parse_config(cfg_dict)
    try:
        return index, _ITEMS[cfg.kind](cfg, cfg.params, item), None
    except Exception as exc:  # a failing trial becomes an error row, not a crash
        return index, None, f"{type(exc).__name__}: {exc}"


# -- reduction ----------------------------------------------------------------------

HEADERS = {
    "compressibility": ["trial", "seed", "config_hash", "domain", "d", "eps", "algo", "k", "saturated"],
    "bounds_table": ["formula", "d", "n", "eps", "value", "flags"],
    "randpoly_study": ["d", "m", "kind", "seed", "r", "n_dirs", "result", "bound_value"],
    "cap_study": ["d", "r", "exact", "mc", "se", "z", "t", "prop_b2"],
    "stat": ["n", "m", "alpha", "k", "seed", "opt_err", "excess_risk", "bound_value"],
    "linear_rate": ["r", "seed", "k_max", "steps_run", "eps0", "contraction", "envelope_base", "violations"],
    "fw_summary": ["trial", "seed", "config_hash", "algo", "status", "steps", "f_final", "sparsity",
                   "lmo_calls", "inexact_lmo"],
}


def _reduce(cfg, results, out: Path, res: RunResult):
    p = cfg.params
    kind = cfg.kind
    ok = [(i, r) for i, r, _ in results if r is not None]
    for _, r in ok:
        res.violations.extend(r.get("violations", []))
    if kind == "fw_run":
        for i, r in ok:
            name = f"trace_{i:04d}.csv"
            (out / name).write_text(r["trace"], encoding="utf-8", newline="")
            res.files[name] = "trace"
        write_csv(out / "summary.csv", HEADERS["fw_summary"], [r["summary"] for _, r in ok])
        res.files["summary.csv"] = "summary"
    elif kind in ("compressibility", "bounds_table", "randpoly_study", "cap_study", "linear_rate"):
        name = f"{kind}.csv"
        write_csv(out / name, HEADERS[kind], [r["row"] for _, r in ok])
        res.files[name] = "data"
    elif kind == "aggregation":
        rows = [row for _, r in ok for row in r["rows"]]
        write_csv(out / "aggregation.csv", HEADERS["stat"], rows)
        res.files["aggregation.csv"] = "data"
        table = []
        for k in range(1, p["k_steps"] + 1):
            recs = [row for row in rows if row["k"] == k]
            ratios = [row["excess_risk"] / row["bound_value"] for row in recs if row["bound_value"] > 0]
            if ratios:
                table.append({"k": k, "fitted_C": float(np.quantile(ratios, 1.0 - p["eta"])),
                              "trials": len(ratios)})
        write_csv(out / "envelope.csv", ["k", "fitted_C", "trials"], table)
        res.files["envelope.csv"] = "summary"
    elif kind == "fast_rate":
        rows = [r["row"] for _, r in ok]
        write_csv(out / "fast_rate.csv", HEADERS["stat"], rows)
        st = statlab.summarize_rate_rows(rows)
        hdr = ["n", "k", "median_excess_risk", "radius", "persistence_fraction", "slope"]
        write_csv(out / "slope.csv", hdr, [{**s, "slope": st.slope} for s in st.summary])
        res.files.update({"fast_rate.csv": "data", "slope.csv": "summary"})
        res.summary["slope"] = st.slope
    if kind == "compressibility":
        _compress_bound(cfg, [r["row"] for _, r in ok], out, res)
    if kind == "randpoly_study" and ok:
        res.summary["lemma_b1_exponent"] = ok[0][1]["exponent"]
    if kind == "linear_rate":
        res.summary["violations"] = sum(r["row"]["violations"] for _, r in ok)


def _compress_bound(cfg, rows, out, res):
    p = cfg.params
    if not rows:
        return
    k_max = max(r["k"] for r in rows)
    res.summary["k"] = k_max
    if p["bound"] == "none":
        return
    d = rows[0]["d"]
    if p["bound"] == "l1":
        delta = p["delta"] if p["delta"] is not None else p["eps"] * math.sqrt(d) / 2.0
        rep = B.lower_bound_l1(d, delta)
    else:
        rep = B.lower_bound_simplex(d, 2.0 * p["eps"])
    try:
        cmp = B.empirical_vs_bound(k_max, rep, p["eps"] ** 2)
    except ValueError as exc:
        raise ConfigError(f"eps/delta: {exc}") from None
    write_csv(out / "bound.csv", ["formula", "d", "eps", "f_tol", "value", "measured", "status"],
              [{"formula": rep.formula_id, "d": d, "eps": rep.eps, "f_tol": rep.f_tol, "value": rep.value,
                "measured": k_max, "status": cmp.status}])
    res.files["bound.csv"] = "summary"
    if not cmp.consistent:
        res.violations.append(cmp.dump())


# -- driver ---------------------------------------------------------------------------

def resolve_workers(cfg: ExperimentConfig, override: int | None = None) -> int:
    if override is not None:
        return max(1, int(override))
    if cfg.workers is not None:
        return cfg.workers
    env = os.environ.get("SPARSEFW_WORKERS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigError(f"SPARSEFW_WORKERS: must be an integer, got {env!r}") from None
    return 1


def run_experiment(cfg: ExperimentConfig, out: str | os.PathLike | None = None,
                   workers: int | None = None) -> RunResult:
    """Run every work item, write CSVs plus ``manifest.json`` into the output directory."""
    out = Path(out if out is not None else cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    lock = out / LOCK_NAME
    try:
        fd = os.open(lock, os.O_CREAT | os.O_EXCL | os.O_WRONLY)
    except FileExistsError:
        raise OutputLocked(f"{out} is in use by another run (remove {lock} if stale)") from None
    try:
        os.write(fd, str(os.getpid()).encode())
        os.close(fd)
        return _run_locked(cfg, out, resolve_workers(cfg, workers))
    finally:
        lock.unlink(missing_ok=True)


def _run_locked(cfg, out, n_workers):
    t0 = time.perf_counter()
    items = work_items(cfg)
    cfg_dict = cfg.to_dict()
    jobs = [(cfg_dict, i, item) for i, item in enumerate(items)]
    if n_workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=n_workers) as pool:
            results = list(pool.map(_run_item, jobs, chunksize=max(1, len(jobs) // (4 * n_workers))))
    else:
        results = [_run_item(j) for j in jobs]
    results.sort(key=lambda r: r[0])
    res = RunResult(EXIT_OK)
    res.errors = [(i, err) for i, _, err in results if err is not None]
    _reduce(cfg, results, out, res)
    if res.errors:
        write_csv(out / "errors.csv", ["item", "error"], res.errors)
        res.files["errors.csv"] = "errors"
    n_ok = len(items) - len(res.errors)
    frac = n_ok / len(items) if items else 1.0
    if res.violations or frac < cfg.min_success_fraction:
        res.status = EXIT_VIOLATION
    manifest = {
        "config": cfg.to_dict(), "config_hash": cfg.hash(), "seed": cfg.seed, "items": len(items),
        "failed_items": len(res.errors), "success_fraction": frac, "workers": n_workers,
        "files": res.files, "violations": res.violations, "summary": res.summary, "exit_status": res.status,
        "versions": {"sparsefw": __version__, "python": platform.python_version(), "numpy": np.__version__,
                     "scipy": scipy.__version__},
        "wall_time_s": time.perf_counter() - t0,
    }
    (out / "manifest.json").write_text(json.dumps(manifest, indent=2, sort_keys=True, default=_jsonable) + "\n",
                                       encoding="utf-8")
    return res


def _jsonable(v):
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating,)):
        return float(v)
    return str(v)
