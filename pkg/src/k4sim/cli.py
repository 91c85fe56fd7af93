"""Batch experiment orchestration and serialization.

Subcommands: simulate, sweep, track, dem-check, density-check, certify.
Configuration comes from flags plus an optional flat key=value file (flags
win). Every output file embeds the fully resolved parameter profile, so a
desk-mode number can never be mistaken for a faithful large-n one. Outputs
are byte-identical for identical configs including the master seed: rows
are ordered by (n, run index) regardless of worker scheduling and wall
times never enter files.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from . import analysis, density
from .dem import builtin_triple_specs, transform_increments, validate_spec
from .process import (
    AfterScaledTime,
    AfterSteps,
    ProcessState,
    StopRule,
    Termination,
    export_edges,
    init,
    run,
)
from .rng import run_seed, stream
from .sigma_star import build_sigma_star
from .trajectory import EnvelopeMonitor, ParamSet, make_params
from .triples import Configuration, LedgerCSV, TripleTracker

# ---------------------------------------------------------------------------


def parse_stop(text: str) -> StopRule:
    if text == "termination":
        return Termination()
    if text.startswith("steps="):
        return AfterSteps(int(text[len("steps="):]))
    if text.startswith("t="):
        return AfterScaledTime(float(text[len("t="):]))
    raise ValueError(f"bad stop rule {text!r}; use termination | steps=K | t=X")


def _params_for(args_mode: str, n: int, overrides: dict) -> ParamSet:
    return make_params(args_mode, n, epsilon=overrides.get("epsilon"),
                       W=overrides.get("W"), mu=overrides.get("mu"),
                       gamma=overrides.get("gamma"))


# -- sweep workers ------------------------------------------------------------


@dataclass(frozen=True)
class SweepTask:
    n: int
    run_index: int
    master_seed: int
    mode: str
    overrides: tuple
    stop_text: str
    certify: bool
    cert_samples: int
    coverage_samples: int  # 0 disables the subset-coverage measurement


def run_one(task: SweepTask) -> dict:
    overrides = dict(task.overrides)
    params = _params_for(task.mode, task.n, overrides)
    seed = run_seed(task.master_seed, task.run_index)
    state = init(task.n, seed)
    summary = run(state, parse_stop(task.stop_text))
    greedy, exact = analysis.independence_lower(state)
    rec = analysis.SweepRecord(
        n=task.n,
        seed=seed,
        steps_to_termination=summary.steps,
        final_edges=summary.edges,
        max_degree=summary.max_degree,
        min_degree=summary.min_degree,
        greedy_alpha=greedy,
        exact_alpha=exact,
        triangle_coverage_rate=None,
    )
    out = {"n": task.n, "run_index": task.run_index, "record": rec,
           "elapsed_s": summary.elapsed_s, "terminated": summary.terminated}
    if task.coverage_samples:
        rate, misses = analysis.triangle_coverage(
            state, min(params.u, task.n), task.coverage_samples
        )
        rec.triangle_coverage_rate = rate
        out["coverage_misses"] = misses
    if task.certify:
        cert = analysis.certify_k4_free(
            state, mode="auto", sample_size=task.cert_samples
        )
        out["certificate"] = cert
    return out


def run_sweep(
    ns: Sequence[int],
    runs: int,
    master_seed: int,
    mode: str = "desk",
    overrides: Optional[dict] = None,
    stop_text: str = "termination",
    workers: int = 1,
    certify: bool = True,
    cert_samples: int = 1_000_000,
    coverage_samples: int = 0,
) -> list[dict]:
    """Independent runs for every (n, run_index); results ordered by (n, run_index)."""
    ov = tuple(sorted((overrides or {}).items()))
    tasks = [
        SweepTask(n, r, master_seed, mode, ov, stop_text, certify,
                  cert_samples, coverage_samples)
        for n in ns
        for r in range(runs)
    ]
    if workers <= 1:
        results = [run_one(t) for t in tasks]
    else:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(run_one, tasks, chunksize=1))
    results.sort(key=lambda d: (d["n"], d["run_index"]))
    return results


def sweep_exponents(results: Sequence[dict]) -> dict:
    """Log-log slopes of mean edges / max degree / greedy independence vs n."""
    by_n: dict[int, list] = {}
    for r in results:
        by_n.setdefault(r["n"], []).append(r["record"])
    pts_edges, pts_deg, pts_alpha = [], [], []
    for n in sorted(by_n):
        recs = by_n[n]
        pts_edges.append((n, float(np.mean([x.final_edges for x in recs]))))
        pts_deg.append((n, float(np.mean([x.max_degree for x in recs]))))
        pts_alpha.append((n, float(np.mean([x.greedy_alpha for x in recs]))))
    out = {}
    for name, pts in (("edges", pts_edges), ("max_degree", pts_deg),
                      ("alpha_greedy", pts_alpha)):
        slope, intercept, err = analysis.fit_exponent(pts)
        out[name] = {"slope": slope, "intercept": intercept, "stderr": err,
                     "points": [[int(a), b] for a, b in pts]}
    return out


# -- command implementations ---------------------------------------------------


def _write_out(text: str, path: Optional[str]) -> None:
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text if text.endswith("\n") else text + "\n")


def cmd_simulate(args, overrides) -> int:
    n = args.n_list[0]
    params = _params_for(args.mode, n, overrides)
    seed = run_seed(args.seed, 0)
    state = init(n, seed)
    summary = run(state, parse_stop(args.stop))
    if args.format == "edges":
        if args.out:
            with open(args.out, "w") as fh:
                export_edges(state, fh)
        else:
            export_edges(state, sys.stdout)
        return 0
    payload = {"params": params.describe(), "summary": summary.to_dict()}
    if args.format == "json":
        _write_out(json.dumps(payload, sort_keys=True), args.out)
    else:
        keys = sorted(summary.to_dict())
        rows = ",".join(keys) + "\n" + ",".join(str(summary.to_dict()[k]) for k in keys)
        _write_out(rows + "\n# params: " + json.dumps(params.describe(), sort_keys=True), args.out)
    return 0


def cmd_sweep(args, overrides) -> int:
    results = run_sweep(
        args.n_list, args.runs, args.seed, mode=args.mode, overrides=overrides,
        stop_text=args.stop, workers=args.workers, certify=True,
        cert_samples=200_000,
    )
    params_of = {
        n: _params_for(args.mode, n, overrides).describe() for n in args.n_list
    }
    lines = [analysis.SWEEP_CSV_HEADER]
    lines += [r["record"].csv_row() for r in results]
    lines.append("# params: " + json.dumps(params_of, sort_keys=True))
    csv_text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(csv_text)
    report = {
        "params": params_of[max(args.n_list)],
        "exponents": sweep_exponents(results),
        "certified_k4_free": all(r["certificate"].ok for r in results),
    }
    text = json.dumps(report, sort_keys=True)
    if args.out:
        sys.stdout.write(text + "\n")
    else:
        sys.stdout.write(csv_text + text + "\n")
    return 0


def _sigma_from_args(args, state: ProcessState, params: ParamSet) -> Configuration:
    if args.sigma == "auto":
        rng = stream(args.seed, 0, 6)
        U = sorted(int(v) for v in rng.choice(state.n, size=min(params.u, state.n),
                                              replace=False))
        if len(U) < params.u:
            raise ValueError(f"n = {state.n} too small for u = {params.u}")
        res = build_sigma_star(state, U, params)
        if not res.feasible:
            raise ValueError(f"auto configuration infeasible: {res.reason}")
        return res.sigma
    with open(args.sigma) as fh:
        d = json.load(fh)
    return Configuration(
        U=tuple(v - 1 for v in d["U"]),
        A=tuple(v - 1 for v in d["A"]),
        B=tuple(v - 1 for v in d["B"]),
        C=tuple(v - 1 for v in d["C"]),
    )


def cmd_track(args, overrides) -> int:
    n = args.n_list[0]
    params = _params_for(args.mode, n, overrides)
    seed = run_seed(args.seed, 0)
    state = init(n, seed)
    sigma = _sigma_from_args(args, state, params)
    tracker = TripleTracker(state, sigma, params, check_interval=args.check_interval)
    monitor = EnvelopeMonitor(params, sample_pairs=args.pair_samples)

    # per-step (gain, loss) sequences feed the martingale audit afterwards
    deltas = {"open": [], "interm": [], "partial": []}

    def tracked_step(st, chosen, closed):
        rec = tracker.on_step(st, chosen, closed)
        deltas["open"].append((0.0, float(rec.removed_open + rec.promoted)))
        deltas["interm"].append((float(rec.promoted), float(rec.removed_interm)))
        deltas["partial"].append(
            (float(rec.added),
             float(rec.removed_case1 + rec.removed_R2 + rec.removed_R3a + rec.removed_R3b))
        )

    out_path = args.out or "ledger.csv"
    with open(out_path, "w") as fh:
        csv = LedgerCSV(tracker, fh, stride=max(1, args.check_interval or 1))
        summary = run(state, parse_stop(args.stop), [tracked_step, monitor, csv])
        fh.write("# params: " + json.dumps(params.describe(), sort_keys=True) + "\n")
    tracker.finalize(state)

    specs = builtin_triple_specs(params)
    bad = tracker.bad
    freeze = min(bad.first_step.values()) if bad.first_step else None
    audits = {}
    for spec, key in zip(specs, ("open", "interm", "partial")):
        seq = deltas[key][: spec.horizon]
        audit = transform_increments(spec, seq, freeze_at=freeze)
        audits[spec.label] = {
            "M": audit.M, "N": audit.N, "a": audit.a,
            "max_excursion": audit.max_excursion,
            "increment_violations": audit.increment_violations,
            "ratio_ok": audit.ratio_ok, "crossed": audit.crossed,
        }
    payload = {
        "params": params.describe(),
        "sigma": sigma.to_dict(),
        "summary": summary.to_dict(),
        "counts": dict(zip(("open", "interm", "partial", "partial_open"),
                           tracker.counts())),
        "counters": tracker.counters.__dict__,
        "bad_events": {"b1": bad.b1, "b2": bad.b2, "b3": bad.b3,
                       "first_step": bad.first_step},
        "thresholds": tracker.thresholds,
        "envelope": json.loads(monitor.report.to_json()),
        "dem_audit": audits,
        "ledger_csv": out_path,
    }
    sys.stdout.write(json.dumps(payload, sort_keys=True) + "\n")
    return 0


def cmd_dem_check(args, overrides) -> int:
    n = args.n_list[0]
    params = _params_for(args.mode, n, overrides)
    reports = [validate_spec(spec).to_dict() for spec in builtin_triple_specs(params)]
    payload = {"params": params.describe(), "checks": reports}
    _write_out(json.dumps(payload, sort_keys=True), args.out)
    return 0


def cmd_density_check(args, overrides) -> int:
    n = args.n_list[0]
    params = _params_for(args.mode, n, overrides)
    seed = run_seed(args.seed, 0)
    state = init(n, seed)
    summary = run(state, parse_stop(args.stop))
    rng = stream(args.seed, 0, 7)
    violations = density.check_event_D(state, params, args.subset_samples, rng=rng)
    checks = []
    a_set = rng.choice(n, size=max(2, n // 4), replace=False).tolist()
    for d in (max(16.0 / params.epsilon, 2 * len(a_set) * params.p * n ** (2 * params.epsilon)),):
        v = density.check_high_degree_bound(state, a_set, d, params)
        if v:
            violations.append(v)
        checks.append({"check": "high_degree_set", "d": d})
    fam_d = max(
        300.0 / params.epsilon,
        len(a_set) * params.p ** 2 * n ** (5 * params.epsilon),
        params.epsilon ** -0.5 * (len(a_set) * params.p) ** 0.5 * n ** (2 * params.epsilon),
    )
    v = density.check_codegree_family_bound(state, a_set, fam_d, params)
    if v:
        violations.append(v)
    checks.append({"check": "disjoint_codegree_family", "d": fam_d})
    payload = {
        "params": params.describe(),
        "summary": summary.to_dict(),
        "checks": checks,
        "violations": [x.to_dict() for x in violations],
    }
    _write_out(json.dumps(payload, sort_keys=True), args.out)
    return 0


def cmd_certify(args, overrides) -> int:
    n = args.n_list[0]
    params = _params_for(args.mode, n, overrides)
    seed = run_seed(args.seed, 0)
    state = init(n, seed)
    summary = run(state, parse_stop(args.stop))
    cert = analysis.certify_k4_free(state, mode="auto")
    payload = {
        "params": params.describe(),
        "summary": summary.to_dict(),
        "certificate": cert.to_dict(),
    }
    _write_out(json.dumps(payload, sort_keys=True), args.out)
    return 0 if cert.ok else 1


# -- argument plumbing ----------------------------------------------------------


def _read_config(path: str) -> dict:
    out = {}
    with open(path) as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, _, val = line.partition("=")
            out[key.strip()] = val.strip()
    return out


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="k4sim",
                                 description="K4-free process simulator and verification lab")
    ap.add_argument("command", choices=["simulate", "sweep", "track", "dem-check",
                                        "density-check", "certify"])
    ap.add_argument("--n", dest="n", default=None, help="vertex count or comma list")
    ap.add_argument("--runs", type=int, default=None)
    ap.add_argument("--seed", type=int, default=None, help="master seed")
    ap.add_argument("--mode", choices=["paper", "desk"], default=None)
    ap.add_argument("--epsilon", type=float, default=None)
    ap.add_argument("--W", type=float, default=None)
    ap.add_argument("--mu", type=float, default=None)
    ap.add_argument("--stop", default=None, help="termination | steps=K | t=X")
    ap.add_argument("--out", default=None)
    ap.add_argument("--format", choices=["csv", "json", "edges"], default=None)
    ap.add_argument("--sigma", default=None, help="auto | path to JSON configuration")
    ap.add_argument("--subset-samples", type=int, default=None)
    ap.add_argument("--pair-samples", type=int, default=None)
    ap.add_argument("--check-interval", type=int, default=None)
    ap.add_argument("--workers", type=int, default=None)
    ap.add_argument("--config", default=None, help="flat key=value defaults file")
    return ap


_DEFAULTS = {
    "n": "256", "runs": 1, "seed": 0, "mode": "desk", "stop": "termination",
    "format": "json", "sigma": "auto", "subset_samples": 200,
    "pair_samples": 64, "check_interval": None, "workers": 1,
}

_CASTS = {"runs": int, "seed": int, "subset_samples": int, "pair_samples": int,
          "check_interval": int, "workers": int, "epsilon": float, "W": float,
          "mu": float}


def resolve_args(argv: Sequence[str]) -> argparse.Namespace:
    args = build_parser().parse_args(argv)
    cfg = _read_config(args.config) if args.config else {}
    for key, default in _DEFAULTS.items():
        if getattr(args, key, None) is None:
            raw = cfg.get(key.replace("_", "-"), cfg.get(key, default))
            if raw is not None and key in _CASTS and not isinstance(raw, int):
                raw = _CASTS[key](raw)
            setattr(args, key, raw)
    for key in ("epsilon", "W", "mu"):
        if getattr(args, key) is None and key in cfg:
            setattr(args, key, float(cfg[key]))
    args.n_list = [int(x) for x in str(args.n).split(",") if x]
    if not args.n_list or any(x < 2 for x in args.n_list):
        raise ValueError("--n must list integers >= 2")
    if args.runs < 1:
        raise ValueError("--runs must be >= 1")
    return args


def main(argv: Optional[Sequence[str]] = None) -> int:
    try:
        args = resolve_args(sys.argv[1:] if argv is None else list(argv))
        overrides = {k: v for k, v in
                     (("epsilon", args.epsilon), ("W", args.W), ("mu", args.mu))
                     if v is not None}
        handler = {
            "simulate": cmd_simulate,
            "sweep": cmd_sweep,
            "track": cmd_track,
            "dem-check": cmd_dem_check,
            "density-check": cmd_density_check,
            "certify": cmd_certify,
        }[args.command]
        return handler(args, overrides)
    except (ValueError, OSError, json.JSONDecodeError) as exc:
        print(f"k4sim: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    raise SystemExit(main())
