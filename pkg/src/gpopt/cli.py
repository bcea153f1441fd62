"""Command line entry point ``gpopt``.

    gpopt run --config FILE --out DIR
    gpopt bench --suite paper --out DIR
    gpopt diagnose --suite bounds --out DIR

``--seed``, ``--trials`` and ``--horizon`` override the corresponding
settings. Exit status: 0 on success, 1 on a configuration or input error,
2 when a numerical failure occurred (failed trials are still written).
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

import numpy as np

from . import diagnostics as dg
from .config import load_config
from .errors import ConfigError, InputError, NumericalError
from .harness import (ExperimentConfig, aggregate, fmt, run_experiment, with_overrides,
                      write_aggregates, write_traces)
from .objectives import TASKS

logger = logging.getLogger("gpopt")

BENCH_POLICIES = ("gpmi", "gpucb", "ei")
EXIT_OK, EXIT_CONFIG, EXIT_NUMERICAL = 0, 1, 2


def _write_json(obj, path: Path):
    path.write_text(json.dumps(obj, indent=2, sort_keys=True, default=_jsonable) + "\n",
                    encoding="utf-8")


def _jsonable(v):
    if isinstance(v, np.generic):
        return v.item()
    if isinstance(v, np.ndarray):
        return v.tolist()
    raise TypeError(f"cannot serialize {type(v).__name__}")


def _write_rows(path: Path, header, rows):
    with path.open("w", encoding="utf-8") as fh:
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(fmt(v) for v in row) + "\n")


def _overrides(args):
    return {"master_seed": args.seed, "trials": args.trials, "horizon": args.horizon}


def _run_all(configs):
    """Run each config; return (results, aggregate tables, failed trial count)."""
    results, tables, failed = [], [], 0
    for cfg in configs:
        logger.info("running %s / %s (%d trials, T=%d)", cfg.objective, cfg.policy,
                    cfg.trials, cfg.horizon)
        result = run_experiment(cfg)
        results.append(result)
        failed += len(result.failures)
        good = [t for t in result.traces if not t.failed]
        if len(good) >= 2 and cfg.horizon > 0:
            tables.append(aggregate(good))
    return results, tables, failed


def cmd_run(args) -> int:
    configs = [with_overrides(c, **_overrides(args)) for c in load_config(args.config)]
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    results, tables, failed = _run_all(configs)
    write_traces([tr for r in results for tr in r.traces], out / "traces.csv",
                 results[0].objective.dim)
    write_aggregates(tables, out / "aggregate.csv")
    _write_json({"runs": [r.manifest() for r in results], "failed_trials": failed},
                out / "manifest.json")
    return EXIT_NUMERICAL if failed else EXIT_OK


def cmd_bench(args) -> int:
    if args.suite != "paper":
        raise ConfigError(f"unknown bench suite {args.suite!r}")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    tasks = args.tasks.split(",") if args.tasks else list(TASKS)
    manifests, tables, failed = [], [], 0
    for task in tasks:
        configs = [with_overrides(ExperimentConfig(objective=task, policy=p),
                                  **_overrides(args)) for p in BENCH_POLICIES]
        results, task_tables, task_failed = _run_all(configs)
        write_traces([tr for r in results for tr in r.traces], out / f"traces_{task}.csv",
                     results[0].objective.dim)
        manifests += [r.manifest() for r in results]
        tables += task_tables
        failed += task_failed
    write_aggregates(tables, out / "aggregate.csv")
    _write_json({"suite": "paper", "policies": list(BENCH_POLICIES), "tasks": tasks,
                 "runs": manifests, "failed_trials": failed}, out / "manifest.json")
    return EXIT_NUMERICAL if failed else EXIT_OK


# -- diagnose ------------------------------------------------------------
def diagnose_bounds(out: Path, seed: int = 0, trials: int | None = None,
                    horizon: int | None = None) -> dict:
    """Run the bound checks, write one CSV per check, return the summary.

    ``trials`` scales the Monte Carlo checks (default sizes otherwise) and
    ``horizon`` sets the length of the per-trace checks.
    """
    out.mkdir(parents=True, exist_ok=True)
    summary = {"seed": seed, "checks": {}}
    checks = summary["checks"]
    kernel, noise = dg.BOUNDS_KERNEL, dg.BOUNDS_NOISE_VAR

    # per-trace identities on generated GP draws with the true kernel
    cfg = ExperimentConfig(objective="generated_gp_d2", policy="gpmi",
                           trials=trials or 50, horizon=horizon or 100, master_seed=seed)
    result = run_experiment(cfg)
    rows = []
    for tr in result.traces:
        if tr.failed:
            continue
        rows.append([tr.trial, dg.check_bonus_telescoping(tr, tr.alpha),
                     dg.check_exploration_bound(tr, tr.alpha),
                     dg.check_information_bound(tr, result.kernel, result.noise_var)])
    _write_rows(out / "trace_checks.csv",
                ["trial", "telescoping_deviation", "exploration_slack", "information_slack"], rows)
    arr = np.array([r[1:] for r in rows]).reshape(-1, 3)
    checks["bonus_telescoping"] = {"max_deviation": float(arr[:, 0].max(initial=0.0)),
                              "passed": bool(np.all(arr[:, 0] <= 1e-8))}
    checks["exploration_bound"] = {"min_slack": float(arr[:, 1].min(initial=np.inf)),
                        "passed": bool(np.all(arr[:, 1] >= -1e-8))}
    checks["information_bound"] = {"min_slack": float(arr[:, 2].min(initial=np.inf)),
                     "passed": bool(np.all(arr[:, 2] >= -1e-8))}
    checks["trace_failures"] = len(result.failures)

    # standardized regret residuals, with the prior-covariance ablation
    n1 = trials * 80 if trials else dg.RESIDUAL_TRIALS
    post = dg.check_regret_residuals(kernel, noise, n1, dg.RESIDUAL_HORIZON, seed)
    abl = dg.check_regret_residuals(kernel, noise, n1, dg.RESIDUAL_HORIZON, seed,
                                    prior_cross=True)
    _write_rows(out / "regret_residuals.csv", ["cross_covariance", "mean", "variance", "n",
                                               "excluded"],
                [["posterior", post.mean, post.variance, post.n, post.excluded],
                 ["prior", abl.mean, abl.variance, abl.n, abl.excluded]])
    checks["residuals"] = {"mean": post.mean, "variance": post.variance, "n": post.n,
                        "ablation_variance": abl.variance,
                        "passed": bool(post.n >= 5000 and abs(post.mean) <= 0.05
                                       and 0.9 <= post.variance <= 1.1)}

    # high-probability regret bound in both observation settings
    for setting in dg.SETTINGS:
        rep = dg.check_regret_bound(setting, kernel, noise, 0.05, trials or 200, 50, seed)
        _write_rows(out / f"regret_bound_{setting}.csv",
                    ["trial", "cum_regret", "bound", "gamma_proxy", "generic_bound",
                     "gamma_hat", "violated"],
                    [[p["trial"], p["cum_regret"], p["bound"], p["gamma_proxy"],
                      p["generic_bound"], p["gamma_hat"], int(p["violated"])]
                     for p in rep.per_trial])
        checks[f"regret_bound_{setting}"] = {
            "violation_rate": rep.violation_rate, "allowed_rate": rep.allowed_rate,
            "gated": rep.gated, "passed": rep.passed,
            "greedy_gamma_upper": rep.greedy_gamma_upper}

    # growth of cumulative regret with the horizon
    g = dg.check_regret_growth(trials=trials or dg.GROWTH_TRIALS, seed=seed)
    _write_rows(out / "growth.csv", ["T", *g.mean_regret],
                [[T, *(g.mean_regret[p][j] for p in g.mean_regret)]
                 for j, T in enumerate(g.horizons)])
    fixed_le_ucb = g.mean_regret["fixedphi"][-1] <= g.mean_regret["gpucb"][-1]
    checks["growth"] = {"log_model_residual": g.log_model_residual,
                        "sqrt_model_residual": g.sqrt_model_residual,
                        "prefers_log_model": g.prefers_log_model,
                        "fixedphi_le_gpucb": fixed_le_ucb,
                        "passed": bool(g.prefers_log_model and fixed_le_ucb)}

    # overconfidence exemplar replay
    rep = dg.replay_overconfidence(dg.OVERCONFIDENCE_SEED)
    _write_rows(out / "overconfidence.csv",
                ["policy", "initial_regret", "final_regret", "min_regret", "final_bonus",
                 "value_range", "cum_regret"],
                [[k, *(rep[k][c] for c in ("initial_regret", "final_regret", "min_regret",
                                           "final_bonus", "value_range", "cum_regret"))]
                 for k in ("gpmi", "gpucb")])
    checks["overconfidence"] = {"seed": dg.OVERCONFIDENCE_SEED,
                                "gpmi_stalled": dg.is_stalled(rep["gpmi"]),
                                "gpucb_bonus_larger":
                                    rep["gpucb"]["final_bonus"] > rep["gpmi"]["final_bonus"],
                                "passed": bool(dg.is_stalled(rep["gpmi"]) and
                                               rep["gpucb"]["final_bonus"]
                                               > rep["gpmi"]["final_bonus"])}
    gated = [v["passed"] for v in checks.values()
             if isinstance(v, dict) and v.get("passed") is not None]
    summary["all_passed"] = bool(all(gated))
    _write_json(summary, out / "summary.json")
    return summary


def cmd_diagnose(args) -> int:
    if args.suite != "bounds":
        raise ConfigError(f"unknown diagnose suite {args.suite!r}")
    summary = diagnose_bounds(Path(args.out), args.seed or 0, args.trials, args.horizon)
    for name, v in summary["checks"].items():
        if isinstance(v, dict):
            state = {True: "pass", False: "FAIL", None: "report"}[v.get("passed")]
            print(f"{name}: {state}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="gpopt", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--out", required=True, help="output directory")
        p.add_argument("--seed", type=int, help="master seed override")
        p.add_argument("--trials", type=int, help="number of trials override")
        p.add_argument("--horizon", type=int, help="horizon T override")

    p = sub.add_parser("run", help="run the experiments of one config file")
    p.add_argument("--config", required=True)
    common(p)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("bench", help="all benchmark tasks x {gpmi, gpucb, ei}")
    p.add_argument("--suite", default="paper", help="benchmark suite (only 'paper')")
    p.add_argument("--tasks", help="comma-separated subset of tasks")
    common(p)
    p.set_defaults(func=cmd_bench)

    p = sub.add_parser("diagnose", help="empirical checks of the regret analysis")
    p.add_argument("--suite", default="bounds", help="diagnostic suite (only 'bounds')")
    common(p)
    p.set_defaults(func=cmd_diagnose)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    for name in ("trials", "horizon"):
        v = getattr(args, name, None)
        if v is not None and v < (1 if name == "trials" else 0):
            print(f"gpopt: --{name} out of range: {v}", file=sys.stderr)
            return EXIT_CONFIG
    try:
        return args.func(args)
    except (ConfigError, InputError) as exc:
        print(f"gpopt: configuration error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except NumericalError as exc:
        print(f"gpopt: numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
