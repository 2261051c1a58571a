"""Command line entry point: ``csrsim run | report | tune | sweep-d``."""

from __future__ import annotations

import argparse
import csv
import json
import logging
import sys
from pathlib import Path

import numpy as np
import yaml

from . import __version__
from .bandits import ALGORITHMS
from .channel import ChannelParams, McsTable
from .config import build_experiments, hyperparams_for, load_config
from .experiment import (ConfigError, aggregate, emit, fairness_report, read_trace,
                         run_experiment, tune, write_fairness, write_summary, write_trace,
                         write_tuning_report)
from .scenarios import RandomScenarioSpec, square_scenario
from .scheduler import oracle_best
from .txop import TxopConfig

log = logging.getLogger("csrsim")


def _write_policy(out: Path, cfg, traces, ci_level, smoothing) -> dict:
    pdir = out / cfg.name
    for tr in traces:
        write_trace(tr, pdir / f"trace_{tr.seed}.csv")
    if len(traces) >= 2:
        emit(aggregate(traces, ci_level, smoothing), pdir / "aggregate.csv")
    else:
        log.warning("%s: one seed only, aggregate.csv skipped", cfg.name)
    shares, ideal = fairness_report(traces)
    write_fairness(shares, ideal, pdir / "fairness.csv")
    return {
        "scheduler": cfg.scheduler,
        "algorithm": cfg.algorithm,
        "hyperparams": cfg.theta.to_dict() if cfg.scheduler in ("hierarchical", "flat") else None,
        "seeds": list(cfg.seeds),
        "n_stations": {str(tr.seed): tr.n_stations for tr in traces},
        "scenario": traces[0].scenario,
        "tau": cfg.txop.duration,
        "total_txops": len(traces[0]),
    }


def _summary_row(name, meta, traces):
    return {"policy": name, "scheduler": meta["scheduler"], "algorithm": meta["algorithm"],
            "mean_rate_bps": float(np.mean([t.rates.mean() for t in traces]))}


def cmd_run(args) -> int:
    overrides = {}
    if args.seeds is not None:
        overrides["seeds"] = args.seeds
    if args.seed_list:
        overrides["seeds"] = [int(s) for s in args.seed_list.split(",")]
    doc = load_config(args.config, overrides)
    configs = build_experiments(doc)
    out = Path(args.out)
    ci, smooth = float(doc.get("ci_level", 0.99)), doc.get("smoothing_window")
    meta = {"version": __version__, "ci_level": ci, "smoothing_window": smooth, "policies": {}}
    rows = []
    for cfg in configs:
        log.info("running %s on %d seed(s)", cfg.name, len(cfg.seeds))
        traces = run_experiment(cfg, jobs=args.jobs)
        meta["policies"][cfg.name] = _write_policy(out, cfg, traces, ci, smooth)
        rows.append(_summary_row(cfg.name, meta["policies"][cfg.name], traces))
    write_summary(rows, out / "summary.csv")
    (out / "run_meta.json").write_text(json.dumps(meta, indent=2, sort_keys=True) + "\n")
    for r in rows:
        print(f"{r['policy']:<24} {r['mean_rate_bps'] / 1e6:8.2f} Mb/s")
    return 0


def _load_run(run_dir: Path):
    meta = json.loads((run_dir / "run_meta.json").read_text())
    for name, pm in meta["policies"].items():
        traces = [read_trace(run_dir / name / f"trace_{s}.csv", s, pm["n_stations"][str(s)],
                             pm["tau"], name, pm["scenario"]) for s in pm["seeds"]]
        yield name, pm, traces


def cmd_report(args) -> int:
    out = Path(args.out)
    per_policy: dict[str, list] = {}
    kinds = {}
    for run in map(Path, args.runs):
        meta = json.loads((run / "run_meta.json").read_text())
        ci = args.ci_level if args.ci_level is not None else meta.get("ci_level", 0.99)
        smooth = args.smoothing if args.smoothing is not None else meta.get("smoothing_window")
        for name, pm, traces in _load_run(run):
            pdir = out / run.name / name
            if len(traces) >= 2:
                emit(aggregate(traces, ci, smooth), pdir / "aggregate.csv")
            shares, ideal = fairness_report(traces)
            write_fairness(shares, ideal, pdir / "fairness.csv")
            per_policy.setdefault(name, []).append(np.mean([t.rates.mean() for t in traces]))
            kinds[name] = (pm["scheduler"], pm["algorithm"])
    rows = [{"policy": n, "scheduler": kinds[n][0], "algorithm": kinds[n][1],
             "mean_rate_bps": float(np.mean(v))} for n, v in per_policy.items()]
    write_summary(rows, out / "summary.csv")
    for r in rows:
        print(f"{r['policy']:<24} {r['mean_rate_bps'] / 1e6:8.2f} Mb/s over {len(per_policy[r['policy']])} run(s)")
    return 0


def cmd_tune(args) -> int:
    doc = load_config(args.config)
    channel = ChannelParams(**doc["channel"])
    txop = TxopConfig(**doc["txop"])
    table = McsTable.load(doc.get("mcs_table"))
    spec = RandomScenarioSpec(total_txops=args.txops, repositions=args.repositions)
    algos = ALGORITHMS if args.algo == "all" else (args.algo,)
    rng = np.random.default_rng(args.seed)
    results = {}
    for algo in algos:
        base = hyperparams_for(doc, args.scheduler, algo)
        best, trials = tune(algo, args.budget, rng, scheduler=args.scheduler, spec=spec,
                            eval_seeds=range(1000, 1000 + args.eval_seeds), base=base,
                            channel=channel, txop=txop, table=table)
        results[algo] = (best, trials)
        score = max(s for _, s in trials)
        print(f"{algo:<8} {score / 1e6:8.2f} Mb/s  {best.to_dict()}")
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    write_tuning_report(results, out / "tuning_report.csv")
    section = "hyperparams" if args.scheduler == "hierarchical" else "flat_hyperparams"
    tuned = {section: {a: {k: v for k, v in b.to_dict().items()
                           if k not in ("kind", "reward_scale")}
                       for a, (b, _) in results.items()}}
    (out / "tuned.yaml").write_text(yaml.safe_dump(tuned, sort_keys=True))
    return 0


def cmd_sweep(args) -> int:
    doc = load_config(args.config)
    channel = ChannelParams(**doc["channel"])
    txop = TxopConfig(**doc["txop"])
    table = McsTable.load(doc.get("mcs_table"))
    offset = float(doc["scenario"].get("station_offset", 2.0))
    ds = np.arange(args.d_min, args.d_max + args.step / 2, args.step)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "sweep_d.csv", "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(("d", "k", "mean_rate_bps", "best_k"))
        for d in ds:
            topo = square_scenario(float(d), offset)
            # same seed at every d keeps the curves comparable across d
            best, curve = oracle_best(topo, channel, table, txop, args.samples,
                                      np.random.default_rng(args.seed))
            for k, rate in curve.items():
                w.writerow((repr(float(d)), k, repr(rate), best))
            print(f"d={d:6.2f}  k*={best}  " + "  ".join(
                f"k{k}={r / 1e6:7.2f}" for k, r in curve.items()))
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="csrsim", description=__doc__)
    ap.add_argument("-v", "--verbose", action="store_true")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("run", help="run every configured policy over the seeds")
    p.add_argument("--config", type=Path)
    g = p.add_mutually_exclusive_group()
    g.add_argument("--seeds", type=int, help="use seeds 0..N-1")
    g.add_argument("--seed-list", help="comma-separated seeds")
    p.add_argument("--out", required=True, type=Path)
    p.add_argument("--jobs", type=int, default=1, help="worker processes for the seeds")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("report", help="re-aggregate traces from earlier runs")
    p.add_argument("--runs", nargs="+", required=True, type=Path)
    p.add_argument("--out", required=True, type=Path)
    p.add_argument("--ci-level", type=float)
    p.add_argument("--smoothing", type=int)
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("tune", help="random search over bandit hyperparameters")
    p.add_argument("--budget", type=int, required=True)
    p.add_argument("--algo", choices=ALGORITHMS + ("all",), default="all")
    p.add_argument("--scheduler", choices=("hierarchical", "flat"), default="hierarchical")
    p.add_argument("--config", type=Path)
    p.add_argument("--out", type=Path, default=Path("tuning"))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--eval-seeds", type=int, default=8)
    p.add_argument("--txops", type=int, default=1000)
    p.add_argument("--repositions", type=int, default=3)
    p.set_defaults(func=cmd_tune)

    p = sub.add_parser("sweep-d", help="best static transmitter count versus square side")
    p.add_argument("--d-min", type=float, default=5.0)
    p.add_argument("--d-max", type=float, default=40.0)
    p.add_argument("--step", type=float, default=1.0)
    p.add_argument("--samples", type=int, default=2000)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--config", type=Path)
    p.add_argument("--out", type=Path, default=Path("sweep"))
    p.set_defaults(func=cmd_sweep)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(message)s")
    try:
        return args.func(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
