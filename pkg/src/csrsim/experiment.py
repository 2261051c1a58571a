"""Multi-seed experiment runner, aggregation, fairness and random-search tuning."""

from __future__ import annotations

import csv
import logging
import math
import zlib
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Callable, Sequence

import numpy as np
from scipy import stats

from .bandits import Hyperparams
from .channel import ChannelParams, LinkBudget, McsTable
from .scenarios import RandomScenarioSpec, ScenarioScript, random_scenario
from .scheduler import (FlatScheduler, HierarchicalScheduler, SingleTx, StaticK,
                        draw_p0, _square_corners)
from .txop import TxopConfig, max_effective_rate, simulate_txop

log = logging.getLogger(__name__)

SCHEDULERS = ("hierarchical", "flat", "single", "static")
STREAMS = ("scenario", "access", "channel", "binomial", "agents")

# Reference average effective rates (Mb/s) over the three square scenarios;
# summary.csv lists them beside the simulated values.
REFERENCE_MBPS = {
    ("hierarchical", "egreedy"): 251.8,
    ("hierarchical", "softmax"): 235.6,
    ("hierarchical", "ucb"): 268.0,
    ("hierarchical", "ts"): 238.8,
    ("flat", "best"): 204.5,
}


class ConfigError(ValueError):
    pass


def stream(seed: int, name: str) -> np.random.Generator:
    """Named sub-stream of a master seed.

    The stream key is the CRC-32 of the name, so streams never depend on
    which other consumers exist or the order they are created in.
    """
    ss = np.random.SeedSequence(entropy=int(seed), spawn_key=(zlib.crc32(name.encode()),))
    return np.random.Generator(np.random.PCG64(ss))


@dataclass
class ExperimentConfig:
    script: ScenarioScript | None = None
    random_spec: RandomScenarioSpec | None = None
    scheduler: str = "hierarchical"
    theta: Hyperparams = field(default_factory=Hyperparams)
    static_k: int = 1
    channel: ChannelParams = field(default_factory=ChannelParams)
    txop: TxopConfig = field(default_factory=TxopConfig)
    table: McsTable = field(default_factory=McsTable.load)
    seeds: Sequence[int] = (0,)
    label: str = ""

    @property
    def total_txops(self) -> int:
        return self.script.total if self.script is not None else self.random_spec.total_txops

    @property
    def algorithm(self) -> str:
        return self.theta.kind if self.scheduler in ("hierarchical", "flat") else "-"

    @property
    def name(self) -> str:
        if self.label:
            return self.label
        if self.scheduler == "static":
            return f"static{self.static_k}"
        if self.scheduler == "single":
            return "single"
        return f"{self.scheduler}_{self.theta.kind}"

    def check(self) -> None:
        """Raise ConfigError describing the first problem found."""
        if (self.script is None) == (self.random_spec is None):
            raise ConfigError("exactly one of a scenario script or a random spec is required")
        if self.scheduler not in SCHEDULERS:
            raise ConfigError(f"unknown scheduler {self.scheduler!r}; expected one of {SCHEDULERS}")
        if len(self.seeds) < 1:
            raise ConfigError("at least one seed is required")
        if len(set(self.seeds)) != len(self.seeds):
            raise ConfigError("seeds must be distinct")
        if self.total_txops <= 0:
            raise ConfigError("TXOP count must be positive")
        key = (self.txop.mcs, self.txop.width, self.txop.streams, self.txop.gi)
        if key not in self.table.rates:
            raise ConfigError(f"MCS table has no entry for {key}")
        if self.scheduler == "static":
            if self.script is None:
                raise ConfigError("the static scheduler needs the square scenario")
            try:
                for topo in [self.script.initial] + [t for _, t in self.script.events]:
                    _square_corners(topo)
            except ValueError as exc:
                raise ConfigError(str(exc)) from None
            if not 1 <= self.static_k <= 4:
                raise ConfigError("static_k must lie in 1..4")


@dataclass
class RunTrace:
    seed: int
    rates: np.ndarray  # bits/s per TXOP
    pairs: list[tuple]  # transmitting (ap, station) pairs per TXOP
    n_stations: int
    scenario: str = ""
    policy: str = ""
    tau: float = TxopConfig.duration

    def __len__(self):
        return len(self.rates)

    def participation(self) -> dict[int, int]:
        counts: dict[int, int] = {}
        for tset in self.pairs:
            for _, sta in tset:
                counts[sta] = counts.get(sta, 0) + 1
        return counts


def make_policy(cfg: ExperimentConfig, topo, theta: Hyperparams):
    if cfg.scheduler == "hierarchical":
        return HierarchicalScheduler(topo, theta)
    if cfg.scheduler == "flat":
        return FlatScheduler(topo, theta)
    if cfg.scheduler == "single":
        return SingleTx()
    return StaticK(topo, cfg.static_k)


def run_one(cfg: ExperimentConfig, seed: int) -> RunTrace:
    rngs = {name: stream(seed, name) for name in STREAMS}
    script = cfg.script or random_scenario(cfg.random_spec, rngs["scenario"])
    theta = cfg.theta.with_scale(max_effective_rate(cfg.table, cfg.txop))
    topo = script.initial
    budget = LinkBudget(topo, cfg.channel)
    policy = make_policy(cfg, topo, theta)
    events = dict(script.events)
    total = script.total
    rates = np.empty(total)
    pairs = []
    access, agents = rngs["access"], rngs["agents"]
    noise, binom = rngs["channel"], rngs["binomial"]
    for t in range(total):
        if t in events:
            topo = events[t]
            budget = LinkBudget(topo, cfg.channel)
            policy.relocate(topo)
        p0 = draw_p0(topo, access)
        tset, decision = policy.select(p0, agents)
        res = simulate_txop(tset, topo, cfg.channel, cfg.table, cfg.txop,
                            binom, noise_rng=noise, budget=budget)
        policy.update(decision, res.effective_rate)
        rates[t] = res.effective_rate
        pairs.append(tuple(tset.ordered()))
    return RunTrace(seed, rates, pairs, len(topo.station_ids), script.name, cfg.name,
                    cfg.txop.duration)


def run_experiment(cfg: ExperimentConfig, jobs: int = 1) -> list[RunTrace]:
    """Run every seed; with jobs > 1 seeds are spread over worker processes.

    Each seed owns its random streams and agents, so the traces (returned in
    seed-list order) are identical for any worker count.
    """
    cfg.check()
    if jobs > 1 and len(cfg.seeds) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            return list(pool.map(run_one, [cfg] * len(cfg.seeds), cfg.seeds))
    traces = []
    for seed in cfg.seeds:
        log.debug("%s seed %s", cfg.name, seed)
        traces.append(run_one(cfg, seed))
    return traces


@dataclass
class Aggregate:
    mean: np.ndarray
    half_width: np.ndarray
    overall_mean: float
    ci_level: float = 0.99
    smoothing: int | None = None
    n_runs: int = 0
    tau: float = TxopConfig.duration

    @property
    def ci_lo(self):
        return self.mean - self.half_width

    @property
    def ci_hi(self):
        return self.mean + self.half_width


def moving_average(x: np.ndarray, window: int) -> np.ndarray:
    """Trailing mean over the last `window` samples (fewer at the start)."""
    x = np.asarray(x, dtype=float)
    if window is None or window <= 1:
        return x.copy()
    c = np.cumsum(np.concatenate(([0.0], x)))
    n = np.arange(1, len(x) + 1)
    lo = np.maximum(n - window, 0)
    return (c[n] - c[lo]) / (n - lo)


def _column_stats(data: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    # sorted along seeds: results do not depend on seed order
    data = np.sort(data, axis=0)
    base = data[0]
    dev = data - base
    mean = base + dev.mean(axis=0)
    sd = (data - mean).std(axis=0, ddof=1)
    sd[np.ptp(data, axis=0) == 0] = 0.0
    return mean, sd


def aggregate(traces: Sequence[RunTrace], ci_level: float = 0.99,
              smoothing: int | None = None) -> Aggregate:
    """Per-TXOP mean over seeds with a Student-t confidence band.

    Smoothing, if any, is applied to each trace before the band is formed;
    `overall_mean` is always computed from the unsmoothed per-TXOP means.
    """
    if len(traces) < 2:
        raise ValueError("aggregation needs at least two traces")
    lengths = {len(t) for t in traces}
    if len(lengths) != 1:
        raise ValueError(f"traces differ in length: {sorted(lengths)}")
    if not 0 < ci_level < 1:
        raise ValueError("ci_level must lie in (0, 1)")
    raw = np.vstack([t.rates for t in traces])
    n = raw.shape[0]
    raw_mean, _ = _column_stats(raw)
    data = raw if not smoothing or smoothing <= 1 else np.vstack(
        [moving_average(r, smoothing) for r in raw])
    mean, sd = _column_stats(data)
    half = stats.t.ppf(0.5 + ci_level / 2.0, n - 1) * sd / math.sqrt(n)
    overall = float(np.sort(raw_mean).mean()) if raw_mean.size else float("nan")
    return Aggregate(mean, half, overall, ci_level, smoothing, n, traces[0].tau)


def window_mean(traces: Sequence[RunTrace], start: int, stop: int) -> float:
    """Mean rate over TXOPs [start, stop) across all traces."""
    return float(np.mean([t.rates[start:stop].mean() for t in traces]))


def fairness_report(traces: Sequence[RunTrace]) -> tuple[dict[int, float], float]:
    """Per-station mean share of TXOPs in which it received, and the ideal
    single-transmission share 1/(number of stations)."""
    shares: dict[int, list[float]] = {}
    for tr in traces:
        counts = tr.participation()
        for sta in range(tr.n_stations):
            shares.setdefault(sta, []).append(counts.get(sta, 0) / len(tr))
    ideal = float(np.mean([1.0 / tr.n_stations for tr in traces]))
    return {s: float(np.mean(v)) for s, v in sorted(shares.items())}, ideal


# ---------------------------------------------------------------- CSV output

AGGREGATE_COLUMNS = ("txop", "sim_time_s", "mean_rate", "ci_lo", "ci_hi")
TRACE_COLUMNS = ("txop", "sim_time_s", "rate_bps", "pairs")


def _writer(path: Path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fh = open(path, "w", newline="")
    return fh, csv.writer(fh, lineterminator="\n")


def emit(agg: Aggregate, path, fmt: str = "csv") -> None:
    """Write the per-TXOP band; floats use repr so they read back exactly."""
    if fmt != "csv":
        raise ValueError(f"unsupported format {fmt!r}")
    fh, w = _writer(path)
    with fh:
        w.writerow(AGGREGATE_COLUMNS)
        lo, hi = agg.ci_lo, agg.ci_hi
        for t in range(len(agg.mean)):
            w.writerow((t, repr(t * agg.tau), repr(float(agg.mean[t])),
                        repr(float(lo[t])), repr(float(hi[t]))))


def read_aggregate(path) -> dict[str, np.ndarray]:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    out = {c: np.array([float(r[c]) for r in rows]) for c in AGGREGATE_COLUMNS}
    out["txop"] = out["txop"].astype(int)
    return out


def write_trace(trace: RunTrace, path) -> None:
    fh, w = _writer(path)
    with fh:
        w.writerow(TRACE_COLUMNS)
        for t, (rate, tset) in enumerate(zip(trace.rates, trace.pairs)):
            w.writerow((t, repr(t * trace.tau), repr(float(rate)),
                        ";".join(f"{a}:{s}" for a, s in tset)))


def read_trace(path, seed: int, n_stations: int, tau: float, policy="", scenario="") -> RunTrace:
    rates, pairs = [], []
    with open(path, newline="") as fh:
        for row in csv.DictReader(fh):
            rates.append(float(row["rate_bps"]))
            pairs.append(tuple(tuple(int(v) for v in p.split(":"))
                               for p in row["pairs"].split(";") if p))
    return RunTrace(seed, np.array(rates), pairs, n_stations, scenario, policy, tau)


def write_fairness(shares: dict[int, float], ideal: float, path) -> None:
    fh, w = _writer(path)
    with fh:
        w.writerow(("station", "share", "ideal_single_share"))
        for sta, share in shares.items():
            w.writerow((sta, repr(share), repr(ideal)))


def write_summary(rows: list[dict], path) -> None:
    """rows: dicts with policy, scheduler, algorithm, mean_rate_bps."""
    best_flat = max((r["mean_rate_bps"] for r in rows if r["scheduler"] == "flat"), default=None)
    fh, w = _writer(path)
    with fh:
        w.writerow(("policy", "scheduler", "algorithm", "mean_rate_mbps", "reference_mbps"))
        for r in rows:
            ref = REFERENCE_MBPS.get((r["scheduler"], r["algorithm"]), "")
            w.writerow((r["policy"], r["scheduler"], r["algorithm"],
                        repr(r["mean_rate_bps"] / 1e6), ref))
        if best_flat is not None:
            w.writerow(("best_flat", "flat", "best", repr(best_flat / 1e6),
                        REFERENCE_MBPS[("flat", "best")]))


# ------------------------------------------------------------------- tuning

SEARCH_SPACES = {
    "egreedy": {"epsilon": (0.0, 0.5), "epsilon_decay": (0.99, 1.0), "gamma": (0.9, 1.0)},
    "softmax": {"temperature": (0.005, 0.5, "log"), "gamma": (0.9, 1.0)},
    "ucb": {"ucb_c": (0.0, 1.0), "gamma": (0.9, 1.0)},
    "ts": {"ts_prior_var": (0.01, 10.0, "log"), "ts_obs_var": (0.001, 1.0, "log"),
           "gamma": (0.9, 1.0)},
}


def sample_params(space: dict, rng: np.random.Generator) -> dict:
    out = {}
    for name in sorted(space):
        rule = space[name]
        if not isinstance(rule, (tuple, list)):
            out[name] = rule
            continue
        lo, hi, *scale = rule
        if lo == hi:
            out[name] = float(lo)
        elif scale and scale[0] == "log":
            out[name] = float(math.exp(rng.uniform(math.log(lo), math.log(hi))))
        else:
            out[name] = float(rng.uniform(lo, hi))
    return out


def random_search(space: dict, budget: int, rng: np.random.Generator,
                  objective: Callable[[dict], float]) -> tuple[dict, list[tuple[dict, float]]]:
    """Plain random search; returns the best parameters and every trial."""
    if budget < 1:
        raise ValueError("budget must be at least 1")
    trials = []
    for _ in range(budget):
        params = sample_params(space, rng)
        trials.append((params, float(objective(params))))
    best = max(range(len(trials)), key=lambda i: (trials[i][1], -i))
    return trials[best][0], trials


def tune(algo: str, budget: int, rng: np.random.Generator, *, scheduler: str = "hierarchical",
         space: dict | None = None, spec: RandomScenarioSpec = RandomScenarioSpec(),
         eval_seeds: Sequence[int] = tuple(range(1000, 1008)),
         base: Hyperparams | None = None, channel: ChannelParams = ChannelParams(),
         txop: TxopConfig = TxopConfig(), table: McsTable | None = None):
    """Tune one algorithm's hyperparameters on random scenarios.

    Each candidate is scored by its mean effective rate over the random
    scenarios generated from the fixed `eval_seeds`.
    """
    table = table or McsTable.load()
    space = SEARCH_SPACES[algo] if space is None else space
    base = replace(base or Hyperparams(), kind=algo)

    def objective(params):
        theta = replace(base, **params)
        cfg = ExperimentConfig(random_spec=spec, scheduler=scheduler, theta=theta,
                               channel=channel, txop=txop, table=table, seeds=tuple(eval_seeds))
        return float(np.mean([tr.rates.mean() for tr in run_experiment(cfg)]))

    best, trials = random_search(space, budget, rng, objective)
    return replace(base, **best), trials


def write_tuning_report(results: dict[str, tuple[Hyperparams, list]], path) -> None:
    names = sorted({k for _, trials in results.values() for p, _ in trials for k in p})
    fh, w = _writer(path)
    with fh:
        w.writerow(("algorithm", "trial", *names, "mean_rate_bps", "best"))
        for algo, (best, trials) in results.items():
            best_d = best.to_dict()
            for i, (params, score) in enumerate(trials):
                is_best = all(best_d[k] == v for k, v in params.items())
                w.writerow((algo, i, *[repr(params[k]) if k in params else "" for k in names],
                            repr(score), int(is_best)))
