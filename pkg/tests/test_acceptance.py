"""End-to-end acceptance checks, one test per criterion.

The scenario runs (40 seeds each) are shared across tests through
session fixtures. Every test logs a PASS/FAIL line that is repeated in the
pytest terminal summary.
"""

import csv
import filecmp
import math
import time

import numpy as np
import pytest
import yaml
from scipy import stats

from csrsim.bandits import (EpsilonGreedy, Hyperparams, Softmax, ThompsonSampling, UCB,
                            argmax_random)
from csrsim.channel import ChannelParams, path_loss
from csrsim.cli import main
from csrsim.config import hyperparams_for, load_config
from csrsim.experiment import (ExperimentConfig, moving_average, run_experiment, window_mean,
                               write_summary)
from csrsim.network import Pair
from csrsim.scenarios import square_script
from csrsim.scheduler import FlatScheduler, HierarchicalScheduler
from csrsim.txop import TxopConfig, n_ampdu
from helpers import reachable, topology

SEEDS = list(range(40))
# side -> (TXOPs, relocation offset)
SCENARIOS = {10: (1000, None), 20: (2000, 3.0), 30: (6000, 4.0)}
FLAT_ALGOS = ("egreedy", "softmax", "ucb", "ts")

pytestmark = pytest.mark.slow


def _runs(scheduler, algo=None, doc=None):
    doc = doc or load_config()
    theta = hyperparams_for(doc, scheduler, algo) if algo else Hyperparams()
    out = {}
    for d, (total, move) in SCENARIOS.items():
        cfg = ExperimentConfig(script=square_script(d, total, move), scheduler=scheduler,
                               theta=theta, seeds=SEEDS)
        out[d] = run_experiment(cfg)
    return out


@pytest.fixture(scope="session")
def hierarchical_ucb():
    return _runs("hierarchical", "ucb")


@pytest.fixture(scope="session")
def single():
    return _runs("single")


@pytest.fixture(scope="session")
def flat():
    return {a: _runs("flat", a) for a in FLAT_ALGOS}


def mean_rate(traces):
    return float(np.mean([t.rates.mean() for t in traces]))


def test_c01_channel_values(record):
    a = path_loss(1.0, 0, ChannelParams(carrier_freq=2.4))
    b = path_loss(10.0, 0, ChannelParams())
    c = path_loss(20.0, 2, ChannelParams())
    ok = a == 40.05 and abs(b - 66.43) <= 0.01 and abs(c - 90.96) <= 0.01
    assert record(1, ok, f"PL(1,0)={a:.4f} PL(10,0)={b:.4f} PL(20,2)={c:.4f} dB")


def test_c02_ampdu(record):
    cfg = TxopConfig()
    n = n_ampdu(143.4e6, cfg)
    rate = n * cfg.subframe_bits / cfg.duration
    ok = n == 66 and abs(rate / 1e6 - 144.42) <= 0.01
    assert record(2, ok, f"n_ampdu={n} perfect single-link rate={rate / 1e6:.4f} Mb/s")


def test_c03_single_is_side_invariant(record):
    t0 = time.perf_counter()
    means = {}
    for d in SCENARIOS:
        cfg = ExperimentConfig(script=square_script(d, 2000), scheduler="single", seeds=SEEDS)
        means[d] = mean_rate(run_experiment(cfg))
    spread = (max(means.values()) - min(means.values())) / min(means.values())
    elapsed = time.perf_counter() - t0
    detail = " ".join(f"d={d}:{m / 1e6:.3f}" for d, m in means.items())
    assert record(3, spread < 0.02, f"{detail} Mb/s, spread {spread:.4%}, {elapsed:.0f} s")


def test_c04_sweep(record, tmp_path):
    t0 = time.perf_counter()
    assert main(["sweep-d", "--d-min", "5", "--d-max", "40", "--step", "1",
                 "--samples", "2000", "--out", str(tmp_path)]) == 0
    elapsed = time.perf_counter() - t0
    best = {}
    with open(tmp_path / "sweep_d.csv") as fh:
        for row in csv.DictReader(fh):
            best[float(row["d"])] = int(row["best_k"])
    ks = [best[d] for d in sorted(best)]
    monotone = all(b >= a for a, b in zip(ks, ks[1:]))
    ok = monotone and best[10.0] == 1 and best[30.0] >= 3 and elapsed < 300
    steps = [f"{d:g}->{best[d]}" for d in sorted(best)
             if d == min(best) or best[d] != best.get(d - 1)]
    assert record(4, ok, f"k*(10)={best[10.0]} k*(30)={best[30.0]} monotone={monotone} "
                         f"changes at {' '.join(steps)}, {elapsed:.0f} s")


def test_c05_converges_at_d10(record, hierarchical_ucb, single):
    h = window_mean(hierarchical_ucb[10], 300, 500)
    s = mean_rate(single[10])
    ratio = h / s
    assert record(5, abs(ratio - 1.0) <= 0.10,
                  f"hierarchical UCB TXOPs 300-500 {h / 1e6:.2f} Mb/s vs single {s / 1e6:.2f} "
                  f"Mb/s, ratio {ratio:.3f} (bound 0.90-1.10)")


def test_c06_gain_at_d20(record, hierarchical_ucb, single):
    total, _ = SCENARIOS[20]
    half = total // 2
    h = window_mean(hierarchical_ucb[20], half - half // 5, half)
    s = window_mean(single[20], 0, half)
    ratio = h / s
    assert record(6, ratio >= 1.3, f"steady state {h / 1e6:.2f} Mb/s vs single "
                                   f"{s / 1e6:.2f} Mb/s, ratio {ratio:.3f} (need >= 1.3)")


def test_c07_adapts_at_d30(record, hierarchical_ucb):
    traces = hierarchical_ucb[30]
    total, _ = SCENARIOS[30]
    move = total // 2
    mean = np.mean([t.rates for t in traces], axis=0)
    before = float(mean[move - (total - move) // 5:move].mean())
    steady = float(mean[total - total // 5:].mean())
    # smooth only post-move samples so the pre-move level cannot leak in
    post = moving_average(mean[move:], 50)
    low = int(np.argmin(post[:2000]))
    dropped = post[low] < before
    above = np.flatnonzero(post[low:] >= 0.9 * steady)
    recovery = low + int(above[0]) if above.size else None
    ok = dropped and recovery is not None and recovery < 2000
    assert record(7, ok, f"pre-move {before / 1e6:.1f}, post-move low {post[low] / 1e6:.1f} "
                         f"at +{low}, new steady state {steady / 1e6:.1f} Mb/s, "
                         f"back to 90% after {recovery} TXOPs (need < 2000)")


def test_c08_hierarchical_beats_flat(record, hierarchical_ucb, flat, tmp_path):
    h = float(np.mean([mean_rate(v) for v in hierarchical_ucb.values()]))
    per_flat = {a: float(np.mean([mean_rate(v) for v in runs.values()]))
                for a, runs in flat.items()}
    best_algo = max(per_flat, key=per_flat.get)
    rows = [{"policy": "hierarchical_ucb", "scheduler": "hierarchical", "algorithm": "ucb",
             "mean_rate_bps": h}]
    rows += [{"policy": f"flat_{a}", "scheduler": "flat", "algorithm": a, "mean_rate_bps": r}
             for a, r in per_flat.items()]
    write_summary(rows, tmp_path / "summary.csv")
    gain = h / per_flat[best_algo] - 1.0
    flats = " ".join(f"{a}:{r / 1e6:.1f}" for a, r in per_flat.items())
    assert record(8, gain >= 0.10, f"hierarchical UCB {h / 1e6:.1f} Mb/s vs flat [{flats}] "
                                   f"best {best_algo}, gain {gain:.1%} (need >= 10%)")


def _bandit_checks():
    failures = []
    rng = np.random.default_rng(2024)

    def chi2_ok(picks, k):
        return stats.chisquare(np.bincount(picks, minlength=k)).pvalue > 1e-3

    agent = UCB(6, Hyperparams(kind="ucb", ucb_c=0.5))
    sweep = []
    for _ in range(6):
        arm = agent.sample(rng)
        sweep.append(arm)
        agent.update(arm, float(rng.random()))
    if sorted(sweep) != list(range(6)):
        failures.append("UCB sweep")

    g = EpsilonGreedy(2, Hyperparams(kind="egreedy", epsilon=0.0))
    g.update(0, 0.2)
    g.update(1, 0.9)
    if any(g.sample(rng) != 1 for _ in range(100)):
        failures.append("greedy argmax")

    sm = Softmax(4, Hyperparams(kind="softmax", temperature=0.1))
    for a in range(4):
        sm.update(a, 0.5)
    if not chi2_ok([sm.sample(rng) for _ in range(10_000)], 4):
        failures.append("softmax uniformity")

    ts = ThompsonSampling(2, Hyperparams(kind="ts"))
    for r in (0.2, 0.8, 0.4):
        ts.update(0, r)
        ts.update(1, r)
    share = np.mean([ts.sample(rng) for _ in range(10_000)])
    if abs(share - 0.5) > 3 * math.sqrt(0.25 / 10_000):
        failures.append("TS symmetry")

    mean_agent = UCB(3, Hyperparams(kind="ucb", gamma=1.0))
    seq = [(int(rng.integers(3)), float(rng.normal(0, 5))) for _ in range(500)]
    for a, r in seq:
        mean_agent.update(a, r)
    for a in range(3):
        ref = math.fsum(r for b, r in seq if b == a) / sum(b == a for b, _ in seq)
        if abs(mean_agent.values[a] - ref) > 1e-12:
            failures.append("gamma=1 mean")

    vals = np.array([0.3, 0.7, 0.7, 0.1, 0.7])
    picks = [argmax_random(vals, rng) for _ in range(9000)]
    if set(picks) != {1, 2, 4} or not chi2_ok(np.searchsorted([1, 2, 4], picks), 3):
        failures.append("tie-break uniformity")
    for agent in (EpsilonGreedy(3, Hyperparams(kind="egreedy", epsilon=0.0)),
                  UCB(3, Hyperparams(kind="ucb", ucb_c=0.2))):
        for a in range(3):
            agent.update(a, 0.6)
        if not chi2_ok([agent.sample(rng) for _ in range(9000)], 3):
            failures.append(f"{agent.kind} tie-break")
    return failures


def test_c09_bandit_properties(record):
    failures = _bandit_checks()
    assert record(9, not failures, "all properties hold" if not failures
                  else "failed: " + ", ".join(failures))


def test_c10_determinism(record, tmp_path):
    doc = {"scenario": {"kind": "square", "d": 30.0, "total_txops": 300, "post_move_offset": 4.0},
           "policies": [{"scheduler": "hierarchical", "algorithm": "ucb"},
                        {"scheduler": "flat", "algorithm": "ts"}, {"scheduler": "single"}]}
    cfg = tmp_path / "c.yaml"
    cfg.write_text(yaml.safe_dump(doc))
    outs = [tmp_path / "a", tmp_path / "b"]
    for out in outs:
        main(["run", "--config", str(cfg), "--seed-list", "3,8", "--out", str(out)])
    names = sorted(str(p.relative_to(outs[0])) for p in outs[0].rglob("*") if p.is_file())
    other = sorted(str(p.relative_to(outs[1])) for p in outs[1].rglob("*") if p.is_file())
    _, mismatch, errors = filecmp.cmpfiles(*outs, names, shallow=False)
    ok = names == other and not mismatch and not errors and len(names) > 0
    assert record(10, ok, f"{len(names)} files compared, {len(mismatch)} differ")


def test_c11_action_space_equivalence(record, monkeypatch):
    layouts = [[1], [3], [1, 1], [2, 3], [1, 2, 2], [3, 1, 2], [2, 2, 2]]
    checked, bad = 0, []
    for counts in layouts:
        topo = topology(counts)
        for ap in topo.ap_ids:
            for sta in topo.stations_of(ap):
                p0 = Pair(ap, sta)
                h = reachable(HierarchicalScheduler, topo, p0, monkeypatch)
                f = reachable(FlatScheduler, topo, p0, monkeypatch)
                checked += 1
                if set(h) != set(f):
                    bad.append((tuple(counts), p0))
    assert record(11, not bad, f"{checked} designated pairs over {len(layouts)} topologies, "
                               f"{len(bad)} mismatches")
