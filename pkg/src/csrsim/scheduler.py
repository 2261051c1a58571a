"""C-SR group selection: hierarchical two-level bandits and baselines.

A TXOP starts from a designated pair (sharing AP, recipient station). The
hierarchical scheduler keeps one first-level agent per designated pair whose
arms are subsets of the other APs (bitmask over them in ascending id order),
and one second-level agent per (AP, transmitting AP set) whose arms are that
AP's stations. The flat scheduler replaces both levels with one agent per
designated pair whose arms are complete companion-pair sets.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field

import numpy as np

from .bandits import Agent, Hyperparams, new_agent, normalize_reward
from .channel import ChannelParams, LinkBudget, McsTable
from .network import Pair, Topology, TransmissionSet, distance
from .txop import TxopConfig, simulate_txop


def draw_p0(topo: Topology, rng: np.random.Generator) -> Pair:
    """Uniform sharing AP, then a uniform station of that AP."""
    aps = topo.ap_ids
    ap = aps[int(rng.integers(len(aps)))]
    stas = topo.stations_of(ap)
    return Pair(ap, stas[int(rng.integers(len(stas)))])


@dataclass
class Decision:
    """Which agents fired in one select call and which arms they chose."""

    p0: Pair
    tset: TransmissionSet
    fired: list[tuple[Agent, int]] = field(default_factory=list)


class _Learner:
    def __init__(self, topology: Topology, theta: Hyperparams):
        if theta.reward_scale is None:
            raise ValueError("hyperparameters need a reward_scale")
        self.topology = topology
        self.theta = theta
        self._pending: Decision | None = None

    def relocate(self, topology: Topology) -> None:
        """Swap in moved node positions; learned state is kept."""
        if topology.structure() != self.topology.structure():
            raise ValueError("relocation must keep APs, stations and associations")
        self.topology = topology

    def _issue(self, decision: Decision) -> Decision:
        self._pending = decision
        return decision

    def update(self, decision: Decision, reward_raw: float) -> None:
        if decision is None or decision is not self._pending:
            raise RuntimeError("update needs the context of the immediately preceding select")
        self._pending = None
        r = normalize_reward(reward_raw, self.theta)
        # second-level agents first, first-level last
        for agent, arm in reversed(decision.fired):
            agent.update(arm, r)


class HierarchicalScheduler(_Learner):
    def __init__(self, topology: Topology, theta: Hyperparams):
        super().__init__(topology, theta)
        self.first: dict[Pair, Agent] = {}
        self.second: dict[tuple[int, frozenset], Agent] = {}

    def others(self, ap: int) -> tuple[int, ...]:
        return tuple(a for a in self.topology.ap_ids if a != ap)

    def select(self, p0: Pair, rng: np.random.Generator) -> tuple[TransmissionSet, Decision]:
        others = self.others(p0.ap)
        agent = self.first.get(p0)
        if agent is None:
            agent = self.first[p0] = new_agent(2 ** len(others), self.theta)
        mask = agent.sample(rng)
        fired = [(agent, mask)]
        shared = [a for j, a in enumerate(others) if mask >> j & 1]
        group = frozenset(shared) | {p0.ap}
        pairs = [p0]
        for ap in shared:
            key = (ap, group)
            stas = self.topology.stations_of(ap)
            lower = self.second.get(key)
            if lower is None:
                lower = self.second[key] = new_agent(len(stas), self.theta)
            arm = lower.sample(rng)
            fired.append((lower, arm))
            pairs.append(Pair(ap, stas[arm]))
        tset = TransmissionSet(pairs)
        return tset, self._issue(Decision(p0, tset, fired))


def companion_sets(topo: Topology, ap: int) -> list[tuple[Pair, ...]]:
    """Every set of companion pairs for a sharing AP, in canonical order."""
    others = [a for a in topo.ap_ids if a != ap]
    out = []
    for mask in range(2 ** len(others)):
        chosen = [a for j, a in enumerate(others) if mask >> j & 1]
        options = [[Pair(a, s) for s in topo.stations_of(a)] for a in chosen]
        out.extend(tuple(c) for c in itertools.product(*options))
    return out


class FlatScheduler(_Learner):
    def __init__(self, topology: Topology, theta: Hyperparams):
        super().__init__(topology, theta)
        self.agents: dict[Pair, Agent] = {}
        self._arms: dict[int, list[tuple[Pair, ...]]] = {}

    def arms_for(self, ap: int) -> list[tuple[Pair, ...]]:
        if ap not in self._arms:
            self._arms[ap] = companion_sets(self.topology, ap)
        return self._arms[ap]

    def select(self, p0: Pair, rng: np.random.Generator) -> tuple[TransmissionSet, Decision]:
        arms = self.arms_for(p0.ap)
        agent = self.agents.get(p0)
        if agent is None:
            agent = self.agents[p0] = new_agent(len(arms), self.theta)
        arm = agent.sample(rng)
        tset = TransmissionSet((p0,) + arms[arm])
        return tset, self._issue(Decision(p0, tset, [(agent, arm)]))


def single_tx(p0: Pair) -> TransmissionSet:
    return TransmissionSet([p0])


def _square_corners(topo: Topology):
    """Return (side, origin, ap ids sorted by distance to origin) or raise."""
    if len(topo.ap_ids) != 4:
        raise ValueError("static strategy needs a 4-AP square topology")
    pts = np.array([topo.ap_pos[a] for a in topo.ap_ids])
    lo, hi = pts.min(axis=0), pts.max(axis=0)
    side = hi[0] - lo[0]
    corners = {(lo[0], lo[1]), (hi[0], lo[1]), (lo[0], hi[1]), (hi[0], hi[1])}
    if side <= 0 or not np.isclose(hi[1] - lo[1], side) or {tuple(p) for p in pts} != corners:
        raise ValueError("APs do not sit on the corners of an axis-aligned square")
    return side, lo, hi


def static_strategy(topo: Topology, k: int) -> TransmissionSet:
    """Fixed best-case set: k APs diagonal-first, each to its outermost station.

    k=1 is the AP nearest the square's low corner; k=2 adds the opposite
    corner; k=3 adds the remaining corner farthest from both (lowest id on
    ties); k=4 is every AP.
    """
    side, lo, hi = _square_corners(topo)
    if not 1 <= k <= 4:
        raise ValueError("k must lie in 1..4")
    center = (lo + hi) / 2.0
    by_origin = sorted(topo.ap_ids, key=lambda a: (distance(topo.ap_pos[a], lo), a))
    first, last = by_origin[0], by_origin[-1]
    order = [first, last]
    rest = [a for a in topo.ap_ids if a not in order]
    rest.sort(key=lambda a: (-(distance(topo.ap_pos[a], topo.ap_pos[first])
                               + distance(topo.ap_pos[a], topo.ap_pos[last])), a))
    order.extend(rest)
    pairs = []
    for ap in order[:k]:
        sta = max(topo.stations_of(ap),
                  key=lambda s: (distance(topo.sta_pos[s], center), -s))
        pairs.append(Pair(ap, sta))
    return TransmissionSet(pairs)


def oracle_best(topo: Topology, ch: ChannelParams, table: McsTable, cfg: TxopConfig,
                n_samples: int, rng: np.random.Generator) -> tuple[int, dict[int, float]]:
    """Monte-Carlo mean effective rate of each static strategy and the best k.

    Every k sees the same random numbers so the curves are directly comparable.
    """
    budget = LinkBudget(topo, ch)
    seed = int(rng.integers(2**63))
    curve = {}
    for k in range(1, len(topo.ap_ids) + 1):
        tset = static_strategy(topo, k)
        sub = np.random.default_rng(seed)
        total = 0.0
        for _ in range(n_samples):
            total += simulate_txop(tset, topo, ch, table, cfg, sub, budget=budget).effective_rate
        curve[k] = total / n_samples
    best = max(curve, key=lambda k: (curve[k], -k))
    return best, curve


class SingleTx:
    """Baseline policy: only the designated pair transmits."""

    def select(self, p0, rng):
        return single_tx(p0), None

    def update(self, decision, reward_raw):
        pass

    def relocate(self, topology):
        pass


class StaticK:
    """Baseline policy: the fixed static_strategy set every TXOP."""

    def __init__(self, topology: Topology, k: int):
        self.k = k
        self.relocate(topology)

    def select(self, p0, rng):
        return self.tset, None

    def update(self, decision, reward_raw):
        pass

    def relocate(self, topology):
        self.tset = static_strategy(topology, self.k)
