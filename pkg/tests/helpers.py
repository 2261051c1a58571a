"""Shared test utilities: small line topologies and exhaustive action enumeration."""

import csrsim.scheduler as sch
from csrsim.bandits import Hyperparams
from csrsim.network import Topology

THETA = Hyperparams(kind="ucb", ucb_c=0.3, gamma=1.0, reward_scale=144.42e6)


def topology(stations_per_ap):
    """APs on a line, 10 m apart, with the given station counts."""
    aps, stas, sid = [], [], 0
    for i, n in enumerate(stations_per_ap):
        aps.append((i, (10.0 * i, 0.0)))
        for j in range(n):
            stas.append((sid, (10.0 * i + 1.0, 1.0 + j), i))
            sid += 1
    return Topology.build(aps, stas)


class _Odometer:
    """Feeds a fixed choice path to agents and advances through every path."""

    def __init__(self):
        self.path, self.arity, self.pos = [], [], 0

    def choose(self, n):
        if self.pos < len(self.path):
            c = self.path[self.pos]
        else:
            c = 0
            self.path.append(0)
        if self.pos < len(self.arity):
            self.arity[self.pos] = n
        else:
            self.arity.append(n)
        self.pos += 1
        return c

    def advance(self):
        del self.path[self.pos:], self.arity[self.pos:]
        self.pos = 0
        while self.path:
            if self.path[-1] + 1 < self.arity[-1]:
                self.path[-1] += 1
                return True
            self.path.pop(), self.arity.pop()
        return False


def reachable(make, topo, p0, monkeypatch):
    """Every set the scheduler can return for `p0`, one per path of agent choices."""
    odo = _Odometer()

    class Scripted:
        def __init__(self, n, theta):
            self.n_arms = n

        def sample(self, rng):
            return odo.choose(self.n_arms)

        def update(self, arm, r):
            pass

    monkeypatch.setattr(sch, "new_agent", Scripted)
    s = make(topo, THETA)
    seen = []
    while True:
        tset, _ = s.select(p0, None)
        seen.append(tset)
        if not odo.advance():
            return seen
