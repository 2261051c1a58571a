"""Test topologies: the walled square and randomized tuning scenarios."""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .network import Position, Station, Topology, Wall, make_wall

# ordinal directions NE, NW, SW, SE
_ORDINAL = ((1, 1), (-1, 1), (-1, -1), (1, -1))


@dataclass(frozen=True)
class ScenarioScript:
    initial: Topology
    total: int
    events: tuple[tuple[int, Topology], ...] = ()
    name: str = ""

    def __post_init__(self):
        if self.total <= 0:
            raise ValueError("total TXOP count must be positive")
        idx = [i for i, _ in self.events]
        if any(b <= a for a, b in zip(idx, idx[1:])):
            raise ValueError("event indices must be strictly increasing")
        if idx and (idx[0] < 0 or idx[-1] >= self.total):
            raise ValueError("event indices must lie in [0, total)")
        for _, topo in self.events:
            if topo.structure() != self.initial.structure():
                raise ValueError("mobility events must keep APs, stations and associations")


def default_walls(d: float) -> list[Wall]:
    """Two walls along half of each median line, meeting at the square's center."""
    h = d / 2.0
    return [make_wall((h, 0.0), (h, h)), make_wall((0.0, h), (h, h))]


def square_scenario(d: float, station_offset: float = 2.0, walls=None) -> Topology:
    """Four APs on the corners of a d-sided square, four stations each.

    Stations sit `station_offset` meters from their AP along the ordinal
    directions. `walls=None` uses :func:`default_walls`.
    """
    if d <= 0:
        raise ValueError("square side must be positive")
    if station_offset <= 0:
        raise ValueError("station offset must be positive")
    if walls is None:
        walls = default_walls(d)
    corners = [(0.0, 0.0), (d, 0.0), (0.0, d), (d, d)]
    u = station_offset / math.sqrt(2.0)
    aps, stations = [], []
    for i, (x, y) in enumerate(corners):
        aps.append((i, Position(x, y)))
        for j, (sx, sy) in enumerate(_ORDINAL):
            stations.append(Station(4 * i + j, Position(x + sx * u, y + sy * u), i))
    return Topology(tuple(aps), tuple(stations), tuple(Wall(*w) for w in walls))


def square_script(d: float, total_txops: int, post_move_offset: float | None = None,
                  walls=None, initial_offset: float = 2.0) -> ScenarioScript:
    if total_txops <= 0:
        raise ValueError("total_txops must be positive")
    start = square_scenario(d, initial_offset, walls)
    events = ()
    if post_move_offset is not None:
        events = ((total_txops // 2, square_scenario(d, post_move_offset, walls)),)
    name = f"square_d{d:g}" + (f"_move{post_move_offset:g}" if post_move_offset else "")
    return ScenarioScript(start, total_txops, events, name)


@dataclass(frozen=True)
class RandomScenarioSpec:
    ap_count: tuple[int, int] = (2, 5)
    stations_per_ap: tuple[int, int] = (3, 5)
    area: float = 75.0
    sigma: tuple[float, float] = (4.0, 8.0)
    repositions: int = 3
    total_txops: int = 1000

    def __post_init__(self):
        lo, hi = self.ap_count
        if not 1 <= lo <= hi:
            raise ValueError("bad AP count range")
        lo, hi = self.stations_per_ap
        if not 1 <= lo <= hi:
            raise ValueError("bad stations-per-AP range")
        lo, hi = self.sigma
        if not 0 < lo <= hi:
            raise ValueError("bad sigma range")
        if self.area <= 0 or self.repositions < 0 or self.total_txops <= 0:
            raise ValueError("area, repositions and total_txops must be valid")


def event_indices(count: int, total: int) -> list[int]:
    """`count` evenly spaced TXOP indices strictly inside (0, total)."""
    idx = [i * total // (count + 1) for i in range(1, count + 1)]
    return sorted({i for i in idx if 0 < i < total})


def _place(counts, sigmas, spec, rng):
    aps, stations = [], []
    sid = 0
    for i, (n, sig) in enumerate(zip(counts, sigmas)):
        ap = rng.uniform(0.0, spec.area, size=2)
        aps.append((i, Position(float(ap[0]), float(ap[1]))))
        for _ in range(n):
            while True:
                p = ap + rng.normal(0.0, sig, size=2)
                if 0.0 <= p[0] <= spec.area and 0.0 <= p[1] <= spec.area:
                    break
            stations.append(Station(sid, Position(float(p[0]), float(p[1])), i))
            sid += 1
    return Topology(tuple(aps), tuple(stations))


def random_scenario(spec: RandomScenarioSpec, rng: np.random.Generator) -> ScenarioScript:
    """Random APs in a square area with Gaussian-scattered stations.

    Reposition events redraw every position but keep the association
    structure and per-AP spread.
    """
    n_ap = int(rng.integers(spec.ap_count[0], spec.ap_count[1] + 1))
    counts = [int(rng.integers(spec.stations_per_ap[0], spec.stations_per_ap[1] + 1))
              for _ in range(n_ap)]
    sigmas = [float(rng.uniform(*spec.sigma)) for _ in range(n_ap)]
    initial = _place(counts, sigmas, spec, rng)
    events = tuple((i, _place(counts, sigmas, spec, rng))
                   for i in event_indices(spec.repositions, spec.total_txops))
    return ScenarioScript(initial, spec.total_txops, events, f"random_{n_ap}ap")
