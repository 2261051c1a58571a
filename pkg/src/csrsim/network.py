"""Planar network geometry: APs, stations, walls and transmission sets."""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, NamedTuple


class Position(NamedTuple):
    x: float
    y: float


class Wall(NamedTuple):
    a: Position
    b: Position


class Station(NamedTuple):
    id: int
    pos: Position
    ap: int


class Pair(NamedTuple):
    ap: int
    station: int


def distance(tx: Position, rx: Position) -> float:
    return math.hypot(rx[0] - tx[0], rx[1] - tx[1])


def _orient(p, q, r) -> float:
    return (q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0])


def crosses(tx: Position, rx: Position, wall: Wall) -> bool:
    """True if segment tx-rx properly crosses the wall.

    Touching an endpoint or running collinear with the wall does not count.
    """
    a, b = wall
    o1 = _orient(tx, rx, a)
    o2 = _orient(tx, rx, b)
    if o1 * o2 >= 0:
        return False
    o3 = _orient(a, b, tx)
    o4 = _orient(a, b, rx)
    return o3 * o4 < 0


def wall_count(tx: Position, rx: Position, walls: Iterable[Wall]) -> int:
    """Number of walls strictly intersected by the open segment tx-rx."""
    return sum(1 for w in walls if crosses(tx, rx, w))


def make_wall(a, b) -> Wall:
    a, b = Position(*map(float, a)), Position(*map(float, b))
    if a == b:
        raise ValueError(f"degenerate wall at {a}")
    return Wall(a, b)


@dataclass(frozen=True)
class Topology:
    """Immutable scene. Mobility produces a new Topology with the same ids."""

    aps: tuple[tuple[int, Position], ...]
    stations: tuple[Station, ...]
    walls: tuple[Wall, ...] = field(default_factory=tuple)

    @classmethod
    def build(cls, aps, stations, walls=()) -> "Topology":
        return cls(
            aps=tuple((int(i), Position(float(x), float(y))) for i, (x, y) in aps),
            stations=tuple(
                Station(int(i), Position(float(x), float(y)), int(ap))
                for i, (x, y), ap in stations
            ),
            walls=tuple(make_wall(a, b) for a, b in walls),
        )

    @cached_property
    def ap_ids(self) -> tuple[int, ...]:
        return tuple(sorted(i for i, _ in self.aps))

    @cached_property
    def ap_pos(self) -> dict[int, Position]:
        return dict(self.aps)

    @cached_property
    def sta_pos(self) -> dict[int, Position]:
        return {s.id: s.pos for s in self.stations}

    @cached_property
    def station_ids(self) -> tuple[int, ...]:
        return tuple(sorted(s.id for s in self.stations))

    @cached_property
    def owner(self) -> dict[int, int]:
        return {s.id: s.ap for s in self.stations}

    @cached_property
    def _by_ap(self) -> dict[int, tuple[int, ...]]:
        out: dict[int, list[int]] = {i: [] for i in self.ap_ids}
        for s in self.stations:
            out.setdefault(s.ap, []).append(s.id)
        return {k: tuple(sorted(v)) for k, v in out.items()}

    def stations_of(self, ap: int) -> tuple[int, ...]:
        return self._by_ap.get(ap, ())

    def structure(self) -> tuple:
        """Ids and associations only; equal for a topology and its relocations."""
        return tuple((ap, self.stations_of(ap)) for ap in self.ap_ids)

    def is_pair(self, pair: Pair) -> bool:
        return self.owner.get(pair.station) == pair.ap and pair.ap in self.ap_pos


def validate(topology: Topology) -> list[str]:
    """Return every invariant violation found; an empty list means ok."""
    problems = []
    ap_list = [i for i, _ in topology.aps]
    sta_list = [s.id for s in topology.stations]
    if len(set(ap_list)) != len(ap_list):
        problems.append("duplicate AP id")
    if len(set(sta_list)) != len(sta_list):
        problems.append("duplicate station id")
    known = set(ap_list)
    for s in topology.stations:
        if s.ap not in known:
            problems.append(f"dangling association: station {s.id} -> AP {s.ap}")
    served = {s.ap for s in topology.stations}
    for ap in ap_list:
        if ap not in served:
            problems.append(f"AP without stations: {ap}")
    for _, p in topology.aps:
        if not all(map(math.isfinite, p)):
            problems.append(f"non-finite AP position {p}")
    for s in topology.stations:
        if not all(map(math.isfinite, s.pos)):
            problems.append(f"non-finite station position {s.pos}")
    return problems


class TransmissionSet(frozenset):
    """Pairs transmitting together in one TXOP; one pair per AP at most."""

    def __new__(cls, pairs: Iterable[Pair] = ()):
        pairs = [Pair(*p) for p in pairs]
        if not pairs:
            raise ValueError("transmission set must be nonempty")
        aps = [p.ap for p in pairs]
        if len(set(aps)) != len(aps):
            raise ValueError(f"AP scheduled twice in {sorted(pairs)}")
        return super().__new__(cls, pairs)

    def ordered(self) -> list[Pair]:
        return sorted(self)

    @property
    def aps(self) -> frozenset:
        return frozenset(p.ap for p in self)

    def check(self, topology: Topology) -> None:
        for p in self:
            if not topology.is_pair(p):
                raise ValueError(f"{p} is not an association in the topology")

    def __repr__(self) -> str:
        return f"TransmissionSet({self.ordered()})"
