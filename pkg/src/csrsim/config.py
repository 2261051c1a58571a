"""YAML experiment configuration.

A user file is deep-merged over the bundled ``default.yaml``, so an empty
file reproduces the reference setup. The schema is documented in README.md.
"""

from __future__ import annotations

import copy
from importlib import resources
from pathlib import Path

import yaml

from .bandits import Hyperparams
from .channel import ChannelParams, McsTable
from .experiment import ConfigError, ExperimentConfig, stream
from .network import Position, Station, Topology, Wall, make_wall, validate
from .scenarios import RandomScenarioSpec, ScenarioScript, random_scenario, square_script
from .txop import TxopConfig


def default_document() -> dict:
    text = resources.files("csrsim.data").joinpath("default.yaml").read_text()
    return yaml.safe_load(text)


def merge(base: dict, override: dict) -> dict:
    out = copy.deepcopy(base)
    for key, value in (override or {}).items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = merge(out[key], value)
        else:
            out[key] = copy.deepcopy(value)
    return out


def load_config(path=None, overrides: dict | None = None) -> dict:
    doc = default_document()
    if path is not None:
        user = yaml.safe_load(Path(path).read_text()) or {}
        if not isinstance(user, dict):
            raise ConfigError(f"{path}: top level must be a mapping")
        doc = merge(doc, user)
    return merge(doc, overrides or {})


# ------------------------------------------------------- topology (de)serialization

def topology_to_dict(topo: Topology) -> dict:
    return {
        "aps": [{"id": i, "x": p.x, "y": p.y} for i, p in topo.aps],
        "stations": [{"id": s.id, "x": s.pos.x, "y": s.pos.y, "ap": s.ap} for s in topo.stations],
        "walls": [[[w.a.x, w.a.y], [w.b.x, w.b.y]] for w in topo.walls],
    }


def walls_from_list(items) -> list[Wall]:
    try:
        return [make_wall(a, b) for a, b in items]
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad wall list: {exc}") from None


def topology_from_dict(d: dict) -> Topology:
    try:
        topo = Topology(
            tuple((int(a["id"]), Position(float(a["x"]), float(a["y"]))) for a in d["aps"]),
            tuple(Station(int(s["id"]), Position(float(s["x"]), float(s["y"])), int(s["ap"]))
                  for s in d["stations"]),
            tuple(walls_from_list(d.get("walls", []))),
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise ConfigError(f"bad topology: {exc}") from None
    problems = validate(topo)
    if problems:
        raise ConfigError("invalid topology: " + "; ".join(problems))
    return topo


def script_to_dict(script: ScenarioScript) -> dict:
    return {
        "kind": "scripted",
        "name": script.name,
        "total_txops": script.total,
        "topology": topology_to_dict(script.initial),
        "events": [{"txop": i, "topology": topology_to_dict(t)} for i, t in script.events],
    }


def script_from_dict(d: dict) -> ScenarioScript:
    try:
        return ScenarioScript(
            topology_from_dict(d["topology"]),
            int(d["total_txops"]),
            tuple((int(e["txop"]), topology_from_dict(e["topology"])) for e in d.get("events", [])),
            d.get("name", "scripted"),
        )
    except KeyError as exc:
        raise ConfigError(f"scripted scenario is missing {exc}") from None
    except ValueError as exc:
        raise ConfigError(str(exc)) from None


# ---------------------------------------------------------------- building

def _scenario(sc: dict):
    kind = sc.get("kind", "square")
    if kind == "square":
        walls = sc.get("walls", "default")
        walls = None if walls in (None, "default") else walls_from_list(walls)
        try:
            return square_script(float(sc["d"]), int(sc["total_txops"]),
                                 sc.get("post_move_offset"), walls,
                                 float(sc.get("station_offset", 2.0))), None
        except (KeyError, ValueError) as exc:
            raise ConfigError(f"bad square scenario: {exc}") from None
    if kind == "random":
        try:
            spec = RandomScenarioSpec(
                ap_count=tuple(sc.get("ap_count", (2, 5))),
                stations_per_ap=tuple(sc.get("stations_per_ap", (3, 5))),
                area=float(sc.get("area", 75.0)),
                sigma=tuple(sc.get("sigma", (4.0, 8.0))),
                repositions=int(sc.get("repositions", 3)),
                total_txops=int(sc["total_txops"]),
            )
        except (KeyError, ValueError) as exc:
            raise ConfigError(f"bad random scenario: {exc}") from None
        return None, spec
    if kind == "scripted":
        return script_from_dict(sc), None
    raise ConfigError(f"unknown scenario kind {kind!r}")


def _seeds(value) -> list[int]:
    if isinstance(value, int):
        if value < 1:
            raise ConfigError("seed count must be at least 1")
        return list(range(value))
    seeds = [int(s) for s in value]
    if not seeds:
        raise ConfigError("seed list is empty")
    return seeds


def hyperparams_for(doc: dict, scheduler: str, algo: str, extra: dict | None = None) -> Hyperparams:
    base = dict(doc.get("hyperparams", {}).get(algo, {}))
    if scheduler == "flat":
        base.update(doc.get("flat_hyperparams", {}).get(algo, {}))
    base.update(extra or {})
    base["kind"] = algo
    try:
        return Hyperparams.from_dict(base)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"hyperparameters for {scheduler}/{algo}: {exc}") from None


def build_experiments(doc: dict) -> list[ExperimentConfig]:
    """One ExperimentConfig per policy; raises ConfigError before anything runs."""
    try:
        channel = ChannelParams(**doc.get("channel", {}))
        txop = TxopConfig(**doc.get("txop", {}))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"channel/txop parameters: {exc}") from None
    try:
        table = McsTable.load(doc.get("mcs_table"))
    except (OSError, KeyError, ValueError) as exc:
        raise ConfigError(f"MCS table: {exc}") from None
    script, spec = _scenario(doc.get("scenario", {}))
    seeds = _seeds(doc.get("seeds", 1))
    policies = doc.get("policies") or []
    if not policies:
        raise ConfigError("no policies configured")
    out = []
    for pol in policies:
        sched = pol.get("scheduler", "hierarchical")
        algo = pol.get("algorithm", "ucb")
        theta = hyperparams_for(doc, sched, algo, pol.get("hyperparams"))
        cfg = ExperimentConfig(script=script, random_spec=spec, scheduler=sched, theta=theta,
                               static_k=int(pol.get("k", 1)), channel=channel, txop=txop,
                               table=table, seeds=seeds, label=pol.get("name", ""))
        cfg.check()
        out.append(cfg)
    names = [c.name for c in out]
    if len(set(names)) != len(names):
        raise ConfigError(f"policy names must be unique: {names}")
    return out


def materialize(doc: dict, seed: int) -> ScenarioScript:
    """The concrete script one seed runs (random scenarios are drawn per seed)."""
    script, spec = _scenario(doc.get("scenario", {}))
    return script if script is not None else random_scenario(spec, stream(seed, "scenario"))
