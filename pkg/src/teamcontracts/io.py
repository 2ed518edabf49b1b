"""JSON instance files.

Layout::

    {"r": 1.0,
     "agents": [{"id": 0, "actions": [{"id": 0, "cost": 0.1}, ...]}, ...],
     "reward": {"kind": "table", "values": {"": 0.0, "0": 0.4375, "0,1": 0.875, ...}}}

Table rewards are keyed by comma-joined sorted action ids, the empty set by
``""``. The schema ships as ``schema/instance.schema.json``.
"""
from __future__ import annotations

import json
from functools import lru_cache
from importlib import resources
from pathlib import Path

import jsonschema

from .core import Instance, members
from .oracles import (
    LOOKUP_CAP,
    AdditiveReward,
    CoverageReward,
    HiddenTeamReward,
    RewardOracle,
    TableReward,
    UniformReward,
    XOSReward,
)


class InstanceFormatError(ValueError):
    """The document does not describe a valid instance."""


@lru_cache(maxsize=1)
def instance_schema() -> dict:
    text = resources.files("teamcontracts").joinpath("schema/instance.schema.json").read_text()
    return json.loads(text)


def _key(mask: int) -> str:
    return ",".join(str(j) for j in members(mask))


def reward_to_dict(reward: RewardOracle) -> dict:
    if isinstance(reward, UniformReward):
        return {"kind": "uniform", "value": reward.unit}
    if isinstance(reward, AdditiveReward):
        return {"kind": "additive", "values": [float(v) for v in reward.values]}
    if isinstance(reward, CoverageReward):
        return {"kind": "coverage", "weights": [float(w) for w in reward.weights],
                "covers": [list(c) for c in reward.covers], "scale": reward.scale}
    if isinstance(reward, XOSReward):
        return {"kind": "xos", "clauses": [[float(x) for x in row] for row in reward.clauses]}
    if isinstance(reward, HiddenTeamReward):
        return {"kind": "hidden_team", "team": list(reward.team)}
    if isinstance(reward, TableReward) or reward.m <= LOOKUP_CAP:
        table = reward.table()
        return {"kind": "table", "values": {_key(s): float(table[s]) for s in range(1 << reward.m)}}
    raise InstanceFormatError(f"cannot serialise reward of kind {reward.kind!r}")


def instance_to_dict(inst: Instance) -> dict:
    agents = [{"id": i, "actions": [{"id": j, "cost": inst.costs[j]} for j in inst.agent_actions(i)]}
              for i in range(inst.n)]
    return {"r": inst.r, "agents": agents, "reward": reward_to_dict(inst.reward)}


def _reward_from_dict(doc: dict, m: int) -> RewardOracle:
    kind = doc["kind"]
    if kind == "table":
        return TableReward(doc["values"], m=m)
    if kind == "additive":
        reward = AdditiveReward(doc["values"])
    elif kind == "uniform":
        reward = UniformReward(m, doc.get("value"))
    elif kind == "coverage":
        reward = CoverageReward(doc["weights"], doc["covers"], doc.get("scale"))
    elif kind == "xos":
        reward = XOSReward(doc["clauses"])
    elif kind == "hidden_team":
        reward = HiddenTeamReward(m, doc["team"])
    else:  # pragma: no cover - the schema rejects other kinds
        raise InstanceFormatError(f"unknown reward kind {kind!r}")
    if reward.m != m:
        raise InstanceFormatError(f"reward has {reward.m} actions, agents declare {m}")
    return reward


def instance_from_dict(doc: dict) -> Instance:
    """Validate against the schema and the dense-id rules, then build."""
    try:
        jsonschema.validate(doc, instance_schema())
    except jsonschema.ValidationError as exc:
        raise InstanceFormatError(f"schema violation at {list(exc.absolute_path)}: {exc.message}") from None
    agents = doc["agents"]
    if sorted(a["id"] for a in agents) != list(range(len(agents))):
        raise InstanceFormatError("agent ids must be 0..n-1, each once")
    owner, costs = {}, {}
    for a in agents:
        for act in a["actions"]:
            if act["id"] in owner:
                raise InstanceFormatError(f"action {act['id']} listed twice")
            owner[act["id"]] = a["id"]
            costs[act["id"]] = act["cost"]
    m = len(owner)
    if sorted(owner) != list(range(m)):
        raise InstanceFormatError("action ids must be 0..m-1, each once")
    try:
        reward = _reward_from_dict(doc["reward"], m)
    except InstanceFormatError:
        raise
    except (ValueError, IndexError) as exc:
        raise InstanceFormatError(str(exc)) from None
    return Instance(n=len(agents), owner=tuple(owner[j] for j in range(m)),
                    costs=tuple(costs[j] for j in range(m)), reward=reward,
                    r=doc.get("r", 1.0))


def dumps_instance(inst: Instance) -> str:
    return json.dumps(instance_to_dict(inst), indent=2) + "\n"


def loads_instance(text: str) -> Instance:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InstanceFormatError(f"not valid JSON: {exc}") from None
    return instance_from_dict(doc)


def dump_instance(inst: Instance, path) -> None:
    Path(path).write_text(dumps_instance(inst))


def load_instance(path) -> Instance:
    return loads_instance(Path(path).read_text())
