"""Scenario file loading and serialisation.

A scenario is a single JSON document holding the top-layer topology, the
per-function attack trees, node groups, the attack goals and the
vulnerability catalogue with analyst-assigned STRIDE weights.
"""

from __future__ import annotations

import itertools
import json
from pathlib import Path

from .errors import ModelValidationError, ScenarioParseError
from .model import (
    AttackTree,
    FunctionNode,
    Gate,
    GateKind,
    GoalSpec,
    HagModel,
    Privilege,
    StrideWeights,
    WEIGHT_SUM_TOLERANCE,
    VulnerabilityRecord,
    validate_model,
)

REQUIRED_SECTIONS = ("functions", "edges", "goals", "vulnerabilities")


def _require(obj, key, where):
    if not isinstance(obj, dict) or key not in obj:
        raise ScenarioParseError(f"{where}: missing required field '{key}'")
    return obj[key]


def _parse_tree(doc, where, privilege) -> AttackTree:
    gates: list[Gate] = []
    counter = itertools.count()

    def build(sub, path) -> str:
        if not isinstance(sub, dict):
            raise ScenarioParseError(f"{path}: gate must be an object")
        kind = _require(sub, "gate", path)
        try:
            kind = GateKind(kind)
        except ValueError:
            raise ScenarioParseError(f"{path}: gate must be AND or OR, got {kind!r}") from None
        children = _require(sub, "children", path)
        if not isinstance(children, list):
            raise ScenarioParseError(f"{path}: children must be a list")
        gid = f"g{next(counter)}"
        slot = len(gates)
        gates.append(None)  # reserve pre-order position
        refs = []
        for k, child in enumerate(children):
            if isinstance(child, str):
                refs.append(child)
            else:
                refs.append(build(child, f"{path}.children[{k}]"))
        gates[slot] = Gate(gid, kind, tuple(refs))
        return gid

    root = build(doc, where)
    return AttackTree(root, tuple(gates), privilege)


def _parse_number(value, where):
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise ScenarioParseError(f"{where}: expected a number, got {value!r}")
    return value


def parse_scenario(doc) -> HagModel:
    """Build an (unvalidated) model from a decoded scenario document."""
    if not isinstance(doc, dict):
        raise ScenarioParseError("scenario root must be a JSON object")
    for section in REQUIRED_SECTIONS:
        if section not in doc:
            raise ScenarioParseError(f"missing required section '{section}'")

    nodes = []
    for idx, f in enumerate(doc["functions"]):
        where = f"functions[{idx}]"
        name = _require(f, "name", where)
        where = f"function {name}"
        try:
            privilege = Privilege(f.get("privilege", "user"))
        except ValueError:
            raise ScenarioParseError(f"{where}: privilege must be 'user' or 'admin'") from None
        tree = _parse_tree(_require(f, "tree", where), f"{where}.tree", privilege)
        nodes.append(
            FunctionNode(
                name=name,
                ip=str(_require(f, "ip", where)),
                subnet=str(f.get("subnet", "")),
                is_entry=bool(f.get("entry", False)),
                tree=tree,
            )
        )

    edges = []
    for idx, e in enumerate(doc["edges"]):
        if not (isinstance(e, list) and len(e) == 2 and all(isinstance(x, str) for x in e)):
            raise ScenarioParseError(f"edges[{idx}]: expected [from, to], got {e!r}")
        edges.append((e[0], e[1]))

    groups = {}
    for name, members in (doc.get("groups") or {}).items():
        if not isinstance(members, list):
            raise ScenarioParseError(f"groups.{name}: expected a list of node names")
        groups[name] = tuple(members)

    goals_doc = doc["goals"]
    targets = _require(goals_doc, "targets", "goals")
    if not isinstance(targets, list):
        raise ScenarioParseError("goals.targets: expected a list")
    try:
        condition = GateKind(goals_doc.get("condition", "AND"))
    except ValueError:
        raise ScenarioParseError("goals.condition must be AND or OR") from None

    catalogue = {}
    for idx, v in enumerate(doc["vulnerabilities"]):
        where = f"vulnerabilities[{idx}]"
        cve = _require(v, "cve", where)
        where = f"vulnerability {cve}"
        if cve in catalogue:
            raise ScenarioParseError(f"{where}: listed twice")
        stride = _require(v, "stride", where)
        try:
            weights = StrideWeights.from_mapping(
                {k: _parse_number(w, f"{where}.stride.{k}") for k, w in stride.items()}
            )
        except (ValueError, AttributeError) as exc:
            raise ScenarioParseError(f"{where}: {exc}") from None
        catalogue[cve] = VulnerabilityRecord(
            cve_id=cve,
            aim=_parse_number(_require(v, "aim", where), f"{where}.aim"),
            es=_parse_number(_require(v, "es", where), f"{where}.es"),
            stride=weights,
            description=v.get("description", ""),
        )

    tolerance = doc.get("weight_sum_tolerance", WEIGHT_SUM_TOLERANCE)
    _parse_number(tolerance, "weight_sum_tolerance")
    return HagModel(
        weight_tolerance=tolerance,
        nodes=tuple(nodes),
        edges=tuple(edges),
        goals=GoalSpec(tuple(targets), condition),
        vuln_catalogue=catalogue,
        groups=groups,
    )


def loads_scenario(text: str) -> HagModel:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioParseError(exc.msg, line=exc.lineno) from None
    model = parse_scenario(doc)
    violations = validate_model(model)
    if violations:
        raise ModelValidationError(violations)
    return model


def load_scenario(path) -> HagModel:
    """Read, parse and validate a scenario file."""
    text = Path(path).read_text(encoding="utf-8")
    return loads_scenario(text)


def _dump_tree(tree: AttackTree, ref: str):
    gate = tree.gate_map[ref]
    return {
        "gate": gate.kind.value,
        "children": [_dump_tree(tree, c) if tree.is_gate(c) else c for c in gate.children],
    }


def dump_scenario(model: HagModel) -> dict:
    functions = []
    for n in model.nodes:
        entry = {"name": n.name, "ip": n.ip, "subnet": n.subnet, "entry": n.is_entry}
        if n.tree.root_privilege is not Privilege.USER:
            entry["privilege"] = n.tree.root_privilege.value
        entry["tree"] = _dump_tree(n.tree, n.tree.root_gate)
        functions.append(entry)
    vulns = []
    for rec in model.vuln_catalogue.values():
        item = {"cve": rec.cve_id, "aim": rec.aim, "es": rec.es, "stride": rec.stride.as_dict()}
        if rec.description:
            item["description"] = rec.description
        vulns.append(item)
    doc = {
        "functions": functions,
        "edges": [list(e) for e in model.edges],
        "groups": {k: list(v) for k, v in model.groups.items()},
        "goals": {"condition": model.goals.condition.value, "targets": list(model.goals.targets)},
        "vulnerabilities": vulns,
    }
    if model.weight_tolerance != WEIGHT_SUM_TOLERANCE:
        doc["weight_sum_tolerance"] = model.weight_tolerance
    return doc


def dumps_scenario(model: HagModel) -> str:
    return json.dumps(dump_scenario(model), indent=2, ensure_ascii=False) + "\n"


def save_scenario(model: HagModel, path) -> None:
    Path(path).write_text(dumps_scenario(model), encoding="utf-8")


def canonical_scenario_path() -> Path:
    return Path(__file__).parent / "data" / "ims_canonical.json"


def load_canonical() -> HagModel:
    return load_scenario(canonical_scenario_path())

