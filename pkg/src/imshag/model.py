"""Domain types for the two-layer IMS attack model and structural validation.

The top layer is a directed graph of IMS functions; every function owns an
AND/OR attack tree over CVE leaves (the lower layer).  All types are frozen
dataclasses and are treated as immutable once built: defenses produce new
models rather than mutating existing ones.
"""

from __future__ import annotations

import enum
import ipaddress
import re
from dataclasses import dataclass, field, fields
from functools import cached_property
from typing import Iterator, Mapping

from .errors import UnknownGroupError, UnknownNodeError

STRIDE = ("S", "T", "R", "I", "D", "E")
STRIDE_NAMES = {
    "S": "Spoofing",
    "T": "Tampering",
    "R": "Repudiation",
    "I": "Information disclosure",
    "D": "Denial of service",
    "E": "Elevation of privilege",
}

CVE_PATTERN = re.compile(r"CVE-\d{4}-\d{4,}")
WEIGHT_SUM_TOLERANCE = 1e-6


class GateKind(str, enum.Enum):
    AND = "AND"
    OR = "OR"


class Privilege(str, enum.Enum):
    USER = "user"
    ADMIN = "admin"


@dataclass(frozen=True)
class StrideWeights:
    """Per-threat weights of one vulnerability; must sum to 1."""

    s: float = 0.0
    t: float = 0.0
    r: float = 0.0
    i: float = 0.0
    d: float = 0.0
    e: float = 0.0

    @classmethod
    def from_mapping(cls, mapping: Mapping[str, float]) -> StrideWeights:
        unknown = set(mapping) - set(STRIDE)
        if unknown:
            raise ValueError(f"unknown STRIDE keys: {sorted(unknown)}")
        return cls(**{k.lower(): mapping.get(k, 0.0) for k in STRIDE})

    def __getitem__(self, letter: str) -> float:
        return getattr(self, letter.lower())

    def as_dict(self) -> dict[str, float]:
        return {k: self[k] for k in STRIDE}

    def total(self):
        return sum((self[k] for k in STRIDE), 0)

    def problems(self, tolerance: float = WEIGHT_SUM_TOLERANCE) -> list[str]:
        out = []
        for k in STRIDE:
            w = self[k]
            if not (0 <= w <= 1):
                out.append(f"weight {k}={w} outside [0, 1]")
        total = self.total()
        if total == 0:
            out.append("all-zero weights")
        elif abs(total - 1) > tolerance + 1e-12:
            out.append(f"weights sum {float(total):g} ≠ 1.0")
        return out


@dataclass(frozen=True)
class VulnerabilityRecord:
    cve_id: str
    aim: float
    es: float
    stride: StrideWeights
    description: str = ""

    def problems(self, weight_tolerance: float = WEIGHT_SUM_TOLERANCE) -> list[str]:
        out = []
        if not CVE_PATTERN.fullmatch(self.cve_id):
            out.append(f"malformed CVE id {self.cve_id!r}")
        if not (0 <= self.aim <= 10):
            out.append(f"impact score {self.aim} outside [0, 10]")
        if not (0 <= self.es <= 10):
            out.append(f"exploitability score {self.es} outside [0, 10]")
        out.extend(self.stride.problems(weight_tolerance))
        return out


@dataclass(frozen=True)
class Gate:
    id: str
    kind: GateKind
    children: tuple[str, ...]


@dataclass(frozen=True)
class AttackTree:
    """AND/OR tree of gates whose leaves are CVE ids.

    Children that name a gate id are sub-gates; anything else is a leaf.
    An empty tree (``root_gate is None``) only arises from patching.
    """

    root_gate: str | None
    gates: tuple[Gate, ...]
    root_privilege: Privilege = Privilege.USER

    @classmethod
    def single(cls, cve_id: str, privilege: Privilege = Privilege.USER) -> AttackTree:
        return cls("g0", (Gate("g0", GateKind.OR, (cve_id,)),), privilege)

    @classmethod
    def empty(cls, privilege: Privilege = Privilege.USER) -> AttackTree:
        return cls(None, (), privilege)

    @cached_property
    def gate_map(self) -> dict[str, Gate]:
        return {g.id: g for g in self.gates}

    @property
    def is_empty(self) -> bool:
        return self.root_gate is None

    def is_gate(self, ref: str) -> bool:
        return ref in self.gate_map

    def leaves(self) -> list[str]:
        """Distinct leaf CVE ids in pre-order of first appearance."""
        seen: dict[str, None] = {}
        for ref in self._walk():
            if not self.is_gate(ref):
                seen.setdefault(ref, None)
        return list(seen)

    def _walk(self) -> Iterator[str]:
        if self.root_gate is None:
            return
        stack = [self.root_gate]
        visited = set()
        while stack:
            ref = stack.pop()
            yield ref
            gate = self.gate_map.get(ref)
            if gate is None or ref in visited:
                continue
            visited.add(ref)
            stack.extend(reversed(gate.children))

    def problems(self) -> list[str]:
        if self.root_gate is None:
            return ["empty attack tree"]
        out = []
        ids = [g.id for g in self.gates]
        dupes = sorted({i for i in ids if ids.count(i) > 1})
        out += [f"duplicate gate id {i}" for i in dupes]
        if self.root_gate not in self.gate_map:
            return out + [f"root gate {self.root_gate} not defined"]

        parents: dict[str, int] = {}
        for g in self.gates:
            if not g.children:
                out.append(f"gate {g.id} has no children")
            for c in g.children:
                if self.is_gate(c):
                    parents[c] = parents.get(c, 0) + 1
                elif not CVE_PATTERN.fullmatch(c):
                    out.append(f"gate {g.id} child {c!r} is neither a gate nor a CVE id")
        if self.root_gate in parents:
            out.append(f"root gate {self.root_gate} has a parent")
        for g in self.gates:
            if g.id != self.root_gate and parents.get(g.id, 0) != 1:
                out.append(f"gate {g.id} has {parents.get(g.id, 0)} parents (expected 1)")

        # colouring DFS: grey on the stack, black when finished
        colour: dict[str, int] = {}

        def visit(gid: str) -> bool:
            colour[gid] = 1
            for c in self.gate_map[gid].children:
                if not self.is_gate(c):
                    continue
                if colour.get(c) == 1:
                    return False
                if c not in colour and not visit(c):
                    return False
            colour[gid] = 2
            return True

        if not visit(self.root_gate):
            out.append("gate graph contains a cycle")
        unreachable = sorted(set(self.gate_map) - set(colour))
        if unreachable:
            out.append("gates unreachable from root: " + ", ".join(unreachable))
        if not self.leaves():
            out.append("tree has no vulnerability leaves")
        return out


@dataclass(frozen=True)
class FunctionNode:
    name: str
    ip: str
    subnet: str
    is_entry: bool
    tree: AttackTree


@dataclass(frozen=True)
class GoalSpec:
    targets: tuple[str, ...]
    condition: GateKind = GateKind.AND

    def __post_init__(self):
        object.__setattr__(self, "targets", tuple(self.targets))
        object.__setattr__(self, "condition", GateKind(self.condition))


@dataclass(frozen=True)
class AttackPath:
    nodes: tuple[str, ...]

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(self.nodes))

    def __iter__(self):
        return iter(self.nodes)

    def __len__(self):
        return len(self.nodes)

    def __getitem__(self, idx):
        return self.nodes[idx]

    @property
    def entry(self) -> str:
        return self.nodes[0]

    @property
    def target(self) -> str:
        return self.nodes[-1]

    def __str__(self):
        return " -> ".join(self.nodes)


@dataclass(frozen=True)
class Violation:
    locus: str
    message: str

    def __str__(self):
        return f"{self.locus}: {self.message}"


@dataclass(frozen=True)
class HagModel:
    nodes: tuple[FunctionNode, ...]
    edges: tuple[tuple[str, str], ...]
    goals: GoalSpec
    vuln_catalogue: dict[str, VulnerabilityRecord] = field(default_factory=dict)
    groups: dict[str, tuple[str, ...]] = field(default_factory=dict)
    # Published weight tables are not always exact; a scenario may widen this.
    weight_tolerance: float = WEIGHT_SUM_TOLERANCE

    @cached_property
    def node_map(self) -> dict[str, FunctionNode]:
        return {n.name: n for n in self.nodes}

    @cached_property
    def successors(self) -> dict[str, tuple[str, ...]]:
        out: dict[str, set[str]] = {n.name: set() for n in self.nodes}
        for a, b in self.edges:
            out.setdefault(a, set()).add(b)
        return {k: tuple(sorted(v)) for k, v in out.items()}

    @property
    def entries(self) -> list[str]:
        return sorted(n.name for n in self.nodes if n.is_entry)

    def node(self, name: str) -> FunctionNode:
        try:
            return self.node_map[name]
        except KeyError:
            raise UnknownNodeError(name) from None

    def has_edge(self, a: str, b: str) -> bool:
        return b in self.successors.get(a, ())


@dataclass(frozen=True)
class ThreatVector:
    """Risk split by STRIDE category."""

    s: float = 0.0
    t: float = 0.0
    r: float = 0.0
    i: float = 0.0
    d: float = 0.0
    e: float = 0.0

    def __post_init__(self):
        if any(v < 0 for v in self):
            raise ValueError(f"negative threat risk in {self}")

    def __getitem__(self, letter: str):
        return getattr(self, letter.lower())

    def __add__(self, other: ThreatVector) -> ThreatVector:
        if not isinstance(other, ThreatVector):
            return NotImplemented
        return ThreatVector(*(a + b for a, b in zip(self, other)))

    def __mul__(self, k) -> ThreatVector:
        if isinstance(k, ThreatVector):
            return NotImplemented
        return ThreatVector(*(k * a for a in self))

    __rmul__ = __mul__

    def __iter__(self):
        return (getattr(self, f.name) for f in fields(self))

    def as_dict(self) -> dict[str, float]:
        return dict(zip(STRIDE, self))

    def total(self):
        return sum(self, 0)


def validate_model(model: HagModel) -> list[Violation]:
    """Return every structural violation found; an empty list means valid."""
    out: list[Violation] = []
    names = [n.name for n in model.nodes]
    known = set(names)

    for name in sorted({n for n in names if names.count(n) > 1}):
        out.append(Violation(f"node {name}", "duplicate node name"))
    if not any(n.is_entry for n in model.nodes):
        out.append(Violation("model", "no entry node"))

    for n in model.nodes:
        try:
            ipaddress.IPv4Address(n.ip)
        except ValueError:
            out.append(Violation(f"node {n.name}", f"invalid IPv4 address {n.ip!r}"))
        for problem in n.tree.problems():
            out.append(Violation(f"node {n.name}", problem))
        for cve in n.tree.leaves():
            if CVE_PATTERN.fullmatch(cve) and cve not in model.vuln_catalogue:
                out.append(Violation(f"node {n.name}", f"{cve} not in vulnerability catalogue"))

    seen_edges = set()
    for a, b in model.edges:
        locus = f"edge {a}->{b}"
        if a == b:
            out.append(Violation(locus, f"self-loop at {a}"))
        for end in (a, b):
            if end not in known:
                out.append(Violation(locus, f"unknown node {end}"))
        if (a, b) in seen_edges:
            out.append(Violation(locus, "duplicate edge"))
        seen_edges.add((a, b))

    for key, rec in model.vuln_catalogue.items():
        if key != rec.cve_id:
            out.append(Violation(f"vuln {key}", f"catalogue key does not match record id {rec.cve_id}"))
        for problem in rec.problems(model.weight_tolerance):
            out.append(Violation(f"vuln {key}", problem))

    goals = model.goals
    if not goals.targets:
        out.append(Violation("goals", "no targets"))
    for t in goals.targets:
        if t not in known:
            out.append(Violation("goals", f"unknown target {t}"))

    for group, members in model.groups.items():
        for m in members:
            if m not in known:
                out.append(Violation(f"group {group}", f"unknown member {m}"))
    return out


def lookup_group(model: HagModel, group: str) -> frozenset[FunctionNode]:
    try:
        members = model.groups[group]
    except KeyError:
        raise UnknownGroupError(group) from None
    return frozenset(model.node(m) for m in members)
