"""Threat-specific risk and attack-success probability.

Risk of a vulnerability is ``p(v) * aim(v)`` with ``p(v) = ES / 10``.  Attack
trees combine children with sum (AND) or max (OR) for risk and with product
(AND) or max (OR) for probability.  Node threat risk scales the tree risk by
the summed STRIDE weights of the selected threats; path risk sums nodes and
network risk sums every path to the target.

The functions only use ``+``, ``*``, ``/``, ``max`` and integer zero/one, so
they also run unchanged on :class:`fractions.Fraction` inputs when exact
arithmetic is wanted.
"""

from __future__ import annotations

import enum
import itertools
import math
import warnings
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Sequence

from .errors import PathLimitExceeded, UnknownThreatError
from .model import (
    STRIDE,
    AttackPath,
    AttackTree,
    FunctionNode,
    GateKind,
    GoalSpec,
    HagModel,
    ThreatVector,
    VulnerabilityRecord,
    lookup_group,
)
from .paths import DEFAULT_MAX_PATHS, enumerate_paths


class UnreachableTargetWarning(UserWarning):
    pass


class Level(str, enum.Enum):
    NODE = "node"
    PATH = "path"
    NETWORK = "network"


@dataclass(frozen=True)
class ThreatFilter:
    """A non-empty subset of the STRIDE categories."""

    threats: frozenset[str]

    def __post_init__(self):
        threats = frozenset(t.upper() for t in self.threats)
        bad = threats - set(STRIDE)
        if bad:
            raise UnknownThreatError(f"unknown threat letter(s): {', '.join(sorted(bad))}")
        if not threats:
            raise UnknownThreatError("threat filter must not be empty")
        object.__setattr__(self, "threats", threats)

    @classmethod
    def parse(cls, text: str) -> ThreatFilter:
        text = text.strip()
        if text.upper() == "ALL":
            return ALL
        letters = [p.strip() for p in text.replace(",", " ").split()]
        if any(len(p) != 1 for p in letters):
            # accept compact forms like "STE"
            if len(letters) == 1 and letters[0].isalpha():
                letters = list(letters[0])
            else:
                raise UnknownThreatError(f"cannot parse threat filter {text!r}")
        return cls(frozenset(letters))

    @property
    def letters(self) -> tuple[str, ...]:
        return tuple(t for t in STRIDE if t in self.threats)

    @property
    def is_all(self) -> bool:
        return len(self.threats) == len(STRIDE)

    def __iter__(self):
        return iter(self.letters)

    def __str__(self):
        return "ALL" if self.is_all else "".join(self.letters)


ALL = ThreatFilter(frozenset(STRIDE))


def as_filter(value) -> ThreatFilter:
    if isinstance(value, ThreatFilter):
        return value
    if isinstance(value, str):
        return ThreatFilter.parse(value)
    return ThreatFilter(frozenset(value))


def vuln_prob(v: VulnerabilityRecord):
    return v.es / 10


def vuln_risk(v: VulnerabilityRecord):
    return vuln_prob(v) * v.aim


def _eval_tree(tree: AttackTree, leaf_value, and_op, or_op=max):
    if tree.is_empty:
        return 0

    def ev(ref):
        gate = tree.gate_map.get(ref)
        if gate is None:
            return leaf_value(ref)
        values = [ev(c) for c in gate.children]
        return and_op(values) if gate.kind is GateKind.AND else or_op(values)

    return ev(tree.root_gate)


def tree_risk(tree: AttackTree, catalogue: Mapping[str, VulnerabilityRecord]):
    return _eval_tree(tree, lambda cve: vuln_risk(catalogue[cve]), lambda xs: sum(xs, 0))


def tree_prob(tree: AttackTree, catalogue: Mapping[str, VulnerabilityRecord]):
    return _eval_tree(tree, lambda cve: vuln_prob(catalogue[cve]), lambda xs: math.prod(xs, start=1))


def _weight_sum(node: FunctionNode, threats: Iterable[str], catalogue):
    letters = [t for t in STRIDE if t in set(threats)]
    total = 0
    for cve in node.tree.leaves():
        w = catalogue[cve].stride
        for t in letters:
            total = total + w[t]
    return total


def node_threat_risk(node: FunctionNode, filter, catalogue):
    """Tree risk of ``node`` times the summed weights of the chosen threats."""
    f = as_filter(filter)
    return tree_risk(node.tree, catalogue) * _weight_sum(node, f.threats, catalogue)


def node_threat_vector(node: FunctionNode, catalogue) -> ThreatVector:
    r = tree_risk(node.tree, catalogue)
    return ThreatVector(*(r * _weight_sum(node, t, catalogue) for t in STRIDE))


def _nodes_of(path) -> Sequence[str]:
    return path.nodes if isinstance(path, AttackPath) else tuple(path)


def path_threat_risk(path, filter, model: HagModel):
    f = as_filter(filter)
    total = 0
    for name in _nodes_of(path):
        total = total + node_threat_risk(model.node(name), f, model.vuln_catalogue)
    return total


def _paths_or_warn(model, target, max_paths):
    paths = enumerate_paths(model, target, max_paths)
    if not paths:
        warnings.warn(f"{target} is unreachable from every entry node", UnreachableTargetWarning, stacklevel=3)
    return paths


def network_threat_risk(target: str, filter, model: HagModel, max_paths: int = DEFAULT_MAX_PATHS):
    """Sum of path threat risk over every attack path to ``target``.

    An unreachable target scores 0 and emits :class:`UnreachableTargetWarning`.
    """
    f = as_filter(filter)
    total = 0
    for p in _paths_or_warn(model, target, max_paths):
        total = total + path_threat_risk(p, f, model)
    return total


def max_path_threat_risk(target: str, filter, model: HagModel, max_paths: int = DEFAULT_MAX_PATHS):
    f = as_filter(filter)
    return max((path_threat_risk(p, f, model) for p in _paths_or_warn(model, target, max_paths)), default=0)


def path_success_prob(path, model: HagModel):
    """Product of node probabilities along ``path``; the entry counts as 1."""
    nodes = _nodes_of(path)
    cat = model.vuln_catalogue
    return math.prod((tree_prob(model.node(n).tree, cat) for n in nodes[1:]), start=1)


def network_success_prob(target: str, model: HagModel, max_paths: int = DEFAULT_MAX_PATHS):
    return max((path_success_prob(p, model) for p in _paths_or_warn(model, target, max_paths)), default=0)


def goal_value(target: str, filter, model: HagModel, tg_mode: str = "node", max_paths: int = DEFAULT_MAX_PATHS):
    if tg_mode == "node":
        return node_threat_risk(model.node(target), filter, model.vuln_catalogue)
    if tg_mode == "path":
        return max_path_threat_risk(target, filter, model, max_paths)
    if tg_mode == "network":
        return network_threat_risk(target, filter, model, max_paths)
    raise ValueError(f"unknown goal mode {tg_mode!r}")


def multi_goal_threat_risk(goals: GoalSpec, filter, model: HagModel, tg_mode: str = "node",
                           max_paths: int = DEFAULT_MAX_PATHS):
    """Combine per-goal values with max (OR) or sum (AND)."""
    values = [goal_value(t, filter, model, tg_mode, max_paths) for t in goals.targets]
    if len(values) == 1:
        return values[0]
    if goals.condition is GateKind.OR:
        return max(values)
    return sum(values, 0)


def multi_goal_success_prob(goals: GoalSpec, model: HagModel, max_paths: int = DEFAULT_MAX_PATHS):
    """Probability of compromising the goal set.

    For AND, every combination of one path per goal is scored by the product
    over the union of its non-entry nodes (shared prefixes counted once) and
    the best combination wins.  For OR the best single goal wins.
    """
    if goals.condition is GateKind.OR or len(goals.targets) == 1:
        return max(network_success_prob(t, model, max_paths) for t in goals.targets)

    per_goal = [_paths_or_warn(model, t, max_paths) for t in goals.targets]
    cat = model.vuln_catalogue
    best = 0
    for count, combo in enumerate(itertools.product(*per_goal)):
        if count >= max_paths:
            raise PathLimitExceeded(f"more than {max_paths} path combinations for {goals.targets}")
        starts = {p.entry for p in combo}
        union: dict[str, None] = {}
        for p in combo:
            for n in p.nodes:
                if n not in starts:
                    union.setdefault(n, None)
        prob = math.prod((tree_prob(model.node(n).tree, cat) for n in union), start=1)
        best = max(best, prob)
    return best


def subsystem_threat_risk(group: str, filter, model: HagModel):
    f = as_filter(filter)
    members = sorted(lookup_group(model, group), key=lambda n: model.groups[group].index(n.name))
    total = 0
    for n in members:
        total = total + node_threat_risk(n, f, model.vuln_catalogue)
    return total


def subsystem_threat_vector(group: str, model: HagModel) -> ThreatVector:
    return ThreatVector(*(subsystem_threat_risk(group, t, model) for t in STRIDE))


@dataclass
class TargetResult:
    target: str
    level: Level
    filter: ThreatFilter
    risk: float
    prob: float
    paths: int
    breakdown: dict[str, float] = field(default_factory=dict)

    @property
    def reachable(self) -> bool:
        return self.paths > 0


@dataclass
class Assessment:
    goals: GoalSpec
    filter: ThreatFilter
    level: Level
    targets: list[TargetResult]
    combined: TargetResult | None = None
    warnings: list[str] = field(default_factory=list)

    def rows(self) -> list[TargetResult]:
        return self.targets + ([self.combined] if self.combined else [])


def _level_values(target, f, model, level, max_paths):
    node = model.node(target)
    cat = model.vuln_catalogue
    if level is Level.NODE:
        return node_threat_risk(node, f, cat), tree_prob(node.tree, cat)
    paths = enumerate_paths(model, target, max_paths)
    risks = [path_threat_risk(p, f, model) for p in paths]
    probs = [path_success_prob(p, model) for p in paths]
    if level is Level.PATH:
        return max(risks, default=0), max(probs, default=0)
    return sum(risks, 0), max(probs, default=0)


def assess(model: HagModel, goals: GoalSpec, filter, level=Level.NETWORK, tg_mode: str = "node",
           max_paths: int = DEFAULT_MAX_PATHS) -> Assessment:
    """Evaluate every goal target at ``level`` plus the combined goal value."""
    f = as_filter(filter)
    level = Level(level)
    result = Assessment(goals=goals, filter=f, level=level, targets=[])
    for target in goals.targets:
        n_paths = len(enumerate_paths(model, target, max_paths))
        if n_paths == 0:
            result.warnings.append(f"{target} is unreachable from every entry node")
        risk, prob = _level_values(target, f, model, level, max_paths)
        breakdown = {t: _level_values(target, ThreatFilter(frozenset(t)), model, level, max_paths)[0]
                     for t in f.letters}
        result.targets.append(TargetResult(target, level, f, risk, prob, n_paths, breakdown))

    if len(goals.targets) > 1:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", UnreachableTargetWarning)
            risk = multi_goal_threat_risk(goals, f, model, tg_mode, max_paths)
            prob = multi_goal_success_prob(goals, model, max_paths)
            breakdown = {t: multi_goal_threat_risk(goals, t, model, tg_mode, max_paths) for t in f.letters}
        label = f"{goals.condition.value}({'+'.join(goals.targets)})"
        result.combined = TargetResult(label, level, f, risk, prob,
                                       sum(r.paths for r in result.targets), breakdown)
    return result
