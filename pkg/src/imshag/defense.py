"""What-if evaluation of vulnerability patching and host isolation."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, replace
from typing import Mapping, Sequence, Union

from .errors import UnknownVulnerabilityError
from .metrics import ThreatFilter, UnreachableTargetWarning, as_filter, network_success_prob, network_threat_risk
from .model import AttackTree, Gate, GateKind, GoalSpec, HagModel
from .paths import DEFAULT_MAX_PATHS


@dataclass(frozen=True)
class Patch:
    node: str
    cve_id: str

    def __str__(self):
        return f"patch {self.node}:{self.cve_id}"


@dataclass(frozen=True)
class Isolate:
    node: str

    def __str__(self):
        return f"isolate {self.node}"


DefenseAction = Union[Patch, Isolate]


@dataclass(frozen=True)
class DefenseDiff:
    target: str
    filter: ThreatFilter
    before: float
    after: float
    prob_before: float
    prob_after: float
    applied: tuple[DefenseAction, ...]

    @property
    def reduction(self):
        return self.before - self.after


def prune_leaf(tree: AttackTree, cve_id: str) -> AttackTree:
    """Remove ``cve_id`` from ``tree``.

    A removed child makes an AND gate unsatisfiable, so the gate itself is
    removed from its parent; an OR gate only disappears once it has no
    children left.  If the root disappears the tree becomes empty.
    """
    if tree.is_empty:
        return tree
    kept: dict[str, Gate] = {}

    def visit(ref: str) -> bool:
        gate = tree.gate_map.get(ref)
        if gate is None:
            return ref != cve_id
        alive = [c for c in gate.children if visit(c)]
        if not alive or (gate.kind is GateKind.AND and len(alive) < len(gate.children)):
            return False
        kept[ref] = Gate(gate.id, gate.kind, tuple(alive))
        return True

    if not visit(tree.root_gate):
        return AttackTree.empty(tree.root_privilege)
    gates = tuple(kept[g.id] for g in tree.gates if g.id in kept)
    return AttackTree(tree.root_gate, gates, tree.root_privilege)


def apply_action(model: HagModel, action: DefenseAction) -> HagModel:
    """Return a new model with ``action`` deployed; ``model`` is untouched."""
    node = model.node(action.node)
    if isinstance(action, Patch):
        if action.cve_id not in node.tree.leaves():
            raise UnknownVulnerabilityError(f"{action.cve_id} on {action.node}")
        patched = replace(node, tree=prune_leaf(node.tree, action.cve_id))
        nodes = tuple(patched if n.name == node.name else n for n in model.nodes)
        return replace(model, nodes=nodes)
    if isinstance(action, Isolate):
        edges = tuple(e for e in model.edges if node.name not in e)
        return replace(model, edges=edges)
    raise TypeError(f"not a defense action: {action!r}")


def apply_actions(model: HagModel, actions: Sequence[DefenseAction]) -> HagModel:
    for a in actions:
        model = apply_action(model, a)
    return model


def _filter_for(target, filters):
    if isinstance(filters, Mapping):
        return as_filter(filters.get(target, "ALL"))
    return as_filter(filters)


def evaluate_defense(model: HagModel, actions: Sequence[DefenseAction], goals: GoalSpec, filter,
                     max_paths: int = DEFAULT_MAX_PATHS) -> list[DefenseDiff]:
    """Network-level risk and probability per goal, before and after ``actions``.

    ``filter`` is either one threat filter for all targets or a mapping of
    target name to filter (targets missing from the mapping use ALL).
    """
    after_model = apply_actions(model, actions)
    diffs = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UnreachableTargetWarning)
        for t in goals.targets:
            f = _filter_for(t, filter)
            diffs.append(DefenseDiff(
                target=t,
                filter=f,
                before=network_threat_risk(t, f, model, max_paths),
                after=network_threat_risk(t, f, after_model, max_paths),
                prob_before=network_success_prob(t, model, max_paths),
                prob_after=network_success_prob(t, after_model, max_paths),
                applied=tuple(actions),
            ))
    return diffs


def score_defenses(model: HagModel, candidates: Sequence[DefenseAction], goals: GoalSpec, filter,
                   max_paths: int = DEFAULT_MAX_PATHS) -> list[tuple[DefenseAction, float]]:
    """Candidates paired with their summed network-risk reduction, best first.

    Ties keep a deterministic order by node name, then by action text.
    """
    scored = []
    for c in candidates:
        diffs = evaluate_defense(model, [c], goals, filter, max_paths)
        scored.append((c, sum((d.reduction for d in diffs), 0)))
    scored.sort(key=lambda cs: (-cs[1], cs[0].node, str(cs[0])))
    return scored


def rank_defenses(model: HagModel, candidates: Sequence[DefenseAction], goals: GoalSpec, filter,
                  max_paths: int = DEFAULT_MAX_PATHS) -> list[DefenseAction]:
    return [c for c, _ in score_defenses(model, candidates, goals, filter, max_paths)]
