"""Hierarchical attack model and threat-specific risk assessment for IMS networks."""

from .defense import Isolate, Patch, apply_action, evaluate_defense, rank_defenses
from .metrics import (
    ALL,
    Level,
    ThreatFilter,
    assess,
    multi_goal_success_prob,
    multi_goal_threat_risk,
    network_success_prob,
    network_threat_risk,
    node_threat_risk,
    path_success_prob,
    path_threat_risk,
    subsystem_threat_risk,
    tree_prob,
    tree_risk,
    vuln_prob,
)
from .model import (
    STRIDE,
    AttackPath,
    AttackTree,
    FunctionNode,
    GateKind,
    GoalSpec,
    HagModel,
    StrideWeights,
    ThreatVector,
    VulnerabilityRecord,
    lookup_group,
    validate_model,
)
from .paths import covering_paths, enumerate_paths
from .scenario import load_canonical, load_scenario

__version__ = "0.1.0"
