from dataclasses import replace
from fractions import Fraction

import pytest
from hypothesis import given
from hypothesis import strategies as st

from imshag.errors import UnknownGroupError
from imshag.model import (
    AttackTree,
    Gate,
    GateKind,
    StrideWeights,
    ThreatVector,
    lookup_group,
    validate_model,
)
from imshag.scenario import load_canonical


def messages(model):
    return [str(v) for v in validate_model(model)]


def test_canonical_is_valid(canonical):
    assert validate_model(canonical) == []


def test_canonical_structure(canonical):
    assert len(canonical.nodes) == 12
    assert canonical.entries == ["P-CSCF"]
    assert len(canonical.vuln_catalogue) == 12


def test_weights_sum_violation(canonical):
    rec = canonical.vuln_catalogue["CVE-2019-15107"]
    bad = replace(rec, stride=StrideWeights(0.5, 0.5, 0.5, 0, 0, 0))
    model = replace(canonical, vuln_catalogue={**canonical.vuln_catalogue, rec.cve_id: bad})
    assert messages(model) == ["vuln CVE-2019-15107: weights sum 1.5 ≠ 1.0"]


def test_all_zero_weights_rejected(canonical):
    rec = canonical.vuln_catalogue["CVE-2019-15107"]
    model = replace(canonical, vuln_catalogue={**canonical.vuln_catalogue,
                                               rec.cve_id: replace(rec, stride=StrideWeights())})
    assert any("all-zero" in m for m in messages(model))


def test_self_loop_reported(canonical):
    model = replace(canonical, edges=canonical.edges + (("MGW", "MGW"),))
    assert messages(model) == ["edge MGW->MGW: self-loop at MGW"]


@pytest.mark.parametrize(
    "mutate, fragment",
    [
        (lambda m: replace(m, edges=m.edges + (("MGW", "NOPE"),)), "unknown node NOPE"),
        (lambda m: replace(m, edges=m.edges + (m.edges[0],)), "duplicate edge"),
        (lambda m: replace(m, nodes=tuple(replace(n, is_entry=False) for n in m.nodes)), "no entry node"),
        (lambda m: replace(m, nodes=m.nodes + (m.nodes[0],)), "duplicate node name"),
        (lambda m: replace(m, groups={"g": ("ghost",)}), "unknown member ghost"),
        (lambda m: replace(m, goals=replace(m.goals, targets=("ghost",))), "unknown target ghost"),
        (lambda m: replace(m, goals=replace(m.goals, targets=())), "no targets"),
        (lambda m: replace(m, nodes=(replace(m.nodes[0], ip="10.0.0.300"),) + m.nodes[1:]), "invalid IPv4"),
        (lambda m: replace(m, vuln_catalogue={k: v for k, v in m.vuln_catalogue.items()
                                              if k != "CVE-2018-5390"}), "CVE-2018-5390 not in vulnerability"),
    ],
)
def test_violations_with_locus(canonical, mutate, fragment):
    found = messages(mutate(canonical))
    assert any(fragment in m for m in found), found


def test_validation_does_not_mutate(canonical):
    before = load_canonical()
    validate_model(canonical)
    assert canonical == before


@pytest.mark.parametrize(
    "tree, fragment",
    [
        (AttackTree("g0", (Gate("g0", GateKind.OR, ()),)), "no children"),
        (AttackTree("g0", (Gate("g0", GateKind.OR, ("g1",)), Gate("g1", GateKind.AND, ("g0",)))), "cycle"),
        (AttackTree("g0", (Gate("g0", GateKind.OR, ("CVE-2019-15107",)),
                           Gate("g1", GateKind.OR, ("CVE-2019-15107",)))), "g1 has 0 parents"),
        (AttackTree("g0", (Gate("g0", GateKind.OR, ("g1", "g1")), Gate("g1", GateKind.OR, ("CVE-2019-15107",)))),
         "g1 has 2 parents"),
        (AttackTree("gx", (Gate("g0", GateKind.OR, ("CVE-2019-15107",)),)), "root gate gx not defined"),
        (AttackTree("g0", (Gate("g0", GateKind.OR, ("banana",)),)), "neither a gate nor a CVE"),
        (AttackTree.empty(), "empty attack tree"),
    ],
)
def test_tree_wellformedness(tree, fragment):
    assert any(fragment in p for p in tree.problems()), tree.problems()


def test_tree_leaves_preorder_distinct():
    tree = AttackTree("g0", (
        Gate("g0", GateKind.AND, ("CVE-2020-0002", "g1", "CVE-2020-0001")),
        Gate("g1", GateKind.OR, ("CVE-2020-0003", "CVE-2020-0002")),
    ))
    assert tree.leaves() == ["CVE-2020-0002", "CVE-2020-0003", "CVE-2020-0001"]
    assert tree.problems() == []


def test_lookup_group(canonical):
    members = lookup_group(canonical, "app-servers")
    assert {n.name for n in members} == {"SIP-AS", "OSA-SCS", "IM-SSF"}


def test_lookup_empty_group(canonical):
    model = replace(canonical, groups={"empty": ()})
    assert lookup_group(model, "empty") == frozenset()


def test_lookup_unknown_group(canonical):
    with pytest.raises(UnknownGroupError, match="nosuch"):
        lookup_group(canonical, "nosuch")


def test_structural_equality():
    assert load_canonical() == load_canonical()


fractions = st.fractions(min_value=0, max_value=100, max_denominator=1000)
vectors = st.builds(ThreatVector, fractions, fractions, fractions, fractions, fractions, fractions)


@given(vectors, vectors, vectors, fractions)
def test_threat_vector_algebra_exact(a, b, c, k):
    assert (a + b) + c == a + (b + c)
    assert a + b == b + a
    assert k * (a + b) == k * a + k * b
    assert (a + b).total() == a.total() + b.total()


def test_threat_vector_rejects_negative():
    with pytest.raises(ValueError):
        ThreatVector(s=-1)
