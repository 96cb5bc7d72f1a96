#!/usr/bin/env python3
"""Regenerate the evaluation tables and bar charts for the canonical IMS scenario.

Writes one CSV (and an SVG where a chart makes sense) per experiment into
the output directory:

  multi_goal_sweep   AND goals {P-CSCF}, +S-CSCF, +SIP-AS: risk and probability
  probabilities      node- and network-level success probability per function
  sip_as_threats     SIP-AS per-threat risk at node, path and network level
  ste_assessment     {S,T,E} risk at node, path and network level
  app_servers        per-threat subsystem risk of the application servers
  defense            before/after risk for the host patches under per-target filters
"""

import argparse
import logging
import warnings
from pathlib import Path

from imshag.defense import Patch, evaluate_defense
from imshag.metrics import (
    ALL,
    UnreachableTargetWarning,
    max_path_threat_risk,
    multi_goal_success_prob,
    multi_goal_threat_risk,
    network_success_prob,
    network_threat_risk,
    node_threat_risk,
    subsystem_threat_risk,
    tree_prob,
)
from imshag.model import STRIDE, GateKind, GoalSpec
from imshag.report import fmt_prob, fmt_risk, render_bar_chart, render_rows
from imshag.scenario import load_canonical, load_scenario

log = logging.getLogger("reproduce")


def write(out: Path, name: str, headers, rows, chart=None):
    (out / f"{name}.csv").write_text(render_rows(headers, rows, "csv"), encoding="utf-8")
    if chart is not None:
        (out / f"{name}.svg").write_text(chart, encoding="utf-8")
    log.info("wrote %s", name)


def multi_goal_sweep(model, out):
    targets = ["P-CSCF", "S-CSCF", "SIP-AS"]
    rows, risks, probs = [], [], []
    for k in range(1, len(targets) + 1):
        goals = GoalSpec(tuple(targets[:k]), GateKind.AND)
        r, p = multi_goal_threat_risk(goals, ALL, model), multi_goal_success_prob(goals, model)
        rows.append(["+".join(goals.targets), fmt_risk(r), fmt_prob(p)])
        risks.append(float(r))
        probs.append(float(p))
    labels = [f"{k} goal{'s' if k > 1 else ''}" for k in range(1, len(targets) + 1)]
    chart = render_bar_chart(labels, {"threat risk": risks, "success probability": probs},
                             x_label="AND attack goals", y_label="Value", title="Multiple attack goals")
    write(out, "multi_goal_sweep", ["goals", "risk", "prob"], rows, chart)


def probabilities(model, out):
    rows = []
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", UnreachableTargetWarning)
        for n in model.nodes:
            rows.append([n.name, fmt_prob(tree_prob(n.tree, model.vuln_catalogue)),
                         fmt_prob(network_success_prob(n.name, model))])
    write(out, "probabilities", ["function", "node", "network"], rows)


def sip_as_threats(model, out):
    node = model.node("SIP-AS")
    levels = {
        "node": [node_threat_risk(node, t, model.vuln_catalogue) for t in STRIDE],
        "path": [max_path_threat_risk("SIP-AS", t, model) for t in STRIDE],
        "network": [network_threat_risk("SIP-AS", t, model) for t in STRIDE],
    }
    rows = [[t] + [fmt_risk(levels[lv][i]) for lv in levels] for i, t in enumerate(STRIDE)]
    chart = render_bar_chart(list(STRIDE), {lv: [float(v) for v in vs] for lv, vs in levels.items()},
                             x_label="Threat", y_label="Threat risk", title="SIP-AS per-threat risk")
    write(out, "sip_as_threats", ["threat", "node", "path", "network"], rows, chart)


def ste_assessment(model, out):
    f = "S,T,E"
    rows = []
    for name in ("P-CSCF", "S-CSCF", "SIP-AS", "MGW"):
        rows.append([name, fmt_risk(node_threat_risk(model.node(name), f, model.vuln_catalogue)),
                     fmt_risk(max_path_threat_risk(name, f, model)), fmt_risk(network_threat_risk(name, f, model))])
    write(out, "ste_assessment", ["target", "node", "path", "network"], rows)


def app_servers(model, out):
    values = [subsystem_threat_risk("app-servers", t, model) for t in STRIDE]
    chart = render_bar_chart(list(STRIDE), {"app-servers": [float(v) for v in values]},
                             x_label="Individual threat", y_label="Threat risk", title="Subsystem app-servers")
    write(out, "app_servers", ["threat", "risk"], [[t, fmt_risk(v)] for t, v in zip(STRIDE, values)], chart)


def defense(model, out):
    filters = {"P-CSCF": "D", "S-CSCF": "I,E", "BGCF": "I", "SGW": "T,I", "MRFC": "ALL", "MRFP": "ALL"}
    rows = []
    for target, f in filters.items():
        patch = Patch(target, model.node(target).tree.leaves()[0])
        (d,) = evaluate_defense(model, [patch], GoalSpec((target,)), f)
        rows.append([target, str(d.filter), str(patch), fmt_risk(d.before), fmt_risk(d.after)])
    write(out, "defense", ["target", "filter", "action", "risk_before", "risk_after"], rows)


EXPERIMENTS = {f.__name__: f for f in (multi_goal_sweep, probabilities, sip_as_threats, ste_assessment,
                                       app_servers, defense)}


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--scenario", help="scenario file (default: bundled canonical scenario)")
    ap.add_argument("--out", default="results", help="output directory")
    ap.add_argument("--only", choices=sorted(EXPERIMENTS), action="append")
    args = ap.parse_args(argv)
    logging.basicConfig(level=logging.INFO, format="%(message)s")

    model = load_scenario(args.scenario) if args.scenario else load_canonical()
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for name in args.only or EXPERIMENTS:
        EXPERIMENTS[name](model, out)


if __name__ == "__main__":
    main()
