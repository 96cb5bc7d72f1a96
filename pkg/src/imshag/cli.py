"""Command-line entry point: ``imshag <validate|assess|paths|group|defense|ingest>``.

Exit status: 0 success, 1 domain error, 2 I/O or parse error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
import warnings
from pathlib import Path

from . import metrics, nvd
from .defense import Isolate, Patch, evaluate_defense, score_defenses
from .errors import FetchError, ImsHagError, ModelValidationError, ScenarioParseError
from .metrics import ALL, Level, ThreatFilter, UnreachableTargetWarning, assess
from .model import WEIGHT_SUM_TOLERANCE, GateKind, GoalSpec, StrideWeights, validate_model
from .paths import enumerate_paths
from .report import FORMATS, fmt_prob, fmt_risk, render_bar_chart, render_rows
from .scenario import canonical_scenario_path, load_scenario, parse_scenario

log = logging.getLogger("imshag")

EXIT_OK, EXIT_DOMAIN, EXIT_IO = 0, 1, 2


class CliError(ImsHagError):
    pass


def _split(text: str) -> list[str]:
    return [p.strip() for p in text.split(",") if p.strip()]


def _load(args):
    return load_scenario(args.scenario)


def _emit(text: str, out):
    if out:
        Path(out).write_text(text, encoding="utf-8")
        print(f"wrote {out}", file=sys.stderr)
    else:
        sys.stdout.write(text)


def _goals(args, model) -> GoalSpec:
    targets = _split(args.goals) if args.goals else list(model.goals.targets)
    condition = GateKind(args.condition) if args.condition else model.goals.condition
    for t in targets:
        model.node(t)
    return GoalSpec(tuple(targets), condition)


def cmd_validate(args) -> int:
    try:
        doc = json.loads(Path(args.scenario).read_text(encoding="utf-8"))
    except json.JSONDecodeError as exc:
        raise ScenarioParseError(exc.msg, line=exc.lineno) from None
    violations = validate_model(parse_scenario(doc))
    for v in violations:
        print(v)
    if violations:
        return EXIT_DOMAIN
    print(f"{args.scenario}: valid")
    return EXIT_OK


def cmd_assess(args) -> int:
    model = _load(args)
    goals = _goals(args, model)
    f = ThreatFilter.parse(args.threats)
    result = assess(model, goals, f, Level(args.level), tg_mode=args.goal_mode)
    for w in result.warnings:
        print(f"warning: {w}", file=sys.stderr)
    rows = result.rows()
    if args.format == "svg":
        series = {t: [float(r.breakdown[t]) for r in rows] for t in f.letters}
        text = render_bar_chart([r.target for r in rows], series, x_label="Attack goals",
                                y_label=f"Threat risk ({args.level} level)",
                                title=f"Threat-specific risk, filter {f}")
    else:
        table = [[r.target, r.level.value, str(r.filter), fmt_risk(r.risk), fmt_prob(r.prob), str(r.paths)]
                 for r in rows]
        text = render_rows(["target", "level", "filter", "risk", "prob", "paths"], table, args.format)
    _emit(text, args.out)
    return EXIT_OK


def cmd_paths(args) -> int:
    model = _load(args)
    paths = enumerate_paths(model, args.goal)
    if not paths:
        print(f"warning: {args.goal} is unreachable from every entry node", file=sys.stderr)
    rows = [[str(k), str(p), str(len(p)), fmt_risk(metrics.path_threat_risk(p, ALL, model)),
             fmt_prob(metrics.path_success_prob(p, model))] for k, p in enumerate(paths, 1)]
    fmt = "table" if args.format == "svg" else args.format
    _emit(render_rows(["#", "path", "length", "risk", "prob"], rows, fmt), args.out)
    return EXIT_OK


def cmd_group(args) -> int:
    model = _load(args)
    f = ThreatFilter.parse(args.threats)
    values = {t: metrics.subsystem_threat_risk(args.group, t, model) for t in f.letters}
    if args.format == "svg":
        text = render_bar_chart(list(values), {args.group: [float(v) for v in values.values()]},
                                x_label="Individual threat", y_label="Threat risk",
                                title=f"Subsystem {args.group}")
    else:
        text = render_rows(["threat", "risk"], [[t, fmt_risk(v)] for t, v in values.items()], args.format)
    _emit(text, args.out)
    return EXIT_OK


def _parse_threat_map(text: str | None) -> dict[str, ThreatFilter]:
    out = {}
    for item in (text or "").split(";"):
        if not item.strip():
            continue
        if "=" not in item:
            raise CliError(f"expected target=THREATS in --threats-per-goal, got {item!r}")
        target, threats = item.split("=", 1)
        out[target.strip()] = ThreatFilter.parse(threats)
    return out


def _parse_actions(args):
    actions = []
    for spec in args.patch or []:
        node, sep, cve = spec.partition(":")
        if not sep:
            raise CliError(f"--patch expects NODE:CVE, got {spec!r}")
        actions.append(Patch(node, cve))
    actions += [Isolate(n) for n in args.isolate or []]
    return actions


def cmd_defense(args) -> int:
    model = _load(args)
    goals = _goals(args, model)
    per_goal = _parse_threat_map(args.threats_per_goal)
    for t in per_goal:
        model.node(t)
    default = ThreatFilter.parse(args.threats)
    filters = {t: per_goal.get(t, default) for t in goals.targets}
    actions = _parse_actions(args)

    if args.rank:
        ranked = score_defenses(model, actions, goals, filters)
        rows = [[str(k), str(a), fmt_risk(red)] for k, (a, red) in enumerate(ranked, 1)]
        _emit(render_rows(["rank", "action", "risk_reduction"], rows, args.format), args.out)
        return EXIT_OK

    plans = [[a] for a in actions] if args.each else [actions]
    rows = []
    for plan in plans:
        label = "; ".join(str(a) for a in plan) or "none"
        for d in evaluate_defense(model, plan, goals, filters):
            rows.append([d.target, str(d.filter), label, fmt_risk(d.before), fmt_risk(d.after),
                         fmt_prob(d.prob_before), fmt_prob(d.prob_after)])
    headers = ["target", "filter", "actions", "risk_before", "risk_after", "prob_before", "prob_after"]
    _emit(render_rows(headers, rows, args.format), args.out)
    return EXIT_OK


def _parse_stride(text: str) -> StrideWeights:
    weights = {}
    for item in _split(text):
        key, sep, value = item.partition("=")
        if not sep:
            raise CliError(f"--stride expects S=0.1,T=0.2,..., got {item!r}")
        try:
            weights[key.strip().upper()] = float(value)
        except ValueError:
            raise CliError(f"--stride: {value!r} is not a number") from None
    try:
        return StrideWeights.from_mapping(weights)
    except ValueError as exc:
        raise CliError(str(exc)) from None


def cmd_ingest(args) -> int:
    path = Path(args.scenario)
    doc = json.loads(path.read_text(encoding="utf-8"))
    if args.source_file:
        record = json.loads(Path(args.source_file).read_text(encoding="utf-8"))
    else:
        record = nvd.fetch_nvd(args.cve, args.cache, offline=args.offline)
    extract = nvd.parse_nvd_record(record)
    if extract.cve_id != args.cve:
        raise CliError(f"record is for {extract.cve_id}, not {args.cve}")

    vulns = doc.setdefault("vulnerabilities", [])
    existing = next((v for v in vulns if v.get("cve") == args.cve), None)
    if args.stride:
        weights = _parse_stride(args.stride)
    elif existing is not None:
        weights = StrideWeights.from_mapping(existing["stride"])
    else:
        weights = None
    if weights is None:
        raise CliError(f"no STRIDE weights for new entry {args.cve}; pass --stride")
    tolerance = doc.get("weight_sum_tolerance", WEIGHT_SUM_TOLERANCE)
    rec = nvd.merge_weights([extract], {args.cve: weights}, tolerance)[args.cve]

    entry = {"cve": rec.cve_id, "aim": rec.aim, "es": rec.es, "stride": rec.stride.as_dict()}
    if rec.description:
        entry["description"] = rec.description
    if existing is not None:
        vulns[vulns.index(existing)] = entry
        action = "updated"
    else:
        vulns.append(entry)
        action = "added"
    violations = validate_model(parse_scenario(doc))
    if violations:
        raise ModelValidationError(violations)
    path.write_text(json.dumps(doc, indent=2, ensure_ascii=False) + "\n", encoding="utf-8")
    print(f"{action} {args.cve} (aim {rec.aim}, es {rec.es}) in {path}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="imshag", description="Threat-specific risk assessment for IMS networks.")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    def scenario_arg(sp, required=False):
        sp.add_argument("--scenario", required=required, default=None if required else str(canonical_scenario_path()),
                        help="scenario JSON file (default: bundled IMS scenario)")

    def output_args(sp, formats=FORMATS):
        sp.add_argument("--format", choices=formats, default="table")
        sp.add_argument("--out", help="write to file instead of stdout")

    sp = sub.add_parser("validate", help="check a scenario file")
    sp.add_argument("scenario", nargs="?", default=str(canonical_scenario_path()))
    sp.set_defaults(func=cmd_validate)

    sp = sub.add_parser("assess", help="threat risk and success probability per goal")
    scenario_arg(sp)
    sp.add_argument("--goals", help="comma-separated target names (default: scenario goals)")
    sp.add_argument("--condition", choices=[k.value for k in GateKind])
    sp.add_argument("--threats", default="ALL", help="STRIDE letters, e.g. S,T,E, or ALL")
    sp.add_argument("--level", choices=[lv.value for lv in Level], default="network")
    sp.add_argument("--goal-mode", choices=("node", "path", "network"), default="node",
                    help="per-goal value used when combining several goals")
    output_args(sp)
    sp.set_defaults(func=cmd_assess)

    sp = sub.add_parser("paths", help="list attack paths to a goal")
    scenario_arg(sp)
    sp.add_argument("--goal", required=True)
    output_args(sp, ("table", "csv", "md"))
    sp.set_defaults(func=cmd_paths)

    sp = sub.add_parser("group", help="per-threat risk of a node group")
    scenario_arg(sp)
    sp.add_argument("--group", required=True)
    sp.add_argument("--threats", default="ALL")
    output_args(sp)
    sp.set_defaults(func=cmd_group)

    sp = sub.add_parser("defense", help="before/after risk for patching or isolation")
    scenario_arg(sp)
    sp.add_argument("--patch", action="append", metavar="NODE:CVE")
    sp.add_argument("--isolate", action="append", metavar="NODE")
    sp.add_argument("--goals")
    sp.add_argument("--condition", choices=[k.value for k in GateKind])
    sp.add_argument("--threats", default="ALL", help="filter for goals absent from --threats-per-goal")
    sp.add_argument("--threats-per-goal", metavar="T=D;T2=I,E")
    sp.add_argument("--each", action="store_true", help="evaluate each action on its own")
    sp.add_argument("--rank", action="store_true", help="rank actions by total risk reduction")
    output_args(sp, ("table", "csv", "md"))
    sp.set_defaults(func=cmd_defense)

    sp = sub.add_parser("ingest", help="import vulnerability data into a scenario")
    isub = sp.add_subparsers(dest="source", required=True)
    np_ = isub.add_parser("nvd", help="add or update an entry from an NVD CVE record")
    scenario_arg(np_, required=True)
    np_.add_argument("--cve", required=True)
    src = np_.add_mutually_exclusive_group(required=True)
    src.add_argument("--from", dest="source_file", metavar="FILE", help="NVD API 2.0 JSON file")
    src.add_argument("--fetch", action="store_true", help="fetch from the NVD API (cached)")
    np_.add_argument("--cache", default=None, help="cache directory (default: $IMSHAG_CACHE)")
    np_.add_argument("--offline", action="store_true", help="only use the cache")
    np_.add_argument("--stride", help="weights, e.g. S=0.15,T=0.15,D=0.7")
    np_.set_defaults(func=cmd_ingest)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", UnreachableTargetWarning)
            return args.func(args)
    except (ScenarioParseError, OSError, json.JSONDecodeError, FetchError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except ImsHagError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN


if __name__ == "__main__":
    sys.exit(main())
