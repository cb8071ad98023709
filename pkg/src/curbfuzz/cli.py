"""Command-line front end: validate, sample, goals, fuzz, replay, report."""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .formulas import format_formula
from .fuzzer import ENGINES, CampaignAborted
from .goals import GoalExplosion, decompose, goal_count
from .library import load_library
from .manifest import ManifestError, load_manifest
from .mapmodel import MalformedMap, load_map
from .monitor import robustness
from .parsing import SpecSyntaxError, parse_law_pack
from .reporting import (
    coverage_json,
    coverage_table,
    dump_result_json,
    result_to_json,
    save_campaign_outputs,
)
from .rules import check_rules
from .sampling import RegionEmpty, sample_valid
from .scenario import load_scenario, save_scenario, scenario_to_json
from .sut import SutFailure, run_sut

EXIT_OK = 0
EXIT_FAIL = 1
EXIT_SCHEMA = 2
EXIT_SUT = 3


def _common_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--seed", type=int, default=None, help="override the RNG seed")
    p.add_argument("--workers", type=int, default=None, help="parallel SUT workers")
    p.add_argument("--out", default=None, help="override the output directory")


def cmd_validate(args) -> int:
    try:
        map_model = load_map(args.map)
        lib = load_library(args.library)
        scenario = load_scenario(args.scenario, lib)
    except (OSError, ValueError, KeyError, json.JSONDecodeError, MalformedMap) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    report = check_rules(scenario, map_model, lib)
    print(json.dumps(report.to_json(), indent=2))
    return EXIT_OK if report.valid else EXIT_FAIL


def cmd_sample(args) -> int:
    try:
        if args.manifest:
            manifest = load_manifest(args.manifest, seed=args.seed)
            map_model, lib = manifest.map_model, manifest.library
            start, dest = manifest.ego_start, manifest.ego_destination
            region = manifest.campaign.region
            n = args.n if args.n is not None else manifest.campaign.n_objects
            seed = args.seed if args.seed is not None else manifest.campaign.seed
        else:
            from .sampling import DEFAULT_REGION
            from .scenario import Pose

            if not (args.map and args.library and args.start and args.dest):
                print(
                    "error: either --manifest or all of --map/--library/--start/--dest",
                    file=sys.stderr,
                )
                return EXIT_SCHEMA
            map_model = load_map(args.map)
            lib = load_library(args.library)
            start = Pose(args.start[0], args.start[1], args.start[2])
            dest = (args.dest[0], args.dest[1])
            region = DEFAULT_REGION
            n = args.n if args.n is not None else 7
            seed = args.seed if args.seed is not None else 0
    except (OSError, ValueError, KeyError, json.JSONDecodeError, ManifestError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    try:
        scenario = sample_valid(
            map_model, lib, n, np.random.default_rng(seed),
            ego_start=start, ego_destination=dest, region=region,
        )
    except RegionEmpty as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_FAIL
    if args.out:
        save_scenario(scenario, lib, args.out)
        print(f"wrote {args.out}")
    else:
        print(json.dumps(scenario_to_json(scenario, lib), indent=2))
    return EXIT_OK


def cmd_goals(args) -> int:
    try:
        pack = parse_law_pack(Path(args.laws).read_text(encoding="utf-8"))
        rows = []
        for law in pack:
            goals = decompose(law.formula, law.name)
            assert len(goals) == goal_count(law.formula)
            for g in goals:
                rows.append(
                    {"law": law.name, "id": g.id, "formula": format_formula(g.formula)}
                )
    except (OSError, SpecSyntaxError, GoalExplosion) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    if args.json:
        print(json.dumps({"goals": rows, "total": len(rows)}, indent=2))
    else:
        id_w = max(len(r["id"]) for r in rows)
        for r in rows:
            print(f"{r['id'].ljust(id_w)}  {r['formula']}")
        per_law: dict[str, int] = {}
        for r in rows:
            per_law[r["law"]] = per_law.get(r["law"], 0) + 1
        for law, count in per_law.items():
            print(f"# {law}: {count} goal(s)")
        print(f"# total: {len(rows)}")
    return EXIT_OK


def cmd_fuzz(args) -> int:
    try:
        manifest = load_manifest(
            args.manifest, seed=args.seed, workers=args.workers, out_dir=args.out
        )
    except (ManifestError, SpecSyntaxError, GoalExplosion, MalformedMap) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    engine_name = args.engine or manifest.engine
    if engine_name not in ENGINES:
        print(f"error: unknown engine {engine_name!r}", file=sys.stderr)
        return EXIT_SCHEMA
    engine = ENGINES[engine_name]
    sut = manifest.build_sut()
    exit_code = EXIT_OK
    try:
        result = engine(
            manifest.laws,
            manifest.campaign,
            sut,
            manifest.map_model,
            manifest.library,
            ego_start=manifest.ego_start,
            ego_destination=manifest.ego_destination,
        )
    except CampaignAborted as exc:
        result = exc.result
        result.aborted = str(exc.cause)
        exit_code = EXIT_SUT
    campaign_dir = save_campaign_outputs(
        result, manifest.library, manifest.out_dir, manifest.campaign_id()
    )
    print(f"engine={result.engine} seed={result.seed} queries={result.sut_queries}")
    print(f"covered {result.covered_count}/{len(result.goals)} goals")
    for gid in result.covered:
        print(f"  {gid}")
    print(f"results: {campaign_dir}")
    if result.aborted:
        print(f"aborted: {result.aborted}", file=sys.stderr)
    return exit_code


def cmd_replay(args) -> int:
    try:
        manifest = load_manifest(args.manifest, workers=args.workers)
        witness = load_scenario(args.scenario, manifest.library)
    except (ManifestError, OSError, ValueError, KeyError, json.JSONDecodeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_SCHEMA
    from .fuzzer import goal_table

    table = {g.goal_id: g for g in goal_table(manifest.laws, manifest.campaign.goal_cap)}
    if args.goal not in table:
        print(f"error: goal id {args.goal!r} not in the law pack", file=sys.stderr)
        return EXIT_SCHEMA
    entry = table[args.goal]
    sut = manifest.build_sut()
    outcomes = []
    for i in range(args.times):
        try:
            trace = run_sut(witness, sut)
        except SutFailure as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_SUT
        value = robustness(entry.formula, trace, 0)
        outcomes.append(value)
    reproduced = all(v <= 0.0 for v in outcomes)
    print(
        json.dumps(
            {
                "law": entry.law,
                "goal_id": entry.goal_id,
                "robustness": outcomes,
                "satisfied": [v > 0.0 for v in outcomes],
                "reproduced": reproduced,
                "times": args.times,
            },
            indent=2,
        )
    )
    return EXIT_OK if reproduced else EXIT_FAIL


def cmd_report(args) -> int:
    results = []
    for path in args.results:
        try:
            results.append(json.loads(Path(path).read_text(encoding="utf-8")))
        except (OSError, json.JSONDecodeError) as exc:
            print(f"error: {exc}", file=sys.stderr)
            return EXIT_SCHEMA
    if args.json:
        print(json.dumps(coverage_json(results), indent=2))
    else:
        print(coverage_table(results))
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="curbfuzz",
        description=(
            "Search for guideline-valid roadside-object placements that drive a "
            "black-box driving system into traffic-law violations."
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check a scenario against the placement rules")
    p.add_argument("scenario")
    p.add_argument("map")
    p.add_argument("library")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("sample", help="draw a guideline-valid scenario")
    p.add_argument("--manifest", default=None)
    p.add_argument("--map", default=None)
    p.add_argument("--library", default=None)
    p.add_argument("--start", type=float, nargs=3, metavar=("X", "Y", "HEADING"))
    p.add_argument("--dest", type=float, nargs=2, metavar=("X", "Y"))
    p.add_argument("--n", type=int, default=None, help="object count")
    _common_flags(p)
    p.set_defaults(func=cmd_sample)

    p = sub.add_parser("goals", help="print the violation-goal table of a law pack")
    p.add_argument("laws")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_goals)

    p = sub.add_parser("fuzz", help="run a falsification campaign from a manifest")
    p.add_argument("manifest")
    p.add_argument("--engine", choices=sorted(ENGINES), default=None)
    _common_flags(p)
    p.set_defaults(func=cmd_fuzz)

    p = sub.add_parser("replay", help="re-execute a witness and check a goal violates")
    p.add_argument("scenario", help="witness scenario JSON")
    p.add_argument("manifest")
    p.add_argument("--goal", required=True, help="goal id to check")
    p.add_argument("--times", type=int, default=3)
    _common_flags(p)
    p.set_defaults(func=cmd_replay)

    p = sub.add_parser("report", help="render result files as a coverage table")
    p.add_argument("results", nargs="+", help="result.json paths")
    p.add_argument("--json", action="store_true")
    p.set_defaults(func=cmd_report)

    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
