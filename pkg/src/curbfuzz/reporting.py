"""Result serialisation, witness persistence, and the coverage table."""
from __future__ import annotations

import json
from pathlib import Path

from .formulas import format_formula
from .fuzzer import CampaignResult
from .library import ObjectLibrary
from .scenario import scenario_hash, save_scenario
from .traces import trace_to_csv

RESULT_FORMAT_VERSION = 1


def goal_dir_name(goal_id: str) -> str:
    """Filesystem-safe directory name for a goal id."""
    return goal_id.replace("/", "__").replace("(", "[").replace(")", "]")


def result_to_json(result: CampaignResult, campaign_id: str = "") -> dict:
    """Deterministically ordered JSON form of a campaign result."""
    return {
        "format_version": RESULT_FORMAT_VERSION,
        "campaign_id": campaign_id,
        "engine": result.engine,
        "seed": result.seed,
        "n_objects": result.n_objects,
        "sut_queries": result.sut_queries,
        "goals_total": len(result.goals),
        "covered_count": result.covered_count,
        "aborted": result.aborted,
        "goals": [
            {
                "id": g.goal_id,
                "law": g.law,
                "formula": format_formula(g.formula),
                "covered": g.goal_id in result.covered,
            }
            for g in result.goals
        ],
        "covered": [
            {
                "goal_id": c.goal_id,
                "law": c.law,
                "query_index": c.query_index,
                "robustness": c.robustness,
                "scenario_hash": scenario_hash(c.scenario),
                "witness_dir": f"witnesses/{goal_dir_name(c.goal_id)}",
            }
            for c in (result.covered[g.goal_id] for g in result.goals
                      if g.goal_id in result.covered)
        ],
        "per_goal_best": {
            g.goal_id: result.per_goal_best[g.goal_id]
            for g in result.goals
            if g.goal_id in result.per_goal_best
        },
        "seed_events": [
            {
                "query_index": e.query_index,
                "goal_id": e.goal_id,
                "gradient": e.gradient,
                "d_rho": e.d_rho,
                "d_cell": e.d_cell,
                "element": {"object": e.element[0], "dimension": e.element[1]},
            }
            for e in result.seed_events
        ],
        "query_log": [
            {
                "query": q.index,
                "scenario_hash": q.scenario_hash,
                "robustness": {gid: q.robustness[gid] for gid in sorted(q.robustness)},
            }
            for q in result.query_log
        ],
    }


def dump_result_json(obj: dict) -> str:
    return json.dumps(obj, indent=2) + "\n"


def save_campaign_outputs(
    result: CampaignResult,
    lib: ObjectLibrary,
    out_dir: Path,
    campaign_id: str,
) -> Path:
    """Write result.json, coverage.txt and per-goal witness files; returns
    the campaign directory."""
    campaign_dir = Path(out_dir) / campaign_id
    campaign_dir.mkdir(parents=True, exist_ok=True)
    obj = result_to_json(result, campaign_id)
    (campaign_dir / "result.json").write_text(dump_result_json(obj), encoding="utf-8")
    (campaign_dir / "coverage.txt").write_text(
        coverage_table([obj]) + "\n", encoding="utf-8"
    )
    for goal in result.goals:
        covered = result.covered.get(goal.goal_id)
        if covered is None:
            continue
        wdir = campaign_dir / "witnesses" / goal_dir_name(goal.goal_id)
        wdir.mkdir(parents=True, exist_ok=True)
        save_scenario(covered.scenario, lib, wdir / "scenario.json")
        (wdir / "trace.csv").write_text(trace_to_csv(covered.trace), encoding="utf-8")
    return campaign_dir


def coverage_table(results: list[dict]) -> str:
    """Text table of goals covered per (object count, engine) across
    repetitions (seeds), with the per-row average."""
    seeds = sorted({r["seed"] for r in results})
    groups: dict[tuple[int, str], dict[int, int]] = {}
    totals = {r["goals_total"] for r in results}
    for r in results:
        key = (r["n_objects"], r["engine"])
        groups.setdefault(key, {})[r["seed"]] = r["covered_count"]
    header = ["Num", "Engine"] + [f"R{i + 1}" for i in range(len(seeds))] + ["Avg"]
    rows = [header]
    for n, engine in sorted(groups, key=lambda k: (-k[0], k[1])):
        cells = groups[(n, engine)]
        vals = [cells.get(s) for s in seeds]
        shown = [("-" if v is None else str(v)) for v in vals]
        present = [v for v in vals if v is not None]
        avg = sum(present) / len(present) if present else 0.0
        rows.append([str(n), engine] + shown + [f"{avg:.2f}"])
    widths = [max(len(row[i]) for row in rows) for i in range(len(header))]
    lines = ["  ".join(cell.ljust(widths[i]) for i, cell in enumerate(row)).rstrip()
             for row in rows]
    total_note = (
        f"goals per campaign: {totals.pop()}" if len(totals) == 1 else
        f"goals per campaign vary: {sorted(totals)}"
    )
    return "\n".join(lines + [total_note])


def coverage_json(results: list[dict]) -> dict:
    seeds = sorted({r["seed"] for r in results})
    table = []
    for r in sorted(results, key=lambda r: (-r["n_objects"], r["engine"], r["seed"])):
        table.append(
            {
                "n_objects": r["n_objects"],
                "engine": r["engine"],
                "seed": r["seed"],
                "covered": r["covered_count"],
                "goals_total": r["goals_total"],
            }
        )
    return {"seeds": seeds, "rows": table}
