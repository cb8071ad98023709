"""The twelve natural-placement rules evaluated over a scenario and map.

Every rule reports a signed margin: the slack of its tightest instance,
positive iff the rule passes (rule 10 is the one non-strict rule: it
passes at margin exactly 0).  Vacuous rules (no applicable objects)
pass with margin ``None``.

Rule summary (thresholds in metres):

1.  fixed-position objects keep off roads and footways;
2.  fixed-position objects at least 0.6 from main roads (>= 2 lanes);
3.  fixed-position objects more than 10 from minor roads (1 lane);
4.  trees clear splay corners / access points by 1 (height < 1.5),
    1.5 (height < 5) or 2.5 (taller);
5.  the same height-graded clearances from scupper pipes and drains;
6.  trees at least 3 from lamp posts;
7.  trees clear fixed infrastructure, traffic lights and placed
    fixed-position objects by 2 (height < 5) or 2.5;
8.  trees at least 3 from footpath-crossing edges;
9.  bins keep off the road, and off a footpath unless the remaining
    clear width exceeds 1.5;
10. bins keep at least 0.5 from every other object (placed objects and
    street furniture: lamps, fixed infrastructure, light poles);
11. bin wheels/handles face away from the road: the dot product of the
    world handle axis with the unit vector toward the nearest road
    point stays below 0.2;
12. nothing sits between a bin and the road: for every other placed
    object o, dis(o, road) + dis(bin, o) > dis(bin, road).
"""
from __future__ import annotations

from dataclasses import dataclass

from shapely.geometry.base import BaseGeometry

from .geometry import direction_to, distance, rotate_vec
from .library import ObjectLibrary
from .mapmodel import MapModel
from .scenario import Scenario, world_footprint, world_position, world_rotation

RULE_IDS = tuple(f"rule{i}" for i in range(1, 13))

RULE_DESCRIPTIONS = {
    "rule1": "fixed objects off road and footway",
    "rule2": "fixed objects >= 0.6 m from main roads",
    "rule3": "fixed objects > 10 m from minor roads",
    "rule4": "tree clearance from splay corners and access points",
    "rule5": "tree clearance from scupper pipes and drains",
    "rule6": "trees >= 3 m from lamp posts",
    "rule7": "tree clearance from fixed infrastructure",
    "rule8": "trees >= 3 m from footpath crossing edges",
    "rule9": "bins off the road and not choking footpaths",
    "rule10": "bins >= 0.5 m from other objects",
    "rule11": "bin handles face away from the road",
    "rule12": "nothing between a bin and the road",
}


@dataclass(frozen=True)
class RuleCheck:
    rule_id: str
    passed: bool
    margin: float | None
    witness: dict | None


@dataclass(frozen=True)
class RuleReport:
    checks: tuple[RuleCheck, ...]

    @property
    def valid(self) -> bool:
        return all(c.passed for c in self.checks)

    def check(self, rule_id: str) -> RuleCheck:
        for c in self.checks:
            if c.rule_id == rule_id:
                return c
        raise KeyError(rule_id)

    def failures(self) -> tuple[RuleCheck, ...]:
        return tuple(c for c in self.checks if not c.passed)

    def to_json(self) -> dict:
        return {
            "valid": self.valid,
            "rules": {
                c.rule_id: {
                    "passed": c.passed,
                    "margin": c.margin,
                    "witness": c.witness,
                    "description": RULE_DESCRIPTIONS[c.rule_id],
                }
                for c in self.checks
            },
        }


def _tree_corner_threshold(height: float) -> float:
    if height < 1.5:
        return 1.0
    if height < 5.0:
        return 1.5
    return 2.5


def _tree_infra_threshold(height: float) -> float:
    return 2.0 if height < 5.0 else 2.5


class _Tightest:
    """Tracks the minimum-margin instance of one rule."""

    def __init__(self, rule_id: str, strict: bool = True):
        self.rule_id = rule_id
        self.strict = strict
        self.margin: float | None = None
        self.witness: dict | None = None

    def add(self, margin: float, witness: dict) -> None:
        if self.margin is None or margin < self.margin:
            self.margin = margin
            self.witness = witness

    def result(self) -> RuleCheck:
        if self.margin is None:
            return RuleCheck(self.rule_id, True, None, None)
        passed = self.margin >= 0 if not self.strict else self.margin > 0
        return RuleCheck(self.rule_id, passed, self.margin, self.witness)


def check_rules(scenario: Scenario, map_model: MapModel, lib: ObjectLibrary) -> RuleReport:
    """Evaluate all twelve rules; see the module docstring for the catalog."""
    geo = map_model.geometry()
    objs = [lib.get(o.type_id) for o in scenario.objects]
    polys = [world_footprint(scenario, o, lib) for o in scenario.objects]
    n = len(objs)

    trackers = {rid: _Tightest(rid, strict=(rid != "rule10")) for rid in RULE_IDS}

    def feature_distances(poly: BaseGeometry, points, label: str):
        for j, pt in enumerate(points):
            yield distance(poly, pt), {"feature": f"{label}[{j}]"}

    for i in range(n):
        d, poly = objs[i], polys[i]
        if d.is_fixed:
            d_road = distance(poly, geo.roads_union)
            d_fw = distance(poly, geo.footways_union)
            if d_road <= d_fw:
                trackers["rule1"].add(d_road, {"objects": [i], "feature": "road"})
            else:
                trackers["rule1"].add(d_fw, {"objects": [i], "feature": "footway"})
            if not geo.major_union.is_empty:
                trackers["rule2"].add(
                    distance(poly, geo.major_union) - 0.6,
                    {"objects": [i], "feature": "main road"},
                )
            if not geo.minor_union.is_empty:
                trackers["rule3"].add(
                    distance(poly, geo.minor_union) - 10.0,
                    {"objects": [i], "feature": "minor road"},
                )
        if d.is_tree:
            thr_corner = _tree_corner_threshold(d.height)
            for dist_val, w in feature_distances(poly, geo.corner_points, "corner"):
                trackers["rule4"].add(dist_val - thr_corner, {"objects": [i], **w})
            for dist_val, w in feature_distances(poly, geo.pipe_points, "pipe"):
                trackers["rule5"].add(dist_val - thr_corner, {"objects": [i], **w})
            for dist_val, w in feature_distances(poly, geo.lamp_points, "lamp"):
                trackers["rule6"].add(dist_val - 3.0, {"objects": [i], **w})
            thr_infra = _tree_infra_threshold(d.height)
            for dist_val, w in feature_distances(poly, geo.infra_points, "fixed_infra"):
                trackers["rule7"].add(dist_val - thr_infra, {"objects": [i], **w})
            for dist_val, w in feature_distances(poly, geo.light_points, "traffic_light"):
                trackers["rule7"].add(dist_val - thr_infra, {"objects": [i], **w})
            for j in range(n):
                if j != i and objs[j].is_fixed and not objs[j].is_tree:
                    trackers["rule7"].add(
                        distance(poly, polys[j]) - thr_infra, {"objects": [i, j]}
                    )
            for k, line in enumerate(geo.crossing_lines):
                trackers["rule8"].add(
                    distance(poly, line) - 3.0,
                    {"objects": [i], "feature": f"crossing[{k}]"},
                )
        if d.is_bin:
            road_margin = distance(poly, geo.roads_union)
            trackers["rule9"].add(road_margin, {"objects": [i], "feature": "road"})
            for k, (fp_poly, fp) in enumerate(zip(geo.footpath_polys, map_model.footpaths)):
                clear = distance(poly, fp_poly)
                residual = fp.width - d.width - 1.5
                trackers["rule9"].add(
                    max(clear, residual),
                    {"objects": [i], "feature": f"footpath[{k}]"},
                )
            for j in range(n):
                if j != i:
                    trackers["rule10"].add(
                        distance(poly, polys[j]) - 0.5, {"objects": [i, j]}
                    )
            furniture = (
                ("lamp", geo.lamp_points),
                ("fixed_infra", geo.infra_points),
                ("traffic_light", geo.light_points),
            )
            for label, points in furniture:
                for dist_val, w in feature_distances(poly, points, label):
                    trackers["rule10"].add(dist_val - 0.5, {"objects": [i], **w})
            center = world_position(scenario, scenario.objects[i])
            to_road = direction_to(geo.roads_union, center)
            if to_road is not None:
                handle = rotate_vec(d.handle_axis, world_rotation(scenario, scenario.objects[i]))
                dot = handle[0] * to_road[0] + handle[1] * to_road[1]
                trackers["rule11"].add(0.2 - dot, {"objects": [i], "dot": dot})
            bin_road = distance(poly, geo.roads_union)
            for j in range(n):
                if j == i:
                    continue
                val = (
                    distance(polys[j], geo.roads_union)
                    + distance(poly, polys[j])
                    - bin_road
                )
                trackers["rule12"].add(val, {"objects": [i, j]})

    return RuleReport(tuple(trackers[rid].result() for rid in RULE_IDS))
