"""Deterministic toy driving simulator with configurable planted misperceptions.

A point-mass ego follows a road-derived route, obeying perceived traffic
lights and stopping for perceived blockers.  Perception sees the scenario's
ground truth filtered through a list of planted bugs; each bug pairs a
geometric trigger over the placed objects with an effect on the perception
channel only (ground truth is never altered):

* ``MISCLASSIFY`` - an object reads as another class (e.g. a rotated bin
  near the road edge reads as a pedestrian);
* ``MERGE_AS`` - an adjacent pair reads as one object of a merged class;
* ``TRAFFIC_LIGHT_OVERRIDE`` - the governing light reads as a fixed colour;
* ``IGNORE`` - objects of a class are invisible to perception.

Runs are pure functions of (scenario, config, map): identical inputs give
bit-identical traces.
"""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field, replace
from importlib import resources
from typing import Mapping, Sequence

from shapely.geometry import LineString, Point

from .geometry import distance, project_onto_polyline
from .library import ObjectLibrary, UnknownTypeId
from .mapmodel import MapModel
from .scenario import Scenario, world_footprint, world_position
from .traces import Trace

TOYSIM_FORMAT_VERSION = 1

SIGNALS = (
    "time",
    "speed",
    "accel",
    "x",
    "y",
    "heading",
    "lane_id",
    "distance_to_stopline",
    "perceived_light_color",
    "actual_light_color",
    "is_stopped",
    "at_destination",
    "signal_left",
    "signal_right",
    "hazard",
)

RED, YELLOW, GREEN, NO_LIGHT = 0.0, 1.0, 2.0, 3.0
NO_STOPLINE = 9999.0


class NoRoute(ValueError):
    pass


class InvalidScenario(ValueError):
    pass


@dataclass(frozen=True)
class LightCycle:
    red_s: float = 30.0
    green_s: float = 25.0
    yellow_s: float = 5.0
    offset_s: float = 0.0

    def color(self, t: float) -> float:
        total = self.red_s + self.green_s + self.yellow_s
        phase = (t + self.offset_s) % total
        if phase < self.red_s:
            return RED
        if phase < self.red_s + self.green_s:
            return GREEN
        return YELLOW


@dataclass(frozen=True)
class PlantedBug:
    """Trigger (over object geometry/classes) plus perception effect.

    ``trigger`` kinds and their fields:

    * ``always``: classes
    * ``rotation_arc``: cls, arc_deg (lo, hi), max_road_gap
    * ``adjacent_pair``: class_a, class_b, max_gap
    * ``cluster``: classes, count, light_radius

    ``effect`` kinds: ``IGNORE``, ``MISCLASSIFY`` (to_class),
    ``MERGE_AS`` (as_class), ``TRAFFIC_LIGHT_OVERRIDE`` (color).
    The effect activates while the ego is within ``activation_range``
    metres of the trigger anchor and lingers ``persistence`` steps after.
    """

    name: str
    trigger: Mapping
    effect: Mapping
    activation_range: float = 30.0
    persistence: int = 0


@dataclass(frozen=True)
class ToySimConfig:
    dt: float = 0.1
    horizon: int = 600
    max_speed: float = 16.0
    cruise_speed: float = 14.0
    max_accel: float = 3.0
    max_decel: float = 6.0
    comfort_decel: float = 2.5
    turn_speed: float = 6.0
    stop_gap: float = 6.0
    signal_lookahead: float = 15.0
    turn_slow_lookahead: float = 12.0
    pedestrian_block_lateral: float = 5.5
    obstacle_block_lateral: float = 1.0
    light_pass_margin: float = 5.0
    caution_ahead: float = 18.0
    caution_lateral: float = 7.0
    caution_drop: float = 5.0
    hesitation_classes: tuple[str, ...] = ("bin",)
    hesitation_radius: float = 25.0
    hesitation_per_object: float = 3.5
    light_cycle: LightCycle = field(default_factory=LightCycle)
    perception_bugs: tuple[PlantedBug, ...] = ()

    def __post_init__(self) -> None:
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.horizon < 1:
            raise ValueError("horizon must be >= 1")


def config_to_json(cfg: ToySimConfig) -> dict:
    return {
        "format_version": TOYSIM_FORMAT_VERSION,
        "dt": cfg.dt,
        "horizon": cfg.horizon,
        "max_speed": cfg.max_speed,
        "cruise_speed": cfg.cruise_speed,
        "max_accel": cfg.max_accel,
        "max_decel": cfg.max_decel,
        "comfort_decel": cfg.comfort_decel,
        "turn_speed": cfg.turn_speed,
        "stop_gap": cfg.stop_gap,
        "signal_lookahead": cfg.signal_lookahead,
        "turn_slow_lookahead": cfg.turn_slow_lookahead,
        "pedestrian_block_lateral": cfg.pedestrian_block_lateral,
        "obstacle_block_lateral": cfg.obstacle_block_lateral,
        "light_pass_margin": cfg.light_pass_margin,
        "caution_ahead": cfg.caution_ahead,
        "caution_lateral": cfg.caution_lateral,
        "caution_drop": cfg.caution_drop,
        "hesitation_classes": list(cfg.hesitation_classes),
        "hesitation_radius": cfg.hesitation_radius,
        "hesitation_per_object": cfg.hesitation_per_object,
        "light_cycle": {
            "red_s": cfg.light_cycle.red_s,
            "green_s": cfg.light_cycle.green_s,
            "yellow_s": cfg.light_cycle.yellow_s,
            "offset_s": cfg.light_cycle.offset_s,
        },
        "perception_bugs": [
            {
                "name": b.name,
                "trigger": dict(b.trigger),
                "effect": dict(b.effect),
                "activation_range": b.activation_range,
                "persistence": b.persistence,
            }
            for b in cfg.perception_bugs
        ],
    }


def config_from_json(obj: Mapping) -> ToySimConfig:
    cycle = obj.get("light_cycle", {})
    return ToySimConfig(
        dt=float(obj.get("dt", 0.1)),
        horizon=int(obj.get("horizon", 600)),
        max_speed=float(obj.get("max_speed", 16.0)),
        cruise_speed=float(obj.get("cruise_speed", 14.0)),
        max_accel=float(obj.get("max_accel", 3.0)),
        max_decel=float(obj.get("max_decel", 6.0)),
        comfort_decel=float(obj.get("comfort_decel", 2.5)),
        turn_speed=float(obj.get("turn_speed", 6.0)),
        stop_gap=float(obj.get("stop_gap", 6.0)),
        signal_lookahead=float(obj.get("signal_lookahead", 15.0)),
        turn_slow_lookahead=float(obj.get("turn_slow_lookahead", 12.0)),
        pedestrian_block_lateral=float(obj.get("pedestrian_block_lateral", 5.5)),
        obstacle_block_lateral=float(obj.get("obstacle_block_lateral", 1.0)),
        light_pass_margin=float(obj.get("light_pass_margin", 5.0)),
        caution_ahead=float(obj.get("caution_ahead", 18.0)),
        caution_lateral=float(obj.get("caution_lateral", 7.0)),
        caution_drop=float(obj.get("caution_drop", 5.0)),
        hesitation_classes=tuple(obj.get("hesitation_classes", ["bin"])),
        hesitation_radius=float(obj.get("hesitation_radius", 25.0)),
        hesitation_per_object=float(obj.get("hesitation_per_object", 3.5)),
        light_cycle=LightCycle(
            red_s=float(cycle.get("red_s", 30.0)),
            green_s=float(cycle.get("green_s", 25.0)),
            yellow_s=float(cycle.get("yellow_s", 5.0)),
            offset_s=float(cycle.get("offset_s", 0.0)),
        ),
        perception_bugs=tuple(
            PlantedBug(
                name=str(b["name"]),
                trigger=dict(b["trigger"]),
                effect=dict(b["effect"]),
                activation_range=float(b.get("activation_range", 30.0)),
                persistence=int(b.get("persistence", 0)),
            )
            for b in obj.get("perception_bugs", [])
        ),
    )


def load_config(path) -> ToySimConfig:
    with open(path, encoding="utf-8") as fh:
        return config_from_json(json.load(fh))


def default_config() -> ToySimConfig:
    """Shipped configuration including the default planted-bug pack."""
    data = resources.files("curbfuzz.data").joinpath("toy_config.json")
    return config_from_json(json.loads(data.read_text(encoding="utf-8")))


# -- route construction ------------------------------------------------


def build_route(map_model: MapModel, start: tuple[float, float],
                dest: tuple[float, float]) -> LineString:
    """Waypoint polyline from start to destination along map roads.

    Start and destination must each lie on (or beside) a road; routes
    across two roads pass through their centerline intersection with a
    short corner cut.  Raises :class:`NoRoute` otherwise.
    """
    geo = map_model.geometry()
    lines = [LineString(r.centerline) for r in map_model.roads]
    if not lines:
        raise NoRoute("map has no roads")

    def nearest_road(p) -> int:
        dists = [ln.distance(Point(p)) for ln in lines]
        idx = min(range(len(dists)), key=dists.__getitem__)
        if dists[idx] > map_model.roads[idx].width:
            raise NoRoute(f"point {p} is not on any road")
        return idx

    ia, ib = nearest_road(start), nearest_road(dest)
    if ia == ib:
        return LineString([start, dest])
    cross = lines[ia].intersection(lines[ib])
    if cross.is_empty:
        raise NoRoute("start and destination roads do not intersect")
    p = (cross.x, cross.y) if cross.geom_type == "Point" else (
        cross.centroid.x, cross.centroid.y
    )
    d_in = math.hypot(p[0] - start[0], p[1] - start[1])
    d_out = math.hypot(dest[0] - p[0], dest[1] - p[1])
    if d_in < 12.0 or d_out < 10.0:
        raise NoRoute("route legs too short to turn through the junction")
    a_pt = (
        start[0] + (p[0] - start[0]) * (d_in - 10.0) / d_in,
        start[1] + (p[1] - start[1]) * (d_in - 10.0) / d_in,
    )
    b_pt = (p[0] + (dest[0] - p[0]) * 8.0 / d_out, p[1] + (dest[1] - p[1]) * 8.0 / d_out)
    return LineString([start, a_pt, b_pt, dest])


def _heading_deg(p0, p1) -> float:
    return math.degrees(math.atan2(p1[1] - p0[1], p1[0] - p0[0])) % 360.0


@dataclass
class _Turn:
    s: float
    change: float  # signed heading change, positive = left


def _route_turns(route: LineString) -> list[_Turn]:
    coords = list(route.coords)
    turns = []
    s = 0.0
    for i in range(1, len(coords) - 1):
        s += math.hypot(
            coords[i][0] - coords[i - 1][0], coords[i][1] - coords[i - 1][1]
        )
        h0 = _heading_deg(coords[i - 1], coords[i])
        h1 = _heading_deg(coords[i], coords[i + 1])
        change = (h1 - h0 + 180.0) % 360.0 - 180.0
        if abs(change) > 20.0:
            turns.append(_Turn(s, change))
    return turns


# -- perception --------------------------------------------------------


def _in_arc(angle: float, lo: float, hi: float) -> bool:
    a = angle % 360.0
    lo, hi = lo % 360.0, hi % 360.0
    if lo <= hi:
        return lo <= a <= hi
    return a >= lo or a <= hi


@dataclass
class _EffectInstance:
    bug: PlantedBug
    anchor: tuple[float, float]
    affected: frozenset[int]
    remaining: int = 0
    active: bool = False

    def update(self, ego: tuple[float, float]) -> None:
        d = math.hypot(ego[0] - self.anchor[0], ego[1] - self.anchor[1])
        if d <= self.bug.activation_range:
            self.active = True
            self.remaining = self.bug.persistence
        elif self.remaining > 0:
            self.active = True
            self.remaining -= 1
        else:
            self.active = False


def _trigger_instances(
    bug: PlantedBug,
    scenario: Scenario,
    map_model: MapModel,
    lib: ObjectLibrary,
    polys,
    centers,
) -> list[_EffectInstance]:
    trig = bug.trigger
    kind = trig["kind"]
    geo = map_model.geometry()
    defs = [lib.get(o.type_id) for o in scenario.objects]
    out: list[_EffectInstance] = []
    if kind == "always":
        classes = set(trig["classes"])
        for i, d in enumerate(defs):
            if d.classes & classes:
                out.append(_EffectInstance(bug, centers[i], frozenset({i})))
    elif kind == "rotation_arc":
        cls = trig["cls"]
        lo, hi = trig["arc_deg"]
        max_gap = float(trig["max_road_gap"])
        for i, d in enumerate(defs):
            if cls in d.classes and _in_arc(scenario.objects[i].rotation, lo, hi):
                if distance(polys[i], geo.roads_union) <= max_gap:
                    out.append(_EffectInstance(bug, centers[i], frozenset({i})))
    elif kind == "adjacent_pair":
        ca, cb = trig["class_a"], trig["class_b"]
        max_gap = float(trig["max_gap"])
        for i, di in enumerate(defs):
            for j, dj in enumerate(defs):
                if i >= j:
                    continue
                pair_ok = (ca in di.classes and cb in dj.classes) or (
                    cb in di.classes and ca in dj.classes
                )
                if pair_ok and distance(polys[i], polys[j]) <= max_gap:
                    anchor = (
                        (centers[i][0] + centers[j][0]) / 2.0,
                        (centers[i][1] + centers[j][1]) / 2.0,
                    )
                    out.append(_EffectInstance(bug, anchor, frozenset({i, j})))
    elif kind == "cluster":
        classes = set(trig["classes"])
        count = int(trig["count"])
        radius = float(trig["light_radius"])
        for lp in geo.light_points:
            members = [
                i
                for i, d in enumerate(defs)
                if d.classes & classes
                and math.hypot(centers[i][0] - lp.x, centers[i][1] - lp.y) <= radius
            ]
            if len(members) >= count:
                out.append(_EffectInstance(bug, (lp.x, lp.y), frozenset(members)))
    else:
        raise ValueError(f"unknown trigger kind {kind!r}")
    return out


# -- the simulator -----------------------------------------------------


def run_toy_sim(
    scenario: Scenario, cfg: ToySimConfig, map_model: MapModel, lib: ObjectLibrary
) -> Trace:
    """Simulate one run; returns a trace sampled every ``cfg.dt`` seconds,
    ending early once the destination is reached."""
    try:
        defs = [lib.get(o.type_id) for o in scenario.objects]
    except UnknownTypeId as exc:
        raise InvalidScenario(str(exc)) from exc

    route = build_route(
        map_model, (scenario.ego_start.x, scenario.ego_start.y), scenario.ego_destination
    )
    s_dest = route.length
    geo = map_model.geometry()
    polys = [world_footprint(scenario, o, lib) for o in scenario.objects]
    centers = [world_position(scenario, o) for o in scenario.objects]

    # static per-object route geometry
    obj_s_lat = [project_onto_polyline(route, c) for c in centers]
    obj_route_gap = [distance(p, route) for p in polys]

    # stoplines from traffic-light poses: the light's projection onto the
    # route, kept only when the route heading roughly matches the pose
    stoplines: list[tuple[float, int]] = []  # (arclength, light index)
    for li, tl in enumerate(map_model.traffic_lights):
        s_proj, _ = project_onto_polyline(route, (tl.x, tl.y))
        ahead = route.interpolate(min(s_proj + 0.5, s_dest))
        behind = route.interpolate(max(s_proj - 0.5, 0.0))
        hdg = _heading_deg((behind.x, behind.y), (ahead.x, ahead.y))
        diff = abs((hdg - tl.heading_deg + 180.0) % 360.0 - 180.0)
        if diff <= 60.0:
            stoplines.append((s_proj, li))
    stoplines.sort()

    turns = _route_turns(route)

    instances: list[_EffectInstance] = []
    for bug in cfg.perception_bugs:
        instances.extend(
            _trigger_instances(bug, scenario, map_model, lib, polys, centers)
        )

    # perception-load hesitation: clutter near a light delays the resume
    hes_classes = set(cfg.hesitation_classes)
    hes_counts: dict[int, int] = {}
    for li, tl in enumerate(map_model.traffic_lights):
        hes_counts[li] = sum(
            1
            for i, d in enumerate(defs)
            if d.classes & hes_classes
            and math.hypot(centers[i][0] - tl.x, centers[i][1] - tl.y)
            <= cfg.hesitation_radius
        )

    road_lines = [LineString(r.centerline) for r in map_model.roads]

    scenes = []
    s, v, prev_v = 0.0, 0.0, 0.0
    green_hold_until: float | None = None
    for k in range(cfg.horizon):
        t = k * cfg.dt
        pos = route.interpolate(min(s, s_dest))
        ahead = route.interpolate(min(s + 0.5, s_dest))
        heading = _heading_deg((pos.x, pos.y), (ahead.x, ahead.y)) if s + 0.5 <= s_dest else _heading_deg(
            (route.interpolate(max(s_dest - 0.5, 0.0)).x, route.interpolate(max(s_dest - 0.5, 0.0)).y),
            (pos.x, pos.y),
        )
        lane_id = float(
            min(range(len(road_lines)), key=lambda i: road_lines[i].distance(pos))
        )

        governing = None
        for s_line, li in stoplines:
            if s < s_line + cfg.light_pass_margin:
                governing = (s_line, li)
                break
        if governing is not None:
            dist_stop = governing[0] - s
            actual_color = cfg.light_cycle.color(t)
        else:
            dist_stop = NO_STOPLINE
            actual_color = NO_LIGHT

        for inst in instances:
            inst.update((pos.x, pos.y))

        perceived_color = actual_color
        if governing is not None:
            for inst in instances:
                if inst.active and inst.bug.effect["kind"] == "TRAFFIC_LIGHT_OVERRIDE":
                    perceived_color = {
                        "red": RED,
                        "yellow": YELLOW,
                        "green": GREEN,
                    }[inst.bug.effect["color"]]

        # perceived object classes
        ignored: set[int] = set()
        reclassified: dict[int, str] = {}
        merged_anchors: list[tuple[float, float]] = []
        for inst in instances:
            if not inst.active:
                continue
            kind = inst.bug.effect["kind"]
            if kind == "IGNORE":
                ignored |= inst.affected
            elif kind == "MISCLASSIFY":
                for i in inst.affected:
                    reclassified[i] = inst.bug.effect["to_class"]
            elif kind == "MERGE_AS":
                merged_anchors.append(inst.anchor)
                ignored |= inst.affected  # members replaced by the merged blob

        # stop targets
        targets: list[float] = []
        if governing is not None:
            s_line, light_idx = governing
            if perceived_color in (RED, YELLOW):
                if s < s_line - 0.05:
                    targets.append(s_line - 0.5)
            elif perceived_color == GREEN:
                if green_hold_until is None and v < 0.05 and 0.0 < dist_stop < 10.0:
                    green_hold_until = t + cfg.hesitation_per_object * hes_counts[light_idx]
                if (
                    green_hold_until is not None
                    and t < green_hold_until
                    and s < s_line - 0.05
                ):
                    targets.append(s_line - 0.5)
        for i in range(len(defs)):
            if i in ignored:
                continue
            s_obj, lat = obj_s_lat[i]
            if s_obj <= s + 0.05:
                continue
            if i in reclassified:
                if abs(lat) <= cfg.pedestrian_block_lateral:
                    targets.append(s_obj - cfg.stop_gap)
            elif obj_route_gap[i] <= cfg.obstacle_block_lateral:
                targets.append(s_obj - cfg.stop_gap)
        for anchor in merged_anchors:
            s_obj, lat = project_onto_polyline(route, anchor)
            if s_obj > s + 0.05 and abs(lat) <= cfg.pedestrian_block_lateral:
                targets.append(s_obj - cfg.stop_gap)

        # allowed speed from turn zones and roadside-clutter caution
        v_allowed = cfg.cruise_speed
        for i in range(len(defs)):
            if i in ignored:
                continue
            s_obj, lat = obj_s_lat[i]
            ahead = s_obj - s
            if 0.0 < ahead <= cfg.caution_ahead and abs(lat) <= cfg.caution_lateral:
                w = ((cfg.caution_ahead - ahead) / cfg.caution_ahead) * (
                    (cfg.caution_lateral - abs(lat)) / cfg.caution_lateral
                )
                v_allowed = min(v_allowed, cfg.cruise_speed - cfg.caution_drop * w)
        demand = 0.0
        hold = False
        vz = cfg.turn_speed
        for turn in turns:
            if turn.s - cfg.turn_slow_lookahead <= s <= turn.s + 2.0:
                v_allowed = min(v_allowed, vz)
            elif s < turn.s and v > vz + 0.5:
                gap_z = turn.s - cfg.turn_slow_lookahead - s
                if gap_z > 2.0:
                    demand = max(
                        demand, (v * v - vz * vz) / (2.0 * gap_z + (v - vz) * cfg.dt)
                    )
        for s_t in targets:
            gap = s_t - s
            if gap <= 0.6:
                if v <= 2.2:
                    hold = True  # settling at (or just short of) the target
                else:
                    demand = cfg.max_decel  # overrun: cannot stop in time
            else:
                # discrete-integrator form: braking at this rate lands v=0
                # at the target without a terminal spike
                demand = max(demand, (v * v) / (2.0 * gap + v * cfg.dt))

        # indicators
        signal_left = signal_right = 0.0
        for turn in turns:
            if turn.s - cfg.signal_lookahead <= s <= turn.s + 2.0:
                if turn.change > 0:
                    signal_left = 1.0
                else:
                    signal_right = 1.0

        accel = (v - prev_v) / cfg.dt if k > 0 else 0.0
        at_dest = 1.0 if s >= s_dest - 0.5 else 0.0
        scenes.append(
            {
                "time": t,
                "speed": v,
                "accel": accel,
                "x": pos.x,
                "y": pos.y,
                "heading": heading,
                "lane_id": lane_id,
                "distance_to_stopline": dist_stop,
                "perceived_light_color": perceived_color,
                "actual_light_color": actual_color,
                "is_stopped": 1.0 if v < 0.05 else 0.0,
                "at_destination": at_dest,
                "signal_left": signal_left,
                "signal_right": signal_right,
                "hazard": 0.0,
            }
        )
        if at_dest:
            break

        prev_v = v
        if demand >= cfg.comfort_decel:
            v = max(v - min(demand, cfg.max_decel) * cfg.dt, 0.0)
        elif hold:
            v = max(v - cfg.comfort_decel * cfg.dt, 0.0)
        elif v > v_allowed:
            v = max(v - cfg.comfort_decel * cfg.dt, v_allowed)
        elif v < v_allowed:
            v = min(v + cfg.max_accel * cfg.dt, v_allowed, cfg.max_speed)
        s = s + v * cfg.dt

    return Trace.from_scenes(scenes, cfg.dt)


class ToySimSut:
    """SUT adapter for the toy simulator: scenario in, trace out."""

    parallel_safe = True

    def __init__(self, cfg: ToySimConfig, map_model: MapModel, lib: ObjectLibrary):
        self.cfg = cfg
        self.map_model = map_model
        self.lib = lib

    @property
    def declared_signals(self) -> tuple[str, ...]:
        return SIGNALS

    def run(self, scenario: Scenario) -> Trace:
        return run_toy_sim(scenario, self.cfg, self.map_model, self.lib)
