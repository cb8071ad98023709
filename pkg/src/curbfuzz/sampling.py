"""Constructive guideline-valid sampling and single-element mutation.

The sampler places each object inside a precomputed compliant region for
its kind (the placement box minus rule-forbidden buffers, inflated by the
object's circumradius so any rotation fits), picks bin rotations inside
the handle-orientation arc, then repairs pairwise conflicts (minimum
spacing, betweenness, tree/infrastructure clearance) by local projection
with resampling as the fallback.  Every returned scenario passes
``check_rules``; draws are reproducible from the supplied generator.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from shapely.geometry import Point, Polygon
from shapely.ops import unary_union
from shapely.prepared import prep

from .geometry import circumradius, direction_to, rotate_vec
from .library import Category, ObjectDef, ObjectLibrary
from .mapmodel import MapModel
from .rules import check_rules
from .scenario import DIMENSIONS, PlacedObject, Pose, Scenario, world_position

_EPS = 0.01
_HANDLE_LIMIT_DEG = math.degrees(math.acos(0.2))  # rule-11 boundary
_HANDLE_MARGIN_DEG = 2.0


@dataclass(frozen=True)
class PlacementRegion:
    """Axis bounds of the placement box in the ego frame (metres)."""

    forward_min: float = 0.0
    forward_max: float = 150.0
    right_min: float = -30.0
    right_max: float = 30.0

    def contains(self, forward: float, right: float) -> bool:
        return (
            self.forward_min <= forward <= self.forward_max
            and self.right_min <= right <= self.right_max
        )


DEFAULT_REGION = PlacementRegion()


@dataclass(frozen=True)
class MutationSteps:
    forward: float = 3.0
    right: float = 3.0
    rotation: float = 45.0


DEFAULT_STEPS = MutationSteps()


class RegionEmpty(ValueError):
    def __init__(self, name: str):
        self.object_name = name
        super().__init__(f"no rule-compliant placement region for {name!r}")


class MutationStuck(RuntimeError):
    def __init__(self, object_index: int, dimension: str):
        self.object_index = object_index
        self.dimension = dimension
        super().__init__(
            f"no rule-compliant mutation found for object {object_index}"
            f" dimension {dimension!r}"
        )


def _region_box(region: PlacementRegion, ego_start: Pose) -> Polygon:
    fx, fy = rotate_vec((1.0, 0.0), ego_start.heading_deg)
    rx, ry = fy, -fx
    corners = []
    for f, r in (
        (region.forward_min, region.right_min),
        (region.forward_max, region.right_min),
        (region.forward_max, region.right_max),
        (region.forward_min, region.right_max),
    ):
        corners.append((ego_start.x + f * fx + r * rx, ego_start.y + f * fy + r * ry))
    return Polygon(corners)


def _tree_corner_buffer(height: float) -> float:
    if height < 1.5:
        return 1.0
    if height < 5.0:
        return 1.5
    return 2.5


def compliant_region(
    map_model: MapModel,
    obj: ObjectDef,
    region: PlacementRegion,
    ego_start: Pose,
):
    """World-frame region where ``obj`` alone satisfies every map-level rule."""
    geo = map_model.geometry()
    cache = getattr(geo, "_region_cache", None)
    if cache is None:
        cache = {}
        geo._region_cache = cache
    key = (obj.type_id, region, ego_start)
    hit = cache.get(key)
    if hit is not None:
        return hit

    box = _region_box(region, ego_start)
    r = circumradius(*obj.footprint) + _EPS
    shape = box
    if obj.category is Category.FIXED_POSITION:
        shape = shape.difference(geo.roads_union.buffer(r))
        shape = shape.difference(geo.footways_union.buffer(r))
        if not geo.major_union.is_empty:
            shape = shape.difference(geo.major_union.buffer(0.6 + r))
        if not geo.minor_union.is_empty:
            shape = shape.difference(geo.minor_union.buffer(10.0 + r))
    if obj.is_tree:
        corner_buf = _tree_corner_buffer(obj.height) + r
        infra_buf = (2.0 if obj.height < 5.0 else 2.5) + r
        for pts, buf in (
            (geo.corner_points, corner_buf),
            (geo.pipe_points, corner_buf),
            (geo.lamp_points, 3.0 + r),
            (geo.infra_points, infra_buf),
            (geo.light_points, infra_buf),
        ):
            if pts:
                shape = shape.difference(unary_union([p.buffer(buf) for p in pts]))
        if geo.crossing_lines:
            shape = shape.difference(
                unary_union([ln.buffer(3.0 + r) for ln in geo.crossing_lines])
            )
    if obj.is_bin:
        shape = shape.difference(geo.roads_union.buffer(r))
        for fp_poly, fp in zip(geo.footpath_polys, map_model.footpaths):
            if fp.width - obj.width <= 1.5:
                shape = shape.difference(fp_poly.buffer(r))
        furniture = geo.lamp_points + geo.infra_points + geo.light_points
        if furniture:
            shape = shape.difference(
                unary_union([p.buffer(0.5 + r) for p in furniture])
            )
    cache[key] = (shape, prep(shape))
    return cache[key]


def _sample_point(shape_pair, rng: np.random.Generator, name: str) -> tuple[float, float]:
    shape, prepared = shape_pair
    if shape.is_empty:
        raise RegionEmpty(name)
    minx, miny, maxx, maxy = shape.bounds
    for _ in range(20000):
        x = rng.uniform(minx, maxx)
        y = rng.uniform(miny, maxy)
        if prepared.contains(Point(x, y)):
            return (x, y)
    raise RegionEmpty(name)


def _world_to_ego(point: tuple[float, float], ego_start: Pose) -> tuple[float, float]:
    fx, fy = rotate_vec((1.0, 0.0), ego_start.heading_deg)
    rx, ry = fy, -fx
    dx, dy = point[0] - ego_start.x, point[1] - ego_start.y
    return (dx * fx + dy * fy, dx * rx + dy * ry)


def _bin_rotation(
    obj: ObjectDef,
    center: tuple[float, float],
    map_model: MapModel,
    ego_start: Pose,
    rng: np.random.Generator,
) -> float:
    """Rotation with the handle inside the rule-11 arc at ``center``."""
    to_road = direction_to(map_model.geometry().roads_union, center)
    if to_road is None:
        return rng.uniform(0.0, 360.0)
    road_ang = math.degrees(math.atan2(to_road[1], to_road[0]))
    lo = road_ang + _HANDLE_LIMIT_DEG + _HANDLE_MARGIN_DEG
    hi = road_ang + 360.0 - _HANDLE_LIMIT_DEG - _HANDLE_MARGIN_DEG
    handle_world = rng.uniform(lo, hi)
    handle_local = math.degrees(math.atan2(obj.handle_axis[1], obj.handle_axis[0]))
    return (handle_world - handle_local - ego_start.heading_deg) % 360.0


def _rules_ok(scenario: Scenario, map_model: MapModel, lib: ObjectLibrary) -> bool:
    return check_rules(scenario, map_model, lib).valid


def _repair_spacing(
    scenario: Scenario,
    index: int,
    map_model: MapModel,
    lib: ObjectLibrary,
) -> Scenario | None:
    """Push object ``index`` directly away from its nearest placed
    neighbour until the 0.5 m spacing holds (rule-10 projection)."""
    obj = scenario.objects[index]
    center = world_position(scenario, obj)
    best = None
    for j, other in enumerate(scenario.objects):
        if j == index:
            continue
        oc = world_position(scenario, other)
        d = math.hypot(center[0] - oc[0], center[1] - oc[1])
        if best is None or d < best[0]:
            best = (d, oc)
    if best is None or best[0] < 1e-9:
        return None
    d, oc = best
    need = 0.5 + circumradius(*lib.get(obj.type_id).footprint) * 2 + 0.1
    if d >= need:
        return None
    ux, uy = (center[0] - oc[0]) / d, (center[1] - oc[1]) / d
    shift = need - d
    fx, fy = rotate_vec((1.0, 0.0), scenario.ego_start.heading_deg)
    rx, ry = fy, -fx
    moved = PlacedObject(
        obj.forward + shift * (ux * fx + uy * fy),
        obj.right + shift * (ux * rx + uy * ry),
        obj.rotation,
        obj.type_id,
    )
    return scenario.with_object(index, moved)


def sample_valid(
    map_model: MapModel,
    lib: ObjectLibrary,
    n: int,
    rng: np.random.Generator,
    *,
    ego_start: Pose,
    ego_destination: tuple[float, float],
    region: PlacementRegion = DEFAULT_REGION,
    type_ids: list[int] | None = None,
) -> Scenario:
    """Guideline-valid scenario with ``n`` objects; always passes
    ``check_rules``.  ``type_ids`` pins object kinds (defaults to uniform
    draws from the library)."""
    scenario = Scenario(ego_start, ego_destination, ())
    if type_ids is not None and len(type_ids) != n:
        raise ValueError("type_ids length must equal n")
    for k in range(n):
        type_id = (
            type_ids[k] if type_ids is not None else int(rng.integers(0, len(lib)))
        )
        obj_def = lib.get(type_id)
        shape_pair = compliant_region(map_model, obj_def, region, ego_start)
        placed = False
        for attempt in range(300):
            center = _sample_point(shape_pair, rng, obj_def.name)
            if obj_def.is_bin:
                rotation = _bin_rotation(obj_def, center, map_model, ego_start, rng)
            else:
                rotation = rng.uniform(0.0, 360.0)
            fwd, rgt = _world_to_ego(center, ego_start)
            candidate = Scenario(
                scenario.ego_start,
                scenario.ego_destination,
                scenario.objects + (PlacedObject(fwd, rgt, rotation, type_id),),
            )
            if _rules_ok(candidate, map_model, lib):
                scenario = candidate
                placed = True
                break
            repaired = _repair_spacing(candidate, k, map_model, lib)
            if repaired is not None and region.contains(
                repaired.objects[k].forward, repaired.objects[k].right
            ) and _rules_ok(repaired, map_model, lib):
                scenario = repaired
                placed = True
                break
        if not placed:
            raise RegionEmpty(obj_def.name)
    return scenario


def sample_uniform(
    lib: ObjectLibrary,
    n: int,
    rng: np.random.Generator,
    *,
    ego_start: Pose,
    ego_destination: tuple[float, float],
    region: PlacementRegion = DEFAULT_REGION,
) -> Scenario:
    """Uniform-random baseline: positions, rotations and types drawn
    uniformly over the placement box with no validity guarantee."""
    objects = []
    for _ in range(n):
        objects.append(
            PlacedObject(
                rng.uniform(region.forward_min, region.forward_max),
                rng.uniform(region.right_min, region.right_max),
                rng.uniform(0.0, 360.0),
                int(rng.integers(0, len(lib))),
            )
        )
    return Scenario(ego_start, ego_destination, tuple(objects))


def _candidate_with(
    scenario: Scenario, index: int, dimension: str, value: float
) -> Scenario:
    obj = scenario.objects[index]
    if dimension == "forward":
        new = PlacedObject(value, obj.right, obj.rotation, obj.type_id)
    elif dimension == "right":
        new = PlacedObject(obj.forward, value, obj.rotation, obj.type_id)
    elif dimension == "rotation":
        new = PlacedObject(obj.forward, obj.right, value % 360.0, obj.type_id)
    elif dimension == "type":
        new = PlacedObject(obj.forward, obj.right, obj.rotation, int(value))
    else:
        raise ValueError(f"unknown dimension {dimension!r}")
    return scenario.with_object(index, new)


def _cell_value(obj: PlacedObject, dimension: str) -> float:
    return {
        "forward": obj.forward,
        "right": obj.right,
        "rotation": obj.rotation,
        "type": float(obj.type_id),
    }[dimension]


def mutate_element(
    scenario: Scenario,
    object_index: int,
    dimension: str,
    rng: np.random.Generator,
    map_model: MapModel,
    lib: ObjectLibrary,
    *,
    region: PlacementRegion = DEFAULT_REGION,
    steps: MutationSteps = DEFAULT_STEPS,
    retries: int = 64,
) -> tuple[Scenario, float]:
    """Perturb exactly one matrix cell of one object, keeping the scenario
    rule-compliant.

    Continuous dimensions move by a uniform draw within the step bound
    (retrying, then line-scanning outward for the nearest compliant
    value); ``type`` swaps to a uniformly random different library id.
    Returns the new scenario and the cell delta (1.0 for type swaps, by
    the categorical-gradient convention).
    """
    if dimension not in DIMENSIONS:
        raise ValueError(f"unknown dimension {dimension!r}")
    if not 0 <= object_index < scenario.n_objects:
        raise IndexError(object_index)
    obj = scenario.objects[object_index]
    old = _cell_value(obj, dimension)

    def bounded(value: float) -> float:
        if dimension == "forward":
            return min(max(value, region.forward_min), region.forward_max)
        if dimension == "right":
            return min(max(value, region.right_min), region.right_max)
        return value

    for _ in range(retries):
        if dimension == "type":
            others = [i for i in range(len(lib)) if i != obj.type_id]
            if not others:
                break
            value = float(others[int(rng.integers(0, len(others)))])
        elif dimension == "rotation":
            value = (old + rng.uniform(-steps.rotation, steps.rotation)) % 360.0
        else:
            step = steps.forward if dimension == "forward" else steps.right
            value = bounded(old + rng.uniform(-step, step))
        if value == old:
            continue
        candidate = _candidate_with(scenario, object_index, dimension, value)
        if _rules_ok(candidate, map_model, lib):
            delta = 1.0 if dimension == "type" else value - old
            return candidate, delta

    # projection: nearest compliant value along this cell's axis
    if dimension == "type":
        order = [i for i in range(len(lib)) if i != obj.type_id]
        rng.shuffle(order)
        for tid in order:
            candidate = _candidate_with(scenario, object_index, dimension, float(tid))
            if _rules_ok(candidate, map_model, lib):
                return candidate, 1.0
    else:
        if dimension == "rotation":
            offsets: list[float] = []
            for k in range(1, 181):
                offsets.extend((float(k), float(-k)))
        else:
            lo = region.forward_min if dimension == "forward" else region.right_min
            hi = region.forward_max if dimension == "forward" else region.right_max
            offsets = []
            k = 1
            while True:
                off = 0.05 * k
                fits_up = old + off <= hi
                fits_down = old - off >= lo
                if not fits_up and not fits_down:
                    break
                if fits_up:
                    offsets.append(off)
                if fits_down:
                    offsets.append(-off)
                k += 1
        for off in offsets:
            value = (old + off) % 360.0 if dimension == "rotation" else old + off
            if value == old:
                continue
            candidate = _candidate_with(scenario, object_index, dimension, value)
            if _rules_ok(candidate, map_model, lib):
                delta = value - old
                return candidate, delta
    raise MutationStuck(object_index, dimension)
