"""Map model: the fixed world geometry the placement rules evaluate against."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from importlib import resources
from typing import Mapping, Sequence

from shapely.geometry import LineString, Point, Polygon
from shapely.ops import unary_union

MAP_FORMAT_VERSION = 1


class MalformedMap(ValueError):
    pass


@dataclass(frozen=True)
class Road:
    centerline: tuple[tuple[float, float], ...]
    lane_count: int
    width: float

    def __post_init__(self) -> None:
        if self.lane_count < 1:
            raise MalformedMap(f"road lane_count must be >= 1, got {self.lane_count}")
        if self.width <= 0:
            raise MalformedMap("road width must be positive")
        if len(self.centerline) < 2:
            raise MalformedMap("road centerline needs at least two points")


@dataclass(frozen=True)
class Footpath:
    polygon: tuple[tuple[float, float], ...]
    width: float


@dataclass(frozen=True)
class LightPose:
    x: float
    y: float
    heading_deg: float


@dataclass(frozen=True)
class MapModel:
    roads: tuple[Road, ...]
    footways: tuple[tuple[tuple[float, float], ...], ...] = ()
    footpaths: tuple[Footpath, ...] = ()
    footpath_crossings: tuple[tuple[tuple[float, float], tuple[float, float]], ...] = ()
    corners: tuple[tuple[float, float], ...] = ()
    pipes: tuple[tuple[float, float], ...] = ()
    lamps: tuple[tuple[float, float], ...] = ()
    fixed_infra: tuple[tuple[float, float], ...] = ()
    traffic_lights: tuple[LightPose, ...] = ()

    def __post_init__(self) -> None:
        for coords in self._all_coords():
            if not all(math.isfinite(c) for c in coords):
                raise MalformedMap("map contains non-finite coordinates")

    def _all_coords(self):
        for road in self.roads:
            for p in road.centerline:
                yield p
        for poly in self.footways:
            for p in poly:
                yield p
        for fp in self.footpaths:
            for p in fp.polygon:
                yield p
        for seg in self.footpath_crossings:
            yield seg[0]
            yield seg[1]
        for group in (self.corners, self.pipes, self.lamps, self.fixed_infra):
            yield from group
        for tl in self.traffic_lights:
            yield (tl.x, tl.y)

    def geometry(self) -> "MapGeometry":
        """Derived shapely geometry, built once and shared."""
        cached = _GEOMETRY_CACHE.get(id(self))
        if cached is None or cached[0] is not self:
            cached = (self, MapGeometry(self))
            _GEOMETRY_CACHE[id(self)] = cached
        return cached[1]


# keyed by id(); the tuple keeps the model alive so ids cannot be reused
_GEOMETRY_CACHE: dict[int, tuple[MapModel, "MapGeometry"]] = {}


def lane_count(road: Road) -> int:
    """Number of lanes of a road (>= 2 marks a main road, 1 a minor road)."""
    return road.lane_count


class MapGeometry:
    """Shapely shapes derived from a :class:`MapModel`, shared read-only."""

    def __init__(self, model: MapModel):
        self.model = model
        self.road_polys = [
            LineString(r.centerline).buffer(r.width / 2.0, cap_style="flat")
            for r in model.roads
        ]
        self.roads_union = unary_union(self.road_polys) if self.road_polys else Polygon()
        major = [p for p, r in zip(self.road_polys, model.roads) if r.lane_count >= 2]
        minor = [p for p, r in zip(self.road_polys, model.roads) if r.lane_count < 2]
        self.major_union = unary_union(major) if major else Polygon()
        self.minor_union = unary_union(minor) if minor else Polygon()
        self.footway_polys = [self._polygon(p) for p in model.footways]
        self.footways_union = (
            unary_union(self.footway_polys) if self.footway_polys else Polygon()
        )
        self.footpath_polys = [self._polygon(fp.polygon) for fp in model.footpaths]
        self.crossing_lines = [
            LineString([seg[0], seg[1]]) for seg in model.footpath_crossings
        ]
        self.corner_points = [Point(p) for p in model.corners]
        self.pipe_points = [Point(p) for p in model.pipes]
        self.lamp_points = [Point(p) for p in model.lamps]
        self.infra_points = [Point(p) for p in model.fixed_infra]
        self.light_points = [Point(tl.x, tl.y) for tl in model.traffic_lights]

    @staticmethod
    def _polygon(coords: Sequence[tuple[float, float]]) -> Polygon:
        poly = Polygon(coords)
        if not poly.is_valid or poly.is_empty:
            raise MalformedMap(f"invalid polygon: {list(coords)[:4]}...")
        return poly


def map_to_json(model: MapModel) -> dict:
    return {
        "format_version": MAP_FORMAT_VERSION,
        "roads": [
            {
                "centerline": [list(p) for p in r.centerline],
                "lane_count": r.lane_count,
                "width": r.width,
            }
            for r in model.roads
        ],
        "footways": [[list(p) for p in poly] for poly in model.footways],
        "footpaths": [
            {"polygon": [list(p) for p in fp.polygon], "width": fp.width}
            for fp in model.footpaths
        ],
        "footpath_crossings": [
            [list(seg[0]), list(seg[1])] for seg in model.footpath_crossings
        ],
        "corners": [list(p) for p in model.corners],
        "pipes": [list(p) for p in model.pipes],
        "lamps": [list(p) for p in model.lamps],
        "fixed_infra": [list(p) for p in model.fixed_infra],
        "traffic_lights": [
            {"x": tl.x, "y": tl.y, "heading_deg": tl.heading_deg}
            for tl in model.traffic_lights
        ],
    }


def _pt(p) -> tuple[float, float]:
    return (float(p[0]), float(p[1]))


def map_from_json(obj: Mapping) -> MapModel:
    try:
        return MapModel(
            roads=tuple(
                Road(
                    centerline=tuple(_pt(p) for p in r["centerline"]),
                    lane_count=int(r["lane_count"]),
                    width=float(r["width"]),
                )
                for r in obj["roads"]
            ),
            footways=tuple(tuple(_pt(p) for p in poly) for poly in obj.get("footways", [])),
            footpaths=tuple(
                Footpath(tuple(_pt(p) for p in fp["polygon"]), float(fp["width"]))
                for fp in obj.get("footpaths", [])
            ),
            footpath_crossings=tuple(
                (_pt(seg[0]), _pt(seg[1])) for seg in obj.get("footpath_crossings", [])
            ),
            corners=tuple(_pt(p) for p in obj.get("corners", [])),
            pipes=tuple(_pt(p) for p in obj.get("pipes", [])),
            lamps=tuple(_pt(p) for p in obj.get("lamps", [])),
            fixed_infra=tuple(_pt(p) for p in obj.get("fixed_infra", [])),
            traffic_lights=tuple(
                LightPose(float(t["x"]), float(t["y"]), float(t["heading_deg"]))
                for t in obj.get("traffic_lights", [])
            ),
        )
    except (KeyError, TypeError, ValueError) as exc:
        if isinstance(exc, MalformedMap):
            raise
        raise MalformedMap(f"bad map JSON: {exc}") from exc


def load_map(path) -> MapModel:
    with open(path, encoding="utf-8") as fh:
        return map_from_json(json.load(fh))


def save_map(model: MapModel, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(map_to_json(model), fh, indent=2)
        fh.write("\n")


def demo_map() -> MapModel:
    """The shipped two-road signalised intersection."""
    data = resources.files("curbfuzz.data").joinpath("demo_map.json")
    return map_from_json(json.loads(data.read_text(encoding="utf-8")))
