"""2D helpers for object footprints and placement-rule distances.

Shapes are shapely geometries; object footprints are axis-aligned
width x depth rectangles rotated about their centre.
"""
from __future__ import annotations

import math

from shapely.geometry import LineString, Point, Polygon
from shapely.geometry.base import BaseGeometry
from shapely.ops import nearest_points


def unit_from_deg(angle_deg: float) -> tuple[float, float]:
    rad = math.radians(angle_deg)
    return (math.cos(rad), math.sin(rad))


def rotate_vec(v: tuple[float, float], angle_deg: float) -> tuple[float, float]:
    rad = math.radians(angle_deg)
    c, s = math.cos(rad), math.sin(rad)
    return (c * v[0] - s * v[1], s * v[0] + c * v[1])


def footprint_polygon(
    center: tuple[float, float], width: float, depth: float, rotation_deg: float
) -> Polygon:
    """Rectangle of ``width`` (local x) by ``depth`` (local y), rotated CCW."""
    hw, hd = width / 2.0, depth / 2.0
    corners_local = [(-hw, -hd), (hw, -hd), (hw, hd), (-hw, hd)]
    cx, cy = center
    pts = []
    for lx, ly in corners_local:
        rx, ry = rotate_vec((lx, ly), rotation_deg)
        pts.append((cx + rx, cy + ry))
    return Polygon(pts)


def circumradius(width: float, depth: float) -> float:
    return math.hypot(width, depth) / 2.0


def distance(a: BaseGeometry, b: BaseGeometry) -> float:
    """Minimum Euclidean distance between two shapes; 0 when they touch
    or overlap.  Symmetric."""
    return float(a.distance(b))


def direction_to(geom: BaseGeometry, from_point: tuple[float, float]) -> tuple[float, float] | None:
    """Unit vector from ``from_point`` toward the nearest point of ``geom``;
    None when the point lies on/inside the geometry."""
    p = Point(from_point)
    _, target = nearest_points(p, geom)
    dx, dy = target.x - p.x, target.y - p.y
    norm = math.hypot(dx, dy)
    if norm < 1e-9:
        return None
    return (dx / norm, dy / norm)


def polyline(points: list[tuple[float, float]]) -> LineString:
    return LineString(points)


def project_onto_polyline(line: LineString, point: tuple[float, float]) -> tuple[float, float]:
    """(arclength, signed lateral offset) of ``point`` relative to ``line``.

    Lateral is positive to the left of the travel direction.
    """
    p = Point(point)
    s = float(line.project(p))
    on_line = line.interpolate(s)
    ahead = line.interpolate(min(s + 0.05, line.length))
    behind = line.interpolate(max(s - 0.05, 0.0))
    tx, ty = ahead.x - behind.x, ahead.y - behind.y
    norm = math.hypot(tx, ty)
    if norm < 1e-12:
        return s, float(p.distance(on_line))
    tx, ty = tx / norm, ty / norm
    dx, dy = p.x - on_line.x, p.y - on_line.y
    lateral = tx * dy - ty * dx
    return s, float(lateral)
