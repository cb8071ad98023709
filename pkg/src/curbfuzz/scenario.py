"""Scenario data model and its n x 4 matrix encoding.

Each placed object is described by four values - forward, right,
rotation, type - relative to the ego start pose: ``forward`` metres
along the initial heading, ``right`` metres to the ego's right
(negative = left), a placement angle in degrees, and an object-library
type id.  The matrix encoding stacks one row per object in placement
order, storing the type id as a real.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, replace
from typing import Mapping

import numpy as np
from shapely.geometry import Polygon

from .geometry import footprint_polygon, rotate_vec
from .library import ObjectLibrary, UnknownTypeId

SCENARIO_FORMAT_VERSION = 1

DIMENSIONS = ("forward", "right", "rotation", "type")


class NonFiniteValue(ValueError):
    pass


@dataclass(frozen=True)
class Pose:
    x: float
    y: float
    heading_deg: float = 0.0


@dataclass(frozen=True)
class PlacedObject:
    forward: float
    right: float
    rotation: float
    type_id: int

    def __post_init__(self) -> None:
        if not all(map(math.isfinite, (self.forward, self.right, self.rotation))):
            raise NonFiniteValue(f"non-finite placement: {self}")
        object.__setattr__(self, "rotation", self.rotation % 360.0)


@dataclass(frozen=True)
class Scenario:
    ego_start: Pose
    ego_destination: tuple[float, float]
    objects: tuple[PlacedObject, ...] = ()

    @property
    def n_objects(self) -> int:
        return len(self.objects)

    def with_object(self, index: int, obj: PlacedObject) -> "Scenario":
        objs = list(self.objects)
        objs[index] = obj
        return replace(self, objects=tuple(objs))


def world_position(scenario: Scenario, obj: PlacedObject) -> tuple[float, float]:
    """Object centre in world coordinates (ego frame: +forward ahead,
    +right to the ego's right)."""
    start = scenario.ego_start
    fx, fy = rotate_vec((1.0, 0.0), start.heading_deg)
    rx, ry = fy, -fx  # right-hand side of the heading
    return (
        start.x + obj.forward * fx + obj.right * rx,
        start.y + obj.forward * fy + obj.right * ry,
    )


def world_rotation(scenario: Scenario, obj: PlacedObject) -> float:
    return (scenario.ego_start.heading_deg + obj.rotation) % 360.0


def world_footprint(scenario: Scenario, obj: PlacedObject, lib: ObjectLibrary) -> Polygon:
    d = lib.get(obj.type_id)
    return footprint_polygon(
        world_position(scenario, obj), d.footprint[0], d.footprint[1],
        world_rotation(scenario, obj),
    )


def encode(scenario: Scenario) -> np.ndarray:
    """n x 4 matrix, row k = (forward, right, rotation, type_id) of object k."""
    out = np.zeros((scenario.n_objects, 4), dtype=np.float64)
    for i, obj in enumerate(scenario.objects):
        out[i] = (obj.forward, obj.right, obj.rotation, float(obj.type_id))
    return out


def decode(
    matrix: np.ndarray,
    ego_start: Pose,
    ego_destination: tuple[float, float],
    lib: ObjectLibrary,
) -> Scenario:
    """Inverse of :func:`encode`; rotation re-normalised into [0, 360)."""
    matrix = np.asarray(matrix, dtype=np.float64)
    if matrix.size == 0:
        matrix = matrix.reshape(0, 4)
    if matrix.ndim != 2 or matrix.shape[1] != 4:
        raise ValueError(f"expected an n x 4 matrix, got shape {matrix.shape}")
    if not np.all(np.isfinite(matrix)):
        raise NonFiniteValue("encoded scenario contains non-finite values")
    objects = []
    for row in matrix:
        type_id = int(round(row[3]))
        lib.get(type_id)  # raises UnknownTypeId
        objects.append(
            PlacedObject(float(row[0]), float(row[1]), float(row[2]) % 360.0, type_id)
        )
    return Scenario(ego_start, ego_destination, tuple(objects))


def scenario_to_json(scenario: Scenario, lib: ObjectLibrary) -> dict:
    return {
        "format_version": SCENARIO_FORMAT_VERSION,
        "ego_start": {
            "x": scenario.ego_start.x,
            "y": scenario.ego_start.y,
            "heading_deg": scenario.ego_start.heading_deg,
        },
        "ego_destination": {
            "x": scenario.ego_destination[0],
            "y": scenario.ego_destination[1],
        },
        "objects": [
            {
                "forward": o.forward,
                "right": o.right,
                "rotation_deg": o.rotation,
                "type": lib.get(o.type_id).name,
            }
            for o in scenario.objects
        ],
    }


def scenario_from_json(obj: Mapping, lib: ObjectLibrary) -> Scenario:
    start = obj["ego_start"]
    dest = obj["ego_destination"]
    objects = []
    for entry in obj.get("objects", []):
        type_ref = entry["type"]
        type_id = lib.id_of(type_ref) if isinstance(type_ref, str) else int(type_ref)
        lib.get(type_id)
        objects.append(
            PlacedObject(
                float(entry["forward"]),
                float(entry["right"]),
                float(entry["rotation_deg"]),
                type_id,
            )
        )
    return Scenario(
        Pose(float(start["x"]), float(start["y"]), float(start.get("heading_deg", 0.0))),
        (float(dest["x"]), float(dest["y"])),
        tuple(objects),
    )


def load_scenario(path, lib: ObjectLibrary) -> Scenario:
    with open(path, encoding="utf-8") as fh:
        return scenario_from_json(json.load(fh), lib)


def save_scenario(scenario: Scenario, lib: ObjectLibrary, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(scenario_to_json(scenario, lib), fh, indent=2)
        fh.write("\n")


def scenario_hash(scenario: Scenario) -> str:
    """Stable content hash over route and encoded placement matrix."""
    payload = {
        "start": [scenario.ego_start.x, scenario.ego_start.y, scenario.ego_start.heading_deg],
        "dest": list(scenario.ego_destination),
        "matrix": [[repr(v) for v in row] for row in encode(scenario).tolist()],
    }
    blob = json.dumps(payload, sort_keys=True).encode("utf-8")
    return hashlib.sha256(blob).hexdigest()[:16]
