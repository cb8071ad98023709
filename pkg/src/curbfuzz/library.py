"""Object library: the catalogue of placeable roadside objects."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass
from enum import Enum
from importlib import resources
from typing import Iterable, Mapping

LIBRARY_FORMAT_VERSION = 1

OBJECT_CLASSES = frozenset(
    {"bin", "tree", "bench", "hydrant", "lamp", "box", "bag", "cart", "pole", "other"}
)


class Category(str, Enum):
    MOVABLE = "movable"
    FIXED_POSITION = "fixed_position"


class UnknownTypeId(KeyError):
    def __init__(self, type_id):
        self.type_id = type_id
        super().__init__(f"no object with type id {type_id!r} in the library")


@dataclass(frozen=True)
class ObjectDef:
    """One placeable object kind.

    ``footprint`` is (width, depth) in metres in the object-local frame;
    ``handle_axis`` is a unit vector in the same frame (the side wheels
    and handles sit on, used by the bin-orientation rule).
    """

    type_id: int
    name: str
    category: Category
    classes: frozenset[str]
    footprint: tuple[float, float]
    height: float
    handle_axis: tuple[float, float] = (1.0, 0.0)

    def __post_init__(self) -> None:
        w, d = self.footprint
        if w <= 0 or d <= 0 or self.height <= 0:
            raise ValueError(f"{self.name}: footprint and height must be positive")
        if not self.classes <= OBJECT_CLASSES:
            raise ValueError(f"{self.name}: unknown classes {self.classes - OBJECT_CLASSES}")
        norm = math.hypot(*self.handle_axis)
        if abs(norm - 1.0) > 1e-9:
            raise ValueError(f"{self.name}: handle_axis must be a unit vector")

    @property
    def is_bin(self) -> bool:
        return "bin" in self.classes

    @property
    def is_tree(self) -> bool:
        return "tree" in self.classes

    @property
    def is_fixed(self) -> bool:
        return self.category is Category.FIXED_POSITION

    @property
    def width(self) -> float:
        return self.footprint[0]


class ObjectLibrary:
    """Objects indexed by contiguous type ids 0..n-1."""

    def __init__(self, objects: Iterable[ObjectDef]):
        self.objects = tuple(objects)
        for i, obj in enumerate(self.objects):
            if obj.type_id != i:
                raise ValueError(
                    f"type ids must be contiguous from 0; {obj.name} has {obj.type_id} at {i}"
                )
        self._by_name = {obj.name: obj for obj in self.objects}
        if len(self._by_name) != len(self.objects):
            raise ValueError("duplicate object names in library")

    def __len__(self) -> int:
        return len(self.objects)

    def __iter__(self):
        return iter(self.objects)

    def get(self, type_id: int) -> ObjectDef:
        if not 0 <= type_id < len(self.objects):
            raise UnknownTypeId(type_id)
        return self.objects[type_id]

    def id_of(self, name: str) -> int:
        if name not in self._by_name:
            raise UnknownTypeId(name)
        return self._by_name[name].type_id

    def by_name(self, name: str) -> ObjectDef:
        return self.objects[self.id_of(name)]


def library_to_json(lib: ObjectLibrary) -> dict:
    return {
        "format_version": LIBRARY_FORMAT_VERSION,
        "objects": [
            {
                "type_id": o.type_id,
                "name": o.name,
                "category": o.category.value,
                "classes": sorted(o.classes),
                "footprint": [o.footprint[0], o.footprint[1]],
                "height": o.height,
                "handle_axis": [o.handle_axis[0], o.handle_axis[1]],
            }
            for o in lib
        ],
    }


def library_from_json(obj: Mapping) -> ObjectLibrary:
    return ObjectLibrary(
        ObjectDef(
            type_id=int(o["type_id"]),
            name=str(o["name"]),
            category=Category(o["category"]),
            classes=frozenset(o["classes"]),
            footprint=(float(o["footprint"][0]), float(o["footprint"][1])),
            height=float(o["height"]),
            handle_axis=(float(o["handle_axis"][0]), float(o["handle_axis"][1])),
        )
        for o in obj["objects"]
    )


def load_library(path) -> ObjectLibrary:
    with open(path, encoding="utf-8") as fh:
        return library_from_json(json.load(fh))


def save_library(lib: ObjectLibrary, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(library_to_json(lib), fh, indent=2)
        fh.write("\n")


def default_library() -> ObjectLibrary:
    """The shipped 15-object catalogue (bins, cart, stand, bag, benches,
    pole, hydrant, and three trees sized to exercise the height-threshold
    rules)."""
    data = resources.files("curbfuzz.data").joinpath("object_library.json")
    return library_from_json(json.loads(data.read_text(encoding="utf-8")))
