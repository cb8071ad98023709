"""Campaign manifest: one file tying together map, library, laws, SUT and
campaign configuration.  Everything referenced is loaded and validated
before any SUT execution."""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass
from pathlib import Path

from .fuzzer import CampaignConfig, ENGINES, GaConfig, goal_table
from .library import ObjectLibrary, load_library
from .mapmodel import MapModel, load_map
from .parsing import LawPack, parse_law_pack
from .sampling import PlacementRegion
from .scenario import Pose
from .simulator import ToySimConfig, ToySimSut, default_config, load_config
from .sut import SubprocessSutAdapter, SutInterface

MANIFEST_FORMAT_VERSION = 1


class ManifestError(ValueError):
    pass


@dataclass
class CampaignManifest:
    path: Path
    raw: dict
    map_model: MapModel
    library: ObjectLibrary
    laws: LawPack
    engine: str
    campaign: CampaignConfig
    ego_start: Pose
    ego_destination: tuple[float, float]
    sut_spec: dict
    out_dir: Path

    def build_sut(self) -> SutInterface:
        kind = self.sut_spec.get("kind", "toy")
        if kind == "toy":
            cfg_path = self.sut_spec.get("config")
            cfg = (
                load_config(self.path.parent / cfg_path)
                if cfg_path
                else default_config()
            )
            return ToySimSut(cfg, self.map_model, self.library)
        if kind == "subprocess":
            return SubprocessSutAdapter(
                command=[str(c) for c in self.sut_spec["command"]],
                map_path=str(self.path.parent / self.raw["map"]),
                lib=self.library,
                declared_signals=tuple(self.sut_spec["declared_signals"]),
                timeout_s=float(self.sut_spec.get("timeout_s", 300.0)),
            )
        raise ManifestError(f"unknown SUT kind {kind!r}")

    def campaign_id(self) -> str:
        blob = json.dumps(self.raw, sort_keys=True).encode("utf-8")
        digest = hashlib.sha256(blob + str(self.campaign.seed).encode()).hexdigest()
        return digest[:12]


def _campaign_config(obj: dict) -> tuple[str, CampaignConfig]:
    engine = obj.get("engine", "trashfuzz")
    if engine not in ENGINES:
        raise ManifestError(f"unknown engine {engine!r} (choose from {sorted(ENGINES)})")
    region_obj = obj.get("region", {})
    region = PlacementRegion(
        forward_min=float(region_obj.get("forward_min", 0.0)),
        forward_max=float(region_obj.get("forward_max", 150.0)),
        right_min=float(region_obj.get("right_min", -30.0)),
        right_max=float(region_obj.get("right_max", 30.0)),
    )
    ga_obj = obj.get("ga", {})
    cfg = CampaignConfig(
        n_objects=int(obj["n_objects"]),
        max_queries=int(obj.get("max_queries", 620)),
        seed=int(obj.get("seed", 0)),
        children_per_round=(
            int(obj["children_per_round"]) if "children_per_round" in obj else None
        ),
        goal_cap=int(obj.get("goal_cap", 4096)),
        region=region,
        restart_after_stale=int(obj.get("restart_after_stale", 5)),
        workers=int(obj.get("workers", 1)),
        ga=GaConfig(
            population=int(ga_obj.get("population", 30)),
            generations=int(ga_obj.get("generations", 20)),
            elitism=int(ga_obj.get("elitism", 2)),
            tournament_k=int(ga_obj.get("tournament_k", 3)),
            mutation_rate=float(ga_obj.get("mutation_rate", 0.1)),
        ),
    )
    return engine, cfg


def load_manifest(path, *, seed: int | None = None, workers: int | None = None,
                  out_dir: str | None = None) -> CampaignManifest:
    """Load and validate a manifest; optional overrides for seed, workers
    and output directory."""
    path = Path(path)
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as exc:
        raise ManifestError(f"cannot read manifest {path}: {exc}") from exc
    try:
        base = path.parent
        map_model = load_map(base / raw["map"])
        library = load_library(base / raw["library"])
        laws = parse_law_pack((base / raw["laws"]).read_text(encoding="utf-8"))
        engine, campaign = _campaign_config(dict(raw["campaign"]))
        if seed is not None:
            raw = dict(raw)
            raw["campaign"] = dict(raw["campaign"], seed=seed)
            campaign = _campaign_config(raw["campaign"])[1]
        if workers is not None:
            from dataclasses import replace

            campaign = replace(campaign, workers=workers)
        route = raw["route"]
        start = route["ego_start"]
        dest = route["ego_destination"]
        manifest = CampaignManifest(
            path=path,
            raw=raw,
            map_model=map_model,
            library=library,
            laws=laws,
            engine=engine,
            campaign=campaign,
            ego_start=Pose(
                float(start["x"]), float(start["y"]), float(start.get("heading_deg", 0.0))
            ),
            ego_destination=(float(dest["x"]), float(dest["y"])),
            sut_spec=dict(raw.get("sut", {"kind": "toy"})),
            out_dir=Path(out_dir) if out_dir else base / raw.get("out_dir", "out"),
        )
    except ManifestError:
        raise
    except (KeyError, TypeError, ValueError) as exc:
        raise ManifestError(f"bad manifest {path}: {exc}") from exc
    # decomposition must fit the goal cap before any SUT execution
    goal_table(manifest.laws, manifest.campaign.goal_cap)
    return manifest
