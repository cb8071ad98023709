"""Search engines: greedy gradient-guided fuzzing, GA and random baselines.

All engines share one contract: a law pack is decomposed into violation
goals once per campaign; every SUT execution counts against the query
budget; each executed trace is assessed against the remaining goals, and
a goal is marked covered (with its witness scenario and trace) the first
time its robustness drops to zero or below.  Runs are deterministic
functions of the campaign seed, at any worker count.

The greedy engine follows a round structure: execute the current parent
scenario, mutate each object once (a uniformly chosen dimension per
object), execute the children, then keep as the steering seed the
(gradient, mutated element) pair with the largest absolute gradient seen
so far, where the gradient of a child is

    (rho_parent - rho_child) / (cell_parent - cell_child)

over the single matrix cell the mutation changed (denominator 1.0 for
categorical type swaps).  The next parent steps the stored element in the
robustness-decreasing direction, projected back to rule compliance; after
five rounds without a gradient improvement the search restarts from a
fresh constructive sample.
"""
from __future__ import annotations

import concurrent.futures
import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np

from .formulas import Formula
from .goals import DEFAULT_GOAL_CAP, decompose
from .library import ObjectLibrary
from .mapmodel import MapModel
from .monitor import robustness
from .parsing import Law, LawPack
from .rules import check_rules
from .sampling import (
    DEFAULT_REGION,
    DEFAULT_STEPS,
    MutationStuck,
    MutationSteps,
    PlacementRegion,
    compliant_region,
    mutate_element,
    sample_valid,
    _bin_rotation,
    _sample_point,
    _world_to_ego,
)
from .scenario import (
    DIMENSIONS,
    PlacedObject,
    Pose,
    Scenario,
    decode,
    encode,
    scenario_hash,
)
from .sut import SutFailure, SutInterface, run_sut
from .traces import Trace


class ZeroDelta(ValueError):
    pass


def gradient(enc0: np.ndarray, enck: np.ndarray, rho0: float, rhok: float) -> float:
    """Gradient of robustness with respect to the one matrix cell in which
    the two encoded scenarios differ; the type column uses denominator 1.0."""
    enc0 = np.asarray(enc0, dtype=np.float64)
    enck = np.asarray(enck, dtype=np.float64)
    if enc0.shape != enck.shape:
        raise ValueError(f"shape mismatch: {enc0.shape} vs {enck.shape}")
    diff = np.argwhere(enc0 != enck)
    if len(diff) == 0:
        raise ZeroDelta("scenarios are identical; gradient undefined")
    if len(diff) > 1:
        raise ValueError(f"scenarios differ in {len(diff)} cells, expected exactly one")
    row, col = map(int, diff[0])
    if col == 3:
        return (rho0 - rhok) / 1.0
    denom = float(enc0[row, col] - enck[row, col])
    if denom == 0.0:
        raise ZeroDelta("differing cell has zero delta")
    return (rho0 - rhok) / denom


@dataclass
class Seed:
    """Steering state: largest-absolute gradient seen and its matrix cell."""

    gradient: float = 0.0
    element: tuple[int, str] | None = None


@dataclass(frozen=True)
class GaConfig:
    population: int = 30
    generations: int = 20
    elitism: int = 2
    tournament_k: int = 3
    mutation_rate: float = 0.1


@dataclass(frozen=True)
class CampaignConfig:
    n_objects: int
    max_queries: int = 620
    seed: int = 0
    children_per_round: int | None = None
    goal_cap: int = DEFAULT_GOAL_CAP
    region: PlacementRegion = DEFAULT_REGION
    steps: MutationSteps = DEFAULT_STEPS
    restart_after_stale: int = 5
    workers: int = 1
    ga: GaConfig = field(default_factory=GaConfig)

    def __post_init__(self) -> None:
        if self.max_queries < 1:
            raise ValueError("max_queries must be >= 1")
        if self.n_objects < 0:
            raise ValueError("n_objects must be >= 0")


@dataclass(frozen=True)
class GoalEntry:
    goal_id: str
    law: str
    formula: Formula


@dataclass(frozen=True)
class CoveredGoal:
    goal_id: str
    law: str
    query_index: int
    robustness: float
    scenario: Scenario
    trace: Trace


@dataclass(frozen=True)
class QueryRecord:
    index: int
    scenario_hash: str
    robustness: dict[str, float]


@dataclass(frozen=True)
class SeedEvent:
    query_index: int
    goal_id: str
    gradient: float
    d_rho: float
    d_cell: float
    element: tuple[int, str]


@dataclass
class CampaignResult:
    engine: str
    seed: int
    n_objects: int
    goals: tuple[GoalEntry, ...]
    covered: dict[str, CoveredGoal] = field(default_factory=dict)
    per_goal_best: dict[str, float] = field(default_factory=dict)
    query_log: list[QueryRecord] = field(default_factory=list)
    seed_events: list[SeedEvent] = field(default_factory=list)
    sut_queries: int = 0
    aborted: str | None = None

    @property
    def covered_count(self) -> int:
        return len(self.covered)

    def remaining_ids(self) -> tuple[str, ...]:
        return tuple(g.goal_id for g in self.goals if g.goal_id not in self.covered)


class CampaignAborted(RuntimeError):
    """SUT failure mid-campaign; the partial result rides along."""

    def __init__(self, result: CampaignResult, cause: BaseException):
        self.result = result
        self.cause = cause
        super().__init__(f"campaign aborted after {result.sut_queries} queries: {cause}")


def goal_table(laws: LawPack | Formula, cap: int = DEFAULT_GOAL_CAP) -> tuple[GoalEntry, ...]:
    """Flatten a law pack (or single formula) into the ordered goal list."""
    if isinstance(laws, LawPack):
        entries: list[GoalEntry] = []
        for law in laws:
            gs = decompose(law.formula, law.name, cap)
            entries.extend(GoalEntry(g.id, law.name, g.formula) for g in gs)
        return tuple(entries)
    gs = decompose(laws, "spec", cap)
    return tuple(GoalEntry(g.id, "spec", g.formula) for g in gs)


# -- shared execution scaffolding ---------------------------------------

_WORKER_SUT: SutInterface | None = None


def _init_worker(sut: SutInterface) -> None:
    global _WORKER_SUT
    _WORKER_SUT = sut


def _worker_run(scenario: Scenario) -> Trace:
    assert _WORKER_SUT is not None
    return run_sut(scenario, _WORKER_SUT)


class _Engine:
    def __init__(
        self,
        engine: str,
        laws: LawPack | Formula,
        cfg: CampaignConfig,
        sut: SutInterface,
        map_model: MapModel,
        lib: ObjectLibrary,
        ego_start: Pose,
        ego_destination: tuple[float, float],
    ):
        self.cfg = cfg
        self.sut = sut
        self.map_model = map_model
        self.lib = lib
        self.ego_start = ego_start
        self.ego_destination = ego_destination
        self.rng = np.random.default_rng(cfg.seed)
        goals = goal_table(laws, cfg.goal_cap)
        if not goals:
            raise ValueError("law pack decomposes to no goals")
        self.remaining: dict[str, GoalEntry] = {g.goal_id: g for g in goals}
        self.result = CampaignResult(
            engine=engine, seed=cfg.seed, n_objects=cfg.n_objects, goals=goals
        )
        self._pool: concurrent.futures.ProcessPoolExecutor | None = None
        if cfg.workers > 1 and getattr(sut, "parallel_safe", False):
            self._pool = concurrent.futures.ProcessPoolExecutor(
                max_workers=cfg.workers, initializer=_init_worker, initargs=(sut,)
            )

    def close(self) -> None:
        if self._pool is not None:
            self._pool.shutdown()
            self._pool = None

    @property
    def budget_left(self) -> int:
        return self.cfg.max_queries - self.result.sut_queries

    def sample(self) -> Scenario:
        return sample_valid(
            self.map_model,
            self.lib,
            self.cfg.n_objects,
            self.rng,
            ego_start=self.ego_start,
            ego_destination=self.ego_destination,
            region=self.cfg.region,
        )

    def execute_batch(self, scenarios: Sequence[Scenario]) -> list[tuple[Scenario, Trace, dict[str, float], int]]:
        """Run scenarios (budget-trimmed, in order); assess each trace
        against the remaining goals and record coverage.  Returns
        (scenario, trace, per-goal robustness, query index) tuples."""
        scenarios = list(scenarios)[: max(self.budget_left, 0)]
        if not scenarios:
            return []
        try:
            if self._pool is not None:
                traces = list(self._pool.map(_worker_run, scenarios))
            else:
                traces = [run_sut(s, self.sut) for s in scenarios]
        except SutFailure as exc:
            self.close()
            raise CampaignAborted(self.result, exc) from exc
        out = []
        for scenario, trace in zip(scenarios, traces):
            self.result.sut_queries += 1
            qidx = self.result.sut_queries
            rhos: dict[str, float] = {}
            for gid, entry in list(self.remaining.items()):
                value = robustness(entry.formula, trace, 0)
                rhos[gid] = value
                best = self.result.per_goal_best.get(gid)
                if best is None or value < best:
                    self.result.per_goal_best[gid] = value
                if value <= 0.0:
                    self.result.covered[gid] = CoveredGoal(
                        gid, entry.law, qidx, value, scenario, trace
                    )
                    del self.remaining[gid]
            self.result.query_log.append(
                QueryRecord(qidx, scenario_hash(scenario), rhos)
            )
            out.append((scenario, trace, rhos, qidx))
        return out

    @property
    def done(self) -> bool:
        return not self.remaining or self.budget_left <= 0


# -- greedy gradient-guided engine --------------------------------------


def _project_cell(
    engine: _Engine, scenario: Scenario, index: int, dim: str, target: float
) -> Scenario | None:
    """Nearest rule-compliant scenario with the given cell at/near ``target``."""
    region = engine.cfg.region

    def clamp(v: float) -> float:
        if dim == "forward":
            return min(max(v, region.forward_min), region.forward_max)
        if dim == "right":
            return min(max(v, region.right_min), region.right_max)
        return v % 360.0

    obj = scenario.objects[index]
    offsets = [0.0]
    step = 1.0 if dim == "rotation" else 0.05
    span = 180 if dim == "rotation" else 200
    for k in range(1, span + 1):
        offsets.extend((k * step, -k * step))
    for off in offsets:
        value = clamp(target + off)
        if dim == "forward":
            cand_obj = replace(obj, forward=value)
        elif dim == "right":
            cand_obj = replace(obj, right=value)
        else:
            cand_obj = replace(obj, rotation=value)
        candidate = scenario.with_object(index, cand_obj)
        if check_rules(candidate, engine.map_model, engine.lib).valid:
            return candidate
    return None


def _step_seed(engine: _Engine, scenario: Scenario, seed: Seed) -> Scenario | None:
    index, dim = seed.element  # type: ignore[misc]
    if index >= scenario.n_objects:
        return None
    if dim == "type":
        others = [i for i in range(len(engine.lib)) if i != scenario.objects[index].type_id]
        engine.rng.shuffle(others)
        for tid in others:
            candidate = scenario.with_object(
                index, replace(scenario.objects[index], type_id=tid)
            )
            if check_rules(candidate, engine.map_model, engine.lib).valid:
                return candidate
        return None
    base = {
        "forward": engine.cfg.steps.forward,
        "right": engine.cfg.steps.right,
        "rotation": engine.cfg.steps.rotation,
    }[dim]
    magnitude = base * min(max(abs(seed.gradient), 0.5), 2.0)
    direction = -math.copysign(1.0, seed.gradient)
    obj = scenario.objects[index]
    current = {"forward": obj.forward, "right": obj.right, "rotation": obj.rotation}[dim]
    return _project_cell(engine, scenario, index, dim, current + direction * magnitude)


def trashfuzz_campaign(
    laws: LawPack | Formula,
    cfg: CampaignConfig,
    sut: SutInterface,
    map_model: MapModel,
    lib: ObjectLibrary,
    *,
    ego_start: Pose,
    ego_destination: tuple[float, float],
) -> CampaignResult:
    """Greedy gradient-guided search (see module docstring)."""
    engine = _Engine("trashfuzz", laws, cfg, sut, map_model, lib, ego_start, ego_destination)
    try:
        seed_state = Seed()
        stale = 0
        parent = engine.sample()
        while not engine.done:
            parent_rows = engine.execute_batch([parent])
            if not parent_rows or engine.done:
                break
            _, _, rho0, _ = parent_rows[0]
            enc0 = encode(parent)

            children = []
            n_children = cfg.children_per_round or cfg.n_objects
            for k in range(min(n_children, engine.budget_left)):
                obj_idx = k % max(cfg.n_objects, 1)
                dim = DIMENSIONS[int(engine.rng.integers(0, 4))]
                try:
                    child, _delta = mutate_element(
                        parent, obj_idx, dim, engine.rng, map_model, lib,
                        region=cfg.region, steps=cfg.steps,
                    )
                except (MutationStuck, IndexError):
                    continue
                children.append((child, (obj_idx, dim)))

            improved = False
            rows = engine.execute_batch([c for c, _ in children])
            for (child, element), (_, _, rhos, qidx) in zip(children, rows):
                enck = encode(child)
                for gid, rho_k in rhos.items():
                    if rho_k <= 0.0 or gid not in rho0:
                        continue
                    try:
                        g = gradient(enc0, enck, rho0[gid], rho_k)
                    except (ZeroDelta, ValueError):
                        continue
                    if abs(g) > abs(seed_state.gradient):
                        seed_state = Seed(g, element)
                        improved = True
                        row, col = element
                        engine.result.seed_events.append(
                            SeedEvent(
                                qidx, gid, g,
                                d_rho=rho0[gid] - rho_k,
                                d_cell=float(enc0[row, DIMENSIONS.index(col)]
                                             - enck[row, DIMENSIONS.index(col)]),
                                element=element,
                            )
                        )
            if engine.done:
                break
            stale = 0 if improved else stale + 1
            if stale >= cfg.restart_after_stale or seed_state.element is None:
                parent = engine.sample()
                if stale >= cfg.restart_after_stale:
                    seed_state = Seed()
                stale = 0
            else:
                stepped = _step_seed(engine, parent, seed_state)
                if stepped is None:
                    parent = engine.sample()
                    seed_state = Seed()
                    stale = 0
                else:
                    parent = stepped
        return engine.result
    finally:
        engine.close()


# -- GA baseline ---------------------------------------------------------


def _repair(engine: _Engine, scenario: Scenario) -> Scenario:
    """Re-place offending objects until the scenario passes the rules."""
    current = scenario
    for _ in range(60):
        report = check_rules(current, engine.map_model, engine.lib)
        if report.valid:
            return current
        failing = report.failures()[0]
        witness = failing.witness or {}
        objs = witness.get("objects") or [int(engine.rng.integers(0, max(current.n_objects, 1)))]
        idx = int(objs[0])
        obj_def = engine.lib.get(current.objects[idx].type_id)
        shape_pair = compliant_region(
            engine.map_model, obj_def, engine.cfg.region, engine.ego_start
        )
        center = _sample_point(shape_pair, engine.rng, obj_def.name)
        if obj_def.is_bin:
            rotation = _bin_rotation(
                obj_def, center, engine.map_model, engine.ego_start, engine.rng
            )
        else:
            rotation = engine.rng.uniform(0.0, 360.0)
        fwd, rgt = _world_to_ego(center, engine.ego_start)
        current = current.with_object(
            idx, PlacedObject(fwd, rgt, rotation, current.objects[idx].type_id)
        )
    return engine.sample()


def _ga_mutate(engine: _Engine, matrix: np.ndarray) -> np.ndarray:
    out = matrix.copy()
    cfg = engine.cfg
    for i in range(out.shape[0]):
        for j, dim in enumerate(DIMENSIONS):
            if engine.rng.random() >= cfg.ga.mutation_rate:
                continue
            if dim == "forward":
                out[i, j] = min(
                    max(out[i, j] + engine.rng.uniform(-cfg.steps.forward, cfg.steps.forward),
                        cfg.region.forward_min),
                    cfg.region.forward_max,
                )
            elif dim == "right":
                out[i, j] = min(
                    max(out[i, j] + engine.rng.uniform(-cfg.steps.right, cfg.steps.right),
                        cfg.region.right_min),
                    cfg.region.right_max,
                )
            elif dim == "rotation":
                out[i, j] = (out[i, j] + engine.rng.uniform(
                    -cfg.steps.rotation, cfg.steps.rotation)) % 360.0
            else:
                others = [t for t in range(len(engine.lib)) if t != int(round(out[i, j]))]
                if others:
                    out[i, j] = float(others[int(engine.rng.integers(0, len(others)))])
    return out


def ga_campaign(
    laws: LawPack | Formula,
    cfg: CampaignConfig,
    sut: SutInterface,
    map_model: MapModel,
    lib: ObjectLibrary,
    *,
    ego_start: Pose,
    ego_destination: tuple[float, float],
) -> CampaignResult:
    """Genetic baseline: tournament selection, single-point row crossover,
    per-cell mutation with rule repair, elitism; fitness (minimised) is the
    sum over remaining goals of the zero-clamped robustness ``max(rho, 0)``."""
    engine = _Engine("ga", laws, cfg, sut, map_model, lib, ego_start, ego_destination)
    ga = cfg.ga
    try:
        def fitness_of(rhos: dict[str, float]) -> float:
            return float(sum(max(v, 0.0) for v in rhos.values()))

        population: list[tuple[Scenario, float]] = []
        seeds = [engine.sample() for _ in range(min(ga.population, engine.budget_left))]
        for scenario, _, rhos, _ in engine.execute_batch(seeds):
            population.append((scenario, fitness_of(rhos)))

        for _generation in range(1, ga.generations):
            if engine.done or not population:
                break
            order = sorted(range(len(population)), key=lambda i: (population[i][1], i))
            elites = [population[i] for i in order[: ga.elitism]]

            def tournament() -> Scenario:
                picks = engine.rng.integers(0, len(population), size=ga.tournament_k)
                best = min(picks, key=lambda i: (population[int(i)][1], int(i)))
                return population[int(best)][0]

            children: list[Scenario] = []
            while len(children) < ga.population - len(elites):
                p1, p2 = tournament(), tournament()
                m1, m2 = encode(p1), encode(p2)
                if cfg.n_objects >= 2:
                    cut = int(engine.rng.integers(1, cfg.n_objects))
                    child_matrix = np.vstack([m1[:cut], m2[cut:]])
                else:
                    child_matrix = m1.copy()
                child_matrix = _ga_mutate(engine, child_matrix)
                child = decode(child_matrix, ego_start, ego_destination, lib)
                children.append(_repair(engine, child))

            population = list(elites)
            for scenario, _, rhos, _ in engine.execute_batch(children):
                population.append((scenario, fitness_of(rhos)))
        return engine.result
    finally:
        engine.close()


def random_campaign(
    laws: LawPack | Formula,
    cfg: CampaignConfig,
    sut: SutInterface,
    map_model: MapModel,
    lib: ObjectLibrary,
    *,
    ego_start: Pose,
    ego_destination: tuple[float, float],
) -> CampaignResult:
    """Control baseline: independent constructive-sampler draws."""
    engine = _Engine("random", laws, cfg, sut, map_model, lib, ego_start, ego_destination)
    try:
        while not engine.done:
            batch = [engine.sample() for _ in range(min(16, engine.budget_left))]
            engine.execute_batch(batch)
        return engine.result
    finally:
        engine.close()


ENGINES = {
    "trashfuzz": trashfuzz_campaign,
    "ga": ga_campaign,
    "random": random_campaign,
}
