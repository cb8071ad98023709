"""curbfuzz: guideline-constrained roadside-object falsification toolkit.

Pipeline: write traffic-law specifications in a small temporal-logic
dialect, decompose them into violation goals, generate placement-rule
compliant scenarios, run them through a black-box driving system, and
search the placement space for scenarios whose traces violate a goal.
"""
from .formulas import (
    And,
    Always,
    Eventually,
    FALSE,
    Formula,
    Interval,
    LinearExpr,
    Next,
    Not,
    Or,
    Prop,
    Proposition,
    TRUE,
    Until,
    desugar,
    format_formula,
    signal_prop,
)
from .parsing import Law, LawPack, SpecSyntaxError, parse_law_pack, parse_spec
from .traces import Trace
from .monitor import (
    LARGE,
    IndexOutOfRange,
    UnknownSignal,
    negate,
    negate_prop,
    robustness,
    robustness_signal,
    satisfies,
)
from .goals import GoalExplosion, GoalSet, ViolationGoal, decompose, goal_count
from .library import Category, ObjectDef, ObjectLibrary, UnknownTypeId, default_library
from .mapmodel import MapModel, Road, demo_map, lane_count, load_map
from .scenario import (
    PlacedObject,
    Pose,
    Scenario,
    decode,
    encode,
    load_scenario,
    save_scenario,
)
from .rules import RuleCheck, RuleReport, check_rules
from .sampling import (
    MutationStuck,
    PlacementRegion,
    RegionEmpty,
    mutate_element,
    sample_uniform,
    sample_valid,
)
from .geometry import distance, footprint_polygon
from .simulator import PlantedBug, ToySimConfig, ToySimSut, default_config, run_toy_sim
from .sut import (
    SignalContractViolation,
    SubprocessSutAdapter,
    SutFailure,
    SutInterface,
    run_sut,
)
from .fuzzer import (
    CampaignAborted,
    CampaignConfig,
    CampaignResult,
    Seed,
    ZeroDelta,
    ga_campaign,
    goal_table,
    gradient,
    random_campaign,
    trashfuzz_campaign,
)

__version__ = "0.1.0"
