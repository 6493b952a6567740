"""tessellate: co-simulation scenarios as graphs of tesserae, baked into live orbits."""

from .baking import (
    BakingProblem,
    Orbit,
    bake,
    build_dependency_graph,
    orbit_report,
    rebake,
    resolve_select,
)
from .kernel import Done, LogEvent, Progress, RunError, check_dataflow, run
from .model import (
    Composition,
    CompositionStep,
    ConnectionSpec,
    CreateFixed,
    CreateMatching,
    EmptyRelation,
    Manual,
    ManyToOne,
    NodePosition,
    OneToOne,
    Predicate,
    RandomRelation,
    ScenarioDescription,
    ScenarioParams,
    Select,
    SimulatorSpec,
    TesseraSpec,
)
from .pairs import EntityRef, PairSet, compose_pairsets, invert_pairset
from .registry import Registry, RegistryEntry, builtin_registry, load_registry
from .relations import resolve_relation
from .scenario_io import (
    ScenarioFormatError,
    parse_description,
    serialize_description,
)
from .validation import ValidationIssue, validate_description

__version__ = "0.1.0"
