"""Abstract scenario description: the serializable value types a scenario is made of.

A scenario is a graph: simulators host tesserae (named sets of entities of one
model), and connections move attribute values between tesserae according to an
entity-pairing relation. Everything here is a plain value; nothing talks to a
running simulator.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Optional, Union

U64_MAX = 2**64 - 1

# Comparison operators allowed in select predicates.
PREDICATE_OPS = ("eq", "ne", "lt", "le", "gt", "ge")

# Directions for composition path steps.
DIRECTIONS = ("forward", "backward")


@dataclass(frozen=True)
class NodePosition:
    """2D canvas position of a tessera (dimensionless GUI coordinates)."""

    x: float
    y: float


@dataclass(frozen=True)
class SimulatorSpec:
    id: str
    registry_key: str
    display_name: str = ""
    init_params: dict[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class CreateFixed:
    """Create a fixed number of entities of the tessera's model."""

    count: int
    create_params: dict[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class CreateMatching:
    """Create one entity per entity of another tessera."""

    size_of: str
    create_params: dict[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class Predicate:
    """One extra-info comparison; lt/le/gt/ge are false unless both sides are numbers."""

    key: str
    op: str
    value: Any


@dataclass(frozen=True)
class Select:
    """Select entities created elsewhere in the same simulator.

    Filters by a glob over entity ids (``*`` any run, ``?`` one char) and by
    conjunctive predicates over the entities' extra info.
    """

    id_pattern: str = "*"
    predicates: list[Predicate] = field(default_factory=list)


EntitySource = Union[CreateFixed, CreateMatching, Select]


@dataclass(frozen=True)
class TesseraSpec:
    id: str
    simulator_id: str
    model: str
    name: str = ""
    icon: str = ""
    sources: list[EntitySource] = field(default_factory=list)


@dataclass(frozen=True)
class EmptyRelation:
    pass


@dataclass(frozen=True)
class OneToOne:
    pass


@dataclass(frozen=True)
class RandomRelation:
    allow_repeat: bool = False
    seed: int = 0


@dataclass(frozen=True)
class ManyToOne:
    pass


@dataclass(frozen=True)
class Manual:
    """Explicit (source entity id, target entity id) pairs."""

    pairs: list[tuple[str, str]] = field(default_factory=list)


@dataclass(frozen=True)
class CompositionStep:
    connection: str
    direction: str = "forward"


@dataclass(frozen=True)
class Composition:
    """Relational join of other connections' pair sets, each taken forward or inverted."""

    path: list[CompositionStep] = field(default_factory=list)


Relation = Union[EmptyRelation, OneToOne, RandomRelation, ManyToOne, Manual, Composition]


@dataclass(frozen=True)
class ConnectionSpec:
    id: str
    source: str
    target: str
    attr_pairs: list[tuple[str, str]] = field(default_factory=list)
    relation: Relation = field(default_factory=EmptyRelation)
    delayed: bool = False
    initial_values: dict[str, Any] = field(default_factory=dict)


@dataclass(frozen=True)
class ScenarioParams:
    end_time: int = 3600
    real_time_factor: Optional[float] = None
    master_seed: int = 0


@dataclass(frozen=True)
class ScenarioDescription:
    simulators: list[SimulatorSpec] = field(default_factory=list)
    tesserae: list[TesseraSpec] = field(default_factory=list)
    connections: list[ConnectionSpec] = field(default_factory=list)
    params: ScenarioParams = field(default_factory=ScenarioParams)
    layout: dict[str, NodePosition] = field(default_factory=dict)

    def simulator(self, sim_id: str) -> Optional[SimulatorSpec]:
        for s in self.simulators:
            if s.id == sim_id:
                return s
        return None

    def tessera(self, tessera_id: str) -> Optional[TesseraSpec]:
        for t in self.tesserae:
            if t.id == tessera_id:
                return t
        return None

    def connection(self, conn_id: str) -> Optional[ConnectionSpec]:
        for c in self.connections:
            if c.id == conn_id:
                return c
        return None


def element_id(kind: str, raw_id: str) -> str:
    """Qualified element id used in orbit states and reports, e.g. ``tessera:pvs``."""
    return f"{kind}:{raw_id}"


def element_ids(description: ScenarioDescription) -> list[str]:
    """All qualified element ids in document order: simulators, tesserae, connections."""
    out = [element_id("simulator", s.id) for s in description.simulators]
    out += [element_id("tessera", t.id) for t in description.tesserae]
    out += [element_id("connection", c.id) for c in description.connections]
    return out
