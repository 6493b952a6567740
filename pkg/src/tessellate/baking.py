"""Baking: compiling a scenario description into a live orbit.

The orbit owns running simulator handles, the resolved entity list of every
tessera, the resolved pair set of every connection, and a per-element state
(ok, failed with a baking problem, or blocked on a failed dependency). Elements
are processed in a deterministic topological order so that two bakes of the
same description produce identical orbits.

A rebake diffs the new target world effects against the orbit's world log. If
the difference is purely additive (the old log is a per-simulator prefix of
the new one) only the delta calls are issued and prior entities are reused;
anything removed or changed falls back to a full reset, because a live world
supports neither unstarting simulators nor deleting entities. Either way the
resulting orbit equals a fresh bake of the new description.
"""

from __future__ import annotations

import heapq
import json
import re
from dataclasses import dataclass, field
from typing import Any, Optional, Union

from .model import (
    Composition,
    CreateFixed,
    CreateMatching,
    Predicate,
    ScenarioDescription,
    Select,
    TesseraSpec,
    element_id,
    element_ids,
)
from .pairs import EntityRef, PairSet
from .protocol import (
    ConnectTimeout,
    EntityRecord,
    ProtocolError,
    SimError,
    SimulatorHandle,
    SimulatorMeta,
    SpawnFailed,
    launch,
)
from .registry import Registry
from .relations import RelationError, resolve_relation_detailed
from .validation import ValidationIssue, validate_description

# ---------------------------------------------------------------------------
# World log entries: the effecting calls made against the live world.


def canonical_params(params: dict) -> str:
    return json.dumps(params, sort_keys=True, separators=(",", ":"), default=str)


@dataclass(frozen=True)
class LaunchEntry:
    sim_id: str
    registry_key: str

    @property
    def key(self) -> tuple:
        return ("launch", self.sim_id)


@dataclass(frozen=True)
class InitEntry:
    sim_id: str
    params: str  # canonical JSON

    @property
    def key(self) -> tuple:
        return ("init", self.sim_id)


@dataclass(frozen=True)
class CreateEntry:
    sim_id: str
    model: str
    entity_id: str
    params: str  # canonical JSON

    @property
    def key(self) -> tuple:
        return ("create", self.sim_id, self.entity_id)


@dataclass(frozen=True)
class ConnectEntry:
    conn_id: str
    src: EntityRef
    dst: EntityRef
    attr_pairs: tuple[tuple[str, str], ...]
    delayed: bool
    initial_values: str  # canonical JSON

    @property
    def key(self) -> tuple:
        return ("connect", self.conn_id, self.src, self.dst)


WorldLogEntry = Union[LaunchEntry, InitEntry, CreateEntry, ConnectEntry]


# ---------------------------------------------------------------------------
# Element states and problems

OK = "ok"
FAILED = "failed"
BLOCKED = "blocked"

PHASE_VALIDATE = "validate"
PHASE_LAUNCH = "launch"
PHASE_INIT = "init"
PHASE_RESOLVE_SOURCE = "resolve_source"
PHASE_RESOLVE_RELATION = "resolve_relation"
PHASE_CONNECT = "connect"


@dataclass
class BakingProblem:
    element: str
    phase: str
    code: str
    message: str
    blocked_dependents: list[str] = field(default_factory=list)

    def to_json(self) -> dict:
        return {
            "element": self.element,
            "phase": self.phase,
            "code": self.code,
            "message": self.message,
            "blocked_dependents": list(self.blocked_dependents),
        }


@dataclass(frozen=True)
class ElementState:
    status: str  # ok / failed / blocked
    blocked_on: Optional[str] = None  # immediate non-ok dependency when blocked


@dataclass
class Orbit:
    description: ScenarioDescription
    registry: Registry
    sim_handles: dict[str, SimulatorHandle] = field(default_factory=dict)
    sim_metas: dict[str, SimulatorMeta] = field(default_factory=dict)
    sim_records: dict[str, dict[str, EntityRecord]] = field(default_factory=dict)
    create_results: dict[tuple, tuple[EntityRecord, tuple[EntityRecord, ...]]] = field(default_factory=dict)
    resolved_tesserae: dict[str, list[EntityRef]] = field(default_factory=dict)
    tessera_records: dict[str, list[EntityRecord]] = field(default_factory=dict)
    resolved_connections: dict[str, PairSet] = field(default_factory=dict)
    connection_drops: dict[str, int] = field(default_factory=dict)
    element_states: dict[str, ElementState] = field(default_factory=dict)
    problems: list[BakingProblem] = field(default_factory=list)
    validation_issues: list[ValidationIssue] = field(default_factory=list)
    world_log: list[WorldLogEntry] = field(default_factory=list)
    last_bake_mode: str = "fresh"  # fresh / incremental / full_reset
    last_delta: list[WorldLogEntry] = field(default_factory=list)

    def state_of(self, qualified_id: str) -> Optional[ElementState]:
        return self.element_states.get(qualified_id)

    def shutdown(self) -> None:
        for handle in self.sim_handles.values():
            handle.stop()


# ---------------------------------------------------------------------------
# Dependency graph


def build_dependency_graph(d: ScenarioDescription) -> dict[str, list[str]]:
    """Map each element to its dependencies (qualified ids, document order).

    Edges: tessera -> its simulator; create-matching tessera -> the sized
    tessera; selecting tessera -> every tessera that creates entities in the
    same simulator; connection -> both tesserae and every composed connection.
    Dangling references yield no edge (validation already failed the element).
    """
    doc_index = {eid: i for i, eid in enumerate(element_ids(d))}
    sim_ids = {s.id for s in d.simulators}
    tessera_by_id = {t.id: t for t in d.tesserae}
    connection_ids = {c.id for c in d.connections}

    creators_by_sim: dict[str, list[str]] = {}
    for t in d.tesserae:
        if any(isinstance(s, (CreateFixed, CreateMatching)) for s in t.sources):
            creators_by_sim.setdefault(t.simulator_id, []).append(t.id)

    deps: dict[str, set[str]] = {eid: set() for eid in doc_index}
    for t in d.tesserae:
        elem = element_id("tessera", t.id)
        if t.simulator_id in sim_ids:
            deps[elem].add(element_id("simulator", t.simulator_id))
        for source in t.sources:
            if isinstance(source, CreateMatching) and source.size_of in tessera_by_id:
                deps[elem].add(element_id("tessera", source.size_of))
            if isinstance(source, Select):
                for creator in creators_by_sim.get(t.simulator_id, []):
                    if creator != t.id:
                        deps[elem].add(element_id("tessera", creator))
    for c in d.connections:
        elem = element_id("connection", c.id)
        for tess in (c.source, c.target):
            if tess in tessera_by_id:
                deps[elem].add(element_id("tessera", tess))
        if isinstance(c.relation, Composition):
            for step in c.relation.path:
                if step.connection in connection_ids and step.connection != c.id:
                    deps[elem].add(element_id("connection", step.connection))
    return {eid: sorted(deps[eid], key=doc_index.__getitem__) for eid in doc_index}


# ---------------------------------------------------------------------------
# Select resolution


def glob_to_regex(pattern: str) -> "re.Pattern[str]":
    # Only * and ? are special; everything else is literal.
    parts = []
    for ch in pattern:
        if ch == "*":
            parts.append(".*")
        elif ch == "?":
            parts.append(".")
        else:
            parts.append(re.escape(ch))
    return re.compile("^" + "".join(parts) + "$")


def _is_number(value: Any) -> bool:
    return isinstance(value, (int, float)) and not isinstance(value, bool)


def predicate_holds(predicate: Predicate, extra_info: dict) -> bool:
    if predicate.key not in extra_info:
        return False
    actual = extra_info[predicate.key]
    expected = predicate.value
    if predicate.op == "eq":
        return bool(actual == expected)
    if predicate.op == "ne":
        return bool(actual != expected)
    if not (_is_number(actual) and _is_number(expected)):
        return False
    if predicate.op == "lt":
        return actual < expected
    if predicate.op == "le":
        return actual <= expected
    if predicate.op == "gt":
        return actual > expected
    if predicate.op == "ge":
        return actual >= expected
    return False


def resolve_select(source: Select, records: list[EntityRecord]) -> list[EntityRecord]:
    """Filter a simulator's entity records by id glob and conjunctive predicates,
    sorted by entity id. Child entities are eligible like any others."""
    pattern = glob_to_regex(source.id_pattern)
    out = []
    for record in sorted(records, key=lambda r: r.entity_id):
        if not pattern.match(record.entity_id):
            continue
        if all(predicate_holds(p, record.extra_info) for p in source.predicates):
            out.append(record)
    return out


# ---------------------------------------------------------------------------
# The bake walk


class _NeedsReset(Exception):
    """Incremental application is impossible; fall back to a full reset."""


class _ReuseState:
    """Index over the previous orbit's world log and cached call results."""

    def __init__(self, orbit: Orbit):
        self.launches: dict[str, LaunchEntry] = {}
        self.inits: dict[str, InitEntry] = {}
        self.creates_by_sim: dict[str, list[CreateEntry]] = {}
        self.connects: dict[tuple, ConnectEntry] = {}
        for entry in orbit.world_log:
            if isinstance(entry, LaunchEntry):
                self.launches[entry.sim_id] = entry
            elif isinstance(entry, InitEntry):
                self.inits[entry.sim_id] = entry
            elif isinstance(entry, CreateEntry):
                self.creates_by_sim.setdefault(entry.sim_id, []).append(entry)
            elif isinstance(entry, ConnectEntry):
                self.connects[entry.key] = entry
        self.handles = dict(orbit.sim_handles)
        self.metas = dict(orbit.sim_metas)
        self.create_results = dict(orbit.create_results)
        self.create_cursors: dict[str, int] = {sim_id: 0 for sim_id in self.creates_by_sim}
        self.consumed_sims: set[str] = set()
        self.consumed_connects: set[tuple] = set()

    def all_consumed(self) -> bool:
        if set(self.launches) - self.consumed_sims or set(self.inits) - self.consumed_sims:
            return False
        for sim_id, entries in self.creates_by_sim.items():
            if self.create_cursors[sim_id] != len(entries):
                return False
        return not (set(self.connects) - self.consumed_connects)


class _BakeRun:
    def __init__(
        self,
        description: ScenarioDescription,
        registry: Registry,
        reuse: Optional[_ReuseState],
        connect_timeout: float,
    ):
        self.d = description
        self.registry = registry
        self.reuse = reuse
        self.connect_timeout = connect_timeout
        self.orbit = Orbit(description=description, registry=registry)
        self.new_handles: list[SimulatorHandle] = []

    # -- world-effect primitives (log on success only)

    def _do_create(
        self, sim_id: str, model: str, entity_id: str, params: dict
    ) -> tuple[EntityRecord, tuple[EntityRecord, ...]]:
        log_entry = CreateEntry(sim_id, model, entity_id, canonical_params(params))
        if self.reuse is not None:
            old_entries = self.reuse.creates_by_sim.get(sim_id, [])
            cursor = self.reuse.create_cursors.get(sim_id, 0)
            if cursor < len(old_entries):
                # The old per-simulator create sequence must be a prefix of the
                # new one; order matters because creation can have side effects
                # (child entities) that depend on what already exists.
                if old_entries[cursor] != log_entry:
                    raise _NeedsReset
                self.reuse.create_cursors[sim_id] = cursor + 1
                record, children = self.reuse.create_results[(sim_id, entity_id)]
                self.orbit.world_log.append(log_entry)
                self._register_records(sim_id, entity_id, record, children)
                return record, children
        handle = self.orbit.sim_handles[sim_id]
        records = handle.create(model, [entity_id], params)
        record = records[0]
        children = tuple(r for r in records if r.child)
        self.orbit.world_log.append(log_entry)
        self.orbit.last_delta.append(log_entry)
        self._register_records(sim_id, entity_id, record, children)
        return record, children

    def _register_records(
        self, sim_id: str, entity_id: str, record: EntityRecord, children: tuple[EntityRecord, ...]
    ) -> None:
        pool = self.orbit.sim_records.setdefault(sim_id, {})
        pool[record.entity_id] = record
        for child in children:
            pool[child.entity_id] = child
        self.orbit.create_results[(sim_id, entity_id)] = (record, children)

    def _do_connect(self, entry: ConnectEntry) -> None:
        if self.reuse is not None:
            old = self.reuse.connects.get(entry.key)
            if old is not None:
                if old != entry:
                    raise _NeedsReset
                self.reuse.consumed_connects.add(entry.key)
                self.orbit.world_log.append(entry)
                return
        self.orbit.world_log.append(entry)
        self.orbit.last_delta.append(entry)

    # -- element processing

    def _process_simulator(self, sim_spec) -> ElementState:
        elem = element_id("simulator", sim_spec.id)
        entry = self.registry.get(sim_spec.registry_key)
        if entry is None:
            return self._fail(
                elem, PHASE_LAUNCH, "unknown_simulator",
                f"registry has no entry {sim_spec.registry_key!r}",
            )
        launch_entry = LaunchEntry(sim_spec.id, sim_spec.registry_key)
        init_entry = InitEntry(sim_spec.id, canonical_params(sim_spec.init_params))

        if self.reuse is not None:
            old_launch = self.reuse.launches.get(sim_spec.id)
            if old_launch is not None:
                if old_launch != launch_entry or self.reuse.inits.get(sim_spec.id) != init_entry:
                    raise _NeedsReset
                # Same launch and init as last time: keep the live process and
                # cached meta. A previously failed simulator left no log entry,
                # so it falls through and is retried like a fresh bake would.
                self.reuse.consumed_sims.add(sim_spec.id)
                self.orbit.world_log += [launch_entry, init_entry]
                self.orbit.sim_handles[sim_spec.id] = self.reuse.handles[sim_spec.id]
                self.orbit.sim_metas[sim_spec.id] = self.reuse.metas[sim_spec.id]
                return ElementState(OK)

        try:
            handle = launch(entry, sim_spec.id, connect_timeout=self.connect_timeout)
        except SpawnFailed as exc:
            return self._fail(elem, PHASE_LAUNCH, "spawn_failed", str(exc))
        except ConnectTimeout as exc:
            return self._fail(elem, PHASE_LAUNCH, "connect_timeout", str(exc))
        self.new_handles.append(handle)
        try:
            meta = handle.init(sim_spec.init_params)
        except SimError as exc:
            handle.stop()  # a failed-init process is unusable; log nothing
            return self._fail(elem, PHASE_INIT, exc.code, exc.message)
        except ProtocolError as exc:
            handle.stop()
            return self._fail(elem, PHASE_INIT, "protocol", str(exc))
        self.orbit.world_log += [launch_entry, init_entry]
        self.orbit.last_delta += [launch_entry, init_entry]
        self.orbit.sim_handles[sim_spec.id] = handle
        self.orbit.sim_metas[sim_spec.id] = meta
        return ElementState(OK)

    def _process_tessera(self, tess: TesseraSpec) -> ElementState:
        elem = element_id("tessera", tess.id)
        meta = self.orbit.sim_metas[tess.simulator_id]
        if tess.model not in meta.models:
            return self._fail(
                elem,
                PHASE_RESOLVE_SOURCE,
                "unknown_model",
                f"simulator {tess.simulator_id!r} has no model {tess.model!r}",
            )
        refs: list[EntityRef] = []
        records: list[EntityRecord] = []
        seen: set[EntityRef] = set()
        for index, source in enumerate(tess.sources):
            if isinstance(source, (CreateFixed, CreateMatching)):
                if isinstance(source, CreateFixed):
                    count = source.count
                    if count < 0:
                        return self._fail(elem, PHASE_RESOLVE_SOURCE, "bad_count", "count must be >= 0")
                else:
                    count = len(self.orbit.resolved_tesserae[source.size_of])
                for ordinal in range(count):
                    entity_id = f"{tess.id}.{index}.{ordinal}"
                    try:
                        record, _ = self._do_create(
                            tess.simulator_id, tess.model, entity_id, source.create_params
                        )
                    except SimError as exc:
                        return self._fail(elem, PHASE_RESOLVE_SOURCE, exc.code, exc.message)
                    except ProtocolError as exc:
                        return self._fail(elem, PHASE_RESOLVE_SOURCE, "protocol", str(exc))
                    ref = EntityRef(tess.simulator_id, record.entity_id)
                    if ref not in seen:
                        seen.add(ref)
                        refs.append(ref)
                        records.append(record)
            else:
                pool = [
                    r
                    for r in self.orbit.sim_records.get(tess.simulator_id, {}).values()
                    if r.model == tess.model
                ]
                for record in resolve_select(source, pool):
                    ref = EntityRef(tess.simulator_id, record.entity_id)
                    if ref not in seen:
                        seen.add(ref)
                        refs.append(ref)
                        records.append(record)
        self.orbit.resolved_tesserae[tess.id] = refs
        self.orbit.tessera_records[tess.id] = records
        return ElementState(OK)

    def _attr_check(self, conn) -> Optional[tuple[str, str]]:
        """Return (code, message) when an attribute pair does not fit the models."""
        src_tess = self.d.tessera(conn.source)
        dst_tess = self.d.tessera(conn.target)
        src_meta = self.orbit.sim_metas[src_tess.simulator_id].models[src_tess.model]
        dst_meta = self.orbit.sim_metas[dst_tess.simulator_id].models[dst_tess.model]
        for source_attr, target_attr in conn.attr_pairs:
            if source_attr not in src_meta.outputs:
                return "unknown_attr", f"model {src_tess.model!r} has no output {source_attr!r}"
            if not dst_meta.accepts_input(target_attr):
                return "unknown_attr", f"model {dst_tess.model!r} has no input {target_attr!r}"
        return None

    def _process_connection(self, conn) -> ElementState:
        elem = element_id("connection", conn.id)
        src = self.orbit.resolved_tesserae[conn.source]
        dst = self.orbit.resolved_tesserae[conn.target]
        try:
            resolution = resolve_relation_detailed(
                conn.relation, src, dst, self.orbit.resolved_connections, conn.id, self.d.params.master_seed
            )
        except RelationError as exc:
            return self._fail(elem, PHASE_RESOLVE_RELATION, exc.code, str(exc))
        bad_attr = self._attr_check(conn)
        if bad_attr is not None:
            return self._fail(elem, PHASE_CONNECT, bad_attr[0], bad_attr[1])
        initial = canonical_params(conn.initial_values)
        attr_pairs = tuple(conn.attr_pairs)
        for pair_src, pair_dst in resolution.pairs:
            self._do_connect(ConnectEntry(conn.id, pair_src, pair_dst, attr_pairs, conn.delayed, initial))
        self.orbit.resolved_connections[conn.id] = resolution.pairs
        self.orbit.connection_drops[conn.id] = resolution.dropped
        return ElementState(OK)

    def _fail(self, elem: str, phase: str, code: str, message: str) -> ElementState:
        self.orbit.problems.append(BakingProblem(element=elem, phase=phase, code=code, message=message))
        return ElementState(FAILED)

    # -- the walk

    def execute(self) -> Orbit:
        d = self.d
        issues = validate_description(d)
        self.orbit.validation_issues = issues
        invalid: dict[str, ValidationIssue] = {}
        for issue in issues:
            if issue.element is not None and issue.element not in invalid:
                invalid[issue.element] = issue

        doc_order = element_ids(d)
        doc_index = {eid: i for i, eid in enumerate(doc_order)}
        deps = build_dependency_graph(d)
        dependents: dict[str, list[str]] = {eid: [] for eid in doc_order}
        remaining: dict[str, int] = {}
        for eid, eid_deps in deps.items():
            remaining[eid] = len(eid_deps)
            for dep in eid_deps:
                dependents[dep].append(eid)

        sims = {s.id: s for s in d.simulators}
        tesserae = {t.id: t for t in d.tesserae}
        connections = {c.id: c for c in d.connections}
        states = self.orbit.element_states

        ready = [doc_index[eid] for eid in doc_order if remaining[eid] == 0]
        heapq.heapify(ready)

        def settle(eid: str, state: ElementState) -> None:
            states[eid] = state
            for dependent in dependents[eid]:
                remaining[dependent] -= 1
                if remaining[dependent] == 0:
                    heapq.heappush(ready, doc_index[dependent])

        def process(eid: str) -> None:
            if eid in states:  # already settled (cycle members are failed directly)
                return
            if eid in invalid:
                issue = invalid[eid]
                settle(eid, self._fail(eid, PHASE_VALIDATE, issue.code, issue.message))
                return
            bad_dep = next((dep for dep in deps[eid] if states[dep].status != OK), None)
            if bad_dep is not None:
                settle(eid, ElementState(BLOCKED, blocked_on=bad_dep))
                return
            kind, raw_id = eid.split(":", 1)
            if kind == "simulator":
                settle(eid, self._process_simulator(sims[raw_id]))
            elif kind == "tessera":
                settle(eid, self._process_tessera(tesserae[raw_id]))
            else:
                settle(eid, self._process_connection(connections[raw_id]))

        while ready:
            process(doc_order[heapq.heappop(ready)])

        # Anything without a state sits in a dependency cycle not expressible in
        # validation (mutually selecting-and-creating tesserae in one simulator).
        leftovers = [eid for eid in doc_order if eid not in states]
        if leftovers:
            leftover_set = set(leftovers)
            cyclic = _find_cycle_members({eid: [x for x in deps[eid] if x in leftover_set] for eid in leftovers})
            for eid in leftovers:
                if eid in cyclic:
                    settle(eid, self._fail(eid, PHASE_RESOLVE_SOURCE, "dependency_cycle",
                                           "element is part of a dependency cycle"))
            while ready:
                process(doc_order[heapq.heappop(ready)])

        if self.reuse is not None and not self.reuse.all_consumed():
            raise _NeedsReset

        self._fill_blocked_dependents(doc_index)
        return self.orbit

    def _fill_blocked_dependents(self, doc_index: dict[str, int]) -> None:
        roots: dict[str, list[str]] = {}
        for eid, state in self.orbit.element_states.items():
            if state.status != BLOCKED:
                continue
            walk = eid
            while self.orbit.element_states[walk].status == BLOCKED:
                walk = self.orbit.element_states[walk].blocked_on
            roots.setdefault(walk, []).append(eid)
        for problem in self.orbit.problems:
            problem.blocked_dependents = sorted(roots.get(problem.element, []), key=doc_index.__getitem__)

    def stop_new_handles(self) -> None:
        for handle in self.new_handles:
            handle.stop()


def _find_cycle_members(edges: dict[str, list[str]]) -> set[str]:
    from .validation import _cycle_elements

    return _cycle_elements("element", edges)


# ---------------------------------------------------------------------------
# Public operations


def bake(
    d: ScenarioDescription, registry: Registry, connect_timeout: float = 10.0
) -> Orbit:
    """Fresh bake: start simulators, resolve tesserae and relations, record problems."""
    orbit = _BakeRun(d, registry, None, connect_timeout).execute()
    orbit.last_bake_mode = "fresh"
    orbit.last_delta = list(orbit.world_log)
    return orbit


def rebake(orbit: Orbit, d_new: ScenarioDescription, connect_timeout: float = 10.0) -> Orbit:
    """Rebake onto a live orbit, reusing entities when the change is purely additive.

    The returned orbit's resolved state always equals a fresh bake of d_new;
    non-additive edits stop the whole world and bake from scratch.
    """
    run = _BakeRun(d_new, orbit.registry, _ReuseState(orbit), connect_timeout)
    try:
        new_orbit = run.execute()
    except _NeedsReset:
        run.stop_new_handles()
        orbit.shutdown()
        new_orbit = _BakeRun(d_new, orbit.registry, None, connect_timeout).execute()
        new_orbit.last_bake_mode = "full_reset"
        new_orbit.last_delta = list(new_orbit.world_log)
        return new_orbit
    new_orbit.last_bake_mode = "incremental"
    return new_orbit


def orbit_report(orbit: Orbit) -> dict:
    """Serializable summary of the orbit: per-element states, resolved entities,
    pair counts, problems with their blocked dependents, and simulator metas."""
    d = orbit.description
    elements = []
    for eid in element_ids(d):
        state = orbit.element_states.get(eid)
        entry: dict[str, Any] = {"element": eid, "state": state.status if state else "unknown"}
        if state and state.status == BLOCKED:
            entry["blocked_on"] = state.blocked_on
        elements.append(entry)

    simulators = []
    for s in d.simulators:
        meta = orbit.sim_metas.get(s.id)
        simulators.append({"id": s.id, "meta": meta.to_json() if meta else None})

    tesserae = []
    for t in d.tesserae:
        if t.id in orbit.resolved_tesserae:
            entities: Any = []
            for ref, record in zip(orbit.resolved_tesserae[t.id], orbit.tessera_records[t.id]):
                item = record.to_json()
                item["simulator_id"] = ref.simulator_id
                entities.append(item)
        else:
            entities = None
        tesserae.append({"id": t.id, "entities": entities})

    connections = []
    for c in d.connections:
        if c.id in orbit.resolved_connections:
            connections.append(
                {
                    "id": c.id,
                    "pair_count": len(orbit.resolved_connections[c.id]),
                    "dropped_pairs": orbit.connection_drops.get(c.id, 0),
                }
            )
        else:
            connections.append({"id": c.id, "pair_count": None, "dropped_pairs": None})

    return {
        "elements": elements,
        "simulators": simulators,
        "tesserae": tesserae,
        "connections": connections,
        "problems": [p.to_json() for p in orbit.problems],
        "validation": [
            {"element": i.element, "code": i.code, "message": i.message} for i in orbit.validation_issues
        ],
    }
