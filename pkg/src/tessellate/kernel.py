"""Run kernel: executes a baked orbit as a time-stepped co-simulation.

Within one simulated time, simulators step in dataflow order (the topological
order over non-delayed connections, document order breaking ties), so
non-delayed inputs carry values produced at that same time. Delayed
connections deliver the sender's previous-step values, seeded from the
connection's initial values, which is what breaks cycles like the
bus - controller - PV triangle.
"""

from __future__ import annotations

import time as _time
from collections import deque
from dataclasses import dataclass
from typing import Any, Callable, Optional, Union

from .baking import OK, Orbit
from .model import ConnectionSpec, ScenarioParams, element_id
from .pairs import EntityRef, PairSet
from .protocol import ProtocolError, SimError, StepInputs


@dataclass(frozen=True)
class Progress:
    time: int
    end_time: int


@dataclass(frozen=True)
class LogEvent:
    level: str
    source: str
    message: str


@dataclass(frozen=True)
class Done:
    final_time: int


@dataclass(frozen=True)
class RunError:
    source: str
    message: str


RunEvent = Union[Progress, LogEvent, Done, RunError]
EventSink = Callable[[RunEvent], None]


def event_to_json(event: RunEvent) -> dict:
    if isinstance(event, Progress):
        return {"event": "progress", "time": event.time, "end_time": event.end_time}
    if isinstance(event, LogEvent):
        return {"event": "log", "level": event.level, "source": event.source, "message": event.message}
    if isinstance(event, Done):
        return {"event": "done", "final_time": event.final_time}
    if isinstance(event, RunError):
        return {"event": "error", "source": event.source, "message": event.message}
    raise TypeError(f"not a run event: {event!r}")


# ---------------------------------------------------------------------------
# Dataflow checking


def _ok_connections(orbit: Orbit) -> list[ConnectionSpec]:
    states = orbit.element_states
    return [
        c
        for c in orbit.description.connections
        if states.get(element_id("connection", c.id)) is not None
        and states[element_id("connection", c.id)].status == OK
    ]


def _ok_sim_ids(orbit: Orbit) -> list[str]:
    states = orbit.element_states
    return [
        s.id
        for s in orbit.description.simulators
        if states.get(element_id("simulator", s.id)) is not None
        and states[element_id("simulator", s.id)].status == OK
    ]


def check_dataflow(orbit: Orbit) -> Optional[list[str]]:
    """Return a witness cycle of simulator ids over non-delayed connections, or None.

    A run refuses to start on a cyclic graph: within one simulated time there
    would be no order in which every non-delayed input is already produced.
    """
    d = orbit.description
    sims = _ok_sim_ids(orbit)
    edges: dict[str, list[str]] = {s: [] for s in sims}
    for c in _ok_connections(orbit):
        if c.delayed:
            continue
        src_sim = d.tessera(c.source).simulator_id
        dst_sim = d.tessera(c.target).simulator_id
        if src_sim in edges and dst_sim not in edges[src_sim]:
            edges[src_sim].append(dst_sim)

    color: dict[str, int] = {}
    path: list[str] = []

    def visit(node: str) -> Optional[list[str]]:
        color[node] = 1
        path.append(node)
        for succ in edges[node]:
            if color.get(succ, 0) == 1:
                return path[path.index(succ):] + [succ]
            if color.get(succ, 0) == 0:
                witness = visit(succ)
                if witness is not None:
                    return witness
        path.pop()
        color[node] = 2
        return None

    for sim in sims:
        if color.get(sim, 0) == 0:
            witness = visit(sim)
            if witness is not None:
                return witness
    return None


def _dataflow_order(orbit: Orbit) -> list[str]:
    d = orbit.description
    sims = _ok_sim_ids(orbit)
    doc_index = {s: i for i, s in enumerate(sims)}
    deps: dict[str, set[str]] = {s: set() for s in sims}
    for c in _ok_connections(orbit):
        if c.delayed:
            continue
        src_sim = d.tessera(c.source).simulator_id
        dst_sim = d.tessera(c.target).simulator_id
        if dst_sim != src_sim:
            deps[dst_sim].add(src_sim)
    order = []
    placed: set[str] = set()
    pending = list(sims)
    while pending:
        ready = [s for s in pending if deps[s] <= placed]
        ready.sort(key=doc_index.__getitem__)
        order.append(ready[0])
        placed.add(ready[0])
        pending.remove(ready[0])
    return order


# ---------------------------------------------------------------------------
# Value cache and routing


class MissingValue(Exception):
    """A non-delayed upstream value is absent; indicates a kernel ordering bug."""


class ValueCache:
    """Latest two (time, value) samples per (entity, attribute).

    Two samples suffice: non-delayed routing reads the latest, delayed routing
    reads the newest sample strictly before the current time.
    """

    def __init__(self) -> None:
        self._store: dict[tuple[EntityRef, str], deque] = {}

    def put(self, t: int, ref: EntityRef, attr: str, value: Any) -> None:
        self._store.setdefault((ref, attr), deque(maxlen=2)).append((t, value))

    def latest(self, ref: EntityRef, attr: str) -> Optional[tuple[int, Any]]:
        samples = self._store.get((ref, attr))
        return samples[-1] if samples else None

    def before(self, ref: EntityRef, attr: str, t: int) -> Optional[tuple[int, Any]]:
        samples = self._store.get((ref, attr))
        if not samples:
            return None
        for sample in reversed(samples):
            if sample[0] < t:
                return sample
        return None


Fragments = dict[str, dict[str, list[tuple[EntityRef, Any]]]]


def route_inputs(conn: ConnectionSpec, pair_set: PairSet, cache: ValueCache, t: int) -> Fragments:
    """Input fragments for the connection's targets at time t, keyed by entity id."""
    fragments: Fragments = {}
    for src, dst in pair_set:
        for source_attr, target_attr in conn.attr_pairs:
            if conn.delayed:
                sample = cache.before(src, source_attr, t)
                if sample is None:
                    if target_attr not in conn.initial_values:
                        continue
                    value = conn.initial_values[target_attr]
                else:
                    value = sample[1]
            else:
                sample = cache.latest(src, source_attr)
                if sample is None:
                    raise MissingValue(f"no value for {src}.{source_attr} at t={t} on {conn.id!r}")
                value = sample[1]
            fragments.setdefault(dst.entity_id, {}).setdefault(target_attr, []).append((src, value))
    return fragments


def _merge_fragments(into: StepInputs, fragments: Fragments) -> None:
    for entity_id, attrs in fragments.items():
        slot = into.setdefault(entity_id, {})
        for attr, entries in attrs.items():
            slot.setdefault(attr, []).extend(entries)


# ---------------------------------------------------------------------------
# Progress coalescing


class _ProgressLimiter:
    """Token bucket: short runs emit every step, long fast runs settle at the rate."""

    def __init__(self, rate: float = 10.0, burst: float = 10.0):
        self.rate = rate
        self.burst = burst
        self.tokens = burst
        self.last = _time.monotonic()

    def allow(self) -> bool:
        now = _time.monotonic()
        self.tokens = min(self.burst, self.tokens + (now - self.last) * self.rate)
        self.last = now
        if self.tokens >= 1.0:
            self.tokens -= 1.0
            return True
        return False


# ---------------------------------------------------------------------------
# The run loop


def run(
    orbit: Orbit,
    params: ScenarioParams,
    sink: EventSink,
    stop_signal: Optional[Any] = None,
) -> RunEvent:
    """Run the orbit until end_time, streaming events; returns the terminal event.

    Skips non-ok elements with warnings. real_time_factor paces the loop
    (simulated results are identical to fast mode); the stop signal ends the
    run with Done at the last completed time.
    """
    d = orbit.description
    states = orbit.element_states

    witness = check_dataflow(orbit)
    if witness is not None:
        terminal: RunEvent = RunError("kernel", "dataflow cycle: " + " -> ".join(witness))
        sink(terminal)
        return terminal

    for s in d.simulators:
        state = states.get(element_id("simulator", s.id))
        if state is None or state.status != OK:
            sink(LogEvent("warning", "kernel", f"skipping simulator {s.id!r} (not ok)"))
    for c in d.connections:
        state = states.get(element_id("connection", c.id))
        if state is None or state.status != OK:
            sink(LogEvent("warning", "kernel", f"skipping connection {c.id!r} (not ok)"))

    order = _dataflow_order(orbit)
    connections = _ok_connections(orbit)
    conns_into_sim: dict[str, list[ConnectionSpec]] = {s: [] for s in order}
    wanted: dict[str, dict[str, list[str]]] = {s: {} for s in order}
    for c in connections:
        dst_sim = d.tessera(c.target).simulator_id
        conns_into_sim[dst_sim].append(c)
        for src, _ in orbit.resolved_connections[c.id]:
            attrs = wanted[src.simulator_id].setdefault(src.entity_id, [])
            for source_attr, _target in c.attr_pairs:
                if source_attr not in attrs:
                    attrs.append(source_attr)

    end = params.end_time
    next_due: dict[str, int] = {s: 0 for s in order}
    min_step = min((orbit.sim_metas[s].step_size for s in order), default=1)
    cache = ValueCache()
    limiter = _ProgressLimiter()
    start_wall = _time.monotonic()
    rtf = params.real_time_factor

    def finish_time() -> int:
        pending = min(next_due.values()) if next_due else end
        return min(end, pending)

    try:
        while True:
            if stop_signal is not None and stop_signal.is_set():
                break
            t = min(next_due.values()) if next_due else end
            if t >= end:
                break

            if rtf is not None:
                delay = (start_wall + rtf * t) - _time.monotonic()
                if delay > 0:
                    if stop_signal is not None:
                        if stop_signal.wait(delay):
                            break
                    else:
                        _time.sleep(delay)
                elif -delay > rtf * min_step:
                    sink(LogEvent("warning", "kernel", f"running behind real time at t={t}"))

            for sim_id in order:
                if next_due[sim_id] != t:
                    continue
                inputs: StepInputs = {}
                for c in conns_into_sim[sim_id]:
                    _merge_fragments(inputs, route_inputs(c, orbit.resolved_connections[c.id], cache, t))
                handle = orbit.sim_handles[sim_id]
                try:
                    next_due[sim_id] = handle.step(t, inputs)
                    data = handle.get_data(wanted[sim_id]) if wanted[sim_id] else {}
                except (SimError, ProtocolError) as exc:
                    terminal = RunError(sim_id, str(exc))
                    sink(terminal)
                    return terminal
                for entity_id, attrs in data.items():
                    for attr, value in attrs.items():
                        cache.put(t, EntityRef(sim_id, entity_id), attr, value)

            is_last = (min(next_due.values()) if next_due else end) >= end
            if is_last or limiter.allow():
                sink(Progress(t, end))
    except MissingValue as exc:
        terminal = RunError("kernel", str(exc))
        sink(terminal)
        return terminal

    terminal = Done(finish_time())
    sink(terminal)
    return terminal
