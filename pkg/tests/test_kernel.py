"""Run kernel: dataflow checks, routing, the step loop, pacing, stopping."""

from __future__ import annotations

import json
import math
import threading
import time
from dataclasses import replace

import pytest

from tessellate.baking import bake, rebake
from tessellate.kernel import (
    Done,
    LogEvent,
    Progress,
    RunError,
    ValueCache,
    check_dataflow,
    event_to_json,
    route_inputs,
    run,
)
from tessellate.model import (
    ConnectionSpec,
    CreateFixed,
    CreateMatching,
    OneToOne,
    ScenarioDescription,
    ScenarioParams,
    SimulatorSpec,
    TesseraSpec,
)
from tessellate.pairs import EntityRef, PairSet

from conftest import triangle_description, write_grid5


def run_collect(orbit, params, stop_after_progress=None):
    events = []
    stop = threading.Event()

    def sink(event):
        events.append(event)
        if stop_after_progress is not None and isinstance(event, Progress):
            if sum(isinstance(e, Progress) for e in events) >= stop_after_progress:
                stop.set()

    terminal = run(orbit, params, sink, stop_signal=stop)
    return events, terminal


def collector_records(path):
    return [json.loads(l) for l in path.read_text().splitlines() if "time" in json.loads(l)]


# ---------------------------------------------------------------------------
# check_dataflow


def test_triangle_with_delayed_edge_is_acyclic(triangle, registry):
    orbit = bake(triangle, registry)
    try:
        assert check_dataflow(orbit) is None
    finally:
        orbit.shutdown()


def test_all_non_delayed_triangle_is_a_cycle(tmp_path, registry):
    d = triangle_description(write_grid5(tmp_path / "g.json"), tmp_path / "o.jsonl")
    d.connections[0] = replace(d.connections[0], delayed=False, initial_values={})
    orbit = bake(d, registry)
    try:
        witness = check_dataflow(orbit)
        assert witness is not None
        assert witness[0] == witness[-1]
        assert {"s_grid", "s_pv", "s_ctl"} == set(witness)
    finally:
        orbit.shutdown()


def test_no_connections_is_acyclic(registry):
    d = ScenarioDescription(simulators=[SimulatorSpec(id="s", registry_key="pv-sim")])
    orbit = bake(d, registry)
    try:
        assert check_dataflow(orbit) is None
    finally:
        orbit.shutdown()


# ---------------------------------------------------------------------------
# route_inputs


def _cached(entries):
    cache = ValueCache()
    for t, sim, eid, attr, value in entries:
        cache.put(t, EntityRef(sim, eid), attr, value)
    return cache


def test_route_single_pair():
    pv1, bus1 = EntityRef("s_pv", "pv1"), EntityRef("s_grid", "bus1")
    conn = ConnectionSpec(id="c", source="pvs", target="buses", attr_pairs=[("p", "p_in")])
    cache = _cached([(0, "s_pv", "pv1", "p", 2.5)])
    fragments = route_inputs(conn, PairSet.from_pairs([(pv1, bus1)]), cache, 0)
    assert fragments == {"bus1": {"p_in": [(pv1, 2.5)]}}


def test_route_many_to_one_collects_all_senders():
    srcs = [EntityRef("s_ctl", f"ctl{i}") for i in range(3)]
    db = EntityRef("s_col", "db")
    conn = ConnectionSpec(id="c", source="ctls", target="coll", attr_pairs=[("curtailment", "curtailment")])
    cache = _cached([(0, "s_ctl", f"ctl{i}", "curtailment", 1.0) for i in range(3)])
    fragments = route_inputs(conn, PairSet.from_pairs((s, db) for s in srcs), cache, 0)
    assert len(fragments["db"]["curtailment"]) == 3


def test_route_delayed_uses_initial_values_then_previous_step():
    ctl, pv = EntityRef("s_ctl", "ctl1"), EntityRef("s_pv", "pv1")
    conn = ConnectionSpec(id="c", source="ctls", target="pvs",
                          attr_pairs=[("curtailment", "curtailment")],
                          delayed=True, initial_values={"curtailment": 1.0})
    pairs = PairSet.from_pairs([(ctl, pv)])
    cache = ValueCache()
    assert route_inputs(conn, pairs, cache, 0) == {"pv1": {"curtailment": [(ctl, 1.0)]}}
    cache.put(0, ctl, "curtailment", 0.5)
    cache.put(60, ctl, "curtailment", 0.25)
    # at t=60 the sender's previous (t=0) value is delivered, not the fresh one
    assert route_inputs(conn, pairs, cache, 60) == {"pv1": {"curtailment": [(ctl, 0.5)]}}


def test_route_delayed_without_initial_value_delivers_nothing():
    a, b = EntityRef("x", "a"), EntityRef("y", "b")
    conn = ConnectionSpec(id="c", source="t1", target="t2", attr_pairs=[("o", "i")], delayed=True)
    assert route_inputs(conn, PairSet.from_pairs([(a, b)]), ValueCache(), 0) == {}


# ---------------------------------------------------------------------------
# run: the triangle end to end


def test_triangle_run_three_steps(tmp_path, registry):
    out = tmp_path / "collector.jsonl"
    d = triangle_description(write_grid5(tmp_path / "g.json"), out)
    orbit = bake(d, registry)
    try:
        events, terminal = run_collect(orbit, d.params)
        assert terminal == Done(180)
        assert [e for e in events if isinstance(e, (Done, RunError))] == [Done(180)]
        progress = [e for e in events if isinstance(e, Progress)]
        assert [p.time for p in progress] == [0, 60, 120]

        records = collector_records(out)
        assert len(records) == 9  # 3 controllers x 3 steps
        assert sorted({r["time"] for r in records}) == [0, 60, 120]
        assert all(r["time"] < 180 for r in records)

        # routed power reached the buses: p_net at the last step equals the pv output
        data = orbit.sim_handles["s_grid"].get_data({"buses.0.0": ["p_net"]})
        expected_p = 5 * math.sin(math.pi * 120 / 86400)
        assert data["buses.0.0"]["p_net"] == pytest.approx(expected_p)
    finally:
        orbit.shutdown()


def test_end_time_is_exclusive(tmp_path, registry):
    out = tmp_path / "collector.jsonl"
    d = triangle_description(write_grid5(tmp_path / "g.json"), out, end_time=60)
    orbit = bake(d, registry)
    try:
        events, terminal = run_collect(orbit, d.params)
        assert terminal == Done(60)
        assert sorted({r["time"] for r in collector_records(out)}) == [0]
    finally:
        orbit.shutdown()


def test_stop_signal_ends_with_done_at_last_completed_time(tmp_path, registry):
    d = triangle_description(write_grid5(tmp_path / "g.json"), tmp_path / "o.jsonl")
    orbit = bake(d, registry)
    try:
        events, terminal = run_collect(orbit, d.params, stop_after_progress=1)
        assert terminal == Done(60)
    finally:
        orbit.shutdown()


def test_run_determinism_and_realtime_equivalence(tmp_path, registry):
    def one_run(rtf, out_name):
        out = tmp_path / out_name
        d = triangle_description(write_grid5(tmp_path / "g.json"), out)
        d = replace(d, params=ScenarioParams(end_time=180, real_time_factor=rtf))
        orbit = bake(d, registry)
        try:
            events, terminal = run_collect(orbit, d.params)
        finally:
            orbit.shutdown()
        hard_events = [event_to_json(e) for e in events if not isinstance(e, Progress)]
        return out.read_bytes(), hard_events, terminal

    fast1 = one_run(None, "a.jsonl")
    fast2 = one_run(None, "b.jsonl")
    assert fast1 == fast2

    start = time.monotonic()
    paced = one_run(0.004, "c.jsonl")
    elapsed = time.monotonic() - start
    assert paced[0] == fast1[0]  # byte-identical results
    assert paced[2] == fast1[2]
    assert elapsed >= 0.004 * 120  # the loop was actually paced


def test_partial_orbit_runs_with_warnings(tmp_path, registry):
    out = tmp_path / "collector.jsonl"
    d = triangle_description(tmp_path / "missing.json", out)
    orbit = bake(d, registry)
    try:
        events, terminal = run_collect(orbit, d.params)
        assert terminal == Done(180)
        warnings = [e for e in events if isinstance(e, LogEvent) and e.level == "warning"]
        skipped = " ".join(w.message for w in warnings)
        assert "s_grid" in skipped
        assert "bus_to_ctl" in skipped and "ctl_to_pv" in skipped and "pv_to_bus" in skipped
        # the surviving controller-to-collector leg still produced records
        assert len(collector_records(out)) == 9
    finally:
        orbit.shutdown()


def test_run_refuses_cyclic_dataflow(tmp_path, registry):
    d = triangle_description(write_grid5(tmp_path / "g.json"), tmp_path / "o.jsonl")
    d.connections[0] = replace(d.connections[0], delayed=False, initial_values={})
    orbit = bake(d, registry)
    try:
        events, terminal = run_collect(orbit, d.params)
        assert isinstance(terminal, RunError)
        assert "cycle" in terminal.message
    finally:
        orbit.shutdown()


def test_heterogeneous_step_sizes(tmp_path, registry_with_stub):
    d = ScenarioDescription(
        simulators=[
            SimulatorSpec(id="s_pv", registry_key="pv-sim"),
            SimulatorSpec(id="s_stub", registry_key="stub-sim"),
        ],
        tesserae=[
            TesseraSpec(id="pvs", simulator_id="s_pv", model="PV",
                        sources=[CreateFixed(count=1, create_params={"peak_kw": 3})]),
            TesseraSpec(id="stubs", simulator_id="s_stub", model="Stub",
                        sources=[CreateMatching(size_of="pvs")]),
        ],
        connections=[
            ConnectionSpec(id="p_to_s", source="pvs", target="stubs",
                           attr_pairs=[("p", "x")], relation=OneToOne()),
        ],
        params=ScenarioParams(end_time=240),
    )
    orbit = bake(d, registry_with_stub)
    try:
        events, terminal = run_collect(orbit, d.params)
        assert terminal == Done(240)
        # pv due at 0,60,120,180; stub at 0,120: the simulated times seen as Progress
        progress_times = [e.time for e in events if isinstance(e, Progress)]
        assert progress_times == [0, 60, 120, 180]
        # stub received the pv output produced at its own step times
        y = orbit.sim_handles["s_stub"].get_data({"stubs.0.0": ["y"]})["stubs.0.0"]["y"]
        assert y == pytest.approx(3 * math.sin(math.pi * 120 / 86400))
    finally:
        orbit.shutdown()


def test_event_json_encoding():
    assert event_to_json(Progress(60, 180)) == {"event": "progress", "time": 60, "end_time": 180}
    assert event_to_json(Done(180)) == {"event": "done", "final_time": 180}
    assert event_to_json(RunError("s", "boom")) == {"event": "error", "source": "s", "message": "boom"}
    assert event_to_json(LogEvent("warning", "kernel", "m")) == {
        "event": "log", "level": "warning", "source": "kernel", "message": "m",
    }
