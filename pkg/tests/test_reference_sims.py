"""Behavior of the four reference simulators (plus the step-120 stub)."""

from __future__ import annotations

import json
import math

import pytest

from tessellate.pairs import EntityRef
from tessellate.protocol import SimError, launch
from tessellate.registry import RegistryEntry
from tessellate.sims.controller import control_law
from tessellate.sims.pv import pv_profile

from conftest import write_grid5


def start(key: str, init_params=None):
    h = launch(RegistryEntry(key=key, builtin=key), f"test_{key}")
    h.init(init_params or {})
    return h


def sender(value, sim="x", eid="e"):
    return (EntityRef(sim, eid), value)


# ---------------------------------------------------------------------------
# grid-sim


def test_grid_emits_bus_children(tmp_path):
    topo = write_grid5(tmp_path / "grid5.json")
    h = start("grid-sim")
    try:
        records = h.create("Grid", ["grid.0.0"], {"file": str(topo)})
        grid = [r for r in records if not r.child]
        children = [r for r in records if r.child]
        assert len(grid) == 1 and len(children) == 5
        assert [c.entity_id for c in children] == ["bus1", "bus2", "bus3", "bus4", "bus5"]
        assert sum(1 for c in children if c.extra_info["voltage_level"] == "LV") == 3
        assert all(c.model == "Bus" for c in children)
    finally:
        h.stop()


def test_grid_child_ids_depend_only_on_file_content(tmp_path):
    topo = write_grid5(tmp_path / "a.json")
    ids = []
    for name in ("first", "second"):
        h = start("grid-sim")
        try:
            records = h.create("Grid", [f"{name}.0.0"], {"file": str(topo)})
            ids.append([r.entity_id for r in records if r.child])
        finally:
            h.stop()
    assert ids[0] == ids[1]


def test_grid_init_topology_default(tmp_path):
    topo = write_grid5(tmp_path / "grid5.json")
    h = start("grid-sim", {"topology": str(topo)})
    try:
        records = h.create("Grid", ["g.0.0"], {})  # falls back to the init topology
        assert sum(1 for r in records if r.child) == 5
    finally:
        h.stop()


def test_grid_bus_power_summation(tmp_path):
    h = start("grid-sim")
    try:
        h.create("Bus", ["b.0.0"], {"voltage_level": "LV"})
        h.step(0, {})
        data = h.get_data({"b.0.0": ["p_net", "v_pu"]})
        assert data["b.0.0"] == {"p_net": 0.0, "v_pu": 1.0}

        h.step(60, {"b.0.0": {"p_in": [sender(2.0, eid="p1"), sender(3.0, eid="p2")]}})
        data = h.get_data({"b.0.0": ["p_net", "v_pu"]})
        assert data["b.0.0"]["p_net"] == 5.0
        assert data["b.0.0"]["v_pu"] == 1.0 - 0.005
    finally:
        h.stop()


def test_grid_missing_topology_fails_init(tmp_path):
    h = launch(RegistryEntry(key="grid-sim", builtin="grid-sim"), "g")
    with pytest.raises(SimError) as exc_info:
        h.init({"topology": str(tmp_path / "nope.json")})
    assert exc_info.value.code == "topology_not_found"
    h.stop()


def test_grid_bad_voltage_level():
    h = start("grid-sim")
    try:
        with pytest.raises(SimError) as exc_info:
            h.create("Bus", ["b.0.0"], {"voltage_level": "HV"})
        assert exc_info.value.code == "bad_params"
    finally:
        h.stop()


# ---------------------------------------------------------------------------
# pv-sim


def test_pv_profile_shape():
    assert pv_profile(0) == 0.0
    assert pv_profile(43200) == 1.0
    assert pv_profile(21600) == pytest.approx(math.sin(math.pi / 4))
    assert pv_profile(86400) == 0.0


def test_pv_power_at_noon():
    h = start("pv-sim")
    try:
        h.create("PV", ["pv.0.0"], {"peak_kw": 5})
        h.step(43200, {})
        assert h.get_data({"pv.0.0": ["p"]})["pv.0.0"]["p"] == pytest.approx(5.0)
    finally:
        h.stop()


def test_pv_curtailment_scales_linearly():
    h = start("pv-sim")
    try:
        h.create("PV", ["pv.0.0"], {"peak_kw": 5})
        h.step(43200, {"pv.0.0": {"curtailment": [sender(0.5)]}})
        assert h.get_data({"pv.0.0": ["p"]})["pv.0.0"]["p"] == pytest.approx(2.5)
    finally:
        h.stop()


def test_wind_turbine_flat_profile():
    h = start("pv-sim")
    try:
        h.create("WT", ["wt.0.0"], {"peak_kw": 10})
        h.step(0, {})
        assert h.get_data({"wt.0.0": ["p"]})["wt.0.0"]["p"] == pytest.approx(6.0)
    finally:
        h.stop()


# ---------------------------------------------------------------------------
# ctl-sim


def test_control_law_values():
    assert control_law(1.0) == 1.0
    assert control_law(0.99) == 1.0
    assert control_law(0.95) == 0.0
    assert control_law(0.97) == pytest.approx(0.5)
    assert control_law(0.90) == 0.0


def test_controller_round_trip():
    h = start("ctl-sim")
    try:
        h.create("Ctl", ["c.0.0"], {})
        h.step(0, {"c.0.0": {"v_pu": [sender(0.97)]}})
        assert h.get_data({"c.0.0": ["curtailment"]})["c.0.0"]["curtailment"] == pytest.approx(0.5)
    finally:
        h.stop()


# ---------------------------------------------------------------------------
# collector-sim


def _records(path):
    lines = path.read_text().splitlines()
    return [json.loads(l) for l in lines if "time" in json.loads(l)]


def test_collector_appends_records(tmp_path):
    out = tmp_path / "out.jsonl"
    h = start("collector-sim")
    try:
        h.create("Collector", ["db.0.0"], {"out_file": str(out)})
        senders = [sender(1.0, "a", "x1"), sender(2.0, "a", "x2"), sender(3.0, "b", "x3")]
        h.step(0, {"db.0.0": {"p": senders}})
        h.step(60, {"db.0.0": {"p": senders}})
        records = _records(out)
        assert len(records) == 6
        assert records[0] == {"attr": "p", "sender": "a/x1", "time": 0, "value": 1.0}
    finally:
        h.stop()


def test_collector_header_only_without_inputs(tmp_path):
    out = tmp_path / "out.jsonl"
    h = start("collector-sim")
    try:
        h.create("Collector", ["db.0.0"], {"out_file": str(out)})
        h.step(0, {})
        lines = out.read_text().splitlines()
        assert len(lines) == 1
        assert json.loads(lines[0]) == {"collector": "db.0.0", "version": 1}
    finally:
        h.stop()


def test_collector_unwritable_path(tmp_path):
    h = start("collector-sim")
    try:
        with pytest.raises(SimError) as exc_info:
            h.create("Collector", ["db.0.0"], {"out_file": str(tmp_path / "no" / "such" / "dir.jsonl")})
        assert exc_info.value.code == "io"
    finally:
        h.stop()


# ---------------------------------------------------------------------------
# determinism across identical call sequences


def test_identical_sequences_identical_outputs(tmp_path):
    topo = write_grid5(tmp_path / "g.json")

    def drive():
        h = start("grid-sim", {"topology": str(topo)})
        try:
            created = [r.to_json() for r in h.create("Grid", ["g.0.0"], {})]
            h.step(0, {"bus1": {"p_in": [sender(1.5)]}})
            data = h.get_data({"bus1": ["p_net", "v_pu"], "bus4": ["p_net"]})
            return created, data
        finally:
            h.stop()

    assert drive() == drive()


def test_stub_sim_step_size():
    h = start("stub-sim")
    try:
        assert h.meta.step_size == 120
        h.create("Stub", ["st.0.0"], {})
        assert h.step(0, {"st.0.0": {"x": [sender(1.0), sender(2.5, eid="e2")]}}) == 120
        assert h.get_data({"st.0.0": ["y"]})["st.0.0"]["y"] == 3.5
    finally:
        h.stop()
