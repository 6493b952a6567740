"""Shared fixture builders: topology files, registries, and the triangle scenario."""

from __future__ import annotations

import json
from pathlib import Path

import pytest

from tessellate.model import (
    Composition,
    CompositionStep,
    ConnectionSpec,
    CreateFixed,
    CreateMatching,
    ManyToOne,
    NodePosition,
    OneToOne,
    Predicate,
    ScenarioDescription,
    ScenarioParams,
    Select,
    SimulatorSpec,
    TesseraSpec,
)
from tessellate.registry import Registry, RegistryEntry, builtin_registry

GRID5_BUSES = [
    ("bus1", "LV"),
    ("bus2", "LV"),
    ("bus3", "LV"),
    ("bus4", "MV"),
    ("bus5", "MV"),
]


def write_grid5(path: Path) -> Path:
    path.write_text(
        json.dumps({"buses": [{"id": b, "voltage_level": v} for b, v in GRID5_BUSES]}),
        encoding="utf-8",
    )
    return path


@pytest.fixture
def grid5(tmp_path: Path) -> Path:
    return write_grid5(tmp_path / "grid5.json")


@pytest.fixture
def registry() -> Registry:
    return builtin_registry()


@pytest.fixture
def registry_with_stub() -> Registry:
    entries = builtin_registry().entries()
    entries.append(RegistryEntry(key="stub-sim", display_name="Stub", icon="box", builtin="stub-sim"))
    return Registry(entries)


def triangle_description(topology: Path, out_file: Path, end_time: int = 180) -> ScenarioDescription:
    """The paper's running example: LV buses, controllers, PV systems, and a
    collector fed by the controllers; the PV-to-bus connection is the inverted
    composition of the two explicit ones."""
    return ScenarioDescription(
        simulators=[
            SimulatorSpec(id="s_grid", registry_key="grid-sim", display_name="Grid",
                          init_params={"topology": str(topology)}),
            SimulatorSpec(id="s_pv", registry_key="pv-sim", display_name="PV park"),
            SimulatorSpec(id="s_ctl", registry_key="ctl-sim", display_name="Controllers"),
            SimulatorSpec(id="s_col", registry_key="collector-sim", display_name="Collector"),
        ],
        tesserae=[
            TesseraSpec(id="buses", name="LV buses", icon="grid", simulator_id="s_grid", model="Bus",
                        sources=[CreateFixed(count=3, create_params={"voltage_level": "LV"})]),
            TesseraSpec(id="pvs", name="PV systems", icon="sun", simulator_id="s_pv", model="PV",
                        sources=[CreateMatching(size_of="buses", create_params={"peak_kw": 5})]),
            TesseraSpec(id="ctls", name="Controllers", icon="sliders", simulator_id="s_ctl", model="Ctl",
                        sources=[CreateFixed(count=3)]),
            TesseraSpec(id="coll", name="Collector", icon="database", simulator_id="s_col", model="Collector",
                        sources=[CreateFixed(count=1, create_params={"out_file": str(out_file)})]),
        ],
        connections=[
            ConnectionSpec(id="bus_to_ctl", source="buses", target="ctls",
                           attr_pairs=[("v_pu", "v_pu")], relation=OneToOne(),
                           delayed=True, initial_values={"v_pu": 1.0}),
            ConnectionSpec(id="ctl_to_pv", source="ctls", target="pvs",
                           attr_pairs=[("curtailment", "curtailment")], relation=OneToOne()),
            ConnectionSpec(id="pv_to_bus", source="pvs", target="buses",
                           attr_pairs=[("p", "p_in")],
                           relation=Composition(path=[
                               CompositionStep(connection="ctl_to_pv", direction="backward"),
                               CompositionStep(connection="bus_to_ctl", direction="backward"),
                           ])),
            ConnectionSpec(id="ctl_to_col", source="ctls", target="coll",
                           attr_pairs=[("curtailment", "curtailment")], relation=ManyToOne()),
        ],
        params=ScenarioParams(end_time=end_time),
        layout={
            "buses": NodePosition(120.0, 260.0),
            "pvs": NodePosition(420.0, 260.0),
            "ctls": NodePosition(270.0, 80.0),
            "coll": NodePosition(560.0, 80.0),
        },
    )


@pytest.fixture
def triangle(tmp_path: Path, grid5: Path) -> ScenarioDescription:
    return triangle_description(grid5, tmp_path / "collector.jsonl")


def select_grid_description(topology: Path) -> ScenarioDescription:
    """Grid tessera creating a Grid entity whose Bus children are then selected."""
    return ScenarioDescription(
        simulators=[
            SimulatorSpec(id="s_grid", registry_key="grid-sim", init_params={"topology": str(topology)}),
            SimulatorSpec(id="s_pv", registry_key="pv-sim"),
        ],
        tesserae=[
            TesseraSpec(id="grid", simulator_id="s_grid", model="Grid",
                        sources=[CreateFixed(count=1)]),
            TesseraSpec(id="lv_buses", simulator_id="s_grid", model="Bus",
                        sources=[Select(id_pattern="*",
                                        predicates=[Predicate(key="voltage_level", op="eq", value="LV")])]),
            TesseraSpec(id="pvs", simulator_id="s_pv", model="PV",
                        sources=[CreateMatching(size_of="lv_buses", create_params={"peak_kw": 2})]),
        ],
        connections=[
            ConnectionSpec(id="pv_to_bus", source="pvs", target="lv_buses",
                           attr_pairs=[("p", "p_in")], relation=OneToOne()),
        ],
        params=ScenarioParams(end_time=120),
    )


def growth_description(bus_count: int) -> ScenarioDescription:
    """Minimal reuse fixture: a bus tessera of configurable size and a matching PV tessera."""
    return ScenarioDescription(
        simulators=[
            SimulatorSpec(id="s_grid", registry_key="grid-sim"),
            SimulatorSpec(id="s_pv", registry_key="pv-sim"),
        ],
        tesserae=[
            TesseraSpec(id="buses", simulator_id="s_grid", model="Bus",
                        sources=[CreateFixed(count=bus_count, create_params={"voltage_level": "LV"})]),
            TesseraSpec(id="pvs", simulator_id="s_pv", model="PV",
                        sources=[CreateMatching(size_of="buses", create_params={"peak_kw": 4})]),
        ],
        connections=[
            ConnectionSpec(id="pv_to_bus", source="pvs", target="buses",
                           attr_pairs=[("p", "p_in")], relation=OneToOne()),
        ],
        params=ScenarioParams(end_time=120),
    )
