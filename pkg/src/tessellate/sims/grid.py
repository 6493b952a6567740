"""Grid simulator: Grid entities load a bus topology file and emit Bus children.

Deliberately algebraic rather than electrical: each Bus sums the p_in values it
received in the latest step into p_net (kW) and reports v_pu = 1 - 0.001 * p_net.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any

from ..protocol import EntityRecord, ModelMeta, ParamDescriptor, StepInputs
from .base import Simulator, SimulatorFault

VOLTAGE_LEVELS = ("LV", "MV")


def load_topology(path: str) -> list[tuple[str, str]]:
    """Read a topology file into (bus id, voltage level) pairs, in file order."""
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError:
        raise SimulatorFault("topology_not_found", f"cannot read topology file {path!r}") from None
    try:
        doc = json.loads(text)
        buses = [(str(b["id"]), str(b["voltage_level"])) for b in doc["buses"]]
    except (json.JSONDecodeError, KeyError, TypeError) as exc:
        raise SimulatorFault("bad_topology", f"malformed topology file {path!r}: {exc}") from None
    seen = set()
    for bus_id, level in buses:
        if bus_id in seen:
            raise SimulatorFault("bad_topology", f"duplicate bus id {bus_id!r} in {path!r}")
        seen.add(bus_id)
        if level not in VOLTAGE_LEVELS:
            raise SimulatorFault("bad_topology", f"bus {bus_id!r} has voltage_level {level!r}")
    return buses


class GridSim(Simulator):
    step_size = 60

    def __init__(self) -> None:
        super().__init__()
        self._default_topology: str | None = None
        self._p_net: dict[str, float] = {}

    def model_metas(self) -> dict[str, ModelMeta]:
        return {
            "Grid": ModelMeta(
                create_params=[
                    ParamDescriptor(
                        name="file",
                        type="string",
                        doc="topology JSON path; defaults to the init 'topology' parameter",
                    )
                ],
                inputs=[],
                outputs=[],
            ),
            "Bus": ModelMeta(
                create_params=[
                    ParamDescriptor(
                        name="voltage_level",
                        type="string",
                        values=list(VOLTAGE_LEVELS),
                        doc="voltage level recorded as extra info (default LV)",
                    )
                ],
                inputs=["p_in"],
                outputs=["p_net", "v_pu"],
            ),
        }

    def on_init(self, params: dict) -> None:
        topology = params.get("topology")
        if topology is not None:
            load_topology(str(topology))  # fail init early on a bad default
            self._default_topology = str(topology)

    def on_create(self, entity_id: str, model: str, params: dict) -> tuple[dict, list[EntityRecord]]:
        if model == "Bus":
            level = params.get("voltage_level", "LV")
            if level not in VOLTAGE_LEVELS:
                raise SimulatorFault("bad_params", f"voltage_level must be one of {VOLTAGE_LEVELS}")
            return {"voltage_level": level}, []
        path = params.get("file", self._default_topology)
        if path is None:
            raise SimulatorFault("bad_params", "no topology: pass 'file' or init with 'topology'")
        children = [
            EntityRecord(entity_id=bus_id, model="Bus", extra_info={"voltage_level": level}, child=True)
            for bus_id, level in load_topology(str(path))
        ]
        return {"file": str(path)}, children

    def on_step(self, time: int, inputs: StepInputs) -> None:
        self._p_net = {}
        for entity_id, record in self.records.items():
            if record.model != "Bus":
                continue
            entries = inputs.get(entity_id, {}).get("p_in", [])
            self._p_net[entity_id] = float(sum(value for _, value in entries))

    def read_output(self, entity_id: str, attr: str) -> Any:
        p_net = self._p_net.get(entity_id, 0.0)
        if attr == "p_net":
            return p_net
        return 1.0 - 0.001 * p_net
