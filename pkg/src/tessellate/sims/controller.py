"""Voltage controller: turns a bus voltage reading into a curtailment signal.

curtailment = 1.0 while v_pu >= 0.99, otherwise (v_pu - 0.95) / 0.04 clamped
into [0, 1], so control tightens linearly as the voltage sags.
"""

from __future__ import annotations

from typing import Any

from ..protocol import EntityRecord, ModelMeta, StepInputs
from .base import Simulator


def control_law(v_pu: float) -> float:
    if v_pu >= 0.99:
        return 1.0
    return min(1.0, max(0.0, (v_pu - 0.95) / 0.04))


class ControllerSim(Simulator):
    step_size = 60

    def __init__(self) -> None:
        super().__init__()
        self._curtailment: dict[str, float] = {}

    def model_metas(self) -> dict[str, ModelMeta]:
        return {"Ctl": ModelMeta(create_params=[], inputs=["v_pu"], outputs=["curtailment"])}

    def on_create(self, entity_id: str, model: str, params: dict) -> tuple[dict, list[EntityRecord]]:
        return {}, []

    def on_step(self, time: int, inputs: StepInputs) -> None:
        for entity_id in self.records:
            entries = inputs.get(entity_id, {}).get("v_pu", [])
            v_pu = float(entries[-1][1]) if entries else 1.0
            self._curtailment[entity_id] = control_law(v_pu)

    def read_output(self, entity_id: str, attr: str) -> Any:
        return self._curtailment.get(entity_id, 1.0)
