"""Test stub with step_size 120, for exercising heterogeneous step sizes."""

from __future__ import annotations

from typing import Any

from ..protocol import EntityRecord, ModelMeta, StepInputs
from .base import Simulator


class StubSim(Simulator):
    step_size = 120

    def __init__(self) -> None:
        super().__init__()
        self._y: dict[str, float] = {}

    def model_metas(self) -> dict[str, ModelMeta]:
        return {"Stub": ModelMeta(create_params=[], inputs=["x"], outputs=["y"])}

    def on_create(self, entity_id: str, model: str, params: dict) -> tuple[dict, list[EntityRecord]]:
        return {}, []

    def on_step(self, time: int, inputs: StepInputs) -> None:
        for entity_id in self.records:
            entries = inputs.get(entity_id, {}).get("x", [])
            self._y[entity_id] = float(sum(value for _, value in entries))

    def read_output(self, entity_id: str, attr: str) -> Any:
        return self._y.get(entity_id, 0.0)
