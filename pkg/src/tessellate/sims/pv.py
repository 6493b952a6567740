"""Renewables simulator providing PV and WT models.

Power output is peak_kw * profile(t) * curtailment. The PV profile is a daily
half sine, max(0, sin(pi * (t mod 86400) / 86400)); wind turbines use a flat
0.6. Curtailment arrives as an input in [0, 1] and defaults to 1.0.
"""

from __future__ import annotations

import math
from typing import Any

from ..protocol import EntityRecord, ModelMeta, ParamDescriptor, StepInputs
from .base import Simulator, number

DAY = 86400


def pv_profile(t: int) -> float:
    return max(0.0, math.sin(math.pi * ((t % DAY) / DAY)))


class PvSim(Simulator):
    step_size = 60

    def __init__(self) -> None:
        super().__init__()
        self._peak: dict[str, float] = {}
        self._power: dict[str, float] = {}

    def model_metas(self) -> dict[str, ModelMeta]:
        shape = {
            "create_params": [
                ParamDescriptor(name="peak_kw", type="number", unit="kW", doc="rated peak power")
            ],
            "inputs": ["curtailment"],
            "outputs": ["p"],
        }
        return {"PV": ModelMeta(**shape), "WT": ModelMeta(**shape)}

    def on_create(self, entity_id: str, model: str, params: dict) -> tuple[dict, list[EntityRecord]]:
        peak = number(params, "peak_kw", default=1.0)
        self._peak[entity_id] = peak
        return {"peak_kw": peak}, []

    def on_step(self, time: int, inputs: StepInputs) -> None:
        for entity_id, record in self.records.items():
            entries = inputs.get(entity_id, {}).get("curtailment", [])
            curtailment = float(entries[-1][1]) if entries else 1.0
            curtailment = min(1.0, max(0.0, curtailment))
            profile = pv_profile(time) if record.model == "PV" else 0.6
            self._power[entity_id] = self._peak[entity_id] * profile * curtailment

    def read_output(self, entity_id: str, attr: str) -> Any:
        return self._power.get(entity_id, 0.0)
