"""Collector: the database stand-in, typically the target of a many-to-one.

Accepts any input attribute. Each collector entity appends one JSON line per
received value: {"time": t, "sender": "sim/entity", "attr": a, "value": v}.
The file is truncated with a single header line when the entity is created.
"""

from __future__ import annotations

import json
from typing import Any

from ..protocol import EntityRecord, ModelMeta, ParamDescriptor, StepInputs
from .base import Simulator, SimulatorFault


class CollectorSim(Simulator):
    step_size = 60

    def __init__(self) -> None:
        super().__init__()
        self._out_files: dict[str, str] = {}

    def model_metas(self) -> dict[str, ModelMeta]:
        return {
            "Collector": ModelMeta(
                create_params=[
                    ParamDescriptor(name="out_file", type="string", doc="JSON-lines output path")
                ],
                inputs=["*"],
                outputs=[],
            )
        }

    def on_create(self, entity_id: str, model: str, params: dict) -> tuple[dict, list[EntityRecord]]:
        out_file = params.get("out_file")
        if not isinstance(out_file, str) or not out_file:
            raise SimulatorFault("bad_params", "out_file is required")
        header = json.dumps({"collector": entity_id, "version": 1}, sort_keys=True)
        try:
            with open(out_file, "w", encoding="utf-8") as f:
                f.write(header + "\n")
        except OSError as exc:
            raise SimulatorFault("io", f"cannot write {out_file!r}: {exc}") from None
        self._out_files[entity_id] = out_file
        return {"out_file": out_file}, []

    def on_step(self, time: int, inputs: StepInputs) -> None:
        for entity_id, attrs in inputs.items():
            out_file = self._out_files.get(entity_id)
            if out_file is None:
                continue
            lines = []
            for attr, entries in attrs.items():
                for sender, value in entries:
                    record = {
                        "time": time,
                        "sender": f"{sender.simulator_id}/{sender.entity_id}",
                        "attr": attr,
                        "value": value,
                    }
                    lines.append(json.dumps(record, sort_keys=True))
            if not lines:
                continue
            try:
                with open(out_file, "a", encoding="utf-8") as f:
                    f.write("\n".join(lines) + "\n")
            except OSError as exc:
                raise SimulatorFault("io", f"cannot write {out_file!r}: {exc}") from None

    def read_output(self, entity_id: str, attr: str) -> Any:
        raise AssertionError("collector declares no outputs")
