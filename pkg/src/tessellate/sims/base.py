"""Simulator-side machinery: base class, message loop, and builtin catalog.

A Simulator subclass implements the model hooks; the base class owns the
message loop, the protocol state machine (init exactly once, ids unique), and
the attribute checks for get_data.
"""

from __future__ import annotations

from typing import Any, Optional

from ..protocol import (
    EntityRecord,
    ErrorReply,
    ModelMeta,
    ProtocolError,
    Request,
    Response,
    SimulatorMeta,
    StepInputs,
    decode_message,
    decode_step_inputs,
    encode_message,
)


class SimulatorFault(Exception):
    """Raised by simulator hooks to send an error reply with the given code."""

    def __init__(self, code: str, message: str):
        self.code = code
        self.message = message
        super().__init__(f"{code}: {message}")


class Simulator:
    step_size = 60

    def __init__(self) -> None:
        self.records: dict[str, EntityRecord] = {}
        self.initialized = False

    # -- hooks for subclasses

    def model_metas(self) -> dict[str, ModelMeta]:
        raise NotImplementedError

    def on_init(self, params: dict) -> None:
        pass

    def on_create(self, entity_id: str, model: str, params: dict) -> tuple[dict, list[EntityRecord]]:
        """Return (extra_info for the requested entity, child records)."""
        raise NotImplementedError

    def on_step(self, time: int, inputs: StepInputs) -> None:
        pass

    def read_output(self, entity_id: str, attr: str) -> Any:
        raise NotImplementedError

    # -- protocol dispatch

    def meta(self) -> SimulatorMeta:
        return SimulatorMeta(models=self.model_metas(), step_size=self.step_size)

    def handle_init(self, payload: dict) -> dict:
        if self.initialized:
            raise SimulatorFault("protocol", "init called twice")
        self.on_init(payload.get("params", {}))
        self.initialized = True
        return {"meta": self.meta().to_json()}

    def handle_create(self, payload: dict) -> dict:
        if not self.initialized:
            raise SimulatorFault("protocol", "create before init")
        model = payload.get("model")
        metas = self.model_metas()
        if model not in metas:
            raise SimulatorFault("unknown_model", f"unknown model {model!r}")
        # Atomic per call: stage everything and commit only when the whole
        # request is clean, so a failed create leaves no partial entities and
        # a later retry fails (or succeeds) exactly like a fresh world would.
        staged: dict[str, EntityRecord] = {}

        def stage(record: EntityRecord) -> None:
            if record.entity_id in self.records or record.entity_id in staged:
                raise SimulatorFault("duplicate_entity_id", f"entity id {record.entity_id!r} already exists")
            staged[record.entity_id] = record

        out: list[EntityRecord] = []
        children: list[EntityRecord] = []
        for entity_id in payload.get("ids", []):
            if entity_id in self.records or entity_id in staged:
                raise SimulatorFault("duplicate_entity_id", f"entity id {entity_id!r} already exists")
            extra, kids = self.on_create(entity_id, model, payload.get("params", {}))
            record = EntityRecord(entity_id=entity_id, model=model, extra_info=extra, child=False)
            stage(record)
            out.append(record)
            for kid in kids:
                stage(kid)
                children.append(kid)
        self.records.update(staged)
        return {"entities": [r.to_json() for r in out + children]}

    def handle_step(self, payload: dict) -> dict:
        if not self.initialized:
            raise SimulatorFault("protocol", "step before init")
        time = payload.get("time")
        if isinstance(time, bool) or not isinstance(time, int) or time % self.step_size != 0:
            raise SimulatorFault("protocol", f"bad step time {time!r}")
        self.on_step(time, decode_step_inputs(payload.get("inputs", {})))
        return {"next_time": time + self.step_size}

    def handle_get_data(self, payload: dict) -> dict:
        if not self.initialized:
            raise SimulatorFault("protocol", "get_data before init")
        metas = self.model_metas()
        data: dict[str, dict[str, Any]] = {}
        for entity_id, attrs in payload.get("wanted", {}).items():
            record = self.records.get(entity_id)
            if record is None:
                raise SimulatorFault("unknown_entity", f"unknown entity {entity_id!r}")
            outputs = metas[record.model].outputs
            data[entity_id] = {}
            for attr in attrs:
                if attr not in outputs:
                    raise SimulatorFault("unknown_attr", f"{record.model} has no output {attr!r}")
                data[entity_id][attr] = self.read_output(entity_id, attr)
        return {"data": data}


def serve_transport(sim: Simulator, transport) -> None:
    """Serve one simulator instance over a transport until stop or EOF."""
    handlers = {
        "init": sim.handle_init,
        "create": sim.handle_create,
        "step": sim.handle_step,
        "get_data": sim.handle_get_data,
    }
    try:
        while True:
            line = transport.readline()
            if line is None:
                return
            try:
                msg = decode_message(line)
            except ProtocolError as exc:
                transport.send_line(encode_message(ErrorReply(-1, "protocol", str(exc))))
                continue
            if not isinstance(msg, Request):
                continue
            if msg.method == "stop":
                transport.send_line(encode_message(Response(msg.msg_id, {})))
                return
            try:
                result = handlers[msg.method](msg.payload)
                reply: Any = Response(msg.msg_id, result)
            except SimulatorFault as exc:
                reply = ErrorReply(msg.msg_id, exc.code, exc.message)
            except Exception as exc:  # a crashed hook must not kill the loop silently
                reply = ErrorReply(msg.msg_id, "internal", f"{type(exc).__name__}: {exc}")
            transport.send_line(encode_message(reply))
    finally:
        transport.close()


def number(params: dict, key: str, default: Optional[float] = None) -> float:
    value = params.get(key, default)
    if value is None:
        raise SimulatorFault("bad_params", f"missing required parameter {key!r}")
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise SimulatorFault("bad_params", f"parameter {key!r} must be a number")
    return float(value)
