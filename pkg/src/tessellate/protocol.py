"""Wire protocol between the orchestrator and simulator processes.

Messages are newline-delimited JSON. External simulators speak it over a local
TCP socket (the orchestrator listens and appends the port as the final
command-line argument of the launched process); builtin simulators speak the
same messages over an in-process queue pair. One request is answered by exactly
one response or error, correlated by ``msg_id``.
"""

from __future__ import annotations

import json
import queue
import socket
import subprocess
import threading
from dataclasses import dataclass, field
from typing import Any, Optional, Union

from .pairs import EntityRef

DEFAULT_CONNECT_TIMEOUT = 10.0
DEFAULT_REQUEST_TIMEOUT = 30.0
DEFAULT_STOP_GRACE = 5.0


class ProtocolError(Exception):
    """Malformed traffic or a violated protocol state machine."""


class SimError(Exception):
    """An error reply forwarded from the simulator."""

    def __init__(self, code: str, message: str):
        self.code = code
        super().__init__(f"{code}: {message}")

    @property
    def message(self) -> str:
        return str(self).split(": ", 1)[1]


class SpawnFailed(Exception):
    pass


class ConnectTimeout(Exception):
    pass


# ---------------------------------------------------------------------------
# Metadata and record types carried over the wire


@dataclass(frozen=True)
class ParamDescriptor:
    name: str
    type: str
    values: Optional[list] = None
    unit: Optional[str] = None
    doc: str = ""

    def to_json(self) -> dict:
        out: dict[str, Any] = {"name": self.name, "type": self.type}
        if self.values is not None:
            out["values"] = self.values
        if self.unit is not None:
            out["unit"] = self.unit
        out["doc"] = self.doc
        return out

    @staticmethod
    def from_json(obj: dict) -> "ParamDescriptor":
        return ParamDescriptor(
            name=obj["name"],
            type=obj["type"],
            values=obj.get("values"),
            unit=obj.get("unit"),
            doc=obj.get("doc", ""),
        )


@dataclass(frozen=True)
class ModelMeta:
    """One creatable (or child-only) model: parameters and attribute names.

    An input name of ``*`` means the model accepts any input attribute.
    """

    create_params: list[ParamDescriptor] = field(default_factory=list)
    inputs: list[str] = field(default_factory=list)
    outputs: list[str] = field(default_factory=list)

    def accepts_input(self, attr: str) -> bool:
        return "*" in self.inputs or attr in self.inputs

    def to_json(self) -> dict:
        return {
            "create_params": [p.to_json() for p in self.create_params],
            "inputs": list(self.inputs),
            "outputs": list(self.outputs),
        }

    @staticmethod
    def from_json(obj: dict) -> "ModelMeta":
        return ModelMeta(
            create_params=[ParamDescriptor.from_json(p) for p in obj.get("create_params", [])],
            inputs=list(obj.get("inputs", [])),
            outputs=list(obj.get("outputs", [])),
        )


@dataclass(frozen=True)
class SimulatorMeta:
    models: dict[str, ModelMeta]
    step_size: int

    def to_json(self) -> dict:
        return {
            "step_size": self.step_size,
            "models": {name: self.models[name].to_json() for name in sorted(self.models)},
        }

    @staticmethod
    def from_json(obj: dict) -> "SimulatorMeta":
        return SimulatorMeta(
            models={name: ModelMeta.from_json(m) for name, m in obj["models"].items()},
            step_size=int(obj["step_size"]),
        )


@dataclass(frozen=True)
class EntityRecord:
    entity_id: str
    model: str
    extra_info: dict[str, Any] = field(default_factory=dict)
    child: bool = False

    def to_json(self) -> dict:
        return {
            "entity_id": self.entity_id,
            "model": self.model,
            "extra_info": {k: self.extra_info[k] for k in sorted(self.extra_info)},
            "child": self.child,
        }

    @staticmethod
    def from_json(obj: dict) -> "EntityRecord":
        return EntityRecord(
            entity_id=obj["entity_id"],
            model=obj["model"],
            extra_info=dict(obj.get("extra_info", {})),
            child=bool(obj.get("child", False)),
        )


# ---------------------------------------------------------------------------
# Messages


@dataclass(frozen=True)
class Request:
    msg_id: int
    method: str
    payload: dict


@dataclass(frozen=True)
class Response:
    msg_id: int
    result: dict


@dataclass(frozen=True)
class ErrorReply:
    msg_id: int
    code: str
    message: str


WireMessage = Union[Request, Response, ErrorReply]

METHODS = ("init", "create", "step", "get_data", "stop")


def encode_message(msg: WireMessage) -> str:
    if isinstance(msg, Request):
        obj = {"msg_id": msg.msg_id, "kind": "request", "method": msg.method, "payload": msg.payload}
    elif isinstance(msg, Response):
        obj = {"msg_id": msg.msg_id, "kind": "response", "result": msg.result}
    elif isinstance(msg, ErrorReply):
        obj = {"msg_id": msg.msg_id, "kind": "error", "code": msg.code, "message": msg.message}
    else:
        raise TypeError(f"not a wire message: {msg!r}")
    return json.dumps(obj, separators=(",", ":"), ensure_ascii=False)


def decode_message(line: str) -> WireMessage:
    try:
        obj = json.loads(line)
    except json.JSONDecodeError as exc:
        raise ProtocolError(f"invalid JSON frame: {exc.msg}") from exc
    if not isinstance(obj, dict):
        raise ProtocolError("frame must be an object")
    msg_id = obj.get("msg_id")
    if isinstance(msg_id, bool) or not isinstance(msg_id, int):
        raise ProtocolError("msg_id must be an integer")
    kind = obj.get("kind")
    if kind == "request":
        method = obj.get("method")
        payload = obj.get("payload", {})
        if method not in METHODS:
            raise ProtocolError(f"unknown method {method!r}")
        if not isinstance(payload, dict):
            raise ProtocolError("payload must be an object")
        return Request(msg_id=msg_id, method=method, payload=payload)
    if kind == "response":
        result = obj.get("result")
        if not isinstance(result, dict):
            raise ProtocolError("result must be an object")
        return Response(msg_id=msg_id, result=result)
    if kind == "error":
        code, message = obj.get("code"), obj.get("message")
        if not isinstance(code, str) or not isinstance(message, str):
            raise ProtocolError("error frames need string code and message")
        return ErrorReply(msg_id=msg_id, code=code, message=message)
    raise ProtocolError(f"unknown message kind {kind!r}")


# ---------------------------------------------------------------------------
# Transports

_CLOSE = object()  # loopback EOF sentinel


class LoopbackTransport:
    """One end of an in-process queue pair speaking wire messages."""

    def __init__(self, recv_q: "queue.Queue", send_q: "queue.Queue"):
        self._recv_q = recv_q
        self._send_q = send_q
        self._closed = False

    def send_line(self, line: str) -> None:
        if not self._closed:
            self._send_q.put(line)

    def readline(self) -> Optional[str]:
        item = self._recv_q.get()
        if item is _CLOSE:
            return None
        return item

    def close(self) -> None:
        if not self._closed:
            self._closed = True
            self._send_q.put(_CLOSE)
            self._recv_q.put(_CLOSE)  # unblock our own reader


def loopback_pair() -> tuple[LoopbackTransport, LoopbackTransport]:
    a_to_b: queue.Queue = queue.Queue()
    b_to_a: queue.Queue = queue.Queue()
    return LoopbackTransport(b_to_a, a_to_b), LoopbackTransport(a_to_b, b_to_a)


class TcpTransport:
    def __init__(self, sock: socket.socket):
        self._sock = sock
        self._reader = sock.makefile("r", encoding="utf-8", newline="\n")
        self._write_lock = threading.Lock()

    def send_line(self, line: str) -> None:
        with self._write_lock:
            self._sock.sendall(line.encode("utf-8") + b"\n")

    def readline(self) -> Optional[str]:
        try:
            line = self._reader.readline()
        except (OSError, ValueError):
            return None
        if not line:
            return None
        return line.rstrip("\n")

    def close(self) -> None:
        try:
            self._sock.shutdown(socket.SHUT_RDWR)
        except OSError:
            pass
        try:
            self._sock.close()
        except OSError:
            pass


# ---------------------------------------------------------------------------
# Client handle

StepInputs = dict[str, dict[str, list[tuple[EntityRef, Any]]]]


def encode_step_inputs(inputs: StepInputs) -> dict:
    return {
        eid: {
            attr: [{"sender": sender.to_json(), "value": value} for sender, value in entries]
            for attr, entries in attrs.items()
        }
        for eid, attrs in inputs.items()
    }


def decode_step_inputs(obj: dict) -> StepInputs:
    out: StepInputs = {}
    for eid, attrs in obj.items():
        out[eid] = {}
        for attr, entries in attrs.items():
            out[eid][attr] = [(EntityRef.from_json(e["sender"]), e["value"]) for e in entries]
    return out


class SimulatorHandle:
    """Client side of one simulator instance.

    Owned by one logical controller at a time; a background reader thread
    correlates replies to pending requests by msg_id, so out-of-order replies
    are handled.
    """

    def __init__(
        self,
        instance_id: str,
        transport,
        process: Optional[subprocess.Popen] = None,
    ):
        self.instance_id = instance_id
        self.meta: Optional[SimulatorMeta] = None
        self._transport = transport
        self._process = process
        self._pending: dict[int, "queue.Queue"] = {}
        self._lock = threading.Lock()
        self._next_id = 1
        self._eof = threading.Event()
        self._stopped = False
        self._reader = threading.Thread(
            target=self._read_loop, name=f"sim-reader-{instance_id}", daemon=True
        )
        self._reader.start()

    # -- plumbing

    def _read_loop(self) -> None:
        while True:
            line = self._transport.readline()
            if line is None:
                break
            try:
                msg = decode_message(line)
            except ProtocolError as exc:
                self._fail_pending(exc)
                continue
            with self._lock:
                waiter = self._pending.get(msg.msg_id)
            if waiter is not None:
                waiter.put(msg)
            # replies to forgotten msg_ids are dropped
        self._eof.set()
        self._fail_pending(ProtocolError("transport closed"))

    def _fail_pending(self, exc: Exception) -> None:
        with self._lock:
            waiters = list(self._pending.values())
        for w in waiters:
            w.put(exc)

    def _request(self, method: str, payload: dict, timeout: float = DEFAULT_REQUEST_TIMEOUT) -> dict:
        if self._stopped:
            raise ProtocolError("handle is stopped")
        if self._eof.is_set():
            raise ProtocolError("transport closed")
        with self._lock:
            msg_id = self._next_id
            self._next_id += 1
            waiter: queue.Queue = queue.Queue(maxsize=1)
            self._pending[msg_id] = waiter
        try:
            self._transport.send_line(encode_message(Request(msg_id, method, payload)))
            try:
                reply = waiter.get(timeout=timeout)
            except queue.Empty:
                raise ProtocolError(f"timeout waiting for {method} reply") from None
        finally:
            with self._lock:
                self._pending.pop(msg_id, None)
        if isinstance(reply, Exception):
            raise reply
        if isinstance(reply, ErrorReply):
            if reply.code == "protocol":
                raise ProtocolError(reply.message)
            raise SimError(reply.code, reply.message)
        assert isinstance(reply, Response)
        return reply.result

    def _require_init(self) -> SimulatorMeta:
        if self.meta is None:
            raise ProtocolError("simulator is not initialized")
        return self.meta

    # -- protocol operations

    def init(self, init_params: dict) -> SimulatorMeta:
        if self.meta is not None:
            raise ProtocolError("simulator already initialized")
        result = self._request("init", {"instance_id": self.instance_id, "params": init_params})
        try:
            meta = SimulatorMeta.from_json(result["meta"])
        except (KeyError, TypeError, ValueError) as exc:
            raise ProtocolError(f"malformed init reply: {exc}") from exc
        if meta.step_size < 1 or not meta.models:
            raise ProtocolError("malformed init reply: empty models or bad step_size")
        self.meta = meta
        return meta

    def create(self, model: str, requested_ids: list[str], create_params: dict) -> list[EntityRecord]:
        self._require_init()
        result = self._request(
            "create", {"model": model, "ids": list(requested_ids), "params": create_params}
        )
        try:
            records = [EntityRecord.from_json(r) for r in result["entities"]]
        except (KeyError, TypeError) as exc:
            raise ProtocolError(f"malformed create reply: {exc}") from exc
        requested = [r for r in records if not r.child]
        if [r.entity_id for r in requested] != list(requested_ids):
            raise ProtocolError("create reply does not echo the requested ids in order")
        return records

    def step(self, time: int, inputs: StepInputs) -> int:
        meta = self._require_init()
        if time % meta.step_size != 0:
            raise ProtocolError(f"step time {time} is not a multiple of step_size {meta.step_size}")
        result = self._request("step", {"time": time, "inputs": encode_step_inputs(inputs)})
        next_time = result.get("next_time")
        if isinstance(next_time, bool) or not isinstance(next_time, int):
            raise ProtocolError("malformed step reply")
        return next_time

    def get_data(self, wanted: dict[str, list[str]]) -> dict[str, dict[str, Any]]:
        self._require_init()
        result = self._request("get_data", {"wanted": {k: list(v) for k, v in wanted.items()}})
        data = result.get("data")
        if not isinstance(data, dict):
            raise ProtocolError("malformed get_data reply")
        for eid, attrs in wanted.items():
            got = data.get(eid, {})
            for attr in attrs:
                if attr not in got:
                    raise ProtocolError(f"get_data reply is missing {eid}.{attr}")
        return data

    def stop(self, grace: float = DEFAULT_STOP_GRACE) -> None:
        """Best effort shutdown; kills the process after the grace period."""
        if self._stopped:
            return
        self._stopped = True
        try:
            self._request("stop", {}, timeout=grace)
        except (ProtocolError, SimError):
            pass
        self._transport.close()
        if self._process is not None:
            try:
                self._process.wait(timeout=grace)
            except subprocess.TimeoutExpired:
                self._process.kill()
                self._process.wait()

    @property
    def stopped(self) -> bool:
        return self._stopped


# ---------------------------------------------------------------------------
# Launching


def launch(entry, instance_id: str, connect_timeout: float = DEFAULT_CONNECT_TIMEOUT) -> SimulatorHandle:
    """Start the simulator named by a registry entry and connect its transport.

    Builtin entries run in-process on a daemon thread; command entries are
    spawned as subprocesses that must connect back to the listed TCP port
    (appended as the final command-line argument) within the timeout.
    """
    if entry.builtin is not None:
        from .sims import create_builtin, serve_transport  # deferred: sims import this module

        try:
            sim = create_builtin(entry.builtin)
        except KeyError:
            raise SpawnFailed(f"unknown builtin simulator {entry.builtin!r}") from None
        handle_side, sim_side = loopback_pair()
        thread = threading.Thread(
            target=serve_transport, args=(sim, sim_side), name=f"sim-{instance_id}", daemon=True
        )
        thread.start()
        return SimulatorHandle(instance_id, handle_side)

    listener = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    listener.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
    listener.bind(("127.0.0.1", 0))
    listener.listen(1)
    port = listener.getsockname()[1]
    command = list(entry.command) + [str(port)]
    try:
        process = subprocess.Popen(command, stdin=subprocess.DEVNULL)
    except OSError as exc:
        listener.close()
        raise SpawnFailed(f"cannot spawn {command[0]!r}: {exc}") from exc

    # Poll in short slices so an early process death is attributed correctly.
    deadline = connect_timeout
    listener.settimeout(0.05)
    waited = 0.0
    try:
        while True:
            try:
                conn, _ = listener.accept()
                break
            except socket.timeout:
                waited += 0.05
                code = process.poll()
                if code is not None:
                    raise SpawnFailed(f"simulator process exited with code {code} before connecting")
                if waited >= deadline:
                    process.kill()
                    process.wait()
                    raise ConnectTimeout(f"no connection from simulator within {connect_timeout} s")
    finally:
        listener.close()
    return SimulatorHandle(instance_id, TcpTransport(conn), process=process)
