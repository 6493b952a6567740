"""Websocket backend: one scenario + orbit per process, edited and run by clients.

Clients send ``{"req_id": n, "method": "...", "payload": {...}}`` frames and get
exactly one reply each; state changes fan out as notifications with a
monotonically increasing sequence number. Edits mutate the description
immediately, validation runs on every edit, and a rebake is scheduled behind a
short debounce; the resulting report is broadcast as ``baking_state``. Edits
are rejected while a run is active.
"""

from __future__ import annotations

import asyncio
import json
import os
import threading
from dataclasses import replace
from pathlib import Path
from typing import Any, Callable, Optional

from websockets.asyncio.server import serve as ws_serve

from .baking import Orbit, bake, orbit_report, rebake
from .kernel import Done, RunError, check_dataflow, event_to_json, run
from .model import (
    ConnectionSpec,
    NodePosition,
    ScenarioDescription,
    ScenarioParams,
    SimulatorSpec,
    TesseraSpec,
    U64_MAX,
)
from .registry import Registry
from .scenario_io import (
    ScenarioFormatError,
    description_to_json,
    parse_attr_pairs_json,
    parse_description,
    parse_relation_json,
    parse_sources_json,
    serialize_description,
)
from .validation import validate_description

DEFAULT_DEBOUNCE = 0.3


class GatewayError(Exception):
    def __init__(self, code: str, message: str):
        self.code = code
        self.message = message
        super().__init__(f"{code}: {message}")


def _require_idle(status: str) -> None:
    if status != "idle":
        raise GatewayError("edit_while_running", "edits are locked while a run is active")


def _fresh_id(prefix: str, taken: set[str]) -> str:
    n = 1
    while f"{prefix}-{n}" in taken:
        n += 1
    return f"{prefix}-{n}"


def _params_with_overrides(params: ScenarioParams, payload: dict) -> ScenarioParams:
    if "end_time" in payload:
        end_time = payload["end_time"]
        if isinstance(end_time, bool) or not isinstance(end_time, int) or end_time < 1:
            raise GatewayError("bad_request", "end_time must be a positive integer")
        params = replace(params, end_time=end_time)
    if "real_time_factor" in payload:
        rtf = payload["real_time_factor"]
        if rtf is not None:
            if isinstance(rtf, bool) or not isinstance(rtf, (int, float)) or rtf <= 0:
                raise GatewayError("bad_request", "real_time_factor must be > 0 or null")
            rtf = float(rtf)
        params = replace(params, real_time_factor=rtf)
    if "master_seed" in payload:
        seed = payload["master_seed"]
        if isinstance(seed, bool) or not isinstance(seed, int) or not 0 <= seed <= U64_MAX:
            raise GatewayError("bad_request", "master_seed must be a u64")
        params = replace(params, master_seed=seed)
    return params


def _issues_json(issues) -> list:
    return [{"element": i.element, "code": i.code, "message": i.message} for i in issues]


class Session:
    """The single scenario + orbit owned by a gateway process.

    Not thread safe by itself: the server funnels every call through one worker
    thread. The run loop is the only other writer and touches run_status only.
    """

    def __init__(self, registry: Registry, connect_timeout: float = 10.0):
        self.registry = registry
        self.connect_timeout = connect_timeout
        self.description = ScenarioDescription()
        self.orbit: Orbit = bake(self.description, registry, connect_timeout)
        self.baked_description = self.description
        self.run_status = "idle"
        self.scenario_path: Optional[str] = None
        self._status_lock = threading.Lock()
        self._stop_signal: Optional[threading.Event] = None
        self._run_thread: Optional[threading.Thread] = None

    # -- snapshots

    @property
    def dirty(self) -> bool:
        return self.description != self.baked_description

    def snapshot(self) -> dict:
        return {
            "scenario": description_to_json(self.description),
            "baking": orbit_report(self.orbit),
            "run_status": self.run_status,
        }

    # -- rebaking

    def flush_rebake(self) -> bool:
        """Rebake now if the description moved past the baked one."""
        if not self.dirty:
            return False
        target = self.description
        self.orbit = rebake(self.orbit, target, self.connect_timeout)
        self.baked_description = target
        return True

    # -- edit operations (all require idle status)

    def _set_description(self, d: ScenarioDescription) -> list:
        self.description = d
        return validate_description(d)

    def add_simulator(self, payload: dict) -> tuple[str, list]:
        _require_idle(self.run_status)
        key = payload.get("registry_key")
        if not isinstance(key, str) or not key:
            raise GatewayError("bad_request", "registry_key is required")
        sim_id = _fresh_id("sim", {s.id for s in self.description.simulators})
        spec = SimulatorSpec(
            id=sim_id,
            registry_key=key,
            display_name=payload.get("display_name", key),
            init_params=dict(payload.get("init_params", {})),
        )
        issues = self._set_description(
            replace(self.description, simulators=self.description.simulators + [spec])
        )
        return sim_id, issues

    def update_simulator(self, payload: dict) -> list:
        _require_idle(self.run_status)
        spec = self.description.simulator(payload.get("id", ""))
        if spec is None:
            raise GatewayError("unknown_element", f"no simulator {payload.get('id')!r}")
        changes: dict[str, Any] = {}
        if "registry_key" in payload:
            changes["registry_key"] = str(payload["registry_key"])
        if "display_name" in payload:
            changes["display_name"] = str(payload["display_name"])
        if "init_params" in payload:
            if not isinstance(payload["init_params"], dict):
                raise GatewayError("bad_request", "init_params must be an object")
            changes["init_params"] = dict(payload["init_params"])
        new_spec = replace(spec, **changes)
        sims = [new_spec if s.id == spec.id else s for s in self.description.simulators]
        return self._set_description(replace(self.description, simulators=sims))

    def remove_simulator(self, payload: dict) -> list:
        _require_idle(self.run_status)
        sim_id = payload.get("id", "")
        if self.description.simulator(sim_id) is None:
            raise GatewayError("unknown_element", f"no simulator {sim_id!r}")
        sims = [s for s in self.description.simulators if s.id != sim_id]
        return self._set_description(replace(self.description, simulators=sims))

    def add_tessera(self, payload: dict) -> tuple[str, list]:
        _require_idle(self.run_status)
        simulator_id = payload.get("simulator_id")
        model = payload.get("model")
        if not isinstance(simulator_id, str) or not isinstance(model, str) or not model:
            raise GatewayError("bad_request", "simulator_id and model are required")
        tess_id = _fresh_id("tessera", {t.id for t in self.description.tesserae})
        try:
            sources = parse_sources_json(payload.get("sources", []))
        except ScenarioFormatError as exc:
            raise GatewayError("bad_request", str(exc)) from exc
        spec = TesseraSpec(
            id=tess_id,
            name=payload.get("name", tess_id),
            icon=payload.get("icon", ""),
            simulator_id=simulator_id,
            model=model,
            sources=sources,
        )
        d = replace(self.description, tesserae=self.description.tesserae + [spec])
        position = payload.get("position")
        if isinstance(position, dict) and {"x", "y"} <= set(position):
            layout = dict(d.layout)
            layout[tess_id] = NodePosition(float(position["x"]), float(position["y"]))
            d = replace(d, layout=layout)
        return tess_id, self._set_description(d)

    def update_tessera(self, payload: dict) -> list:
        _require_idle(self.run_status)
        spec = self.description.tessera(payload.get("id", ""))
        if spec is None:
            raise GatewayError("unknown_element", f"no tessera {payload.get('id')!r}")
        changes: dict[str, Any] = {}
        for key in ("name", "icon", "simulator_id", "model"):
            if key in payload:
                changes[key] = str(payload[key])
        if "sources" in payload:
            try:
                changes["sources"] = parse_sources_json(payload["sources"])
            except ScenarioFormatError as exc:
                raise GatewayError("bad_request", str(exc)) from exc
        new_spec = replace(spec, **changes)
        tesserae = [new_spec if t.id == spec.id else t for t in self.description.tesserae]
        return self._set_description(replace(self.description, tesserae=tesserae))

    def remove_tessera(self, payload: dict) -> list:
        _require_idle(self.run_status)
        tess_id = payload.get("id", "")
        if self.description.tessera(tess_id) is None:
            raise GatewayError("unknown_element", f"no tessera {tess_id!r}")
        tesserae = [t for t in self.description.tesserae if t.id != tess_id]
        layout = {k: v for k, v in self.description.layout.items() if k != tess_id}
        return self._set_description(replace(self.description, tesserae=tesserae, layout=layout))

    def add_connection(self, payload: dict) -> tuple[str, list]:
        _require_idle(self.run_status)
        source, target = payload.get("source"), payload.get("target")
        if not isinstance(source, str) or not isinstance(target, str):
            raise GatewayError("bad_request", "source and target are required")
        conn_id = _fresh_id("conn", {c.id for c in self.description.connections})
        spec = ConnectionSpec(id=conn_id, source=source, target=target)
        spec = self._connection_changes(spec, payload)
        d = replace(self.description, connections=self.description.connections + [spec])
        return conn_id, self._set_description(d)

    def _connection_changes(self, spec: ConnectionSpec, payload: dict) -> ConnectionSpec:
        changes: dict[str, Any] = {}
        if "source" in payload:
            changes["source"] = str(payload["source"])
        if "target" in payload:
            changes["target"] = str(payload["target"])
        try:
            if "attr_pairs" in payload:
                changes["attr_pairs"] = parse_attr_pairs_json(payload["attr_pairs"])
            if "relation" in payload:
                changes["relation"] = parse_relation_json(payload["relation"])
        except ScenarioFormatError as exc:
            raise GatewayError("bad_request", str(exc)) from exc
        if "delayed" in payload:
            changes["delayed"] = bool(payload["delayed"])
        if "initial_values" in payload:
            if not isinstance(payload["initial_values"], dict):
                raise GatewayError("bad_request", "initial_values must be an object")
            changes["initial_values"] = dict(payload["initial_values"])
        return replace(spec, **changes)

    def update_connection(self, payload: dict) -> list:
        _require_idle(self.run_status)
        spec = self.description.connection(payload.get("id", ""))
        if spec is None:
            raise GatewayError("unknown_element", f"no connection {payload.get('id')!r}")
        new_spec = self._connection_changes(spec, payload)
        connections = [new_spec if c.id == spec.id else c for c in self.description.connections]
        return self._set_description(replace(self.description, connections=connections))

    def remove_connection(self, payload: dict) -> list:
        _require_idle(self.run_status)
        conn_id = payload.get("id", "")
        if self.description.connection(conn_id) is None:
            raise GatewayError("unknown_element", f"no connection {conn_id!r}")
        connections = [c for c in self.description.connections if c.id != conn_id]
        return self._set_description(replace(self.description, connections=connections))

    def set_scenario_params(self, payload: dict) -> list:
        _require_idle(self.run_status)
        params = _params_with_overrides(self.description.params, payload)
        return self._set_description(replace(self.description, params=params))

    def set_position(self, payload: dict) -> None:
        _require_idle(self.run_status)
        tess_id = payload.get("id", "")
        if self.description.tessera(tess_id) is None:
            raise GatewayError("unknown_element", f"no tessera {tess_id!r}")
        try:
            position = NodePosition(float(payload["x"]), float(payload["y"]))
        except (KeyError, TypeError, ValueError) as exc:
            raise GatewayError("bad_request", "x and y must be numbers") from exc
        layout = dict(self.description.layout)
        layout[tess_id] = position
        # layout is not baked state: no rebake gets scheduled for this
        self.description = replace(self.description, layout=layout)
        self.baked_description = replace(self.baked_description, layout=layout)

    # -- persistence

    def save_scenario(self, payload: dict) -> str:
        path = payload.get("path") or self.scenario_path
        if not path:
            raise GatewayError("no_path", "no scenario path given or remembered")
        text = serialize_description(self.description)
        tmp = f"{path}.tmp"
        try:
            with open(tmp, "w", encoding="utf-8") as f:
                f.write(text)
            os.replace(tmp, path)
        except OSError as exc:
            raise GatewayError("io", f"cannot save {path!r}: {exc}") from exc
        self.scenario_path = path
        return str(path)

    def load_scenario(self, payload: dict) -> list:
        _require_idle(self.run_status)
        path = payload.get("path")
        if not path:
            raise GatewayError("no_path", "path is required")
        try:
            text = Path(path).read_text(encoding="utf-8")
        except OSError as exc:
            raise GatewayError("io", f"cannot read {path!r}: {exc}") from exc
        try:
            d = parse_description(text)  # state unchanged when this raises
        except ScenarioFormatError as exc:
            raise GatewayError("parse_error", str(exc)) from exc
        self.scenario_path = str(path)
        issues = self._set_description(d)
        self.flush_rebake()
        return issues

    # -- run control

    def start_run(self, payload: dict, sink: Callable, on_idle: Callable) -> ScenarioParams:
        with self._status_lock:
            if self.run_status != "idle":
                raise GatewayError("already_running", "a run is already active")
            self.flush_rebake()
            params = _params_with_overrides(self.description.params, payload)
            witness = check_dataflow(self.orbit)
            if witness is not None:
                raise GatewayError("dataflow_cycle", " -> ".join(witness))
            self.run_status = "running"
        self._stop_signal = threading.Event()

        orbit = self.orbit

        def worker():
            try:
                run(orbit, params, sink, stop_signal=self._stop_signal)
            finally:
                with self._status_lock:
                    self.run_status = "idle"
                on_idle()

        self._run_thread = threading.Thread(target=worker, name="tessellate-run", daemon=True)
        self._run_thread.start()
        return params

    def stop_run(self) -> None:
        with self._status_lock:
            if self.run_status != "running":
                raise GatewayError("not_running", "no run is active")
            self.run_status = "stopping"
        self._stop_signal.set()

    def get_pairs(self, payload: dict) -> dict:
        conn_id = payload.get("connection_id", "")
        if self.description.connection(conn_id) is None:
            raise GatewayError("unknown_element", f"no connection {conn_id!r}")
        pairs = self.orbit.resolved_connections.get(conn_id)
        if pairs is None:
            raise GatewayError("not_resolved", f"connection {conn_id!r} is not resolved")
        return {"pairs": pairs.to_json(), "dropped": self.orbit.connection_drops.get(conn_id, 0)}

    def shutdown(self) -> None:
        if self._stop_signal is not None:
            self._stop_signal.set()
        if self._run_thread is not None:
            self._run_thread.join(timeout=10)
        self.orbit.shutdown()


class GatewayServer:
    """Hosts one Session behind a websocket endpoint.

    start() spins the asyncio loop on a background thread so the server can be
    embedded (tests, CLI); serve_forever() is the blocking variant.
    """

    def __init__(
        self,
        registry: Registry,
        host: str = "127.0.0.1",
        port: int = 0,
        scenario_path: Optional[str] = None,
        debounce: float = DEFAULT_DEBOUNCE,
        connect_timeout: float = 10.0,
    ):
        self.registry = registry
        self.host = host
        self.port = port
        self.debounce = debounce
        self.session = Session(registry, connect_timeout)
        self._initial_scenario = scenario_path
        self._seq = 0
        self._clients: set[asyncio.Queue] = set()
        self._loop: Optional[asyncio.AbstractEventLoop] = None
        self._worker = None  # single-thread executor: the session owner
        self._debounce_handle: Optional[asyncio.TimerHandle] = None
        self._server = None
        self._started = threading.Event()
        self._stopping: Optional[asyncio.Event] = None
        self._thread: Optional[threading.Thread] = None

    # -- session calls are serialized on one worker thread

    async def _call(self, fn, *args):
        return await self._loop.run_in_executor(self._worker, fn, *args)

    # -- notifications

    def _broadcast(self, kind: str, payload) -> None:
        """Must run on the loop thread."""
        self._seq += 1
        frame = json.dumps({"notify": kind, "seq": self._seq, "payload": payload})
        for queue in self._clients:
            queue.put_nowait(frame)

    def notify_threadsafe(self, kind: str, payload) -> None:
        self._loop.call_soon_threadsafe(self._broadcast, kind, payload)

    def _schedule_rebake(self) -> None:
        if self._debounce_handle is not None:
            self._debounce_handle.cancel()
        self._debounce_handle = self._loop.call_later(
            self.debounce, lambda: asyncio.ensure_future(self._rebake_now())
        )

    async def _rebake_now(self) -> None:
        changed = await self._call(self.session.flush_rebake)
        if changed:
            self._broadcast("baking_state", orbit_report(self.session.orbit))

    # -- request dispatch

    async def _dispatch(self, method: str, payload: dict) -> dict:
        session = self.session
        if method == "get_state":
            return await self._call(session.snapshot)
        if method == "list_registry":
            return {"registry": self.registry.to_json()}
        if method == "get_pairs":
            return await self._call(session.get_pairs, payload)

        if method in ("add_simulator", "add_tessera", "add_connection"):
            new_id, issues = await self._call(getattr(session, method), payload)
            self._broadcast("scenario_changed", description_to_json(session.description))
            self._schedule_rebake()
            return {"id": new_id, "issues": _issues_json(issues)}

        if method in (
            "update_simulator", "remove_simulator",
            "update_tessera", "remove_tessera",
            "update_connection", "remove_connection",
            "set_scenario_params",
        ):
            issues = await self._call(getattr(session, method), payload)
            self._broadcast("scenario_changed", description_to_json(session.description))
            self._schedule_rebake()
            return {"issues": _issues_json(issues)}

        if method == "set_position":
            await self._call(session.set_position, payload)
            self._broadcast("scenario_changed", description_to_json(session.description))
            return {}

        if method == "save_scenario":
            path = await self._call(session.save_scenario, payload)
            return {"path": path}

        if method == "load_scenario":
            issues = await self._call(session.load_scenario, payload)
            self._broadcast("scenario_changed", description_to_json(session.description))
            self._broadcast("baking_state", orbit_report(session.orbit))
            return {"issues": _issues_json(issues)}

        if method == "start_run":
            def sink(event):
                self.notify_threadsafe("run_event", event_to_json(event))

            def on_idle():
                pass  # terminal run_event already tells clients the run ended

            params = await self._call(session.start_run, payload, sink, on_idle)
            return {"end_time": params.end_time, "real_time_factor": params.real_time_factor}

        if method == "stop_run":
            await self._call(session.stop_run)
            return {}

        raise GatewayError("unknown_method", f"no method {method!r}")

    async def _handler(self, websocket) -> None:
        queue: asyncio.Queue = asyncio.Queue()
        self._clients.add(queue)

        async def pump():
            while True:
                frame = await queue.get()
                await websocket.send(frame)

        pump_task = asyncio.ensure_future(pump())
        try:
            # on-connect snapshot: full scenario, baked report, registry
            snapshot = await self._call(self.session.snapshot)
            seq = self._seq
            await websocket.send(json.dumps({"notify": "registry", "seq": seq,
                                             "payload": self.registry.to_json()}))
            await websocket.send(json.dumps({"notify": "scenario_changed", "seq": seq,
                                             "payload": snapshot["scenario"]}))
            await websocket.send(json.dumps({"notify": "baking_state", "seq": seq,
                                             "payload": snapshot["baking"]}))
            async for message in websocket:
                try:
                    frame = json.loads(message)
                except json.JSONDecodeError:
                    await websocket.send(json.dumps(
                        {"req_id": None, "ok": False, "error": "bad_request", "message": "invalid JSON"}))
                    continue
                req_id = frame.get("req_id")
                method = frame.get("method")
                payload = frame.get("payload", {})
                if not isinstance(payload, dict):
                    payload = {}
                try:
                    result = await self._dispatch(method, payload)
                    reply = {"req_id": req_id, "ok": True, "result": result}
                except GatewayError as exc:
                    reply = {"req_id": req_id, "ok": False, "error": exc.code, "message": exc.message}
                await websocket.send(json.dumps(reply))
        finally:
            pump_task.cancel()
            self._clients.discard(queue)

    # -- lifecycle

    async def _run_async(self) -> None:
        self._loop = asyncio.get_running_loop()
        from concurrent.futures import ThreadPoolExecutor

        self._worker = ThreadPoolExecutor(max_workers=1, thread_name_prefix="tessellate-session")
        self._stopping = asyncio.Event()
        if self._initial_scenario:
            await self._call(self.session.load_scenario, {"path": self._initial_scenario})
        async with ws_serve(self._handler, self.host, self.port) as server:
            self._server = server
            self.port = next(iter(server.sockets)).getsockname()[1]
            self._started.set()
            await self._stopping.wait()
        await self._call(self.session.shutdown)
        self._worker.shutdown(wait=True)

    def start(self) -> None:
        """Run the server on a background thread; returns once the port is bound."""
        self._startup_error: Optional[BaseException] = None

        def runner():
            try:
                asyncio.run(self._run_async())
            except BaseException as exc:
                self._startup_error = exc
            finally:
                self._started.set()  # unblock start() even on startup failure

        self._thread = threading.Thread(target=runner, name="tessellate-gateway", daemon=True)
        self._thread.start()
        self._started.wait(timeout=30)
        if self._startup_error is not None:
            raise RuntimeError(f"gateway failed to start: {self._startup_error}")
        if self._server is None:
            raise RuntimeError("gateway failed to start")

    def stop(self) -> None:
        if self._loop is not None and self._stopping is not None:
            self._loop.call_soon_threadsafe(self._stopping.set)
        if self._thread is not None:
            self._thread.join(timeout=30)

    def serve_forever(self) -> None:
        asyncio.run(self._run_async())

    @property
    def url(self) -> str:
        return f"ws://{self.host}:{self.port}"
