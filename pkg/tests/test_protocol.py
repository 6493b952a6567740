"""Wire protocol, simulator handles, and process launching."""

from __future__ import annotations

import sys
import threading
import time
from pathlib import Path

import pytest

from tessellate.protocol import (
    ConnectTimeout,
    ErrorReply,
    ProtocolError,
    Request,
    Response,
    SimError,
    SimulatorHandle,
    SpawnFailed,
    decode_message,
    encode_message,
    launch,
    loopback_pair,
)
from tessellate.registry import RegistryEntry

STUBS = str(Path(__file__).parent / "procstubs.py")


def builtin_entry(key: str) -> RegistryEntry:
    return RegistryEntry(key=key, builtin=key)


def command_entry(*args: str) -> RegistryEntry:
    return RegistryEntry(key="ext", command=list(args))


# ---------------------------------------------------------------------------
# Message encoding


MESSAGE_FIXTURES = [
    '{"msg_id":1,"kind":"request","method":"init","payload":{"instance_id":"g","params":{"topology":"grid5.json"}}}',
    '{"msg_id":2,"kind":"request","method":"create","payload":{"model":"PV","ids":["pv.0.0"],"params":{}}}',
    '{"msg_id":3,"kind":"request","method":"step","payload":{"time":0,"inputs":{}}}',
    '{"msg_id":4,"kind":"request","method":"get_data","payload":{"wanted":{"pv.0.0":["p"]}}}',
    '{"msg_id":5,"kind":"request","method":"stop","payload":{}}',
    '{"msg_id":5,"kind":"response","result":{"next_time":60}}',
    '{"msg_id":6,"kind":"error","code":"unknown_model","message":"no model Foo"}',
]


@pytest.mark.parametrize("text", MESSAGE_FIXTURES)
def test_message_round_trip(text):
    assert encode_message(decode_message(text)) == text


@pytest.mark.parametrize(
    "bad",
    [
        "not json",
        '{"kind":"request"}',
        '{"msg_id":"x","kind":"response","result":{}}',
        '{"msg_id":1,"kind":"wat"}',
        '{"msg_id":1,"kind":"request","method":"explode","payload":{}}',
        '{"msg_id":1,"kind":"response","result":[]}',
    ],
)
def test_decode_rejects_malformed(bad):
    with pytest.raises(ProtocolError):
        decode_message(bad)


# ---------------------------------------------------------------------------
# Builtin (loopback) handles


def test_builtin_launch_and_init():
    h = launch(builtin_entry("pv-sim"), "s_pv")
    try:
        meta = h.init({})
        assert meta.step_size == 60
        assert set(meta.models) == {"PV", "WT"}
        assert meta.models["PV"].inputs == ["curtailment"]
        assert meta.models["PV"].outputs == ["p"]
    finally:
        h.stop()


def test_unknown_builtin_is_spawn_failure():
    with pytest.raises(SpawnFailed):
        launch(RegistryEntry(key="x", builtin="nope-sim"), "x")


def test_init_error_is_forwarded(tmp_path):
    h = launch(builtin_entry("grid-sim"), "s_grid")
    try:
        with pytest.raises(SimError) as exc_info:
            h.init({"topology": str(tmp_path / "missing.json")})
        assert exc_info.value.code == "topology_not_found"
    finally:
        h.stop()


def test_double_init_is_protocol_error():
    h = launch(builtin_entry("pv-sim"), "s_pv")
    try:
        h.init({})
        with pytest.raises(ProtocolError):
            h.init({})
    finally:
        h.stop()


def test_create_returns_records_in_order():
    h = launch(builtin_entry("pv-sim"), "s_pv")
    try:
        h.init({})
        records = h.create("PV", ["pv.0.0", "pv.0.1"], {"peak_kw": 5})
        assert [r.entity_id for r in records] == ["pv.0.0", "pv.0.1"]
        assert all(not r.child for r in records)
    finally:
        h.stop()


def test_create_unknown_model():
    h = launch(builtin_entry("pv-sim"), "s_pv")
    try:
        h.init({})
        with pytest.raises(SimError) as exc_info:
            h.create("Fusion", ["f.0.0"], {})
        assert exc_info.value.code == "unknown_model"
    finally:
        h.stop()


def test_create_duplicate_entity_id():
    h = launch(builtin_entry("pv-sim"), "s_pv")
    try:
        h.init({})
        h.create("PV", ["pv.0.0"], {})
        with pytest.raises(SimError) as exc_info:
            h.create("PV", ["pv.0.0"], {})
        assert exc_info.value.code == "duplicate_entity_id"
    finally:
        h.stop()


def test_step_and_get_data():
    h = launch(builtin_entry("pv-sim"), "s_pv")
    try:
        h.init({})
        h.create("PV", ["pv.0.0"], {"peak_kw": 5})
        assert h.step(0, {}) == 60
        assert h.get_data({}) == {}
        data = h.get_data({"pv.0.0": ["p"]})
        assert data["pv.0.0"]["p"] == 0.0  # sin(0)
    finally:
        h.stop()


def test_step_at_non_multiple_time():
    h = launch(builtin_entry("pv-sim"), "s_pv")
    try:
        h.init({})
        with pytest.raises(ProtocolError):
            h.step(37, {})
    finally:
        h.stop()


def test_get_data_unknown_attr():
    h = launch(builtin_entry("pv-sim"), "s_pv")
    try:
        h.init({})
        h.create("PV", ["pv.0.0"], {})
        with pytest.raises(SimError) as exc_info:
            h.get_data({"pv.0.0": ["watts"]})
        assert exc_info.value.code == "unknown_attr"
        with pytest.raises(SimError) as exc_info:
            h.get_data({"ghost": ["p"]})
        assert exc_info.value.code == "unknown_entity"
    finally:
        h.stop()


def test_double_stop_is_noop():
    h = launch(builtin_entry("pv-sim"), "s_pv")
    h.init({})
    h.stop()
    h.stop()
    assert h.stopped
    with pytest.raises(ProtocolError):
        h.step(0, {})


def test_out_of_order_and_unknown_replies_are_handled():
    ours, theirs = loopback_pair()

    def fake_server():
        line = theirs.readline()
        msg = decode_message(line)
        # an unrelated reply first, then the real one
        theirs.send_line(encode_message(Response(msg.msg_id + 100, {"noise": True})))
        theirs.send_line(
            encode_message(Response(msg.msg_id, {"meta": {"step_size": 60, "models": {
                "M": {"create_params": [], "inputs": [], "outputs": []}}}}))
        )

    t = threading.Thread(target=fake_server, daemon=True)
    t.start()
    h = SimulatorHandle("x", ours)
    meta = h.init({})
    assert meta.step_size == 60
    t.join(timeout=2)


def test_malformed_reply_is_protocol_error():
    ours, theirs = loopback_pair()

    def fake_server():
        theirs.readline()
        theirs.send_line("this is not json")

    threading.Thread(target=fake_server, daemon=True).start()
    h = SimulatorHandle("x", ours)
    with pytest.raises(ProtocolError):
        h.init({})


# ---------------------------------------------------------------------------
# Subprocess launching


def test_subprocess_simulator_full_cycle():
    entry = command_entry(sys.executable, "-m", "tessellate.sims", "pv-sim")
    h = launch(entry, "s_pv", connect_timeout=10.0)
    try:
        meta = h.init({})
        assert meta.step_size == 60
        h.create("PV", ["pv.0.0"], {"peak_kw": 2})
        assert h.step(0, {}) == 60
        assert h.get_data({"pv.0.0": ["p"]})["pv.0.0"]["p"] == 0.0
    finally:
        h.stop()


def test_spawn_failure_for_missing_executable():
    with pytest.raises(SpawnFailed):
        launch(command_entry("/nonexistent/simulator"), "x", connect_timeout=1.0)


def test_spawn_failure_for_early_exit():
    entry = command_entry(sys.executable, "-c", "import sys; sys.exit(3)")
    with pytest.raises(SpawnFailed) as exc_info:
        launch(entry, "x", connect_timeout=5.0)
    assert "exited" in str(exc_info.value)


def test_connect_timeout():
    entry = command_entry(sys.executable, STUBS, "sleep")
    start = time.monotonic()
    with pytest.raises(ConnectTimeout):
        launch(entry, "x", connect_timeout=0.5)
    assert time.monotonic() - start < 5.0


def test_hung_simulator_is_killed_after_grace():
    entry = command_entry(sys.executable, STUBS, "no-stop")
    h = launch(entry, "x", connect_timeout=10.0)
    h.init({})
    start = time.monotonic()
    h.stop(grace=0.5)
    elapsed = time.monotonic() - start
    assert h.stopped
    assert elapsed < 5.0
    assert h._process.poll() is not None  # killed
