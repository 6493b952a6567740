"""Misbehaving simulator processes for protocol tests.

Usage: python procstubs.py <mode> <port>
  sleep    never connects
  silent   connects but never replies
  no-stop  serves init normally but ignores stop requests
"""

from __future__ import annotations

import json
import socket
import sys
import time


def main() -> int:
    mode, port = sys.argv[1], int(sys.argv[2])
    if mode == "sleep":
        time.sleep(60)
        return 0
    sock = socket.create_connection(("127.0.0.1", port))
    reader = sock.makefile("r", encoding="utf-8")
    if mode == "silent":
        time.sleep(60)
        return 0
    # no-stop: answer init, swallow everything else
    for line in reader:
        msg = json.loads(line)
        if msg.get("method") == "init":
            meta = {
                "step_size": 60,
                "models": {"Noop": {"create_params": [], "inputs": [], "outputs": []}},
            }
            reply = {"msg_id": msg["msg_id"], "kind": "response", "result": {"meta": meta}}
            sock.sendall((json.dumps(reply) + "\n").encode())
        # stop requests are deliberately ignored
    time.sleep(60)
    return 0


if __name__ == "__main__":
    sys.exit(main())
