"""Run a builtin simulator as a standalone process.

Usage: python -m tessellate.sims <builtin-key> <port>

Connects back to the orchestrator on 127.0.0.1:<port> and serves the wire
protocol until stopped. The port is what the orchestrator appends as the final
argument of a registry command.
"""

from __future__ import annotations

import socket
import sys

from ..protocol import TcpTransport
from . import BUILTINS, create_builtin, serve_transport


def main(argv: list[str]) -> int:
    if len(argv) != 2:
        print(f"usage: python -m tessellate.sims <{'|'.join(BUILTINS)}> <port>", file=sys.stderr)
        return 2
    key, port = argv[0], int(argv[1])
    try:
        sim = create_builtin(key)
    except KeyError:
        print(f"unknown simulator {key!r}", file=sys.stderr)
        return 2
    sock = socket.create_connection(("127.0.0.1", port))
    serve_transport(sim, TcpTransport(sock))
    return 0


if __name__ == "__main__":
    sys.exit(main(sys.argv[1:]))
