"""Builtin simulators and the simulator-side protocol loop."""

from __future__ import annotations

from .base import Simulator, SimulatorFault, serve_transport
from .collector import CollectorSim
from .controller import ControllerSim
from .grid import GridSim
from .pv import PvSim
from .stub import StubSim

BUILTINS = {
    "grid-sim": GridSim,
    "pv-sim": PvSim,
    "ctl-sim": ControllerSim,
    "collector-sim": CollectorSim,
    "stub-sim": StubSim,
}


def create_builtin(name: str) -> Simulator:
    return BUILTINS[name]()


__all__ = [
    "BUILTINS",
    "CollectorSim",
    "ControllerSim",
    "GridSim",
    "PvSim",
    "Simulator",
    "SimulatorFault",
    "StubSim",
    "create_builtin",
    "serve_transport",
]
