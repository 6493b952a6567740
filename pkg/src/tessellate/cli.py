"""Headless command line: bake a scenario, run it, or serve the websocket gateway.

The registry is taken from --registry, falling back to the TESSELLATE_REGISTRY
environment variable, falling back to the builtin reference simulators.
"""

from __future__ import annotations

import json
import sys
import threading
from dataclasses import replace

import click

from .baking import bake, orbit_report
from .gateway import GatewayServer
from .kernel import Done, check_dataflow, event_to_json, run
from .registry import Registry, RegistryError, builtin_registry, load_registry, registry_path_from_env
from .scenario_io import ScenarioFormatError, parse_description


def _load_registry_opt(registry_path: str | None) -> Registry:
    path = registry_path or registry_path_from_env()
    if path is None:
        return builtin_registry()
    return load_registry(path)


def _load_scenario(path: str):
    try:
        with open(path, encoding="utf-8") as f:
            return parse_description(f.read())
    except OSError as exc:
        raise click.ClickException(f"cannot read {path}: {exc}")
    except ScenarioFormatError as exc:
        lines = "\n".join(f"  {issue}" for issue in exc.issues)
        raise click.ClickException(f"invalid scenario {path}:\n{lines}")


@click.group()
def main() -> None:
    """Co-simulation scenarios: bake, run, serve."""


@main.command("bake")
@click.argument("scenario", type=click.Path(exists=True, dir_okay=False))
@click.option("--registry", "registry_path", type=click.Path(exists=True, dir_okay=False),
              help="registry JSON file (default: TESSELLATE_REGISTRY or builtins)")
def bake_cmd(scenario: str, registry_path: str | None) -> None:
    """Validate and bake SCENARIO, print the report, exit nonzero on problems."""
    try:
        registry = _load_registry_opt(registry_path)
    except RegistryError as exc:
        raise click.ClickException(str(exc))
    d = _load_scenario(scenario)
    orbit = bake(d, registry)
    try:
        report = orbit_report(orbit)
    finally:
        orbit.shutdown()
    click.echo(json.dumps(report, indent=2, sort_keys=True))
    if report["problems"]:
        sys.exit(1)


@main.command("run")
@click.argument("scenario", type=click.Path(exists=True, dir_okay=False))
@click.option("--registry", "registry_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--end", "end_time", type=int, default=None, help="override end time (simulated seconds)")
@click.option("--rt", "real_time_factor", type=float, default=None,
              help="real-time pacing factor (wall seconds per simulated second)")
@click.option("--report", "report_path", type=click.Path(dir_okay=False), default=None,
              help="write the baking report and final time as JSON")
def run_cmd(scenario, registry_path, end_time, real_time_factor, report_path) -> None:
    """Bake and run SCENARIO headlessly, streaming events to stdout."""
    try:
        registry = _load_registry_opt(registry_path)
    except RegistryError as exc:
        raise click.ClickException(str(exc))
    d = _load_scenario(scenario)
    params = d.params
    if end_time is not None:
        if end_time < 1:
            raise click.ClickException("--end must be >= 1")
        params = replace(params, end_time=end_time)
    if real_time_factor is not None:
        if real_time_factor <= 0:
            raise click.ClickException("--rt must be > 0")
        params = replace(params, real_time_factor=real_time_factor)

    orbit = bake(d, registry)
    try:
        witness = check_dataflow(orbit)
        if witness is not None:
            raise click.ClickException("dataflow cycle: " + " -> ".join(witness))

        stop_signal = threading.Event()

        def sink(event):
            click.echo(json.dumps(event_to_json(event)))

        terminal = run(orbit, params, sink, stop_signal=stop_signal)
        report = orbit_report(orbit)
    finally:
        orbit.shutdown()

    if report_path:
        payload = {"baking": report, "final_time": getattr(terminal, "final_time", None)}
        with open(report_path, "w", encoding="utf-8") as f:
            json.dump(payload, f, indent=2, sort_keys=True)
    if not isinstance(terminal, Done):
        sys.exit(1)


@main.command("serve")
@click.option("--port", type=int, default=8701, show_default=True)
@click.option("--host", default="127.0.0.1", show_default=True)
@click.option("--registry", "registry_path", type=click.Path(exists=True, dir_okay=False))
@click.option("--scenario", "scenario_path", type=click.Path(exists=True, dir_okay=False), default=None)
def serve_cmd(port, host, registry_path, scenario_path) -> None:
    """Serve the websocket gateway for the graphical client."""
    try:
        registry = _load_registry_opt(registry_path)
    except RegistryError as exc:
        raise click.ClickException(str(exc))
    server = GatewayServer(registry, host=host, port=port, scenario_path=scenario_path)
    click.echo(f"tessellate gateway on ws://{host}:{port}", err=True)
    try:
        server.serve_forever()
    except OSError as exc:
        raise click.ClickException(f"cannot bind {host}:{port}: {exc}")
    except KeyboardInterrupt:
        pass


if __name__ == "__main__":
    main()
