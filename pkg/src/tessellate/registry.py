"""The simulator registry: the catalog of launchable simulators.

A registry file is a JSON list of entries; each entry names either a builtin
simulator or a command line to spawn. The GUI sidebar is populated from it.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

REGISTRY_ENV_VAR = "TESSELLATE_REGISTRY"


class RegistryError(ValueError):
    pass


@dataclass(frozen=True)
class RegistryEntry:
    key: str
    display_name: str = ""
    icon: str = ""
    command: Optional[list[str]] = None
    builtin: Optional[str] = None

    def to_json(self) -> dict:
        launch = {"builtin": self.builtin} if self.builtin is not None else {"command": list(self.command or [])}
        return {"key": self.key, "display_name": self.display_name, "icon": self.icon, "launch": launch}


class Registry:
    def __init__(self, entries: list[RegistryEntry]):
        self._entries = {e.key: e for e in entries}
        if len(self._entries) != len(entries):
            raise RegistryError("duplicate registry keys")

    def get(self, key: str) -> Optional[RegistryEntry]:
        return self._entries.get(key)

    def entries(self) -> list[RegistryEntry]:
        return list(self._entries.values())

    def to_json(self) -> list:
        return [e.to_json() for e in self._entries.values()]


def parse_registry(text: str) -> Registry:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise RegistryError(f"invalid registry JSON: {exc.msg} (line {exc.lineno})") from exc
    if not isinstance(doc, list):
        raise RegistryError("registry must be a JSON list of entries")
    entries = []
    for i, raw in enumerate(doc):
        where = f"entry {i}"
        if not isinstance(raw, dict):
            raise RegistryError(f"{where}: expected an object")
        key = raw.get("key")
        if not isinstance(key, str) or not key:
            raise RegistryError(f"{where}: missing or empty 'key'")
        launch = raw.get("launch")
        if not isinstance(launch, dict):
            raise RegistryError(f"{where}: missing 'launch' object")
        command, builtin = launch.get("command"), launch.get("builtin")
        if builtin is not None:
            if not isinstance(builtin, str):
                raise RegistryError(f"{where}: 'builtin' must be a string")
        elif isinstance(command, list) and command and all(isinstance(c, str) for c in command):
            command = list(command)
        else:
            raise RegistryError(f"{where}: 'launch' needs a non-empty 'command' list or a 'builtin' name")
        entries.append(
            RegistryEntry(
                key=key,
                display_name=raw.get("display_name", key),
                icon=raw.get("icon", ""),
                command=command if builtin is None else None,
                builtin=builtin,
            )
        )
    return Registry(entries)


def load_registry(path: str | Path) -> Registry:
    try:
        text = Path(path).read_text(encoding="utf-8")
    except OSError as exc:
        raise RegistryError(f"cannot read registry {path}: {exc}") from exc
    return parse_registry(text)


def registry_path_from_env() -> Optional[str]:
    return os.environ.get(REGISTRY_ENV_VAR)


def builtin_registry() -> Registry:
    """The four reference simulators, ready to use without a registry file."""
    return Registry(
        [
            RegistryEntry(key="grid-sim", display_name="Grid", icon="grid", builtin="grid-sim"),
            RegistryEntry(key="pv-sim", display_name="Solar / Wind", icon="sun", builtin="pv-sim"),
            RegistryEntry(key="ctl-sim", display_name="Controller", icon="sliders", builtin="ctl-sim"),
            RegistryEntry(key="collector-sim", display_name="Collector", icon="database", builtin="collector-sim"),
        ]
    )
