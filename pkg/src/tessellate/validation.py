"""Structural validation of scenario descriptions.

Pure and deterministic: returns a list of issues, never mutates the
description. Checks identity, reference, and cycle rules that need no running
simulator; size-dependent relation rules (one-to-one cardinality and friends)
are deferred to baking, where entity counts are known.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

from .model import (
    Composition,
    CreateMatching,
    EmptyRelation,
    ScenarioDescription,
    element_id,
)


@dataclass(frozen=True)
class ValidationIssue:
    element: Optional[str]  # qualified element id, or None for document-level issues
    code: str
    message: str

    def __str__(self) -> str:
        where = self.element or "scenario"
        return f"{where}: {self.message}"


def _check_unique_ids(kind: str, ids: list[str], issues: list[ValidationIssue]) -> None:
    seen = set()
    for raw in ids:
        if not raw:
            issues.append(ValidationIssue(None, "empty_id", f"{kind} with empty id"))
        elif raw in seen:
            issues.append(
                ValidationIssue(element_id(kind, raw), "duplicate_id", f"duplicate {kind} id {raw!r}")
            )
        seen.add(raw)


def _cycle_elements(kind: str, edges: dict[str, list[str]]) -> set[str]:
    """Ids of nodes on at least one cycle (self-loops included), via iterative DFS."""
    on_cycle: set[str] = set()
    color: dict[str, int] = {}  # 0 unvisited, 1 on stack, 2 done

    for start in edges:
        if color.get(start, 0) != 0:
            continue
        stack: list[tuple[str, int]] = [(start, 0)]
        path: list[str] = []
        while stack:
            node, edge_index = stack.pop()
            if edge_index == 0:
                color[node] = 1
                path.append(node)
            targets = edges.get(node, [])
            advanced = False
            for i in range(edge_index, len(targets)):
                succ = targets[i]
                state = color.get(succ, 0)
                if state == 1:
                    # Found a back edge; everything from succ to node is cyclic.
                    cycle_start = path.index(succ)
                    on_cycle.update(path[cycle_start:])
                elif state == 0:
                    stack.append((node, i + 1))
                    stack.append((succ, 0))
                    advanced = True
                    break
            if not advanced:
                color[node] = 2
                path.pop()
    return on_cycle


def validate_description(d: ScenarioDescription) -> list[ValidationIssue]:
    """Return all structural issues; an empty list means the description is valid."""
    issues: list[ValidationIssue] = []

    _check_unique_ids("simulator", [s.id for s in d.simulators], issues)
    _check_unique_ids("tessera", [t.id for t in d.tesserae], issues)
    _check_unique_ids("connection", [c.id for c in d.connections], issues)

    sim_ids = {s.id for s in d.simulators}
    tessera_ids = {t.id for t in d.tesserae}
    connection_ids = {c.id for c in d.connections}

    for s in d.simulators:
        if not s.registry_key:
            issues.append(
                ValidationIssue(element_id("simulator", s.id), "empty_registry_key", "registry_key is empty")
            )

    matching_edges: dict[str, list[str]] = {}
    for t in d.tesserae:
        elem = element_id("tessera", t.id)
        if t.simulator_id not in sim_ids:
            issues.append(
                ValidationIssue(elem, "dangling_reference", f"unknown simulator {t.simulator_id!r}")
            )
        edges = []
        for source in t.sources:
            if isinstance(source, CreateMatching):
                if source.size_of not in tessera_ids:
                    issues.append(
                        ValidationIssue(elem, "dangling_reference", f"unknown tessera {source.size_of!r} in size_of")
                    )
                else:
                    edges.append(source.size_of)
        matching_edges[t.id] = edges
    for tess_id in sorted(_cycle_elements("tessera", matching_edges)):
        issues.append(
            ValidationIssue(
                element_id("tessera", tess_id), "size_of_cycle", f"size_of cycle at {tess_id!r}"
            )
        )

    composition_edges: dict[str, list[str]] = {}
    for c in d.connections:
        elem = element_id("connection", c.id)
        for role, tess in (("source", c.source), ("target", c.target)):
            if tess not in tessera_ids:
                issues.append(ValidationIssue(elem, "dangling_reference", f"unknown {role} tessera {tess!r}"))
        if not c.attr_pairs and not isinstance(c.relation, EmptyRelation):
            issues.append(ValidationIssue(elem, "no_attr_pairs", "connection has no attribute pairs"))
        if not c.delayed and c.initial_values:
            issues.append(
                ValidationIssue(elem, "initial_values_without_delay", "initial_values require delayed=true")
            )
        edges = []
        if isinstance(c.relation, Composition):
            if not c.relation.path:
                issues.append(ValidationIssue(elem, "empty_composition", "composition path is empty"))
            for step in c.relation.path:
                if step.connection not in connection_ids:
                    issues.append(
                        ValidationIssue(
                            elem, "dangling_reference", f"unknown connection {step.connection!r} in composition path"
                        )
                    )
                else:
                    edges.append(step.connection)
        composition_edges[c.id] = edges
    for conn_id in sorted(_cycle_elements("connection", composition_edges)):
        issues.append(
            ValidationIssue(
                element_id("connection", conn_id), "composition_cycle", f"composition cycle at {conn_id!r}"
            )
        )

    if d.params.end_time < 1:
        issues.append(ValidationIssue(None, "bad_end_time", "end_time must be >= 1"))
    if d.params.real_time_factor is not None and d.params.real_time_factor <= 0:
        issues.append(ValidationIssue(None, "bad_real_time_factor", "real_time_factor must be > 0"))

    for tess_id in d.layout:
        if tess_id not in tessera_ids:
            issues.append(
                ValidationIssue(None, "dangling_reference", f"layout entry for unknown tessera {tess_id!r}")
            )

    return issues
