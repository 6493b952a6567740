"""Canonical scenario file format: strict JSON parsing and deterministic serialization.

The on-disk form is a single UTF-8 JSON document with ``format_version: 1``.
Parsing is strict about shape (unknown keys, wrong types, out-of-range scalars)
but does not resolve references; dangling ids are a validation concern, not a
parse error. Serialization writes every field explicitly with a fixed key
order, so equal descriptions always produce identical bytes.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from typing import Any

from .model import (
    DIRECTIONS,
    PREDICATE_OPS,
    U64_MAX,
    Composition,
    CompositionStep,
    ConnectionSpec,
    CreateFixed,
    CreateMatching,
    EmptyRelation,
    EntitySource,
    Manual,
    ManyToOne,
    NodePosition,
    OneToOne,
    Predicate,
    RandomRelation,
    Relation,
    ScenarioDescription,
    ScenarioParams,
    Select,
    SimulatorSpec,
    TesseraSpec,
)

FORMAT_VERSION = 1


@dataclass(frozen=True)
class ParseIssue:
    """One problem found while parsing; ``path`` is a JSON-path-like locator."""

    path: str
    message: str

    def __str__(self) -> str:
        return f"{self.path}: {self.message}"


class ScenarioFormatError(ValueError):
    """Raised when a scenario document cannot be parsed; carries all issues found."""

    def __init__(self, issues: list[ParseIssue]):
        self.issues = issues
        super().__init__("; ".join(str(i) for i in issues))


class _Reader:
    """Collects parse issues while walking the document."""

    def __init__(self) -> None:
        self.issues: list[ParseIssue] = []

    def error(self, path: str, message: str) -> None:
        self.issues.append(ParseIssue(path, message))

    def check_keys(self, obj: dict, allowed: tuple[str, ...], path: str) -> None:
        for key in obj:
            if key not in allowed:
                self.error(f"{path}.{key}" if path else key, "unknown field")

    def str_field(self, obj: dict, key: str, path: str, default: str | None = None) -> str:
        value = obj.get(key, default)
        if value is None:
            self.error(f"{path}.{key}", "missing required field")
            return ""
        if not isinstance(value, str):
            self.error(f"{path}.{key}", "expected a string")
            return ""
        return value

    def int_field(
        self,
        obj: dict,
        key: str,
        path: str,
        default: int | None = None,
        minimum: int | None = None,
        maximum: int | None = None,
    ) -> int:
        value = obj.get(key, default)
        if value is None:
            self.error(f"{path}.{key}", "missing required field")
            return 0
        if isinstance(value, bool) or not isinstance(value, int):
            self.error(f"{path}.{key}", "expected an integer")
            return 0
        if minimum is not None and value < minimum:
            self.error(f"{path}.{key}", f"must be >= {minimum}")
            return minimum
        if maximum is not None and value > maximum:
            self.error(f"{path}.{key}", f"must be <= {maximum}")
            return maximum
        return value

    def bool_field(self, obj: dict, key: str, path: str, default: bool = False) -> bool:
        value = obj.get(key, default)
        if not isinstance(value, bool):
            self.error(f"{path}.{key}", "expected a boolean")
            return default
        return value

    def map_field(self, obj: dict, key: str, path: str) -> dict[str, Any]:
        value = obj.get(key, {})
        if not isinstance(value, dict):
            self.error(f"{path}.{key}", "expected an object")
            return {}
        return value

    def list_field(self, obj: dict, key: str, path: str) -> list:
        value = obj.get(key, [])
        if not isinstance(value, list):
            self.error(f"{path}.{key}", "expected an array")
            return []
        return value


def _parse_source(reader: _Reader, obj: Any, path: str) -> EntitySource | None:
    if not isinstance(obj, dict):
        reader.error(path, "expected an object")
        return None
    kind = obj.get("kind")
    if kind == "create_fixed":
        reader.check_keys(obj, ("kind", "count", "create_params"), path)
        count = reader.int_field(obj, "count", path, minimum=0)
        return CreateFixed(count=count, create_params=reader.map_field(obj, "create_params", path))
    if kind == "create_matching":
        reader.check_keys(obj, ("kind", "size_of", "create_params"), path)
        size_of = reader.str_field(obj, "size_of", path)
        return CreateMatching(size_of=size_of, create_params=reader.map_field(obj, "create_params", path))
    if kind == "select":
        reader.check_keys(obj, ("kind", "id_pattern", "predicates"), path)
        pattern = reader.str_field(obj, "id_pattern", path, default="*")
        predicates = []
        for i, raw in enumerate(reader.list_field(obj, "predicates", path)):
            ppath = f"{path}.predicates[{i}]"
            if not isinstance(raw, dict):
                reader.error(ppath, "expected an object")
                continue
            reader.check_keys(raw, ("key", "op", "value"), ppath)
            op = reader.str_field(raw, "op", ppath)
            if op and op not in PREDICATE_OPS:
                reader.error(f"{ppath}.op", f"must be one of {', '.join(PREDICATE_OPS)}")
            if "value" not in raw:
                reader.error(f"{ppath}.value", "missing required field")
            value = raw.get("value")
            if isinstance(value, (dict, list)):
                reader.error(f"{ppath}.value", "expected a JSON scalar")
                value = None
            predicates.append(Predicate(key=reader.str_field(raw, "key", ppath), op=op, value=value))
        return Select(id_pattern=pattern, predicates=predicates)
    reader.error(f"{path}.kind", "unknown entity source kind")
    return None


def _parse_relation(reader: _Reader, obj: Any, path: str) -> Relation:
    if not isinstance(obj, dict):
        reader.error(path, "expected an object")
        return EmptyRelation()
    kind = obj.get("kind")
    if kind == "empty":
        reader.check_keys(obj, ("kind",), path)
        return EmptyRelation()
    if kind == "one_to_one":
        reader.check_keys(obj, ("kind",), path)
        return OneToOne()
    if kind == "random":
        reader.check_keys(obj, ("kind", "allow_repeat", "seed"), path)
        return RandomRelation(
            allow_repeat=reader.bool_field(obj, "allow_repeat", path, default=False),
            seed=reader.int_field(obj, "seed", path, default=0, minimum=0, maximum=U64_MAX),
        )
    if kind == "many_to_one":
        reader.check_keys(obj, ("kind",), path)
        return ManyToOne()
    if kind == "manual":
        reader.check_keys(obj, ("kind", "pairs"), path)
        pairs: list[tuple[str, str]] = []
        for i, raw in enumerate(reader.list_field(obj, "pairs", path)):
            if (
                not isinstance(raw, list)
                or len(raw) != 2
                or not all(isinstance(x, str) for x in raw)
            ):
                reader.error(f"{path}.pairs[{i}]", "expected a [source_id, target_id] string pair")
                continue
            pairs.append((raw[0], raw[1]))
        return Manual(pairs=pairs)
    if kind == "composition":
        reader.check_keys(obj, ("kind", "path"), path)
        steps = []
        for i, raw in enumerate(reader.list_field(obj, "path", path)):
            spath = f"{path}.path[{i}]"
            if not isinstance(raw, dict):
                reader.error(spath, "expected an object")
                continue
            reader.check_keys(raw, ("connection", "direction"), spath)
            direction = reader.str_field(raw, "direction", spath, default="forward")
            if direction not in DIRECTIONS:
                reader.error(f"{spath}.direction", "must be 'forward' or 'backward'")
                direction = "forward"
            steps.append(CompositionStep(connection=reader.str_field(raw, "connection", spath), direction=direction))
        return Composition(path=steps)
    reader.error(f"{path}.kind", "unknown relation kind")
    return EmptyRelation()


def _check_scalar_map(reader: _Reader, values: dict[str, Any], path: str) -> None:
    for key, value in values.items():
        if isinstance(value, (dict, list)):
            reader.error(f"{path}.{key}", "expected a JSON scalar")


def parse_description(text: str) -> ScenarioDescription:
    """Parse a canonical scenario document.

    Raises ScenarioFormatError (carrying every issue found) on syntax errors,
    unknown fields, or wrong value types. References between elements are not
    checked here; run validate_description for that.
    """
    reader = _Reader()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioFormatError(
            [ParseIssue(f"line {exc.lineno}, column {exc.colno}", f"invalid JSON: {exc.msg}")]
        ) from exc
    if not isinstance(doc, dict):
        raise ScenarioFormatError([ParseIssue("$", "top level must be an object")])

    reader.check_keys(
        doc, ("format_version", "simulators", "tesserae", "connections", "params", "layout"), ""
    )
    version = doc.get("format_version")
    if version != FORMAT_VERSION:
        reader.error("format_version", f"unsupported format version {version!r} (expected {FORMAT_VERSION})")

    simulators = []
    for i, raw in enumerate(reader.list_field(doc, "simulators", "")):
        path = f"simulators[{i}]"
        if not isinstance(raw, dict):
            reader.error(path, "expected an object")
            continue
        reader.check_keys(raw, ("id", "registry_key", "display_name", "init_params"), path)
        sim_id = reader.str_field(raw, "id", path)
        simulators.append(
            SimulatorSpec(
                id=sim_id,
                registry_key=reader.str_field(raw, "registry_key", path),
                display_name=reader.str_field(raw, "display_name", path, default=sim_id),
                init_params=reader.map_field(raw, "init_params", path),
            )
        )

    tesserae = []
    for i, raw in enumerate(reader.list_field(doc, "tesserae", "")):
        path = f"tesserae[{i}]"
        if not isinstance(raw, dict):
            reader.error(path, "expected an object")
            continue
        reader.check_keys(raw, ("id", "name", "icon", "simulator_id", "model", "sources"), path)
        tess_id = reader.str_field(raw, "id", path)
        sources = []
        for j, raw_source in enumerate(reader.list_field(raw, "sources", path)):
            source = _parse_source(reader, raw_source, f"{path}.sources[{j}]")
            if source is not None:
                sources.append(source)
        tesserae.append(
            TesseraSpec(
                id=tess_id,
                name=reader.str_field(raw, "name", path, default=tess_id),
                icon=reader.str_field(raw, "icon", path, default=""),
                simulator_id=reader.str_field(raw, "simulator_id", path),
                model=reader.str_field(raw, "model", path),
                sources=sources,
            )
        )

    connections = []
    for i, raw in enumerate(reader.list_field(doc, "connections", "")):
        path = f"connections[{i}]"
        if not isinstance(raw, dict):
            reader.error(path, "expected an object")
            continue
        reader.check_keys(
            raw, ("id", "source", "target", "attr_pairs", "relation", "delayed", "initial_values"), path
        )
        attr_pairs: list[tuple[str, str]] = []
        for j, raw_pair in enumerate(reader.list_field(raw, "attr_pairs", path)):
            if (
                not isinstance(raw_pair, list)
                or len(raw_pair) != 2
                or not all(isinstance(x, str) for x in raw_pair)
            ):
                reader.error(f"{path}.attr_pairs[{j}]", "expected a [source_attr, target_attr] string pair")
                continue
            attr_pairs.append((raw_pair[0], raw_pair[1]))
        relation = _parse_relation(reader, raw.get("relation", {"kind": "empty"}), f"{path}.relation")
        initial_values = reader.map_field(raw, "initial_values", path)
        _check_scalar_map(reader, initial_values, f"{path}.initial_values")
        connections.append(
            ConnectionSpec(
                id=reader.str_field(raw, "id", path),
                source=reader.str_field(raw, "source", path),
                target=reader.str_field(raw, "target", path),
                attr_pairs=attr_pairs,
                relation=relation,
                delayed=reader.bool_field(raw, "delayed", path, default=False),
                initial_values=initial_values,
            )
        )

    raw_params = reader.map_field(doc, "params", "")
    reader.check_keys(raw_params, ("end_time", "real_time_factor", "master_seed"), "params")
    rtf = raw_params.get("real_time_factor")
    if rtf is not None:
        if isinstance(rtf, bool) or not isinstance(rtf, (int, float)):
            reader.error("params.real_time_factor", "expected a number or null")
            rtf = None
        elif rtf <= 0:
            reader.error("params.real_time_factor", "must be > 0")
            rtf = None
        else:
            rtf = float(rtf)
    params = ScenarioParams(
        end_time=reader.int_field(raw_params, "end_time", "params", default=3600, minimum=1),
        real_time_factor=rtf,
        master_seed=reader.int_field(raw_params, "master_seed", "params", default=0, minimum=0, maximum=U64_MAX),
    )

    layout = {}
    for key, raw in reader.map_field(doc, "layout", "").items():
        path = f"layout.{key}"
        if not isinstance(raw, dict):
            reader.error(path, "expected an object")
            continue
        reader.check_keys(raw, ("x", "y"), path)
        x, y = raw.get("x"), raw.get("y")
        if not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in (x, y)):
            reader.error(path, "x and y must be numbers")
            continue
        layout[key] = NodePosition(x=float(x), y=float(y))

    if reader.issues:
        raise ScenarioFormatError(reader.issues)
    return ScenarioDescription(
        simulators=simulators, tesserae=tesserae, connections=connections, params=params, layout=layout
    )


def parse_sources_json(raw: Any, path: str = "sources") -> list:
    """Parse a JSON list of entity sources (the scenario-file encoding)."""
    reader = _Reader()
    if not isinstance(raw, list):
        raise ScenarioFormatError([ParseIssue(path, "expected an array")])
    sources = []
    for i, item in enumerate(raw):
        source = _parse_source(reader, item, f"{path}[{i}]")
        if source is not None:
            sources.append(source)
    if reader.issues:
        raise ScenarioFormatError(reader.issues)
    return sources


def parse_relation_json(raw: Any, path: str = "relation") -> Relation:
    """Parse one JSON relation object (the scenario-file encoding)."""
    reader = _Reader()
    relation = _parse_relation(reader, raw, path)
    if reader.issues:
        raise ScenarioFormatError(reader.issues)
    return relation


def parse_attr_pairs_json(raw: Any, path: str = "attr_pairs") -> list[tuple[str, str]]:
    reader = _Reader()
    pairs: list[tuple[str, str]] = []
    if not isinstance(raw, list):
        raise ScenarioFormatError([ParseIssue(path, "expected an array")])
    for i, item in enumerate(raw):
        if not isinstance(item, list) or len(item) != 2 or not all(isinstance(x, str) for x in item):
            reader.error(f"{path}[{i}]", "expected a [source_attr, target_attr] string pair")
            continue
        pairs.append((item[0], item[1]))
    if reader.issues:
        raise ScenarioFormatError(reader.issues)
    return pairs


def _canonical_value(value: Any) -> Any:
    """Recursively sort object keys inside user-provided JSON values."""
    if isinstance(value, dict):
        return {k: _canonical_value(value[k]) for k in sorted(value)}
    if isinstance(value, list):
        return [_canonical_value(v) for v in value]
    return value


def _source_to_json(source: EntitySource) -> dict:
    if isinstance(source, CreateFixed):
        return {
            "kind": "create_fixed",
            "count": source.count,
            "create_params": _canonical_value(source.create_params),
        }
    if isinstance(source, CreateMatching):
        return {
            "kind": "create_matching",
            "size_of": source.size_of,
            "create_params": _canonical_value(source.create_params),
        }
    if isinstance(source, Select):
        return {
            "kind": "select",
            "id_pattern": source.id_pattern,
            "predicates": [{"key": p.key, "op": p.op, "value": p.value} for p in source.predicates],
        }
    raise TypeError(f"unknown entity source {source!r}")


def relation_to_json(relation: Relation) -> dict:
    if isinstance(relation, EmptyRelation):
        return {"kind": "empty"}
    if isinstance(relation, OneToOne):
        return {"kind": "one_to_one"}
    if isinstance(relation, RandomRelation):
        return {"kind": "random", "allow_repeat": relation.allow_repeat, "seed": relation.seed}
    if isinstance(relation, ManyToOne):
        return {"kind": "many_to_one"}
    if isinstance(relation, Manual):
        return {"kind": "manual", "pairs": [[s, t] for s, t in relation.pairs]}
    if isinstance(relation, Composition):
        return {
            "kind": "composition",
            "path": [{"connection": s.connection, "direction": s.direction} for s in relation.path],
        }
    raise TypeError(f"unknown relation {relation!r}")


def description_to_json(d: ScenarioDescription) -> dict:
    """The canonical JSON object form: fixed key order, user maps key-sorted."""
    return {
        "format_version": FORMAT_VERSION,
        "simulators": [
            {
                "id": s.id,
                "registry_key": s.registry_key,
                "display_name": s.display_name,
                "init_params": _canonical_value(s.init_params),
            }
            for s in d.simulators
        ],
        "tesserae": [
            {
                "id": t.id,
                "name": t.name,
                "icon": t.icon,
                "simulator_id": t.simulator_id,
                "model": t.model,
                "sources": [_source_to_json(src) for src in t.sources],
            }
            for t in d.tesserae
        ],
        "connections": [
            {
                "id": c.id,
                "source": c.source,
                "target": c.target,
                "attr_pairs": [[a, b] for a, b in c.attr_pairs],
                "relation": relation_to_json(c.relation),
                "delayed": c.delayed,
                "initial_values": _canonical_value(c.initial_values),
            }
            for c in d.connections
        ],
        "params": {
            "end_time": d.params.end_time,
            "real_time_factor": d.params.real_time_factor,
            "master_seed": d.params.master_seed,
        },
        "layout": {
            key: {"x": d.layout[key].x, "y": d.layout[key].y} for key in sorted(d.layout)
        },
    }


def serialize_description(d: ScenarioDescription) -> str:
    """Deterministic canonical text: equal descriptions serialize to identical bytes."""
    return json.dumps(description_to_json(d), indent=2, ensure_ascii=False) + "\n"
