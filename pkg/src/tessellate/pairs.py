"""Concrete entity references and canonical pair sets.

A PairSet is the resolved form of a connection: an ordered, deduplicated set
of (source entity, target entity) pairs, always kept in lexicographic order so
equal contents compare and serialize identically.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Iterator


@dataclass(frozen=True, order=True)
class EntityRef:
    simulator_id: str
    entity_id: str

    def to_json(self) -> dict:
        return {"simulator_id": self.simulator_id, "entity_id": self.entity_id}

    @staticmethod
    def from_json(obj: dict) -> "EntityRef":
        return EntityRef(simulator_id=obj["simulator_id"], entity_id=obj["entity_id"])


Pair = tuple[EntityRef, EntityRef]


@dataclass(frozen=True)
class PairSet:
    pairs: tuple[Pair, ...] = ()

    @staticmethod
    def from_pairs(pairs: Iterable[Pair]) -> "PairSet":
        return PairSet(tuple(sorted(set(pairs))))

    def __len__(self) -> int:
        return len(self.pairs)

    def __iter__(self) -> Iterator[Pair]:
        return iter(self.pairs)

    def __contains__(self, pair: Pair) -> bool:
        return pair in set(self.pairs)

    def invert(self) -> "PairSet":
        return PairSet.from_pairs((dst, src) for src, dst in self.pairs)

    def sources(self) -> list[EntityRef]:
        return [src for src, _ in self.pairs]

    def targets(self) -> list[EntityRef]:
        return [dst for _, dst in self.pairs]

    def to_json(self) -> list:
        return [[src.to_json(), dst.to_json()] for src, dst in self.pairs]


def invert_pairset(p: PairSet) -> PairSet:
    return p.invert()


def join_pairsets(left: PairSet, right: PairSet) -> PairSet:
    """Relational join: (a, c) whenever (a, b) in left and (b, c) in right."""
    by_src: dict[EntityRef, list[EntityRef]] = {}
    for mid, dst in right.pairs:
        by_src.setdefault(mid, []).append(dst)
    out = []
    for src, mid in left.pairs:
        for dst in by_src.get(mid, ()):
            out.append((src, dst))
    return PairSet.from_pairs(out)


def compose_pairsets(steps: list[tuple[PairSet, str]]) -> PairSet:
    """Join the steps left to right; a 'backward' step contributes its inverse."""
    if not steps:
        raise ValueError("composition needs at least one step")
    oriented = [p.invert() if direction == "backward" else p for p, direction in steps]
    result = oriented[0]
    for step in oriented[1:]:
        result = join_pairsets(result, step)
    return result
