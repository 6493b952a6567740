"""Resolving a connection's abstract relation into a concrete pair set.

Resolution is a pure function of the relation, the two resolved entity lists,
the already-resolved pair sets of composed connections, the connection id, and
the scenario master seed. Equal inputs yield identical pair sets everywhere.
"""

from __future__ import annotations

from dataclasses import dataclass

from .model import (
    Composition,
    EmptyRelation,
    Manual,
    ManyToOne,
    OneToOne,
    RandomRelation,
    Relation,
)
from .pairs import EntityRef, PairSet, compose_pairsets
from .prng import SplitMix64, stream_seed, uniform_index


class RelationError(Exception):
    """A relation cannot be resolved against the given entity lists."""

    code = "relation_error"


class SizeMismatch(RelationError):
    code = "size_mismatch"


class TargetNotSingleton(RelationError):
    code = "target_not_singleton"


class InsufficientTargets(RelationError):
    code = "insufficient_targets"


class UnknownEntity(RelationError):
    code = "unknown_entity"


class MissingDependency(RelationError):
    code = "missing_dependency"


@dataclass(frozen=True)
class RelationResolution:
    pairs: PairSet
    dropped: int = 0  # composition pairs restricted away because an endpoint left the tesserae


def _resolve_random(
    rel: RandomRelation, src: list[EntityRef], dst: list[EntityRef], conn_id: str, master_seed: int
) -> PairSet:
    stream = SplitMix64(stream_seed(conn_id, rel.seed, master_seed))
    if rel.allow_repeat:
        if src and not dst:
            raise InsufficientTargets("random relation needs at least one target entity")
        # One draw per source entity, in canonical order.
        return PairSet.from_pairs((s, dst[uniform_index(stream, len(dst))]) for s in src)
    if len(dst) < len(src):
        raise InsufficientTargets(
            f"random relation without repeat needs at least {len(src)} targets, got {len(dst)}"
        )
    # Fisher-Yates over the target indices (classic descending variant), then
    # take the first len(src) in order.
    indices = list(range(len(dst)))
    for i in range(len(indices) - 1, 0, -1):
        j = uniform_index(stream, i + 1)
        indices[i], indices[j] = indices[j], indices[i]
    return PairSet.from_pairs((s, dst[indices[k]]) for k, s in enumerate(src))


def _resolve_manual(rel: Manual, src: list[EntityRef], dst: list[EntityRef]) -> PairSet:
    src_by_id = {ref.entity_id: ref for ref in src}
    dst_by_id = {ref.entity_id: ref for ref in dst}
    pairs = []
    for src_id, dst_id in rel.pairs:
        if src_id not in src_by_id:
            raise UnknownEntity(f"manual pair references unknown source entity {src_id!r}")
        if dst_id not in dst_by_id:
            raise UnknownEntity(f"manual pair references unknown target entity {dst_id!r}")
        pairs.append((src_by_id[src_id], dst_by_id[dst_id]))
    return PairSet.from_pairs(pairs)


def resolve_relation_detailed(
    rel: Relation,
    src: list[EntityRef],
    dst: list[EntityRef],
    env: dict[str, PairSet],
    conn_id: str,
    master_seed: int,
) -> RelationResolution:
    """Resolve and report how many composition pairs were restricted away."""
    if isinstance(rel, EmptyRelation):
        return RelationResolution(PairSet())
    if isinstance(rel, OneToOne):
        if len(src) != len(dst):
            raise SizeMismatch(f"one-to-one needs equal sizes, got {len(src)} and {len(dst)}")
        return RelationResolution(PairSet.from_pairs(zip(src, dst)))
    if isinstance(rel, ManyToOne):
        if len(dst) != 1:
            raise TargetNotSingleton(f"many-to-one needs exactly one target entity, got {len(dst)}")
        return RelationResolution(PairSet.from_pairs((s, dst[0]) for s in src))
    if isinstance(rel, RandomRelation):
        return RelationResolution(_resolve_random(rel, src, dst, conn_id, master_seed))
    if isinstance(rel, Manual):
        return RelationResolution(_resolve_manual(rel, src, dst))
    if isinstance(rel, Composition):
        steps = []
        for step in rel.path:
            if step.connection not in env:
                raise MissingDependency(f"composition step {step.connection!r} is not resolved")
            steps.append((env[step.connection], step.direction))
        joined = compose_pairsets(steps)
        src_set, dst_set = set(src), set(dst)
        kept = PairSet.from_pairs(p for p in joined if p[0] in src_set and p[1] in dst_set)
        return RelationResolution(kept, dropped=len(joined) - len(kept))
    raise TypeError(f"unknown relation {rel!r}")


def resolve_relation(
    rel: Relation,
    src: list[EntityRef],
    dst: list[EntityRef],
    env: dict[str, PairSet],
    conn_id: str,
    master_seed: int,
) -> PairSet:
    return resolve_relation_detailed(rel, src, dst, env, conn_id, master_seed).pairs
