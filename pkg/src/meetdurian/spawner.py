"""Round spawning: place durians around the player, area-uniform with a
minimum pairwise separation."""

from __future__ import annotations

import random
from dataclasses import dataclass, replace
from enum import Enum

from .geo import AnnulusSpec, GeoPoint, haversine_distance, sample_annulus


class DurianState(str, Enum):
    ACTIVE = "Active"
    CAPTURED = "Captured"
    FAILED = "Failed"


@dataclass(frozen=True)
class Durian:
    id: int
    position: GeoPoint
    state: DurianState = DurianState.ACTIVE
    snapped: bool = False


@dataclass(frozen=True)
class DurianSet:
    durians: tuple[Durian, ...]
    spawn_center: GeoPoint
    spawn_spec: AnnulusSpec
    d_min: float

    def get(self, durian_id: int) -> Durian:
        for d in self.durians:
            if d.id == durian_id:
                return d
        raise UnknownDurian(f"no durian with id {durian_id}")

    def with_durian(self, durian: Durian) -> "DurianSet":
        return replace(
            self,
            durians=tuple(durian if d.id == durian.id else d for d in self.durians),
        )

    def active(self) -> list[Durian]:
        return [d for d in self.durians if d.state is DurianState.ACTIVE]


class InfeasibleSeparation(Exception):
    """Could not place the requested count at the requested pairwise
    separation within the attempt budget; configuration problem."""


class UnknownDurian(KeyError):
    pass


class NotActive(Exception):
    pass


def _separated(p: GeoPoint, others: list[GeoPoint], d_min: float) -> bool:
    return all(haversine_distance(p, q) >= d_min for q in others)


def spawn_round(
    center: GeoPoint,
    spec: AnnulusSpec,
    count: int,
    d_min: float,
    rng: random.Random,
    max_attempts: int = 1000,
    sampler=sample_annulus,
) -> DurianSet:
    """Spawn ``count`` durians in the annulus with pairwise separation >= d_min.

    Rejection sampling over the area-uniform sampler, so each durian's
    marginal distribution stays area-uniform.
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    if d_min < 0:
        raise ValueError("d_min must be >= 0")
    positions: list[GeoPoint] = []
    attempts = 0
    while len(positions) < count:
        if attempts >= max_attempts:
            raise InfeasibleSeparation(
                f"placed {len(positions)}/{count} durians at d_min={d_min} m "
                f"after {max_attempts} attempts"
            )
        attempts += 1
        p = sampler(spec, rng)
        if _separated(p, positions, d_min):
            positions.append(p)
    durians = tuple(Durian(id=i + 1, position=p) for i, p in enumerate(positions))
    return DurianSet(durians=durians, spawn_center=center, spawn_spec=spec, d_min=d_min)


def respawn_one(
    durian_set: DurianSet,
    durian_id: int,
    rng: random.Random,
    max_attempts: int = 1000,
) -> DurianSet:
    """Give one Active durian a fresh annulus position; everything else is
    untouched. The new position honors d_min against the other durians."""
    target = durian_set.get(durian_id)
    if target.state is not DurianState.ACTIVE:
        raise NotActive(f"durian {durian_id} is {target.state.value}")
    others = [d.position for d in durian_set.durians if d.id != durian_id]
    for _ in range(max_attempts):
        p = sample_annulus(durian_set.spawn_spec, rng)
        if _separated(p, others, durian_set.d_min):
            return durian_set.with_durian(replace(target, position=p, snapped=False))
    raise InfeasibleSeparation(
        f"could not respawn durian {durian_id} at d_min={durian_set.d_min} m"
    )
