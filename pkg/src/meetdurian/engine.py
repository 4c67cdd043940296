"""Per-player round state machine: mask-gated entry, proximity + Q&A capture,
HP and point arithmetic, question selection, and movement monitoring."""

from __future__ import annotations

import json
import random
from dataclasses import dataclass, field, replace
from enum import Enum

from .config import GameConfig
from .geo import AnnulusSpec, GeoPoint, haversine_distance
from .maskgate import MaskVerdict
from .roads import RoadNetwork, durians_to_roads
from .spawner import DurianSet, DurianState, NotActive, spawn_round, respawn_one


class Phase(str, Enum):
    AWAITING_MASK_GATE = "AwaitingMaskGate"
    PLAYING = "Playing"
    ROUND_COMPLETE = "RoundComplete"


class AlertKind(str, Enum):
    NEAR_DURIAN = "NearDurian"      # green toast
    ABNORMAL_SPEED = "AbnormalSpeed"  # red toast


@dataclass(frozen=True)
class Alert:
    kind: AlertKind
    timestamp: float
    detail: dict


@dataclass(frozen=True)
class Question:
    id: int
    text: str
    choices: tuple[str, ...]
    correct_index: int
    locale: str = "en"

    def __post_init__(self):
        if len(self.choices) < 2:
            raise ValueError("question needs at least 2 choices")
        if not 0 <= self.correct_index < len(self.choices):
            raise ValueError("correct_index out of range")


@dataclass
class GameSession:
    player_id: str
    phase: Phase
    hp: float
    points_earned: int = 0
    durians: DurianSet | None = None
    answered_right: set[int] = field(default_factory=set)
    answered_wrong: set[int] = field(default_factory=set)
    wrong_answers: int = 0
    last_fix: tuple[GeoPoint, float] | None = None
    alerts: list[Alert] = field(default_factory=list)
    pending_question_id: int | None = None
    pending_durian_id: int | None = None


@dataclass(frozen=True)
class CaptureOutcome:
    correct: bool
    captured: bool
    hp: float
    points_earned: int
    phase: Phase


class AlreadyInSession(Exception):
    pass


class NoSession(Exception):
    pass


class NonMonotonicTimestamp(ValueError):
    pass


class OutOfRange(Exception):
    pass


class UnknownQuestion(Exception):
    pass


class EmptyBank(Exception):
    pass


def load_questions(path) -> list[Question]:
    """Question bank file: JSON array of {id, text, choices, correct_index, locale}."""
    with open(path, "r", encoding="utf-8") as f:
        raw = json.load(f)
    return [
        Question(
            id=q["id"],
            text=q["text"],
            choices=tuple(q["choices"]),
            correct_index=q["correct_index"],
            locale=q.get("locale", "en"),
        )
        for q in raw
    ]


def start_session(
    player_id: str,
    center: GeoPoint,
    verdict: MaskVerdict,
    config: GameConfig,
    rng: random.Random,
    network: RoadNetwork | None = None,
) -> GameSession:
    """Begin a round. Only a masked verdict unlocks Playing; anything else
    leaves the session gated with no durians spawned."""
    if not verdict.masked:
        return GameSession(player_id=player_id, phase=Phase.AWAITING_MASK_GATE, hp=config.hp_start)
    spec = AnnulusSpec(center=center, r_min=config.r_min, r_max=config.r_max)
    durians = spawn_round(
        center, spec, config.round_size, config.d_min, rng, max_attempts=config.max_attempts
    )
    if network is not None:
        durians = durians_to_roads(network, durians)
    return GameSession(
        player_id=player_id, phase=Phase.PLAYING, hp=config.hp_start, durians=durians
    )


def report_fix(
    session: GameSession, p: GeoPoint, t: float, config: GameConfig
) -> list[Alert]:
    """Record a GPS fix; returns the alerts it triggered (also appended to the
    session). Speed is checked against the previous fix; proximity against
    every Active durian."""
    if session.phase is not Phase.PLAYING:
        raise NoSession(f"session is {session.phase.value}, not Playing")
    alerts: list[Alert] = []
    if session.last_fix is not None:
        prev_p, prev_t = session.last_fix
        if t <= prev_t:
            raise NonMonotonicTimestamp(f"fix at t={t} not after previous t={prev_t}")
        speed = haversine_distance(prev_p, p) / (t - prev_t)
        if speed > config.v_max:
            alerts.append(
                Alert(
                    kind=AlertKind.ABNORMAL_SPEED,
                    timestamp=t,
                    detail={"speed_mps": speed, "v_max": config.v_max},
                )
            )
    nearest_id = None
    nearest_d = None
    for d in session.durians.active():
        dist = haversine_distance(p, d.position)
        if dist <= config.capture_radius and (nearest_d is None or dist < nearest_d):
            nearest_id, nearest_d = d.id, dist
    if nearest_id is not None:
        alerts.append(
            Alert(
                kind=AlertKind.NEAR_DURIAN,
                timestamp=t,
                detail={"durian_id": nearest_id, "distance_m": nearest_d},
            )
        )
    session.last_fix = (p, t)
    session.alerts.extend(alerts)
    return alerts


def next_question(
    session: GameSession, bank: list[Question], rng: random.Random
) -> Question:
    """Uniform draw from the questions not yet answered correctly. When every
    question has been answered right, history resets rather than blocking
    play."""
    if session.phase is not Phase.PLAYING:
        raise NoSession(f"session is {session.phase.value}, not Playing")
    if not bank:
        raise EmptyBank("question bank is empty")
    eligible = [q for q in bank if q.id not in session.answered_right]
    if not eligible:
        session.answered_right.clear()
        session.answered_wrong.clear()
        eligible = list(bank)
    q = eligible[rng.randrange(len(eligible))]
    session.pending_question_id = q.id
    return q


def attempt_capture(
    session: GameSession,
    durian_id: int,
    question: Question,
    answer_index: int,
    config: GameConfig,
) -> CaptureOutcome:
    """Resolve a capture attempt. Correct: durian Captured, +1 point. Wrong:
    HP drops 0.5 and the durian stays Active for a retry; HP exhaustion fails
    every remaining durian and ends the round."""
    if session.phase is not Phase.PLAYING:
        raise NoSession(f"session is {session.phase.value}, not Playing")
    durian = session.durians.get(durian_id)
    if durian.state is not DurianState.ACTIVE:
        raise NotActive(f"durian {durian_id} is {durian.state.value}")
    if session.pending_question_id != question.id:
        raise UnknownQuestion(f"question {question.id} was not the one issued")
    if session.last_fix is None or (
        haversine_distance(session.last_fix[0], durian.position) > config.capture_radius
    ):
        raise OutOfRange(
            f"durian {durian_id} not within {config.capture_radius} m of the last fix"
        )

    session.pending_question_id = None
    session.pending_durian_id = None
    correct = answer_index == question.correct_index
    captured = False
    if correct:
        session.durians = session.durians.with_durian(
            replace(durian, state=DurianState.CAPTURED)
        )
        session.points_earned += 1
        session.answered_right.add(question.id)
        session.answered_wrong.discard(question.id)
        captured = True
    else:
        session.hp = max(0.0, session.hp - 0.5)
        session.wrong_answers += 1
        session.answered_wrong.add(question.id)
        if session.hp == 0.0:
            for d in session.durians.active():
                session.durians = session.durians.with_durian(
                    replace(d, state=DurianState.FAILED)
                )
    if not session.durians.active():
        session.phase = Phase.ROUND_COMPLETE
    return CaptureOutcome(
        correct=correct,
        captured=captured,
        hp=session.hp,
        points_earned=session.points_earned,
        phase=session.phase,
    )


def respawn_durian(
    session: GameSession,
    durian_id: int,
    rng: random.Random,
    network: RoadNetwork | None = None,
) -> DurianSet:
    """Player-triggered re-randomize of one durian (followed by a snap pass
    when a road network is loaded)."""
    if session.phase is not Phase.PLAYING:
        raise NoSession(f"session is {session.phase.value}, not Playing")
    session.durians = respawn_one(session.durians, durian_id, rng)
    if network is not None:
        session.durians = durians_to_roads(network, session.durians)
    return session.durians
