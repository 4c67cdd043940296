"""Headless harness: GPS trace replay against the game engine (or a remote
server) and the durian-distribution experiment with chi-square statistics."""

from __future__ import annotations

import csv
import json
import math
import random
from dataclasses import dataclass
from pathlib import Path

from scipy import stats

from . import engine
from .config import GameConfig
from .geo import (
    AnnulusSpec,
    GeoPoint,
    haversine_distance,
    initial_bearing,
    sample_annulus,
    sample_annulus_naive,
)
from .maskgate import EYE_REGION, LANDMARK_NAMES, LandmarkSet, classify_mask
from .roads import RoadNetwork
from .spawner import spawn_round


class TraceParseError(ValueError):
    pass


@dataclass(frozen=True)
class TraceFix:
    t: float
    point: GeoPoint


def load_trace(path) -> list[TraceFix]:
    """Trace CSV: ``t_unix_s,lat,lon`` per row, time-ordered. A header row is
    tolerated."""
    fixes: list[TraceFix] = []
    with open(path, "r", encoding="utf-8", newline="") as f:
        for i, row in enumerate(csv.reader(f)):
            if not row:
                continue
            try:
                t, lat, lon = float(row[0]), float(row[1]), float(row[2])
            except (ValueError, IndexError) as e:
                if i == 0:
                    continue  # header
                raise TraceParseError(f"row {i}: {row!r}: {e}") from e
            fixes.append(TraceFix(t=t, point=GeoPoint(lat=lat, lon=lon)))
    if not fixes:
        raise TraceParseError("trace is empty")
    for a, b in zip(fixes, fixes[1:]):
        if b.t <= a.t:
            raise TraceParseError(f"trace not time-ordered at t={b.t}")
    return fixes


def masked_fixture() -> LandmarkSet:
    """Landmark pattern of a properly masked face: confident eyes, suppressed
    nose/mouth/chin."""
    return LandmarkSet.from_confidences(
        {name: (0.9 if name in EYE_REGION else 0.1) for name in LANDMARK_NAMES}
    )


class AnswerPolicy:
    """Scripted Q&A policy: 'always-correct', 'always-wrong', or 'p:<prob>'
    for probabilistically correct answers."""

    def __init__(self, policy: str, rng: random.Random):
        self.rng = rng
        if policy == "always-correct":
            self.p_correct = 1.0
        elif policy == "always-wrong":
            self.p_correct = 0.0
        elif policy.startswith("p:"):
            self.p_correct = float(policy[2:])
            if not 0.0 <= self.p_correct <= 1.0:
                raise ValueError("p must be in [0, 1]")
        else:
            raise ValueError(f"unknown policy {policy!r}")

    def answer(self, question: engine.Question) -> int:
        if self.rng.random() < self.p_correct:
            return question.correct_index
        wrong = [i for i in range(len(question.choices)) if i != question.correct_index]
        return wrong[self.rng.randrange(len(wrong))]


def replay(
    trace: list[TraceFix],
    question_bank: list[engine.Question],
    config: GameConfig,
    policy: str = "always-correct",
    seed: int = 0,
    network: RoadNetwork | None = None,
) -> dict:
    """Feed a trace through the in-process engine, answering issued questions
    per the policy. Returns the transcript as a JSON-serializable dict."""
    rng = random.Random(seed)
    verdict = classify_mask(masked_fixture())
    session = engine.start_session(
        "sim-player", trace[0].point, verdict, config, rng, network
    )
    bank_by_id = {q.id: q for q in question_bank}
    events: list[dict] = []
    for fix in trace:
        if session.phase is not engine.Phase.PLAYING:
            break
        alerts = engine.report_fix(session, fix.point, fix.t, config)
        for alert in alerts:
            events.append(
                {"t": fix.t, "event": alert.kind.value, "detail": alert.detail}
            )
        near = next(
            (a for a in alerts if a.kind is engine.AlertKind.NEAR_DURIAN), None
        )
        # keep answering at this spot until the durian is resolved or the round ends
        while (
            near is not None
            and session.phase is engine.Phase.PLAYING
            and session.durians.get(near.detail["durian_id"]).state.value == "Active"
        ):
            question = engine.next_question(session, question_bank, rng)
            answer = AnswerPolicy(policy, rng).answer(bank_by_id[question.id])
            outcome = engine.attempt_capture(
                session, near.detail["durian_id"], question, answer, config
            )
            events.append(
                {
                    "t": fix.t,
                    "event": "CaptureResult",
                    "durian_id": near.detail["durian_id"],
                    "question_id": question.id,
                    "correct": outcome.correct,
                    "captured": outcome.captured,
                    "hp": outcome.hp,
                    "points_earned": outcome.points_earned,
                }
            )
    return {
        "player_id": session.player_id,
        "policy": policy,
        "events": events,
        "final": {
            "phase": session.phase.value,
            "hp": session.hp,
            "points_earned": session.points_earned,
            "wrong_answers": session.wrong_answers,
        },
    }


def replay_remote(
    trace: list[TraceFix],
    server_url: str,
    policy: str = "always-correct",
    seed: int = 0,
    question_bank: list[engine.Question] | None = None,
    email: str | None = None,
    password: str = "sim-password",
) -> dict:
    """Replay a trace against a running server over REST + the live channel.

    Registers a throwaway account, passes the mask gate with the masked
    fixture, starts a round at the first fix, then streams Fix messages and
    answers QuestionIssued per the policy.
    """
    import httpx
    from websockets.sync.client import connect as ws_connect

    rng = random.Random(seed)
    answerer = AnswerPolicy(policy, rng)
    bank_by_id = {q.id: q for q in (question_bank or [])}
    email = email or f"sim-{rng.randrange(10**9)}@example.com"
    base = server_url.rstrip("/")

    with httpx.Client(base_url=base, timeout=10.0) as client:
        client.post(
            "/auth/register",
            json={"email": email, "password": password, "locale": "en"},
        ).raise_for_status()
        token = client.post(
            "/auth/login", json={"email": email, "password": password}
        ).json()["token"]
        auth = {"Authorization": f"Bearer {token}"}
        fixture = {
            name: {"confidence": lm.confidence}
            for name, lm in masked_fixture().entries.items()
        }
        verdict = client.post(
            "/gate/mask", json={"landmarks": fixture}, headers=auth
        ).json()
        start = client.post(
            "/session/start",
            json={
                "center": {"lat": trace[0].point.lat, "lon": trace[0].point.lon},
                "verdict_id": verdict["verdict_id"],
            },
            headers=auth,
        )
        start.raise_for_status()

        ws_url = base.replace("http://", "ws://").replace("https://", "wss://")
        events: list[dict] = []
        final = {"phase": "Playing", "hp": None, "points_earned": None}
        with ws_connect(f"{ws_url}/ws?token={token}") as ws:
            seq = 0

            def send(msg_type: str, payload: dict) -> int:
                nonlocal seq
                seq += 1
                ws.send(json.dumps({"type": msg_type, "seq": seq, "payload": payload}))
                return seq

            def drain(timeout: float = 0.3) -> list[dict]:
                from websockets.exceptions import ConnectionClosed

                msgs = []
                while True:
                    try:
                        msgs.append(json.loads(ws.recv(timeout=timeout)))
                    except (TimeoutError, ConnectionClosed):
                        return msgs

            for fix in trace:
                if final["phase"] != "Playing":
                    break
                send("Fix", {"lat": fix.point.lat, "lon": fix.point.lon, "t": fix.t})
                for msg in drain():
                    events.append({"t": fix.t, **msg})
                    if msg["type"] == "QuestionIssued":
                        q = msg["payload"]["question"]
                        # the wire never carries correct_index; the policy
                        # needs the local copy of the bank to answer on purpose
                        local = bank_by_id.get(q["id"])
                        if local is not None:
                            idx = answerer.answer(local)
                        else:
                            idx = rng.randrange(len(q["choices"]))
                        send(
                            "CaptureAnswer",
                            {
                                "durian_id": msg["payload"]["durian_id"],
                                "question_id": q["id"],
                                "answer_index": idx,
                            },
                        )
                        for reply in drain():
                            events.append({"t": fix.t, **reply})
                            if reply["type"] == "CaptureResult":
                                final["hp"] = reply["payload"]["hp"]
                                final["points_earned"] = reply["payload"]["points_earned"]
                                final["phase"] = reply["payload"]["phase"]
        return {"events": events, "final": final, "remote": True}


# -- distribution experiment ----------------------------------------------


def angular_uniformity_p(center: GeoPoint, points: list[GeoPoint], sectors: int = 8) -> float:
    counts = [0] * sectors
    for p in points:
        counts[int(initial_bearing(center, p) / (360.0 / sectors)) % sectors] += 1
    return float(stats.chisquare(counts).pvalue)


def radial_uniformity_p(
    center: GeoPoint, points: list[GeoPoint], r_min: float, r_max: float, bands: int = 4
) -> float:
    """Chi-square over equal-AREA radial bands; uniform-per-area samples give
    uniform expected counts."""
    counts = [0] * bands
    for p in points:
        r = haversine_distance(center, p)
        u = (r * r - r_min * r_min) / (r_max * r_max - r_min * r_min)
        counts[min(bands - 1, max(0, int(u * bands)))] += 1
    return float(stats.chisquare(counts).pvalue)


def distribution_experiment(
    center: GeoPoint,
    counts: list[int],
    rounds: int,
    seed: int,
    out_dir: str | Path,
    config: GameConfig | None = None,
    sampler_name: str = "uniform",
    d_min: float = 0.0,
) -> dict:
    """Spawn ``rounds`` rounds per count, dump all positions to CSV
    (lat,lon,count_label) and uniformity statistics to JSON. Fully
    deterministic for a fixed seed."""
    config = config or GameConfig()
    sampler = {"uniform": sample_annulus, "naive": sample_annulus_naive}[sampler_name]
    spec = AnnulusSpec(center=center, r_min=config.r_min, r_max=config.r_max)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)

    all_stats = []
    with open(out_dir / "positions.csv", "w", encoding="utf-8", newline="") as f:
        writer = csv.writer(f)
        writer.writerow(["lat", "lon", "count_label"])
        for count in counts:
            rng = random.Random(f"{seed}:{count}")  # independent stream per count
            points: list[GeoPoint] = []
            min_sep = math.inf
            for _ in range(rounds):
                ds = spawn_round(
                    center, spec, count, d_min, rng,
                    max_attempts=config.max_attempts, sampler=sampler,
                )
                ps = [d.position for d in ds.durians]
                for i in range(len(ps)):
                    for j in range(i + 1, len(ps)):
                        min_sep = min(min_sep, haversine_distance(ps[i], ps[j]))
                points.extend(ps)
            for p in points:
                writer.writerow([repr(p.lat), repr(p.lon), count])
            radii = [haversine_distance(center, p) for p in points]
            all_stats.append(
                {
                    "count": count,
                    "rounds": rounds,
                    "n_points": len(points),
                    "p_angular": angular_uniformity_p(center, points),
                    "p_radial": radial_uniformity_p(
                        center, points, config.r_min, config.r_max
                    ),
                    "min_radial_m": min(radii),
                    "max_radial_m": max(radii),
                    "min_pairwise_separation_m": min_sep,
                }
            )

    result = {
        "center": {"lat": center.lat, "lon": center.lon},
        "seed": seed,
        "sampler": sampler_name,
        "r_min": config.r_min,
        "r_max": config.r_max,
        "stats": all_stats,
    }
    with open(out_dir / "stats.json", "w", encoding="utf-8") as f:
        json.dump(result, f, indent=2)
    return result
