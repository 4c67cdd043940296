"""HTTP + WebSocket service exposing the game.

REST covers auth, the mask gate, session control, shop, and leaderboard;
the WebSocket live channel carries Fix/CaptureAnswer upstream and Alert /
QuestionIssued / DurianUpdate / CaptureResult / ScoreUpdate downstream.
The service layer keeps no game state of its own: every handler delegates
to the engine, the spawner, and the player store.
"""

from __future__ import annotations

import asyncio
import random
import secrets
import threading
from dataclasses import dataclass, field

from fastapi import (
    Depends,
    FastAPI,
    Header,
    HTTPException,
    Query,
    WebSocket,
    WebSocketDisconnect,
)
from pydantic import BaseModel

from . import engine
from .config import GameConfig
from .engine import (
    AlreadyInSession,
    Alert,
    GameSession,
    NoSession,
    NonMonotonicTimestamp,
    OutOfRange,
    Phase,
    Question,
    UnknownQuestion,
)
from .geo import GeoPoint
from .maskgate import (
    FileLandmarkProvider,
    LandmarkSet,
    MaskThresholds,
    MaskVerdict,
    ProviderError,
    classify_mask,
    gate_entry,
)
from .roads import RoadNetwork
from .spawner import NotActive, UnknownDurian
from .store import (
    BadCredentials,
    BadToken,
    EmailTaken,
    InsufficientPoints,
    PlayerStore,
    UnknownItem,
)


# -- wire helpers --------------------------------------------------------


def _session_summary(session: GameSession) -> dict:
    durians = []
    if session.durians is not None:
        durians = [
            {
                "id": d.id,
                "lat": d.position.lat,
                "lon": d.position.lon,
                "state": d.state.value,
                "snapped": d.snapped,
            }
            for d in session.durians.durians
        ]
    return {
        "player_id": session.player_id,
        "phase": session.phase.value,
        "hp": session.hp,
        "points_earned": session.points_earned,
        "durians": durians,
    }


def _alert_payload(alert: Alert) -> dict:
    return {"kind": alert.kind.value, "timestamp": alert.timestamp, "detail": alert.detail}


def _question_payload(q: Question) -> dict:
    # correct_index never leaves the server
    return {"id": q.id, "text": q.text, "choices": list(q.choices), "locale": q.locale}


def _verdict_payload(v: MaskVerdict) -> dict:
    return {
        "masked": v.masked,
        "score": v.score,
        "missing_face": v.missing_face,
        "detail": v.detail,
    }


def _domain_error(status: int, code: str, message: str) -> HTTPException:
    return HTTPException(status_code=status, detail={"code": code, "message": message})


# -- service state -------------------------------------------------------


class _Hub:
    """Fan-out of server messages to every connected live channel."""

    def __init__(self):
        self._queues: dict[int, tuple[asyncio.Queue, asyncio.AbstractEventLoop]] = {}
        self._next_id = 0
        self._lock = threading.Lock()

    def register(self) -> tuple[int, asyncio.Queue]:
        loop = asyncio.get_running_loop()
        with self._lock:
            self._next_id += 1
            q: asyncio.Queue = asyncio.Queue()
            self._queues[self._next_id] = (q, loop)
            return self._next_id, q

    def unregister(self, conn_id: int) -> None:
        with self._lock:
            self._queues.pop(conn_id, None)

    def broadcast(self, msg_type: str, payload: dict) -> None:
        # REST handlers run in a threadpool; hand the item to each queue on
        # its own loop thread
        with self._lock:
            targets = list(self._queues.values())
        for q, loop in targets:
            loop.call_soon_threadsafe(q.put_nowait, (msg_type, payload))


@dataclass
class GameService:
    store: PlayerStore
    config: GameConfig = field(default_factory=GameConfig)
    network: RoadNetwork | None = None
    question_bank: list[Question] = field(default_factory=list)
    landmark_provider: object = field(default_factory=FileLandmarkProvider)
    rng: random.Random = field(default_factory=random.Random)

    def __post_init__(self):
        self.sessions: dict[str, GameSession] = {}
        self.verdicts: dict[str, tuple[str, MaskVerdict]] = {}
        self.hub = _Hub()
        self._lock = threading.RLock()
        self._bank_by_id = {q.id: q for q in self.question_bank}
        self.thresholds = MaskThresholds(
            t_face=self.config.t_face, t_occluded=self.config.t_occluded
        )

    # -- gate / session operations, shared by REST and the live channel --

    def run_gate(self, player_id: str, landmarks: dict | None, image_ref: str | None) -> tuple[str, MaskVerdict]:
        if landmarks is not None:
            verdict = classify_mask(LandmarkSet.from_json(landmarks), self.thresholds)
        elif image_ref is not None:
            verdict = gate_entry(self.landmark_provider, image_ref, self.thresholds)
        else:
            raise _domain_error(400, "BAD_REQUEST", "need landmarks or image_ref")
        verdict_id = secrets.token_hex(16)
        with self._lock:
            self.verdicts[verdict_id] = (player_id, verdict)
        return verdict_id, verdict

    def start_session(self, player_id: str, center: GeoPoint, verdict_id: str) -> GameSession:
        with self._lock:
            existing = self.sessions.get(player_id)
            if existing is not None and existing.phase is Phase.PLAYING:
                raise AlreadyInSession(player_id)
            entry = self.verdicts.get(verdict_id)
            if entry is None or entry[0] != player_id or not entry[1].masked:
                raise _domain_error(422, "GATE_REQUIRED", "a masked verdict is required")
            self.verdicts.pop(verdict_id, None)
            session = engine.start_session(
                player_id, center, entry[1], self.config, self.rng, self.network
            )
            self.sessions[player_id] = session
            return session

    def session_of(self, player_id: str) -> GameSession:
        session = self.sessions.get(player_id)
        if session is None:
            raise NoSession(f"no session for {player_id}")
        return session

    def handle_fix(self, player_id: str, p: GeoPoint, t: float) -> tuple[list[Alert], Question | None]:
        """Record a fix; when the player is near a durian and no question is
        pending, issue one (server-initiated Q&A on proximity)."""
        session = self.session_of(player_id)
        alerts = engine.report_fix(session, p, t, self.config)
        question = None
        near = next((a for a in alerts if a.kind is engine.AlertKind.NEAR_DURIAN), None)
        if near is not None and session.pending_question_id is None and self.question_bank:
            question = engine.next_question(session, self.question_bank, self.rng)
            session.pending_durian_id = near.detail["durian_id"]
        return alerts, question

    def handle_capture(
        self, player_id: str, durian_id: int, question_id: int, answer_index: int
    ) -> engine.CaptureOutcome:
        session = self.session_of(player_id)
        question = self._bank_by_id.get(question_id)
        if question is None:
            raise UnknownQuestion(f"no question with id {question_id}")
        outcome = engine.attempt_capture(session, durian_id, question, answer_index, self.config)
        if outcome.captured:
            acct = self.store.credit_points(player_id, 1)
            self.hub.broadcast(
                "ScoreUpdate",
                {
                    "player_id": player_id,
                    "points_total": acct.points_lifetime,
                    "level": acct.level,
                    "points_earned_round": session.points_earned,
                    "hp": session.hp,
                },
            )
        return outcome


# -- request bodies ------------------------------------------------------


class RegisterBody(BaseModel):
    email: str
    password: str
    locale: str = "en"


class LoginBody(BaseModel):
    email: str
    password: str


class GateBody(BaseModel):
    landmarks: dict | None = None
    image_ref: str | None = None


class StartBody(BaseModel):
    center: dict  # {"lat": .., "lon": ..}
    verdict_id: str


class FixBody(BaseModel):
    lat: float
    lon: float
    t: float


class CaptureBody(BaseModel):
    durian_id: int
    question_id: int
    answer_index: int


class PurchaseBody(BaseModel):
    item_id: str


# -- app factory ---------------------------------------------------------


def create_app(service: GameService) -> FastAPI:
    app = FastAPI(title="meetdurian")
    app.state.service = service

    def current_player(authorization: str | None = Header(default=None)) -> str:
        if not authorization or not authorization.startswith("Bearer "):
            raise HTTPException(status_code=401, detail={"code": "UNAUTHENTICATED"})
        try:
            return service.store.resolve_token(authorization.removeprefix("Bearer "))
        except BadToken:
            raise HTTPException(status_code=401, detail={"code": "UNAUTHENTICATED"})

    @app.post("/auth/register")
    def register(body: RegisterBody):
        try:
            acct = service.store.register(body.email, body.password, body.locale)
        except EmailTaken:
            raise _domain_error(409, "EMAIL_TAKEN", "email already registered")
        return {"player_id": acct.player_id}

    @app.post("/auth/login")
    def login(body: LoginBody):
        try:
            return {"token": service.store.login(body.email, body.password)}
        except BadCredentials:
            raise HTTPException(status_code=401, detail={"code": "BAD_CREDENTIALS"})

    @app.post("/gate/mask")
    def gate_mask(body: GateBody, player_id: str = Depends(current_player)):
        try:
            verdict_id, verdict = service.run_gate(player_id, body.landmarks, body.image_ref)
        except ProviderError as e:
            raise _domain_error(422, "PROVIDER_ERROR", str(e))
        except (ValueError, KeyError, TypeError) as e:
            raise _domain_error(400, "BAD_LANDMARKS", str(e))
        return {"verdict_id": verdict_id, **_verdict_payload(verdict)}

    @app.post("/session/start")
    def session_start(body: StartBody, player_id: str = Depends(current_player)):
        try:
            center = GeoPoint(lat=body.center["lat"], lon=body.center["lon"])
        except (KeyError, ValueError, TypeError) as e:
            raise _domain_error(400, "BAD_CENTER", str(e))
        try:
            session = service.start_session(player_id, center, body.verdict_id)
        except AlreadyInSession:
            raise _domain_error(409, "ALREADY_IN_SESSION", "round already in progress")
        return _session_summary(session)

    @app.get("/session")
    def session_get(player_id: str = Depends(current_player)):
        try:
            return _session_summary(service.session_of(player_id))
        except NoSession:
            raise _domain_error(422, "NO_SESSION", "no active session")

    @app.post("/session/fix")
    def session_fix(body: FixBody, player_id: str = Depends(current_player)):
        try:
            alerts, question = service.handle_fix(
                player_id, GeoPoint(lat=body.lat, lon=body.lon), body.t
            )
        except NoSession:
            raise _domain_error(422, "NO_SESSION", "no active session")
        except NonMonotonicTimestamp as e:
            raise _domain_error(422, "NON_MONOTONIC_TIMESTAMP", str(e))
        except ValueError as e:
            raise _domain_error(400, "BAD_FIX", str(e))
        return {
            "alerts": [_alert_payload(a) for a in alerts],
            "question": _question_payload(question) if question else None,
        }

    @app.post("/session/capture")
    def session_capture(body: CaptureBody, player_id: str = Depends(current_player)):
        try:
            outcome = service.handle_capture(
                player_id, body.durian_id, body.question_id, body.answer_index
            )
        except NoSession:
            raise _domain_error(422, "NO_SESSION", "no active session")
        except OutOfRange as e:
            raise _domain_error(422, "OUT_OF_RANGE", str(e))
        except NotActive as e:
            raise _domain_error(422, "NOT_ACTIVE", str(e))
        except UnknownDurian as e:
            raise _domain_error(422, "UNKNOWN_DURIAN", str(e))
        except UnknownQuestion as e:
            raise _domain_error(422, "UNKNOWN_QUESTION", str(e))
        session = service.session_of(player_id)
        return {
            "correct": outcome.correct,
            "captured": outcome.captured,
            "hp": outcome.hp,
            "points_earned": outcome.points_earned,
            "phase": outcome.phase.value,
            "durians": _session_summary(session)["durians"],
        }

    @app.post("/session/respawn/{durian_id}")
    def session_respawn(durian_id: int, player_id: str = Depends(current_player)):
        try:
            session = service.session_of(player_id)
            durians = engine.respawn_durian(session, durian_id, service.rng, service.network)
        except NoSession:
            raise _domain_error(422, "NO_SESSION", "no active session")
        except UnknownDurian as e:
            raise _domain_error(422, "UNKNOWN_DURIAN", str(e))
        except NotActive as e:
            raise _domain_error(422, "NOT_ACTIVE", str(e))
        return {
            "durians": [
                {
                    "id": d.id,
                    "lat": d.position.lat,
                    "lon": d.position.lon,
                    "state": d.state.value,
                    "snapped": d.snapped,
                }
                for d in durians.durians
            ]
        }

    @app.get("/leaderboard")
    def leaderboard(top: int = Query(default=10, ge=1)):
        return {
            "entries": [
                {
                    "rank": e.rank,
                    "player_id": e.player_id,
                    "points_total": e.points_total,
                    "level": e.level,
                }
                for e in service.store.leaderboard(top)
            ]
        }

    @app.get("/shop/items")
    def shop_items():
        return {
            "items": [
                {"item_id": i.item_id, "name": i.name, "cost": i.cost, "kind": i.kind.value}
                for i in service.store.items()
            ]
        }

    @app.post("/shop/purchase")
    def shop_purchase(body: PurchaseBody, player_id: str = Depends(current_player)):
        try:
            acct = service.store.purchase(player_id, body.item_id)
        except UnknownItem as e:
            raise _domain_error(422, "UNKNOWN_ITEM", str(e))
        except InsufficientPoints as e:
            raise _domain_error(422, "INSUFFICIENT_POINTS", str(e))
        return {
            "points_total": acct.points_total,
            "titles": acct.titles,
            "inventory": acct.inventory,
        }

    @app.websocket("/ws")
    async def live_channel(websocket: WebSocket, token: str = Query()):
        try:
            player_id = service.store.resolve_token(token)
        except BadToken:
            await websocket.close(code=4401)
            return
        await websocket.accept()
        conn_id, queue = service.hub.register()
        out_seq = 0

        async def send(msg_type: str, payload: dict, ack: int | None = None):
            nonlocal out_seq
            out_seq += 1
            msg = {"type": msg_type, "seq": out_seq, "payload": payload}
            if ack is not None:
                msg["ack"] = ack
            await websocket.send_json(msg)

        async def drain_hub():
            while True:
                msg_type, payload = await queue.get()
                try:
                    await send(msg_type, payload)
                except RuntimeError:  # connection already closing
                    return

        drain_task = asyncio.create_task(drain_hub())
        last_client_seq = 0
        try:
            while True:
                msg = await websocket.receive_json()
                seq = msg.get("seq")
                if not isinstance(seq, int) or seq <= last_client_seq:
                    await send("Error", {"code": "BAD_SEQ", "message": f"seq {seq} not after {last_client_seq}"})
                    break
                last_client_seq = seq
                msg_type = msg.get("type")
                payload = msg.get("payload") or {}
                if msg_type == "Fix":
                    try:
                        alerts, question = service.handle_fix(
                            player_id,
                            GeoPoint(lat=payload["lat"], lon=payload["lon"]),
                            payload["t"],
                        )
                    except (NoSession, NonMonotonicTimestamp, KeyError, ValueError, TypeError) as e:
                        await send("Error", {"code": "BAD_FIX", "message": str(e)}, ack=seq)
                        continue
                    for alert in alerts:
                        await send("Alert", _alert_payload(alert), ack=seq)
                    if question is not None:
                        session = service.session_of(player_id)
                        await send(
                            "QuestionIssued",
                            {
                                "durian_id": session.pending_durian_id,
                                "question": _question_payload(question),
                            },
                            ack=seq,
                        )
                elif msg_type == "CaptureAnswer":
                    try:
                        outcome = service.handle_capture(
                            player_id,
                            payload["durian_id"],
                            payload["question_id"],
                            payload["answer_index"],
                        )
                    except (
                        NoSession,
                        OutOfRange,
                        NotActive,
                        UnknownDurian,
                        UnknownQuestion,
                        KeyError,
                        TypeError,
                    ) as e:
                        await send("Error", {"code": "BAD_CAPTURE", "message": str(e)}, ack=seq)
                        continue
                    await send(
                        "CaptureResult",
                        {
                            "correct": outcome.correct,
                            "captured": outcome.captured,
                            "hp": outcome.hp,
                            "points_earned": outcome.points_earned,
                            "phase": outcome.phase.value,
                        },
                        ack=seq,
                    )
                    session = service.session_of(player_id)
                    await send(
                        "DurianUpdate",
                        {"durians": _session_summary(session)["durians"]},
                        ack=seq,
                    )
                else:
                    await send("Error", {"code": "UNKNOWN_TYPE", "message": str(msg_type)})
                    break
        except WebSocketDisconnect:
            pass
        finally:
            drain_task.cancel()
            service.hub.unregister(conn_id)
            try:
                await websocket.close()
            except RuntimeError:
                pass

    return app
