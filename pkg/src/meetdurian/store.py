"""Durable player accounts, points, shop, and the global leaderboard.

Storage is one JSON document per player under ``<root>/players/`` plus an
append-only transaction log; every mutation is written and fsynced before
the call returns, so committed state survives a process kill. All mutating
operations run under a store-wide lock, which makes each one atomic and
isolated (concurrent purchases can never drive a balance negative).
"""

from __future__ import annotations

import hashlib
import json
import os
import secrets
import threading
import time
from dataclasses import dataclass, field, asdict
from enum import Enum
from pathlib import Path

PBKDF2_ITERATIONS = 100_000
DEFAULT_LEVEL_POINTS = 10
DEFAULT_TOKEN_TTL_S = 30 * 24 * 3600.0  # "auto login": tokens last 30 days


class EmailTaken(Exception):
    pass


class BadCredentials(Exception):
    """Single error for unknown email and wrong password (no enumeration)."""


class BadToken(Exception):
    pass


class UnknownPlayer(KeyError):
    pass


class UnknownItem(KeyError):
    pass


class InsufficientPoints(Exception):
    pass


class ItemKind(str, Enum):
    MERCHANDISE = "Merchandise"
    HERO_TITLE = "HeroTitle"
    EASTER_EGG = "EasterEgg"


@dataclass(frozen=True)
class ShopItem:
    item_id: str
    name: str
    cost: int
    kind: ItemKind

    def __post_init__(self):
        if self.cost < 1:
            raise ValueError("item cost must be >= 1")


DEFAULT_CATALOG = (
    ShopItem("hero-title", "Hero Title", 10, ItemKind.HERO_TITLE),
    ShopItem("durian-plush", "Durian Plush", 3, ItemKind.MERCHANDISE),
    ShopItem("golden-spikes", "Golden Spikes Skin", 5, ItemKind.MERCHANDISE),
    ShopItem("mystery-egg", "Mystery Easter Egg", 1, ItemKind.EASTER_EGG),
)


@dataclass
class PlayerAccount:
    player_id: str
    email: str
    password_hash: str
    salt: str
    locale: str
    created_seq: int
    points_total: int = 0        # spendable balance
    points_lifetime: int = 0     # never decreases; drives level and ranking
    level: int = 0
    titles: list[str] = field(default_factory=list)
    inventory: list[str] = field(default_factory=list)


@dataclass(frozen=True)
class LeaderboardEntry:
    rank: int
    player_id: str
    points_total: int
    level: int


def _hash_password(password: str, salt: str, iterations: int = PBKDF2_ITERATIONS) -> str:
    return hashlib.pbkdf2_hmac(
        "sha256", password.encode(), bytes.fromhex(salt), iterations
    ).hex()


def _atomic_write_json(path: Path, doc) -> None:
    tmp = path.with_suffix(".tmp")
    with open(tmp, "w", encoding="utf-8") as f:
        json.dump(doc, f, indent=2)
        f.flush()
        os.fsync(f.fileno())
    os.replace(tmp, path)


class PlayerStore:
    def __init__(
        self,
        root: str | Path,
        level_points: int = DEFAULT_LEVEL_POINTS,
        token_ttl_s: float = DEFAULT_TOKEN_TTL_S,
        pbkdf2_iterations: int = PBKDF2_ITERATIONS,
    ):
        self.root = Path(root)
        self.players_dir = self.root / "players"
        self.players_dir.mkdir(parents=True, exist_ok=True)
        self.level_points = level_points
        self.token_ttl_s = token_ttl_s
        self.pbkdf2_iterations = pbkdf2_iterations
        self._lock = threading.RLock()
        self._players: dict[str, PlayerAccount] = {}
        self._by_email: dict[str, str] = {}
        self._seq = 0
        self._load_players()
        self._catalog = self._load_catalog()
        self._tokens = self._load_tokens()

    # -- loading -------------------------------------------------------

    def _load_players(self) -> None:
        for path in sorted(self.players_dir.glob("*.json")):
            with open(path, "r", encoding="utf-8") as f:
                doc = json.load(f)
            acct = PlayerAccount(**doc)
            self._players[acct.player_id] = acct
            self._by_email[acct.email.lower()] = acct.player_id
            self._seq = max(self._seq, acct.created_seq)

    def _load_catalog(self) -> dict[str, ShopItem]:
        path = self.root / "items.json"
        if not path.exists():
            _atomic_write_json(
                path,
                [
                    {"item_id": i.item_id, "name": i.name, "cost": i.cost, "kind": i.kind.value}
                    for i in DEFAULT_CATALOG
                ],
            )
        with open(path, "r", encoding="utf-8") as f:
            raw = json.load(f)
        items = [
            ShopItem(item_id=i["item_id"], name=i["name"], cost=i["cost"], kind=ItemKind(i["kind"]))
            for i in raw
        ]
        return {i.item_id: i for i in items}

    def _load_tokens(self) -> dict[str, dict]:
        path = self.root / "tokens.json"
        if path.exists():
            with open(path, "r", encoding="utf-8") as f:
                return json.load(f)
        return {}

    # -- persistence ---------------------------------------------------

    def _persist(self, acct: PlayerAccount, tx: dict) -> None:
        _atomic_write_json(self.players_dir / f"{acct.player_id}.json", asdict(acct))
        with open(self.root / "txlog", "a", encoding="utf-8") as f:
            f.write(json.dumps({"ts": time.time(), **tx}) + "\n")
            f.flush()
            os.fsync(f.fileno())

    def _persist_tokens(self) -> None:
        _atomic_write_json(self.root / "tokens.json", self._tokens)

    # -- auth ----------------------------------------------------------

    def register(self, email: str, password: str, locale: str = "en") -> PlayerAccount:
        with self._lock:
            if email.lower() in self._by_email:
                raise EmailTaken(f"email {email!r} already registered")
            self._seq += 1
            salt = secrets.token_hex(16)
            acct = PlayerAccount(
                player_id=f"p{self._seq:06d}",
                email=email,
                password_hash=_hash_password(password, salt, self.pbkdf2_iterations),
                salt=salt,
                locale=locale,
                created_seq=self._seq,
            )
            self._players[acct.player_id] = acct
            self._by_email[email.lower()] = acct.player_id
            self._persist(acct, {"op": "register", "player_id": acct.player_id})
            return acct

    def login(self, email: str, password: str) -> str:
        with self._lock:
            player_id = self._by_email.get(email.lower())
            if player_id is None:
                raise BadCredentials("bad email or password")
            acct = self._players[player_id]
            if not secrets.compare_digest(
                acct.password_hash,
                _hash_password(password, acct.salt, self.pbkdf2_iterations),
            ):
                raise BadCredentials("bad email or password")
            token = secrets.token_urlsafe(32)
            self._tokens[token] = {
                "player_id": player_id,
                "expires": time.time() + self.token_ttl_s,
            }
            self._persist_tokens()
            return token

    def resolve_token(self, token: str) -> str:
        with self._lock:
            entry = self._tokens.get(token)
            if entry is None or entry["expires"] < time.time():
                raise BadToken("missing or expired token")
            return entry["player_id"]

    # -- points & shop -------------------------------------------------

    def get(self, player_id: str) -> PlayerAccount:
        with self._lock:
            acct = self._players.get(player_id)
            if acct is None:
                raise UnknownPlayer(player_id)
            return acct

    def credit_points(self, player_id: str, n: int) -> PlayerAccount:
        if n < 1:
            raise ValueError("credit must be a positive integer")
        with self._lock:
            acct = self.get(player_id)
            acct.points_total += n
            acct.points_lifetime += n
            acct.level = acct.points_lifetime // self.level_points
            self._persist(acct, {"op": "credit", "player_id": player_id, "n": n})
            return acct

    def items(self) -> list[ShopItem]:
        return list(self._catalog.values())

    def purchase(self, player_id: str, item_id: str) -> PlayerAccount:
        with self._lock:
            acct = self.get(player_id)
            item = self._catalog.get(item_id)
            if item is None:
                raise UnknownItem(item_id)
            if acct.points_total < item.cost:
                raise InsufficientPoints(
                    f"{acct.points_total} points < cost {item.cost}"
                )
            acct.points_total -= item.cost
            if item.kind is ItemKind.HERO_TITLE:
                if item.name not in acct.titles:
                    acct.titles.append(item.name)
            else:
                acct.inventory.append(item.item_id)
            self._persist(acct, {"op": "purchase", "player_id": player_id, "item": item_id})
            return acct

    # -- leaderboard ----------------------------------------------------

    def leaderboard(self, top_n: int | None = None) -> list[LeaderboardEntry]:
        """Ordered by lifetime points desc, ties broken by earlier account
        creation; shopping never lowers a player's standing."""
        with self._lock:
            ordered = sorted(
                self._players.values(),
                key=lambda a: (-a.points_lifetime, a.created_seq),
            )
        if top_n is not None:
            ordered = ordered[:top_n]
        return [
            LeaderboardEntry(
                rank=i + 1,
                player_id=a.player_id,
                points_total=a.points_lifetime,
                level=a.level,
            )
            for i, a in enumerate(ordered)
        ]
