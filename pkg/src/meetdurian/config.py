"""Game configuration: every tunable the paper leaves open lives here, with
the defaults used throughout. Loadable from TOML or JSON; the DURIAN_CONFIG
environment variable overrides an explicit --config path."""

from __future__ import annotations

import dataclasses
import json
import os
from dataclasses import dataclass

try:
    import tomllib
except ModuleNotFoundError:  # Python < 3.11
    import tomli as tomllib


@dataclass(frozen=True)
class GameConfig:
    r_min: float = 30.0            # inner spawn radius, meters
    r_max: float = 200.0           # outer spawn radius, meters
    d_min: float = 25.0            # min pairwise durian separation, meters
    round_size: int = 6            # durians per round
    capture_radius: float = 15.0   # max player-durian distance for a capture attempt
    v_max: float = 8.0             # abnormal-speed threshold, m/s
    hp_start: float = 3.0          # initial health pool
    reach_epsilon: float = 50.0    # max distance-to-road before a durian is "unreachable"
    t_face: float = 0.6            # eye-region mean confidence to accept a face
    t_occluded: float = 0.35       # occludable-region mean below which face is masked
    max_attempts: int = 1000       # rejection-sampling budget per spawn
    level_points: int = 10         # lifetime points per level
    token_ttl_days: float = 30.0   # auto-login token lifetime


def load_config(path: str | None = None) -> GameConfig:
    """Load a GameConfig, preferring DURIAN_CONFIG over the given path.
    Unknown keys are rejected to catch typos."""
    path = os.environ.get("DURIAN_CONFIG") or path
    if path is None:
        return GameConfig()
    if path.endswith(".toml"):
        with open(path, "rb") as f:
            raw = tomllib.load(f)
    else:
        with open(path, "r", encoding="utf-8") as f:
            raw = json.load(f)
    known = {f.name for f in dataclasses.fields(GameConfig)}
    unknown = set(raw) - known
    if unknown:
        raise ValueError(f"unknown config keys: {sorted(unknown)}")
    return GameConfig(**raw)
