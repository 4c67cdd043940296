"""Landmark provider implementations that cross a process boundary: an HTTP
client provider and the matching stub service for offline testing."""

from __future__ import annotations

import json
from pathlib import Path

import httpx
from fastapi import FastAPI
from pydantic import BaseModel

from .maskgate import LandmarkSet, ProviderError


class HttpLandmarkProvider:
    """Fetches landmarks from a stub (or real) service speaking
    POST /landmarks {"image_ref": ...} -> {name: {confidence, x?, y?}}."""

    def __init__(self, base_url: str, timeout_s: float = 5.0):
        self.base_url = base_url.rstrip("/")
        self.timeout_s = timeout_s

    def landmarks(self, image_ref: str) -> LandmarkSet:
        try:
            resp = httpx.post(
                f"{self.base_url}/landmarks",
                json={"image_ref": image_ref},
                timeout=self.timeout_s,
            )
            resp.raise_for_status()
            return LandmarkSet.from_json(resp.json())
        except httpx.HTTPError as e:
            raise ProviderError(f"landmark service failure: {e}") from e


class _LandmarkRequest(BaseModel):
    image_ref: str


def create_stub_landmark_app(fixtures_dir: str | Path) -> FastAPI:
    """Stub landmark service: image_ref names a JSON fixture file in
    ``fixtures_dir`` (without directory traversal)."""
    fixtures = Path(fixtures_dir)
    app = FastAPI(title="landmark-stub")

    @app.post("/landmarks")
    def landmarks(req: _LandmarkRequest):
        path = fixtures / Path(req.image_ref).name
        with open(path, "r", encoding="utf-8") as f:
            return json.load(f)

    return app
