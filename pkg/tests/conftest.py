import json
import math
import random

import numpy as np
import pytest

from meetdurian.config import GameConfig
from meetdurian.geo import EARTH_RADIUS_M, GeoPoint, LocalFrame, from_local
from meetdurian.maskgate import EYE_REGION, LANDMARK_NAMES, OCCLUDABLE_REGION


CENTER = GeoPoint(lat=36.0665, lon=120.3370)


@pytest.fixture
def center():
    return CENTER


@pytest.fixture
def config():
    return GameConfig()


def make_grid_geojson(n_lines: int, spacing_m: float, origin: GeoPoint = CENTER) -> dict:
    """Manhattan grid: n_lines horizontal + n_lines vertical polylines,
    vertices at every crossing, centred on the origin."""
    frame = LocalFrame.at(origin)
    extent = (n_lines - 1) * spacing_m
    half = extent / 2.0

    def ll(x, y):
        p = from_local(frame, (x - half, y - half))
        return [p.lon, p.lat]

    features = []
    for i in range(n_lines):
        y = i * spacing_m
        coords = [ll(j * spacing_m, y) for j in range(n_lines)]
        features.append(
            {
                "type": "Feature",
                "geometry": {"type": "LineString", "coordinates": coords},
                "properties": {"name": f"h{i}"},
            }
        )
    for i in range(n_lines):
        x = i * spacing_m
        coords = [ll(x, j * spacing_m) for j in range(n_lines)]
        features.append(
            {
                "type": "Feature",
                "geometry": {"type": "LineString", "coordinates": coords},
                "properties": {"name": f"v{i}"},
            }
        )
    return {"type": "FeatureCollection", "features": features}


def dense_polyline_points(polyline, step_m=0.5):
    """Points every step_m meters along a polyline (local planar walk),
    vertices included; the brute-force nearest-road oracle samples these."""
    frame = LocalFrame.at(polyline[0])
    pts = []
    from meetdurian.geo import to_local

    local = [to_local(frame, p) for p in polyline]
    for (ax, ay), (bx, by) in zip(local, local[1:]):
        seg_len = math.hypot(bx - ax, by - ay)
        n = max(1, int(seg_len / step_m))
        for k in range(n):
            t = k / n
            pts.append((ax + t * (bx - ax), ay + t * (by - ay)))
    pts.append(local[-1])
    return [from_local(frame, xy) for xy in pts]


def haversine_np(lat1, lon1, lat2, lon2):
    """Vectorized haversine (meters) for the brute-force oracle."""
    phi1, phi2 = np.radians(lat1), np.radians(lat2)
    dphi = np.radians(lat2 - lat1)
    dlmb = np.radians(lon2 - lon1)
    h = np.sin(dphi / 2) ** 2 + np.cos(phi1) * np.cos(phi2) * np.sin(dlmb / 2) ** 2
    return 2 * EARTH_RADIUS_M * np.arctan2(np.sqrt(h), np.sqrt(1 - h))


def landmark_doc(eye_conf: float, occluded_conf: float, other_conf: float | None = None) -> dict:
    """Landmark fixture JSON with the given confidences per region."""
    other_conf = occluded_conf if other_conf is None else other_conf
    doc = {}
    for name in LANDMARK_NAMES:
        if name in EYE_REGION:
            c = eye_conf
        elif name in OCCLUDABLE_REGION:
            c = occluded_conf
        else:
            c = other_conf
        doc[name] = {"confidence": c}
    return doc


@pytest.fixture
def question_bank_doc():
    return [
        {
            "id": i,
            "text": f"Hygiene question {i}?",
            "choices": ["choice A", "choice B", "choice C", "choice D"],
            "correct_index": i % 4,
            "locale": "en",
        }
        for i in range(1, 11)
    ]


@pytest.fixture
def question_bank(question_bank_doc, tmp_path):
    from meetdurian.engine import load_questions

    path = tmp_path / "questions.json"
    path.write_text(json.dumps(question_bank_doc))
    return load_questions(path)


@pytest.fixture
def rng():
    return random.Random(42)


import contextlib
import socket
import threading
import time


@contextlib.contextmanager
def run_uvicorn(app):
    """Serve an ASGI app on a free localhost port in a background thread."""
    import uvicorn

    with socket.socket() as s:
        s.bind(("127.0.0.1", 0))
        port = s.getsockname()[1]
    server = uvicorn.Server(
        uvicorn.Config(app, host="127.0.0.1", port=port, log_level="warning")
    )
    thread = threading.Thread(target=server.run, daemon=True)
    thread.start()
    deadline = time.monotonic() + 10.0
    while not server.started:
        if time.monotonic() > deadline:
            raise RuntimeError("uvicorn failed to start")
        time.sleep(0.02)
    try:
        yield f"http://127.0.0.1:{port}"
    finally:
        server.should_exit = True
        thread.join(timeout=5.0)
