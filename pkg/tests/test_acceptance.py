"""Acceptance suite: one test per exit criterion, each printing a pass/fail
line. Run with `pytest tests/test_acceptance.py -v -s`."""

import asyncio
import json
import random
import threading
import time

import numpy as np
import pytest

from meetdurian import engine
from meetdurian.config import GameConfig
from meetdurian.geo import GeoPoint, destination_point, haversine_distance
from meetdurian.maskgate import (
    MaskThresholds,
    ProviderError,
    ProviderTimeout,
    classify_mask,
    gate_entry,
)
from meetdurian.roads import durians_to_roads, load_roads, nearest_on_roads
from meetdurian.sim import distribution_experiment, load_trace, masked_fixture, replay
from meetdurian.spawner import DurianState, spawn_round
from meetdurian.store import PlayerStore, InsufficientPoints

from conftest import (
    CENTER,
    dense_polyline_points,
    haversine_np,
    landmark_doc,
    make_grid_geojson,
    run_uvicorn,
)
from test_engine import masked_verdict
from test_sim import spawn_preview, visiting_trace, write_trace


def report(name: str, ok: bool, detail: str = ""):
    print(f"[{'PASS' if ok else 'FAIL'}] {name}" + (f" ({detail})" if detail else ""))
    assert ok, f"{name}: {detail}"


class TestDistributionExperiment:
    def test_distribution_experiment(self, tmp_path):
        t0 = time.monotonic()
        result = distribution_experiment(
            CENTER, [6, 12, 24, 48], rounds=500, seed=42, out_dir=tmp_path / "dist"
        )
        elapsed = time.monotonic() - t0
        report("dist: completes in < 60 s", elapsed < 60.0, f"{elapsed:.1f} s")
        for s in result["stats"]:
            in_range = 30.0 <= s["min_radial_m"] and s["max_radial_m"] <= 200.0 + 1e-6
            report(f"dist: count={s['count']} all positions in [30, 200] m", in_range,
                   f"min {s['min_radial_m']:.1f}, max {s['max_radial_m']:.1f}")
            report(f"dist: count={s['count']} angular chi-square p > 0.01",
                   s["p_angular"] > 0.01, f"p={s['p_angular']:.3f}")
            report(f"dist: count={s['count']} radial equal-area chi-square p > 0.01",
                   s["p_radial"] > 0.01, f"p={s['p_radial']:.3f}")
        naive = distribution_experiment(
            CENTER, [6], rounds=500, seed=42, out_dir=tmp_path / "naive",
            sampler_name="naive",
        )
        p = naive["stats"][0]["p_radial"]
        report("dist: naive-sampler negative control radial p < 0.01", p < 0.01, f"p={p:.2e}")


class TestSnapOracle:
    def test_nearest_matches_brute_force_on_50x50_grid(self):
        net = load_roads(make_grid_geojson(50, 40.0))
        # dense 0.5 m sampling of every segment = the independent oracle
        lats, lons = [], []
        for seg in net.segments:
            for p in dense_polyline_points(seg.polyline, 0.5):
                lats.append(p.lat)
                lons.append(p.lon)
        lats, lons = np.array(lats), np.array(lons)
        rng = random.Random(42)
        mismatches = 0
        for _ in range(500):
            q = destination_point(CENTER, rng.uniform(0, 360), rng.uniform(0, 900))
            res = nearest_on_roads(net, q)
            oracle = float(haversine_np(lats, lons, q.lat, q.lon).min())
            if not (res.distance_from_query <= oracle + 0.1):
                mismatches += 1
        report("snap: 500 queries match 0.5 m brute force within 0.1 m",
               mismatches == 0, f"{mismatches} mismatches")

    def test_snap_idempotent_on_1000_random_sets(self):
        net = load_roads(make_grid_geojson(12, 40.0))
        from meetdurian.geo import AnnulusSpec

        rng = random.Random(43)
        failures = 0
        for i in range(1000):
            spec = AnnulusSpec(center=CENTER, r_min=30.0, r_max=rng.uniform(100.0, 200.0))
            ds = spawn_round(CENTER, spec, rng.randrange(1, 7), 0.0, rng)
            once = durians_to_roads(net, ds)
            if durians_to_roads(net, once) != once:
                failures += 1
        report("snap: duriansToRoads idempotent on 1,000 random DurianSets",
               failures == 0, f"{failures} failures")


class TestMaskGate:
    def test_classify_latency(self):
        from meetdurian.maskgate import LandmarkSet

        landmarks = LandmarkSet.from_json(landmark_doc(0.9, 0.1))
        n = 1000
        t0 = time.perf_counter()
        for _ in range(n):
            classify_mask(landmarks)
        per_call = (time.perf_counter() - t0) / n
        report("gate: classify_mask < 10 ms per call", per_call < 0.010,
               f"{per_call * 1000:.3f} ms")

    def test_gate_entry_latency_with_stub_provider(self, tmp_path):
        import httpx

        from meetdurian.providers import HttpLandmarkProvider, create_stub_landmark_app

        (tmp_path / "masked.json").write_text(json.dumps(landmark_doc(0.9, 0.1)))
        app = create_stub_landmark_app(tmp_path)
        with run_uvicorn(app) as base:
            provider = HttpLandmarkProvider(base)
            gate_entry(provider, "masked.json")  # warm-up
            t0 = time.perf_counter()
            n = 100
            for _ in range(n):
                verdict = gate_entry(provider, "masked.json")
            avg = (time.perf_counter() - t0) / n
            assert verdict.masked
        report("gate: gate_entry avg < 1 s over 100 calls via stub provider",
               avg < 1.0, f"{avg * 1000:.1f} ms")

    def test_monotonicity_sweep_flips_once(self):
        from meetdurian.maskgate import LandmarkSet

        thresholds = MaskThresholds()
        verdicts = [
            classify_mask(LandmarkSet.from_json(landmark_doc(0.9, i / 1000)), thresholds).masked
            for i in range(1001)
        ]
        flips = sum(1 for a, b in zip(verdicts, verdicts[1:]) if a != b)
        report("gate: occlusion sweep flips verdict exactly once", flips == 1,
               f"{flips} flips")

    def test_fault_injection_never_admits(self, tmp_path):
        from meetdurian.maskgate import LandmarkSet, StaticLandmarkProvider

        admissions = 0

        class Exploding:
            def landmarks(self, ref):
                raise RuntimeError("boom")

        faults = [
            lambda: gate_entry(Exploding(), "x"),
            lambda: gate_entry(
                StaticLandmarkProvider(LandmarkSet.from_json(landmark_doc(0.9, 0.1)), delay_s=2.0),
                "x", timeout_s=0.1,
            ),
        ]
        for fault in faults * 10:
            try:
                verdict = fault()
                if verdict.masked:
                    admissions += 1
            except (ProviderError, ProviderTimeout):
                pass
        # missing face must never admit either
        for _ in range(10):
            from meetdurian.maskgate import LandmarkSet as LS

            v = classify_mask(LS.from_json(landmark_doc(0.05, 0.05)))
            if v.masked:
                admissions += 1
        report("gate: no error path grants entry (fault injection)", admissions == 0,
               f"{admissions} admissions")


class TestGameArithmetic:
    def test_fsm_invariants_over_random_sequences(self, question_bank):
        config = GameConfig()
        rng = random.Random(44)
        sequences = 10_000
        violations = 0
        for trial in range(sequences):
            session = engine.start_session(
                f"p{trial}", CENTER, masked_verdict(), config, rng
            )
            t = 0.0
            for _ in range(rng.randrange(2, 12)):
                if session.phase is not engine.Phase.PLAYING:
                    break
                t += rng.uniform(1.0, 30.0)
                if rng.random() < 0.3:
                    p = destination_point(CENTER, rng.uniform(0, 360), rng.uniform(0, 250))
                    engine.report_fix(session, p, t, config)
                else:
                    targets = session.durians.active()
                    d = targets[rng.randrange(len(targets))]
                    engine.report_fix(session, d.position, t, config)
                    q = engine.next_question(session, question_bank, rng)
                    ans = q.correct_index if rng.random() < 0.6 else (q.correct_index + 1) % 4
                    engine.attempt_capture(session, d.id, q, ans, config)
                durians = session.durians.durians
                captured = sum(1 for d in durians if d.state is DurianState.CAPTURED)
                failed = sum(1 for d in durians if d.state is DurianState.FAILED)
                active = sum(1 for d in durians if d.state is DurianState.ACTIVE)
                if captured != session.points_earned:
                    violations += 1
                if captured + failed + active != 6:
                    violations += 1
                if session.hp != max(0.0, config.hp_start - 0.5 * session.wrong_answers):
                    violations += 1
        report("engine: invariants hold over 10,000 random operation sequences",
               violations == 0, f"{violations} violations")

    def test_always_wrong_replay_ends_at_hp_zero(self, tmp_path, question_bank):
        config = GameConfig()
        positions = spawn_preview(config, seed=11)
        trace = load_trace(write_trace(tmp_path, visiting_trace(positions)))
        transcript = replay(trace, question_bank, config, policy="always-wrong", seed=11)
        final = transcript["final"]
        ok = (
            final["phase"] == "RoundComplete"
            and final["hp"] == 0.0
            and final["wrong_answers"] == 6
        )
        report("engine: always-wrong replay terminates at hp 0 after 6 wrong answers",
               ok, str(final))


class TestQuestionSelection:
    def test_exclusion_and_uniformity(self, question_bank):
        from scipy import stats

        config = GameConfig()
        rng = random.Random(45)
        session = engine.start_session("qs", CENTER, masked_verdict(), config, rng)

        session.answered_right = {3}
        leaked = sum(
            1 for _ in range(10_000)
            if engine.next_question(session, question_bank, rng).id == 3
        )
        report("questions: zero AnsweredRight questions in 10,000 draws", leaked == 0,
               f"{leaked} leaked")

        session.answered_right = set()
        counts = {q.id: 0 for q in question_bank}
        for _ in range(10_000):
            counts[engine.next_question(session, question_bank, rng).id] += 1
        p = stats.chisquare(list(counts.values())).pvalue
        report("questions: fresh-history draw uniform (chi-square p > 0.01)", p > 0.01,
               f"p={p:.3f}")


class TestStore:
    def test_concurrent_purchase_stress(self, tmp_path):
        store = PlayerStore(tmp_path / "stress", pbkdf2_iterations=1000)
        accounts = []
        for i in range(10):
            acct = store.register(f"s{i}@x.y", "pw")
            store.credit_points(acct.player_id, 4)  # marginal for cost-3 purchases
            accounts.append(acct.player_id)

        def buyer(pid):
            for _ in range(10):
                try:
                    store.purchase(pid, "durian-plush")
                except InsufficientPoints:
                    pass

        threads = [threading.Thread(target=buyer, args=(pid,)) for pid in accounts]
        for t in threads:
            t.start()
        for t in threads:
            t.join()
        negatives = [pid for pid in accounts if store.get(pid).points_total < 0]
        report("store: 100 interleaved purchases never drive points negative",
               not negatives, f"{len(negatives)} negative balances")

    def test_kill_and_restart_durability(self, tmp_path):
        root = tmp_path / "durable"
        store = PlayerStore(root, pbkdf2_iterations=1000)
        committed = {}
        rng = random.Random(46)
        for i in range(20):
            acct = store.register(f"d{i}@x.y", "pw")
            n = rng.randrange(1, 30)
            store.credit_points(acct.player_id, n)
            committed[acct.player_id] = n
        del store  # drop in-memory state; only the files survive
        reopened = PlayerStore(root, pbkdf2_iterations=1000)
        lost = {
            pid: n for pid, n in committed.items()
            if reopened.get(pid).points_total != n
        }
        report("store: restart preserves all committed credits", not lost, str(lost))

    def test_leaderboard_matches_sort_oracle_on_1000_stores(self, tmp_path):
        rng = random.Random(47)
        mismatches = 0
        for trial in range(1000):
            store = PlayerStore(tmp_path / f"lb{trial}", pbkdf2_iterations=10)
            expected = {}
            order = []
            for i in range(rng.randrange(1, 6)):
                acct = store.register(f"u{i}@x.y", "pw")
                expected[acct.player_id] = 0
                order.append(acct.player_id)
            for _ in range(rng.randrange(0, 12)):
                pid = order[rng.randrange(len(order))]
                n = rng.randrange(1, 5)
                store.credit_points(pid, n)
                expected[pid] += n
            oracle = sorted(order, key=lambda pid: (-expected[pid], order.index(pid)))
            board = store.leaderboard()
            if [e.player_id for e in board] != oracle:
                mismatches += 1
        report("store: leaderboard matches sort oracle on 1,000 randomized stores",
               mismatches == 0, f"{mismatches} mismatches")


class TestService:
    def _build_app(self, tmp_path, question_bank):
        from meetdurian.service import GameService, create_app

        service = GameService(
            store=PlayerStore(tmp_path / "svc", pbkdf2_iterations=1000),
            config=GameConfig(),
            network=load_roads(make_grid_geojson(12, 40.0)),
            question_bank=question_bank,
            rng=random.Random(48),
        )
        return create_app(service)

    def test_rest_happy_path(self, tmp_path, question_bank):
        from fastapi.testclient import TestClient

        app = self._build_app(tmp_path, question_bank)
        with TestClient(app) as client:
            client.post("/auth/register", json={"email": "hp@x.y", "password": "pw"})
            token = client.post(
                "/auth/login", json={"email": "hp@x.y", "password": "pw"}
            ).json()["token"]
            auth = {"Authorization": f"Bearer {token}"}
            verdict = client.post(
                "/gate/mask", json={"landmarks": landmark_doc(0.9, 0.1)}, headers=auth
            ).json()
            summary = client.post(
                "/session/start",
                json={"center": {"lat": CENTER.lat, "lon": CENTER.lon},
                      "verdict_id": verdict["verdict_id"]},
                headers=auth,
            ).json()
            t, captured = 0.0, 0
            for durian in summary["durians"]:
                t += 60.0
                fix = client.post(
                    "/session/fix",
                    json={"lat": durian["lat"], "lon": durian["lon"], "t": t},
                    headers=auth,
                ).json()
                q = fix["question"]
                out = client.post(
                    "/session/capture",
                    json={"durian_id": durian["id"], "question_id": q["id"],
                          "answer_index": q["id"] % 4},
                    headers=auth,
                ).json()
                captured += int(out["captured"])
            purchase = client.post(
                "/shop/purchase", json={"item_id": "durian-plush"}, headers=auth
            )
            board = client.get("/leaderboard?top=3").json()["entries"]
            ok = (
                captured == 6
                and purchase.status_code == 200
                and board[0]["points_total"] == 6
            )
            report("service: REST happy path register→gate→start→capture→purchase→leaderboard",
                   ok, f"captured={captured}, purchase={purchase.status_code}")

    def test_scoreupdate_broadcast_latency_100_clients(self, tmp_path, question_bank):
        import httpx
        import websockets

        app = self._build_app(tmp_path, question_bank)
        with run_uvicorn(app) as base:
            with httpx.Client(base_url=base, timeout=10.0) as client:
                client.post("/auth/register", json={"email": "b@x.y", "password": "pw"})
                token = client.post(
                    "/auth/login", json={"email": "b@x.y", "password": "pw"}
                ).json()["token"]
                auth = {"Authorization": f"Bearer {token}"}
                verdict = client.post(
                    "/gate/mask", json={"landmarks": landmark_doc(0.9, 0.1)}, headers=auth
                ).json()
                summary = client.post(
                    "/session/start",
                    json={"center": {"lat": CENTER.lat, "lon": CENTER.lon},
                          "verdict_id": verdict["verdict_id"]},
                    headers=auth,
                ).json()
                durian = summary["durians"][0]
                fix = client.post(
                    "/session/fix",
                    json={"lat": durian["lat"], "lon": durian["lon"], "t": 1.0},
                    headers=auth,
                ).json()
                q = fix["question"]

                ws_url = base.replace("http://", "ws://") + f"/ws?token={token}"

                async def run() -> list[float]:
                    conns = [await websockets.connect(ws_url) for _ in range(100)]
                    try:
                        t0 = time.perf_counter()
                        capture = await asyncio.to_thread(
                            client.post,
                            "/session/capture",
                            json={"durian_id": durian["id"], "question_id": q["id"],
                                  "answer_index": q["id"] % 4},
                            headers=auth,
                        )
                        assert capture.json()["captured"]

                        async def wait_score(ws):
                            while True:
                                msg = json.loads(await asyncio.wait_for(ws.recv(), 5.0))
                                if msg["type"] == "ScoreUpdate":
                                    return time.perf_counter() - t0

                        return await asyncio.gather(*(wait_score(ws) for ws in conns))
                    finally:
                        for ws in conns:
                            await ws.close()

                latencies = sorted(asyncio.run(run()))
                median = latencies[len(latencies) // 2]
        report("service: ScoreUpdate reaches 100 clients, median < 1 s",
               median < 1.0, f"median {median * 1000:.0f} ms, max {latencies[-1] * 1000:.0f} ms")
