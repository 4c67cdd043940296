"""Command-line entry points: the game server and the headless simulator."""

from __future__ import annotations

import json
import random
import sys

import click

from .config import load_config
from .engine import load_questions
from .geo import GeoPoint
from .roads import load_roads
from .sim import TraceParseError, distribution_experiment, load_trace, replay, replay_remote
from .store import PlayerStore


@click.command()
@click.option("--listen", default="127.0.0.1:8000", help="addr:port to bind")
@click.option("--roads", "roads_path", type=click.Path(exists=True), default=None)
@click.option("--questions", "questions_path", type=click.Path(exists=True), default=None)
@click.option("--data-dir", default="./durian-data", help="player store root")
@click.option("--config", "config_path", type=click.Path(exists=True), default=None,
              help="TOML/JSON config; DURIAN_CONFIG env var overrides")
@click.option("--seed", type=int, default=None, help="spawn RNG seed (default: entropy)")
def serve(listen, roads_path, questions_path, data_dir, config_path, seed):
    """Run the game server (REST + live WebSocket channel)."""
    import uvicorn

    from .service import GameService, create_app

    config = load_config(config_path)
    network = None
    if roads_path:
        network = load_roads(roads_path, reach_epsilon=config.reach_epsilon)
    bank = load_questions(questions_path) if questions_path else []
    store = PlayerStore(
        data_dir,
        level_points=config.level_points,
        token_ttl_s=config.token_ttl_days * 86400.0,
    )
    service = GameService(
        store=store,
        config=config,
        network=network,
        question_bank=bank,
        rng=random.Random(seed),
    )
    host, _, port = listen.rpartition(":")
    uvicorn.run(create_app(service), host=host or "127.0.0.1", port=int(port))


@click.group()
def sim():
    """Headless simulator: trace replay and the distribution experiment."""


@sim.command("replay")
@click.option("--trace", "trace_path", type=click.Path(exists=True), required=True)
@click.option("--policy", default="always-correct",
              help="always-correct | always-wrong | p:<prob>")
@click.option("--questions", "questions_path", type=click.Path(exists=True), default=None)
@click.option("--roads", "roads_path", type=click.Path(exists=True), default=None)
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--seed", type=int, default=0)
@click.option("--remote", default=None, help="server base URL; replay over the wire")
@click.option("--out", "out_path", type=click.Path(), default=None,
              help="transcript file (default: stdout)")
def sim_replay(trace_path, policy, questions_path, roads_path, config_path, seed, remote, out_path):
    """Replay a GPS trace (CSV: t_unix_s,lat,lon) through a game round."""
    try:
        trace = load_trace(trace_path)
    except TraceParseError as e:
        raise click.ClickException(str(e))
    bank = load_questions(questions_path) if questions_path else []
    if remote:
        transcript = replay_remote(trace, remote, policy=policy, seed=seed, question_bank=bank)
    else:
        if not bank:
            raise click.ClickException("--questions is required for in-process replay")
        config = load_config(config_path)
        network = load_roads(roads_path, config.reach_epsilon) if roads_path else None
        transcript = replay(trace, bank, config, policy=policy, seed=seed, network=network)
    text = json.dumps(transcript, indent=2)
    if out_path:
        with open(out_path, "w", encoding="utf-8") as f:
            f.write(text + "\n")
    else:
        sys.stdout.write(text + "\n")


@sim.command("dist")
@click.option("--center", default="36.0665,120.3370",
              help="lat,lon of the target point (default: an arbitrary campus point)")
@click.option("--counts", default="6,12,24,48", help="comma-separated durian counts")
@click.option("--rounds", type=int, default=500)
@click.option("--seed", type=int, default=42)
@click.option("--out", "out_dir", type=click.Path(), required=True)
@click.option("--sampler", type=click.Choice(["uniform", "naive"]), default="uniform",
              help="'naive' is the linear-radius negative control")
@click.option("--config", "config_path", type=click.Path(exists=True), default=None)
@click.option("--d-min", type=float, default=0.0,
              help="pairwise separation; 0 measures the raw sampler")
def sim_dist(center, counts, rounds, seed, out_dir, sampler, config_path, d_min):
    """Run the durian-distribution experiment and write scatter + stats files."""
    lat, lon = (float(x) for x in center.split(","))
    result = distribution_experiment(
        center=GeoPoint(lat=lat, lon=lon),
        counts=[int(c) for c in counts.split(",")],
        rounds=rounds,
        seed=seed,
        out_dir=out_dir,
        config=load_config(config_path),
        sampler_name=sampler,
        d_min=d_min,
    )
    click.echo(json.dumps(result["stats"], indent=2))
