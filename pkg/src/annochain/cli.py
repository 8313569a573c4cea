"""Command-line front end: simulation studies, the HTTP service, export, and
log verification."""

from __future__ import annotations

import csv
import dataclasses
import json
import os
import sys

import click
import numpy as np

from .config import load_config
from .errors import CorruptLog
from .persistence import SessionStore
from .service import build_gateway
from .simulate import (
    SimScenario,
    Strategy,
    delta_t,
    pareto_sweep,
    simulate_strategy,
    words_per_unit_sweep,
)


def _scenario_options(fn):
    opts = [
        click.option("--n-units", type=int, default=60, show_default=True),
        click.option("--capacities", default="30,15", show_default=True,
                     help="comma-separated per-round abilities"),
        click.option("--words-per-unit", type=float, default=4.0, show_default=True),
        click.option("--t-observe", type=float, default=20.0, show_default=True),
        click.option("--v-talk", type=float, default=161.2, show_default=True),
        click.option("--v-type", type=float, default=53.46, show_default=True),
        click.option("--v-read", type=float, default=236.0, show_default=True),
        click.option("--single-output", type=click.Choice(["talk", "type"]),
                     default="type", show_default=True),
        click.option("--parallel-output", type=click.Choice(["talk", "type"]),
                     default="talk", show_default=True),
        click.option("--chain-output", type=click.Choice(["talk", "type"]),
                     default="talk", show_default=True),
        click.option("--seed", type=int, default=None,
                     help="RNG seed; mandatory when ANNOCHAIN_CI is set"),
    ]
    for opt in reversed(opts):
        fn = opt(fn)
    return fn


def _build_scenario(n_units, capacities, words_per_unit, t_observe,
                    v_talk, v_type, v_read, single_output, parallel_output,
                    chain_output, seed) -> SimScenario:
    if seed is None:
        if os.environ.get("ANNOCHAIN_CI"):
            raise click.UsageError("--seed is mandatory in CI mode")
        seed = 0
    caps = tuple(int(c) for c in capacities.split(","))
    return SimScenario(
        n_units=n_units, capacities=caps, words_per_unit=words_per_unit,
        v_talk_wpm=v_talk, v_type_wpm=v_type, v_read_wpm=v_read,
        t_observe_s=t_observe, single_output=single_output,
        parallel_output=parallel_output, chain_output=chain_output,
        rng_seed=seed)


def _emit(rows: list[dict], csv_path: str | None, summary: dict) -> None:
    if csv_path and rows:
        with open(csv_path, "w", newline="", encoding="utf-8") as fh:
            writer = csv.DictWriter(fh, fieldnames=list(rows[0]))
            writer.writeheader()
            writer.writerows(rows)
    click.echo(json.dumps(summary, indent=2, sort_keys=True))


@click.group()
def main():
    """Annotation-chain engine: simulate strategies, serve sessions, export."""


@main.command()
@_scenario_options
@click.option("--strategy", "strategies", multiple=True,
              default=("single", "parallel:3", "chain:2"), show_default=True,
              help='e.g. "single", "parallel:3", "chain:2"; repeatable')
@click.option("--trials", type=int, default=1, show_default=True)
@click.option("--csv", "csv_path", type=click.Path(dir_okay=False), default=None)
def simulate(strategies, trials, csv_path, **scenario_kwargs):
    """Sample annotation strategies and report J, T, E, and duplication."""
    scenario = _build_scenario(**scenario_kwargs)
    rows = []
    for spec in strategies:
        strategy = Strategy.parse(spec)
        rng = np.random.default_rng(scenario.rng_seed)
        for trial in range(trials):
            outcome = simulate_strategy(scenario, strategy, rng)
            rows.append({
                "strategy": outcome.strategy, "trial": trial,
                "J": outcome.j, "total_time_s": outcome.total_time_s,
                "E": outcome.e, "duplication_pct": outcome.duplication_pct,
                "info_gain_trace": " ".join(map(str, outcome.info_gain_trace)),
            })
    by_strategy = {}
    for row in rows:
        by_strategy.setdefault(row["strategy"], []).append(row)
    summary = {
        label: {
            "mean_J": sum(r["J"] for r in group) / len(group),
            "mean_total_time_s": sum(r["total_time_s"] for r in group) / len(group),
            "mean_E": sum(r["E"] for r in group) / len(group),
            "mean_duplication_pct": sum(r["duplication_pct"] for r in group) / len(group),
        }
        for label, group in by_strategy.items()
    }
    _emit(rows, csv_path, {"trials": trials, "strategies": summary})


@main.command(name="delta-t")
@_scenario_options
@click.option("--chain-rounds", "n", type=int, default=2, show_default=True)
@click.option("--parallel-annotators", "m", type=int, default=3, show_default=True)
@click.option("--no-premise-check", is_flag=True, default=False,
              help="allow boundary scenarios outside the premise region")
def delta_t_cmd(n, m, no_premise_check, **scenario_kwargs):
    """Closed-form time saved by an n-round chain over m parallel annotators."""
    scenario = _build_scenario(**scenario_kwargs)
    value = delta_t(scenario, n=n, m=m, enforce_premises=not no_premise_check)
    _emit([], None, {"chain_rounds": n, "parallel_annotators": m,
                     "delta_t_s": value})


@main.command()
@_scenario_options
@click.option("--wpu-values", default="2,3,4,5,6,7,8", show_default=True,
              help="words-per-unit grid for the sensitivity sweep")
@click.option("--csv", "csv_path", type=click.Path(dir_okay=False), default=None)
def sweep(wpu_values, csv_path, **scenario_kwargs):
    """Expected-value sweep over the words-per-unit ratio."""
    base = _build_scenario(**scenario_kwargs)
    values = [float(v) for v in wpu_values.split(",")]
    rows_out = []
    for row in words_per_unit_sweep(values, base):
        rows_out.append({
            "words_per_unit": row.scenario.words_per_unit,
            "strategy": row.strategy,
            "J": row.j, "total_time_s": row.total_time_s, "E": row.e,
            "duplication_pct": row.duplication_pct,
            "dominated": row.dominated,
        })
    chain_rows = [r for r in rows_out if r["strategy"].startswith("chain")]
    par_rows = {r["words_per_unit"]: r for r in rows_out
                if r["strategy"].startswith("parallel")}
    ratios = [r["E"] / par_rows[r["words_per_unit"]]["E"] for r in chain_rows
              if r["words_per_unit"] in par_rows]
    summary = {
        "cells": len(rows_out),
        "chain_over_parallel_speed_ratio": {
            "min": min(ratios), "max": max(ratios)} if ratios else None,
    }
    _emit(rows_out, csv_path, summary)


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False),
              default=None)
@click.option("--host", default=None)
@click.option("--port", type=int, default=None)
def serve(config_path, host, port):
    """Run the HTTP annotation service."""
    import uvicorn

    from .service import create_app

    config = load_config(config_path)
    if host is not None:
        config = dataclasses.replace(config, host=host)
    if port is not None:
        config = dataclasses.replace(config, port=port)
    uvicorn.run(create_app(config), host=config.host, port=config.port)


@main.command()
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False),
              default=None)
@click.option("--data-dir", default=None)
@click.option("--format", "fmt", type=click.Choice(["jsonl"]), default="jsonl",
              show_default=True)
@click.option("--mode", type=click.Choice(["single", "parallel", "chain"]), default=None)
@click.option("--out", type=click.Path(dir_okay=False), default=None,
              help="output path; stdout when omitted")
def export(config_path, data_dir, fmt, mode, out):
    """Write one JSON line per finalized session."""
    config = load_config(config_path)
    if data_dir is not None:
        config = dataclasses.replace(config, data_dir=data_dir)
    store = SessionStore(config.data_dir, build_gateway(config))
    store.load()
    stream = open(out, "w", encoding="utf-8", newline="\n") if out else sys.stdout
    try:
        for line in store.export_jsonl(mode):
            stream.write(line)
    finally:
        if out:
            stream.close()


@main.command(name="replay-verify")
@click.option("--config", "config_path", type=click.Path(exists=True, dir_okay=False),
              default=None)
@click.option("--data-dir", default=None)
def replay_verify(config_path, data_dir):
    """Replay the event log twice and confirm identical state hashes."""
    config = load_config(config_path)
    if data_dir is not None:
        config = dataclasses.replace(config, data_dir=data_dir)
    first = SessionStore(config.data_dir, build_gateway(config))
    second = SessionStore(config.data_dir, build_gateway(config))
    try:
        first.load()
        second.load()
    except CorruptLog as exc:
        click.echo(json.dumps({"ok": False, "error": str(exc),
                               "line_number": exc.line_number}))
        raise SystemExit(1)
    ok = first.hash() == second.hash()
    click.echo(json.dumps({"ok": ok, "sessions": len(first.sessions),
                           "state_hash": first.hash()}))
    if not ok:
        raise SystemExit(1)


if __name__ == "__main__":
    main()
