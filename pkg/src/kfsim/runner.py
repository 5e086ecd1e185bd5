"""Execute a run configuration: trajectories, summaries, snapshots and sweeps."""
from __future__ import annotations

import csv
import dataclasses
import io
import json
import os
from functools import lru_cache
from pathlib import Path

from kfsim.config import RunConfig, SchemaError, parse_config, set_dotted
from kfsim.experiments import Experiment, make_experiment
from kfsim.noise import (SUMMARY_HEADER, PostselectionPolicy, SnapshotSet, SummaryRow, format_float,
                         run_trajectories, summarize, summary_csv)


def default_workers() -> int:
    v = os.environ.get("KFS_THREADS", "")
    try:
        return max(1, int(v)) if v else 1
    except ValueError as e:
        raise SchemaError(f"KFS_THREADS must be an integer, got {v!r}") from e


@lru_cache(maxsize=4)
def _experiment(config_json: str) -> tuple[Experiment, RunConfig]:
    cfg = parse_config(json.loads(config_json))
    return make_experiment(cfg.kind, cfg.lattice.build(), cfg.protocol, cfg.noise), cfg


class _Simulate:
    """Picklable block simulator; each worker process rebuilds the experiment once."""

    def __init__(self, config_json: str):
        self.config_json = config_json

    def __call__(self, start, n, rng):
        return _experiment(self.config_json)[0].simulate(start, n, rng)


def _strip(data: dict) -> dict:
    """Config fields that change the simulated trajectories (not postselection or output)."""
    d = {k: v for k, v in data.items() if k not in ("postselection", "output", "workers", "sweep", "description")}
    return d


def simulate(cfg: RunConfig, workers: int | None = None) -> tuple[Experiment, SnapshotSet]:
    key = json.dumps(_strip(cfg.raw), sort_keys=True)
    exp = _experiment(key)[0]
    workers = workers or cfg.workers or default_workers()
    n = 1 if exp.deterministic else cfg.trajectories
    snaps = run_trajectories(_Simulate(key), n, cfg.seed, exp.block_size, workers, protocol=exp.metadata())
    return exp, snaps


def summary_rows(exp: Experiment, snaps: SnapshotSet, policy: PostselectionPolicy) -> list[SummaryRow]:
    return summarize(snaps, exp.lat, exp.specs, policy) + exp.derived(snaps, policy)


@dataclasses.dataclass
class RunResult:
    rows: list[SummaryRow]
    files: list[Path]
    snaps: SnapshotSet | None = None


def run(cfg: RunConfig, out_dir: str | Path | None = None, workers: int | None = None) -> RunResult:
    if cfg.sweep is not None:
        return sweep(cfg, out_dir, workers)
    out = Path(out_dir or cfg.output.dir)
    out.mkdir(parents=True, exist_ok=True)
    exp, snaps = simulate(cfg, workers)
    rows = summary_rows(exp, snaps, cfg.postselection)
    files = [out / "summary.csv", out / "config.json"]
    files[0].write_text(summary_csv(rows))
    files[1].write_text(cfg.to_json() + "\n")
    if cfg.output.snapshots:
        snaps.write_ndjson(out / "snapshots.ndjson", cfg.output.snapshot_limit)
        files.append(out / "snapshots.ndjson")
    if cfg.output.gamma:
        files += exp.artifacts(snaps, cfg.postselection, out)
    elif cfg.kind == "strings" and cfg.protocol.chern:
        files += [p for p in exp.artifacts(snaps, cfg.postselection, out) if not p.name.startswith("gamma")]
    return RunResult(rows, files, snaps)


def _cell_label(v) -> str:
    if v is None:
        return "none"
    if isinstance(v, float):
        return format_float(v)
    return json.dumps(v) if isinstance(v, (list, dict)) else str(v)


def sweep(cfg: RunConfig, out_dir: str | Path | None = None, workers: int | None = None) -> RunResult:
    """One summary row per (cell, observable); simulations are shared between cells that
    differ only in postselection."""
    if cfg.sweep is None:
        raise SchemaError("config has no sweep section")
    out = Path(out_dir or cfg.output.dir)
    out.mkdir(parents=True, exist_ok=True)
    base = {k: v for k, v in cfg.raw.items() if k != "sweep"}
    axes = list(cfg.sweep.axes)
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(axes + list(SUMMARY_HEADER))
    cache: dict[str, tuple[Experiment, SnapshotSet]] = {}
    all_rows = []
    for cell in cfg.sweep.cells():
        data = base
        for k, v in cell.items():
            data = set_dotted(data, k, v)
        c = parse_config(data)
        key = json.dumps(_strip(c.raw), sort_keys=True)
        if key not in cache:
            cache[key] = simulate(c, workers)
        exp, snaps = cache[key]
        rows = summary_rows(exp, snaps, c.postselection)
        if cfg.sweep.report:
            rows = [r for r in rows if r.observable in cfg.sweep.report]
        for r in rows:
            w.writerow([_cell_label(cell[k]) for k in axes] + [r.observable, format_float(r.mean),
                        format_float(r.ci_low), format_float(r.ci_high), format_float(r.acceptance_fraction)])
        all_rows += rows
    files = [out / "sweep.csv", out / "config.json"]
    files[0].write_text(buf.getvalue())
    files[1].write_text(cfg.to_json() + "\n")
    return RunResult(all_rows, files)
