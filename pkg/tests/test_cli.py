import csv
import json

import numpy as np
import pytest

import kfsim.runner
from kfsim.cli import EXIT_INVARIANT, EXIT_OK, EXIT_SCHEMA, main
from kfsim.gaussian import InvariantBreach, load_gamma

SMALL = {"protocol": {"kind": "exchange"}, "noise": {}, "trajectories": 64, "seed": 5,
         "output": {"snapshot_limit": 10}}


def _write(tmp_path, data, name="cfg.json"):
    p = tmp_path / name
    p.write_text(json.dumps(data))
    return str(p)


def test_run_writes_outputs(tmp_path):
    out = tmp_path / "out"
    assert main(["run", "--config", _write(tmp_path, SMALL), "--out-dir", str(out)]) == EXIT_OK
    rows = list(csv.reader((out / "summary.csv").open()))
    assert rows[0] == ["observable", "mean", "ci_low", "ci_high", "acceptance_fraction"]
    assert "contrast" in [r[0] for r in rows]
    lines = (out / "snapshots.ndjson").read_text().splitlines()
    assert len(lines) == 10
    assert {"frame", "lost_sites", "column_violations"} <= set(json.loads(lines[0]))
    g, meta = load_gamma(out / "gamma.bin")
    assert np.allclose(g, -g.T) and meta["protocol"]["kind"] == "exchange"


def test_flags_override_config(tmp_path):
    out = tmp_path / "out"
    main(["run", "--config", _write(tmp_path, SMALL), "--out-dir", str(out), "--seed", "9", "--trajectories", "8",
          "--loss-radius", "1", "--decoding-threshold", "none"])
    raw = json.loads((out / "config.json").read_text())
    assert raw["seed"] == 9 and raw["trajectories"] == 8
    assert raw["postselection"] == {"loss_radius": 1, "decoding_threshold": None}


def test_loss_radius_none_clears_preset_value(tmp_path):
    out = tmp_path / "out"
    main(["run", "--preset", "fig4e_corr", "--out-dir", str(out), "--trajectories", "2", "--loss-radius", "none"])
    raw = json.loads((out / "config.json").read_text())
    assert raw["postselection"]["loss_radius"] is None


@pytest.mark.parametrize("mutate", [
    lambda d: {**d, "trajectories": 0},
    lambda d: {**d, "colour": "red"},
    lambda d: {**d, "protocol": {"kind": "exchange", "cell": "x"}},
    lambda d: {**d, "lattice": {"rows": 0}},
])
def test_schema_errors_exit_2(tmp_path, mutate):
    assert main(["run", "--config", _write(tmp_path, mutate(SMALL)), "--out-dir", str(tmp_path)]) == EXIT_SCHEMA


def test_bad_json_and_preset_exit_2(tmp_path):
    p = tmp_path / "bad.json"
    p.write_text("{")
    assert main(["run", "--config", str(p)]) == EXIT_SCHEMA
    assert main(["run", "--preset", "nope"]) == EXIT_SCHEMA
    assert main(["sweep", "--config", _write(tmp_path, SMALL), "--axis", "seed"]) == EXIT_SCHEMA


def test_invariant_breach_exit_3(tmp_path, monkeypatch):
    def broken(cfg, workers=None):
        raise InvariantBreach("Gamma lost antisymmetry")
    monkeypatch.setattr(kfsim.runner, "simulate", broken)
    assert main(["run", "--config", _write(tmp_path, SMALL), "--out-dir", str(tmp_path)]) == EXIT_INVARIANT


def test_sweep_axis(tmp_path):
    out = tmp_path / "sw"
    cfg = _write(tmp_path, SMALL)
    assert main(["sweep", "--config", cfg, "--out-dir", str(out), "--axis",
                 "postselection.decoding_threshold=null,0"]) == EXIT_OK
    rows = list(csv.DictReader((out / "sweep.csv").open()))
    thr = {r["postselection.decoding_threshold"] for r in rows if r["observable"] == "contrast"}
    assert thr == {"none", "0"}


def test_determinism_across_workers(tmp_path, monkeypatch):
    cfg = _write(tmp_path, {**SMALL, "trajectories": 100})
    main(["run", "--config", cfg, "--out-dir", str(tmp_path / "w1"), "--workers", "1"])
    monkeypatch.setenv("KFS_THREADS", "3")
    main(["run", "--config", cfg, "--out-dir", str(tmp_path / "w3")])
    a = (tmp_path / "w1" / "summary.csv").read_bytes()
    assert a == (tmp_path / "w3" / "summary.csv").read_bytes()


def test_lattice_dump(capsys):
    assert main(["lattice", "dump"]) == EXIT_OK
    doc = json.loads(capsys.readouterr().out)
    assert len(doc["data_sites"]) == 72 and len(doc["links"]) == 104
    assert main(["lattice", "dump", "--rows", "0"]) == EXIT_SCHEMA


def test_validate_fast(capsys):
    assert main(["validate", "--fast"]) == EXIT_OK
    out = capsys.readouterr().out
    assert "FAIL" not in out and "checks passed" in out
