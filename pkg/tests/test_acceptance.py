"""Acceptance criteria 1-10; each test records one PASS/FAIL line shown in the summary."""
import dataclasses
import time

import numpy as np
import pytest

from kfsim.checks import check_chern, check_exchange, check_identities, check_prep_fixed_point, oracle_equivalence
from kfsim.config import load_preset, parse_config, set_dotted
from kfsim.gaussian import Sector
from kfsim.lattice import build_lattice
from kfsim.noise import PostselectionPolicy
from kfsim.protocols import HubbardModel, HubbardSpec, nonconservation_sweep
from kfsim.runner import run, simulate, summary_rows


def _report(acceptance, k, ok, msg):
    acceptance.append(f"criterion {k}: {'PASS' if ok else 'FAIL'}  {msg}")
    assert ok, msg


def _rows(exp, snaps, policy):
    return {r.observable: r for r in summary_rows(exp, snaps, policy)}


def _preset(name, **over):
    data = load_preset(name)
    for k, v in over.items():
        data = set_dotted(data, k, v)
    return parse_config(data)


def test_1_prep_fixed_point(acceptance):
    t0 = time.perf_counter()
    dev = check_prep_fixed_point()
    dt = time.perf_counter() - t0
    _report(acceptance, 1, dev == 0.0 and dt < 1.0, f"noiseless prep deviation {dev:g} in {dt:.2f}s (< 1s)")


def test_2_noisy_plaquette(acceptance):
    cfg = _preset("fig2_prep")
    assert cfg.trajectories >= 100_000
    exp, snaps = simulate(cfg)
    p = _rows(exp, snaps, cfg.postselection)["plaquette"]
    p0 = _rows(exp, snaps, PostselectionPolicy(decoding_threshold=0))["plaquette"]
    ok = abs(p.mean - 0.444) <= 0.05 and abs(p0.mean - 0.57) <= 0.06
    _report(acceptance, 2, ok, f"plaquette {p.mean:.4f} (0.444 +- 0.05), threshold 0: {p0.mean:.4f} "
                               f"(0.57 +- 0.06, acceptance {p0.acceptance_fraction:.3f}), n={snaps.n}")


def test_3_oracle_equivalence(acceptance):
    err = oracle_equivalence(50)
    _report(acceptance, 3, err < 1e-9, f"Gaussian vs state vector, 50 circuits: max |dGamma| {err:.2e} (< 1e-9)")


def test_4_chern(acceptance):
    ideal = check_chern()
    cfg = _preset("fig3_chern")
    exp, snaps = simulate(cfg)
    rows = _rows(exp, snaps, cfg.postselection)
    boots = {b: rows[f"chern_bootstrap[{b}]"].mean for b in cfg.protocol.batch_sizes if b >= 200}
    ok = ideal == 0 and rows["chern"].mean == 1 and boots and all(v > 0.9 for v in boots.values())
    _report(acceptance, 4, ok, f"phase B -> 1, A_Z -> 0 (deviation {ideal}); noisy chern {rows['chern'].mean:g}, "
                               f"bootstrap means {boots} (> 0.9)")


def _quench_trace(theta_z, theta_xy=-0.125, depth=12):
    cfg = parse_config({"protocol": {"kind": "quench", "theta_xy": theta_xy, "theta_z": theta_z, "depth": depth},
                        "noise": None, "trajectories": 1})
    rows = _rows(*simulate(cfg), cfg.postselection)
    return np.array([rows[f"n_depth{d}"].mean for d in range(depth + 1)])


def test_5_emergent_conservation(acceptance):
    cz = _quench_trace(1.0)  # |theta_z / theta_xy| = 8
    free = _quench_trace(-0.125)  # ratio 1
    ratios = [(cz[d] - cz[0]) / (free[d] - free[0]) for d in (6, 12)]
    sec = Sector.of(build_lattice(4, 8, "cylinder"))
    tz = np.arange(0, 2.001, 0.25)
    nc = nonconservation_sweep(sec, -0.125, tz)
    ok = max(ratios) < 0.25 and tz[int(np.argmin(nc))] == 1.0
    _report(acceptance, 5, ok, f"revival excess ratio at depths 6, 12: {ratios[0]:.3f}, {ratios[1]:.3f} (< 0.25); "
                               f"nonconservation minimum at theta_z {tz[int(np.argmin(nc))]:g}")


def _monotone_within_ci(rows):
    """Each tighter threshold's mean is not below the looser one by more than their joint CI."""
    for a, b in zip(rows, rows[1:]):
        slack = (a.ci_high - a.mean) + (b.mean - b.ci_low)
        if b.mean < a.mean - slack:
            return False
    return True


def test_6_exchange(acceptance):
    ideal = check_exchange()
    cfg = _preset("fig4fg_exchange")
    base = dataclasses.replace(cfg, sweep=None)
    exp, snaps = simulate(base)
    thr = cfg.sweep.axes["postselection.decoding_threshold"]
    rows = [_rows(exp, snaps, dataclasses.replace(cfg.postselection, decoding_threshold=t))["contrast"] for t in thr]
    ok = ideal < 1e-9 and _monotone_within_ci(rows) and rows[-1].mean > rows[0].mean
    trend = ", ".join(f"{t}: {r.mean:.3f}" for t, r in zip(thr, rows))
    _report(acceptance, 6, ok, f"ideal deviation {ideal:.1e} (FullExchange 0, HopAndReturn 1, contrast 1); "
                               f"noisy contrast by threshold {trend}")


def test_7_correlation_asymmetry(acceptance):
    cfg = _preset("fig4e_corr")
    rows = _rows(*simulate(cfg), cfg.postselection)
    d1, d2 = rows["asymmetry_d1"].mean, rows["asymmetry_d2"].mean
    ideal = parse_config({**cfg.raw, "noise": None, "trajectories": 1})
    i2 = _rows(*simulate(ideal), ideal.postselection)["asymmetry_d2"].mean
    ok = d1 >= 2 and d2 < 1.3 and 1 / 1.3 < i2 < 1.3
    _report(acceptance, 7, ok, f"asymmetry d=1 {d1:.2f} (>= 2), d=2 {d2:.2f} (< 1.3), noiseless d=2 {i2:.2f}")


def test_8_hubbard(acceptance):
    m = HubbardModel(1, 2)
    free = m.free_trace(HubbardSpec(theta_u=0.0))
    exact0 = m.oracle_trace(HubbardSpec(theta_u=0.0))
    us = [0.25, 0.5, 0.75, 1.0]
    finals = [float(free[-1])] + [float(m.oracle_trace(HubbardSpec(theta_u=u))[-1]) for u in us]
    diffs = np.diff(finals)
    err = float(np.abs(free - exact0).max())
    ok = err < 1e-8 and finals[1] > finals[0] and np.any(diffs > 0) and np.any(diffs < 0)
    _report(acceptance, 8, ok, f"U=0 oracle vs free {err:.1e} (< 1e-8); final m_s vs theta_u "
                               f"{dict(zip([0.0] + us, [round(f, 3) for f in finals]))}")


def test_9_identities(acceptance):
    err = check_identities(100)
    _report(acceptance, 9, err < 1e-12, f"ZZ/CP and string identities over 100 angles: {err:.1e} (< 1e-12)")


@pytest.mark.parametrize("name,n", [("fig3_chern", 200)])
def test_10_determinism(acceptance, tmp_path, name, n):
    cfg = _preset(name, trajectories=n)
    run(cfg, tmp_path / "w1", workers=1)
    run(cfg, tmp_path / "w3", workers=3)
    a, b = (tmp_path / d / "summary.csv" for d in ("w1", "w3"))
    _report(acceptance, 10, a.read_bytes() == b.read_bytes(), f"{name} summary.csv identical for 1 and 3 workers")
