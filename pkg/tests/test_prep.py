import time

import numpy as np
import pytest
from hypothesis import given, strategies as st

from kfsim.lattice import build_lattice
from kfsim.noise import NoiseModel
from kfsim.prep import (InvalidPattern, PrepMethod, UnpairableColumn, build_prep_circuit, check_pattern,
                        check_profile, column_parity_violations, feedforward_decode, flip_map, prep_observables,
                        run_prep_circuit, sample_prep, zxxz_operator)
from kfsim.pauli import commutes


def _values(lat, out):
    return {k: [out.state.peek(p) for p in v] for k, v in prep_observables(lat).items()}


@pytest.mark.parametrize("method", list(PrepMethod))
@pytest.mark.parametrize("seed", [0, 1, 2])
def test_noiseless_fixed_point(lat48, method, seed):
    out = run_prep_circuit(lat48, method, rng=np.random.default_rng(seed))
    vals = _values(lat48, out)
    assert all(v == 1 for vs in vals.values() for v in vs)
    assert out.column_violations == 0


def test_fixed_point_fast(lat48):
    t0 = time.perf_counter()
    run_prep_circuit(lat48, rng=np.random.default_rng(0))
    assert time.perf_counter() - t0 < 1.0


def test_open_lattice_fixed_point():
    lat = build_lattice(2, 3, "open")
    out = run_prep_circuit(lat, rng=np.random.default_rng(3))
    assert all(v == 1 for vs in _values(lat, out).values() for v in vs)


def test_target_flux_pattern(lat48):
    t = np.ones(32, dtype=int)
    col = sorted(lat48.columns[2])
    t[col[0]] = t[col[1]] = -1
    out = run_prep_circuit(lat48, target=t, rng=np.random.default_rng(0))
    plaq = [out.state.peek(p) for p in prep_observables(lat48)["plaquettes"]]
    assert plaq == t.tolist()


def test_odd_column_target_rejected(lat48):
    t = np.ones(32, dtype=int)
    t[0] = -1
    with pytest.raises(InvalidPattern):
        check_pattern(lat48, t)


def test_zxxz_operators_commute(lat48):
    ops = [zxxz_operator(lat48, p) for p in range(32)]
    assert all(z.weight in (3, 4) for z in ops)  # truncated at the open edges
    assert all(commutes(a, b) for a in ops for b in ops)


@given(st.lists(st.sampled_from([-1, 1]), min_size=32, max_size=32), st.integers(0, 1000))
def test_decoder_reaches_target(outcomes, seed):
    lat = _LAT
    o = np.array(outcomes)
    if column_parity_violations(lat, o):
        with pytest.raises(UnpairableColumn):
            feedforward_decode(lat, o, rng=np.random.default_rng(seed))
        return
    fix = feedforward_decode(lat, o, rng=np.random.default_rng(seed))
    fm = flip_map(lat)
    flipped = o.copy()
    for s in fix:
        for p in fm[s]:
            flipped[p] *= -1
    assert (flipped == 1).all()


_LAT = build_lattice(4, 8, "cylinder")


def test_circuit_depths(lat48):
    c32 = build_prep_circuit(lat48, "ZXXZ32")
    c16 = build_prep_circuit(lat48, "ZXXZ16")
    assert c32.n_anc == 32 and c16.n_anc == 16
    assert len(c16.rounds) == 2


def test_profiles():
    for p in ("distributed", "per_gate_layer", "final", "initial", "mixed:0.25"):
        check_profile(p)
    for p in ("bogus", "mixed:2", "mixed:x"):
        with pytest.raises(ValueError):
            check_profile(p)


def test_sampler_noiseless_and_seeded(lat48):
    s = sample_prep(lat48, "ZXXZ32", NoiseModel.noiseless(), 64, np.random.default_rng(0))
    assert (s.plaquettes == 1).all() and (s.zz_links == 1).all() and (s.loops == 1).all()
    a = sample_prep(lat48, "ZXXZ32", NoiseModel(), 256, np.random.default_rng(5))
    b = sample_prep(lat48, "ZXXZ32", NoiseModel(), 256, np.random.default_rng(5))
    assert (a.plaquettes == b.plaquettes).all() and (a.column_violations == b.column_violations).all()


def test_noisy_parity_band(lat48):
    # quick version of the calibration check; the full one lives in the acceptance suite
    s = sample_prep(lat48, "ZXXZ32", NoiseModel(), 8000, np.random.default_rng(11))
    assert 0.39 < s.plaquettes.mean() < 0.47
    acc = s.accept(0)
    assert s.plaquettes[acc].mean() > s.plaquettes.mean()
