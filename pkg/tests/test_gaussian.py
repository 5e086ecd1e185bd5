import numpy as np
import pytest
import scipy.linalg
from hypothesis import given, strategies as st

from kfsim.checks import vacuum_oracle
from kfsim.gaussian import (FloquetCycle, GaplessSpectrum, InvariantBreach, LogBranchAmbiguity, NotGaussian,
                            QuadraticHamiltonian, Sector, apply_layer, check_gamma, cycle_orthogonal, densities,
                            density, density_density, effective_hamiltonian, energy, evolve, ground_state,
                            layer_generator, load_gamma, majorana_endpoints, orthogonal_log, pfaffian, save_gamma,
                            spectrum, string_rotation, total_particle_number, vacuum_state, wick_expectation)
from kfsim.lattice import build_lattice
from kfsim.oracle import DenseState, correlation_from_state, hamiltonian_matrix
from kfsim.pauli import PauliString

SMALL = build_lattice(1, 2, "open")  # 10 sites
SEC = Sector.of(SMALL)
angles = st.floats(-2, 2, allow_nan=False)


def test_vacuum_is_pure(sector48):
    g = vacuum_state(sector48)
    check_gamma(g)
    assert np.allclose(densities(g, sector48), 0)


def test_vacuum_matches_oracle(rng):
    st_ = vacuum_oracle(SEC, rng)
    assert np.abs(vacuum_state(SEC) - correlation_from_state(st_, SEC.enc.majoranas)).max() < 1e-12


@given(st.lists(st.tuples(st.sampled_from("XYZ"), angles), min_size=1, max_size=6), st.integers(0, 999))
def test_layers_match_oracle(spec, seed):
    rng = np.random.default_rng(seed)
    dense = vacuum_oracle(SEC, rng)
    cyc = FloquetCycle.from_types(SMALL, spec)
    g = evolve(vacuum_state(SEC), SEC, cyc)
    for layer in cyc.layers:
        for k in layer.links:
            dense.pauli_rotation(SEC.enc.link_op(k), layer.theta * np.pi / 4)
    assert np.abs(g - correlation_from_state(dense, SEC.enc.majoranas)).max() < 1e-9
    check_gamma(g)


@given(angles, angles)
def test_layer_generator_exponentiates(t1, t2):
    cyc = FloquetCycle.from_types(SMALL, [("X", t1), ("Z", t2)])
    o = cycle_orthogonal(SEC, cyc)
    o2 = np.eye(SEC.n)
    for layer in cyc.layers:
        o2 = scipy.linalg.expm(layer_generator(SEC, layer)) @ o2
    assert np.abs(o - o2).max() < 1e-10
    g0 = vacuum_state(SEC)
    assert np.abs(o @ g0 @ o.T - evolve(g0, SEC, cyc)).max() < 1e-12


def test_ground_state_matches_exact_diagonalisation():
    lat = build_lattice(1, 1, "open")
    sec = Sector.of(lat)
    terms = sec.kitaev_terms(1.0, 0.8, 0.6, 0.1)
    h = sec.hamiltonian(terms)
    g = ground_state(h)
    check_gamma(g)
    hm = hamiltonian_matrix([(c, p) for c, p, _, _ in terms], lat.n_data)
    penalty = sum(v * gen.to_matrix(lat.n_data) for gen, v in zip(sec.enc.generators, sec.generator_values))
    w, v = np.linalg.eigh(hm - 50 * penalty)
    dense = DenseState(lat.n_data, v[:, 0])
    assert np.abs(g - correlation_from_state(dense, sec.enc.majoranas)).max() < 1e-8
    assert abs(energy(h, g) - (w[0] + 50 * len(sec.enc.generators))) < 1e-8
    assert len(spectrum(h)) == lat.n_data // 2


def test_gapless_raises():
    with pytest.raises(GaplessSpectrum):
        ground_state(np.zeros((4, 4)))


def test_hamiltonian_must_be_skew():
    with pytest.raises(ValueError):
        QuadraticHamiltonian(np.eye(2))


def test_string_rotation_matches_oracle(rng):
    dense = vacuum_oracle(SEC, rng)
    es = SEC.enc.pair_creation_string(0, 3)
    g = string_rotation(vacuum_state(SEC), SEC, es, 0.4)
    dense.pauli_rotation(es.pauli, 0.4)
    assert np.abs(g - correlation_from_state(dense, SEC.enc.majoranas)).max() < 1e-12
    g2 = string_rotation(vacuum_state(SEC), SEC, es.pauli, 0.4)
    assert np.abs(g - g2).max() < 1e-12
    # angle pi/2 applies the string itself and creates the pair
    g3 = string_rotation(vacuum_state(SEC), SEC, es, np.pi / 2)
    n = densities(g3, SEC)
    assert np.allclose(n[[0, 3]], 1) and np.isclose(n.sum(), 2)


def test_majorana_endpoints_rejects_non_bilinear():
    with pytest.raises(NotGaussian):
        majorana_endpoints(SEC.enc, PauliString({0: "X"}))


def test_density_density_matches_oracle(rng):
    dense = vacuum_oracle(SEC, rng)
    cyc = FloquetCycle.from_types(SMALL, [("X", 0.3), ("Y", -0.7), ("Z", 0.45)])
    g = evolve(vacuum_state(SEC), SEC, cyc)
    for layer in cyc.layers:
        for k in layer.links:
            dense.pauli_rotation(SEC.enc.link_op(k), layer.theta * np.pi / 4)

    def nop(p):
        return SEC.enc.bilinear(*SEC.enc.pairs[p]).scaled(0 if SEC.pair_sign(p) == 1 else 2)

    for q in range(1, len(SEC.enc.pairs)):
        a, b = nop(0), nop(q)
        ea, eb, eab = dense.expectation(a), dense.expectation(b), dense.expectation(a * b)
        conn = (1 - ea - eb + eab) / 4 - (1 - ea) / 2 * (1 - eb) / 2
        assert abs(density_density(g, SEC, 0, q) - conn) < 1e-10
        assert abs(density(g, SEC, q) - (1 - eb) / 2) < 1e-10
    assert np.isclose(total_particle_number(g, SEC), densities(g, SEC).sum())


def test_pfaffian_squared_is_determinant(rng):
    for n in (2, 4, 6, 8):
        m = rng.normal(size=(n, n))
        m = m - m.T
        assert np.isclose(pfaffian(m) ** 2, np.linalg.det(m))
    m = np.array([[0, 1, 2, 3], [-1, 0, 4, 5], [-2, -4, 0, 6], [-3, -5, -6, 0]], dtype=float)
    assert np.isclose(pfaffian(m), 1 * 6 - 2 * 5 + 3 * 4)
    assert pfaffian(np.zeros((3, 3))) == 0


def test_wick_two_point(sector48):
    g = vacuum_state(sector48)
    a, b = sector48.enc.pairs[0]
    assert np.isclose(wick_expectation(g, [a, b]), -1j * g[a, b])
    with pytest.raises(ValueError):
        wick_expectation(g, [a, a])


@given(angles, angles)
def test_orthogonal_log_roundtrip(t1, t2):
    cyc = FloquetCycle.from_types(SMALL, [("X", t1 / 4), ("Y", t2 / 4), ("Z", 0.3)])
    try:
        h = effective_hamiltonian(SEC, cyc)
    except LogBranchAmbiguity:
        return
    assert np.abs(scipy.linalg.expm(h.a_matrix) - cycle_orthogonal(SEC, cyc)).max() < 1e-8


def test_log_branch_cut():
    with pytest.raises(LogBranchAmbiguity):
        orthogonal_log(-np.eye(2))


def test_check_gamma_flags_bad_matrices():
    with pytest.raises(InvariantBreach):
        check_gamma(np.ones((2, 2)))
    with pytest.raises(InvariantBreach):
        check_gamma(np.zeros((2, 2)))  # mixed, not pure
    check_gamma(np.zeros((2, 2)), pure=False)


def test_density_out_of_range():
    g = 2 * vacuum_state(SEC)
    with pytest.raises(InvariantBreach):
        density(g, SEC, 0)


def test_gamma_dump_roundtrip(tmp_path, lat48, sector48):
    g = apply_layer(vacuum_state(sector48), sector48, FloquetCycle.from_types(lat48, [("X", 0.3)]).layers[0])
    p = save_gamma(tmp_path / "g.bin", g, lat48, note="x")
    assert p.stat().st_size == 72 * 72 * 8
    g2, side = load_gamma(p)
    assert (g2 == g).all() and side["note"] == "x" and side["shape"] == [72, 72]
    raw = np.frombuffer(p.read_bytes(), dtype="<f8").reshape(72, 72)
    assert (raw == g).all()
