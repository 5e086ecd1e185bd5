import numpy as np
import pytest

from kfsim.checks import vacuum_oracle
from kfsim.chern import (InsufficientSamples, StringTable, bootstrap_chern, bulk_average, fourier_bloch,
                         assemble_blocks, k_grid, string_catalog, table_chern, table_from_samples)
from kfsim.gaussian import FloquetCycle, Sector, evolve, ground_state, vacuum_state
from kfsim.lattice import build_lattice
from kfsim.protocols import ABELIAN_II_ANGLES, PHASE_B_ANGLES, prepared_state


@pytest.fixture(scope="module")
def catalog48(sector48):
    return string_catalog(sector48)


def test_catalog_size(catalog48):
    # 24 bulk cells x (9 offsets x 4 blocks - 2 on-site diagonal blocks)
    assert len(catalog48) == 24 * 34


def test_catalog_conversion_signs_against_oracle(rng):
    lat = build_lattice(2, 3, "cylinder")  # 16 qubits, 2 bulk cells
    sec = Sector.of(lat)
    dense = vacuum_oracle(sec, rng)
    cyc = FloquetCycle.from_types(lat, [("X", 0.31), ("Y", -0.52), ("Z", 0.77), ("X", 0.2)])
    g = evolve(vacuum_state(sec), sec, cyc)
    for layer in cyc.layers:
        for k in layer.links:
            dense.pauli_rotation(sec.enc.link_op(k), layer.theta * np.pi / 4)
    for e in string_catalog(sec):
        # measured value times conv equals the gauge-fixed table entry tau * Gamma_ij
        assert abs(e.conv * dense.expectation(e.pauli) - e.tau * g[e.i, e.j]) < 1e-9


def test_kitaev_phases(sector48):
    assert table_chern(bulk_average(ground_state(sector48.kitaev(1, 1, 1, 0.1)), sector48)).chern == 1
    assert table_chern(bulk_average(ground_state(sector48.kitaev(1, 1, 1, -0.1)), sector48)).chern == -1
    assert table_chern(bulk_average(ground_state(sector48.kitaev(0.2, 0.2, 1, 0.05)), sector48)).chern == 0


def test_prepared_phases(sector48):
    rb = table_chern(bulk_average(prepared_state(sector48, PHASE_B_ANGLES), sector48))
    ra = table_chern(bulk_average(prepared_state(sector48, ABELIAN_II_ANGLES), sector48))
    assert rb.chern == 1 and ra.chern == 0
    assert rb.min_gap > 0.5
    assert abs(rb.curvature.sum() - 2 * np.pi) < 1e-9


def test_table_json_roundtrip(sector48):
    t = bulk_average(prepared_state(sector48, PHASE_B_ANGLES), sector48)
    t2 = StringTable.from_json(t.to_json())
    assert t2.values == pytest.approx(t.values) and t2.counts == t.counts


def test_bad_table_rejected():
    with pytest.raises(ValueError):
        StringTable({((2, 0), "ee"): 0.1})
    with pytest.raises(ValueError):
        StringTable({((0, 0), "eo"): 1.5})


def test_samples_reproduce_exact_table(sector48, catalog48):
    g = prepared_state(sector48, PHASE_B_ANGLES)
    exact = bulk_average(g, sector48, catalog48)
    # noiseless expectation samples: conv * <P> = tau * Gamma
    raw = np.array([[e.conv * e.tau * g[e.i, e.j] for e in catalog48]] * 3)
    t = table_from_samples(raw, catalog48)
    assert max(abs(t.values[k] - exact.values[k]) for k in exact.values) < 1e-12
    nan = np.full_like(raw, np.nan)
    with pytest.raises(InsufficientSamples):
        table_from_samples(nan, catalog48)


def test_bootstrap_on_sampled_outcomes(sector48, catalog48):
    rng = np.random.default_rng(7)
    g = prepared_state(sector48, PHASE_B_ANGLES)
    mean = np.array([e.conv * e.tau * g[e.i, e.j] for e in catalog48])
    shots = np.where(rng.random((400, len(mean))) < (1 + mean) / 2, 1.0, -1.0)
    res = bootstrap_chern(shots, catalog48, 200, 20, rng)
    assert res.mean > 0.9 and res.ci_low <= res.mean <= res.ci_high
    with pytest.raises(ValueError):
        bootstrap_chern(shots, catalog48, 200, 0, rng)
    with pytest.raises(InsufficientSamples):
        bootstrap_chern(shots, catalog48, 10, 2, rng, accepted=np.zeros(400, dtype=bool))


def test_grid_checks(sector48):
    assert k_grid(5).shape[0] == 5
    blocks = assemble_blocks(bulk_average(prepared_state(sector48, PHASE_B_ANGLES), sector48))
    with pytest.raises(ValueError):
        fourier_bloch(blocks, 2)
    for n in (5, 7, 9):
        from kfsim.chern import chern_number
        assert chern_number(fourier_bloch(blocks, n)).chern == 1
