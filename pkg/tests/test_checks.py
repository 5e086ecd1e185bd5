import time

import numpy as np
import pytest

import kfsim.gaussian
from kfsim.checks import (check_chern, check_exchange, check_identities, check_prep_fixed_point, oracle_equivalence,
                          run_suite, wick_check)
from kfsim.cli import EXIT_FAIL, main
from kfsim.lattice import build_lattice


@pytest.fixture
def flipped_rotation(monkeypatch):
    """Inject a sign-convention bug: link gates rotate the Majorana pair the wrong way."""
    orig = kfsim.gaussian._rotate_pairs
    monkeypatch.setattr(kfsim.gaussian, "_rotate_pairs", lambda g, a, b, c, s: orig(g, a, b, c, -np.asarray(s)))


def test_wick_check_passes():
    assert wick_check() < 1e-9
    assert wick_check(seed=3, lat=build_lattice(1, 2, "open")) < 1e-9


def test_wick_check_catches_sign_bug(flipped_rotation):
    assert wick_check() > 1e-3


def test_oracle_catches_sign_bug(flipped_rotation):
    assert oracle_equivalence(10) > 1e-3


def test_validate_fails_under_mutation(flipped_rotation, capsys):
    assert main(["validate", "--fast"]) == EXIT_FAIL
    out = capsys.readouterr().out
    assert any(line.startswith("FAIL") and "wick_four_point" in line for line in out.splitlines())


def test_individual_checks():
    assert check_prep_fixed_point() == 0.0
    assert check_identities(10) < 1e-12
    assert check_exchange() < 1e-9
    assert check_chern() == 0


def test_full_suite_passes_quickly():
    t0 = time.perf_counter()
    res = run_suite()
    assert all(r.ok for r in res), [r.line() for r in res if not r.ok]
    assert time.perf_counter() - t0 < 300
    assert {r.name for r in res} >= {"wick_four_point", "oracle_single_plaquette", "hubbard_free_vs_oracle"}
