import numpy as np
import pytest
from hypothesis import given, strategies as st

from kfsim.encoding import Encoding, NotInStabilizerGroup
from kfsim.lattice import build_lattice
from kfsim.pauli import PauliString, commutes, multiply


@pytest.fixture(scope="module")
def enc(lat48):
    return Encoding(lat48)


def test_majoranas_anticommute(enc):
    maj = enc.majoranas
    assert len(maj) == 72
    for a in range(0, 72, 7):
        for b in range(72):
            assert commutes(maj[a], maj[b]) == (a == b)
            assert maj[b].is_hermitian()


def test_majoranas_commute_with_generators(enc):
    for c in enc.majoranas[::5]:
        assert all(commutes(c, g) for g in enc.generators)


def test_generators_commute(enc):
    gens = enc.generators
    assert len(gens) == 32 + 9
    assert all(commutes(g, h) for g in gens for h in gens)


def test_relations_rank(enc):
    # 41 generators with rank 33 on the 4x8 cylinder
    assert len(enc.relations) == 8
    vals = enc.generator_values()
    assert enc.consistent(vals)
    vals[0] = -1
    assert not enc.consistent(vals)


def test_link_equals_bilinear_times_stabilizers(enc):
    for k, l in enumerate(enc.lat.links):
        u, gens = enc.link_signs[k]
        rhs = enc.bilinear(l.a, l.b).scaled(0 if u == 1 else 2)
        for g in gens:
            rhs = multiply(rhs, enc.generators[g])
        assert rhs == enc.link_op(k)


def test_pairs_oriented(enc):
    for a, b in enc.pairs:
        k = enc.lat.link_between(a, b)
        if k is not None:
            same = (a, b) == enc.lat.links[k].sites
            assert enc.link_bilinear_sign(k) * (1 if same else -1) == 1


def test_decompose_rejects_non_stabilizers(enc):
    with pytest.raises(NotInStabilizerGroup):
        enc.decompose(PauliString({0: "X"}))
    s, gens = enc.decompose(multiply(enc.generators[3], enc.generators[7]))
    assert s == 1 and gens == (3, 7)


@given(st.integers(0, 71), st.integers(0, 71))
def test_majorana_string_is_exact(i, j):
    if i == j:
        return
    enc = _ENC
    es = enc.majorana_string(i, j)
    rhs = enc.bilinear(i, j)
    for g in es.generators:
        rhs = multiply(enc.generators[g], rhs)
    assert rhs == es.pauli
    assert es.sign_in(enc.generator_values()) == 1


_ENC = Encoding(build_lattice(4, 8, "cylinder"))


def test_pair_creation_anticommutes_with_two_dimers(enc):
    lat = enc.lat
    zz = {p: enc.bilinear(*enc.pairs[p]) for p in range(len(enc.pairs))}
    for p, q in [(0, 1), (5, 20), (10, 11)]:
        es = enc.pair_creation_string(p, q)
        flipped = [r for r in zz if not commutes(es.pauli, zz[r])]
        assert sorted(flipped) == sorted([p, q])
        assert all(commutes(es.pauli, g) for g in enc.generators)


def test_open_single_plaquette():
    enc = Encoding(build_lattice(1, 1, "open"))
    assert len(enc.generators) == 1 and enc.relations == []
    assert len(enc.pairs) == 3
