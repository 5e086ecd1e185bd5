import numpy as np
from hypothesis import given, strategies as st

from kfsim.pauli import PauliString, commutes, gf2_nullspace, gf2_solve, multiply, product, symplectic

N = 4


@st.composite
def paulis(draw, n=N):
    letters = draw(st.lists(st.sampled_from("IXYZ"), min_size=n, max_size=n))
    phase = draw(st.integers(0, 3))
    return PauliString({q: l for q, l in enumerate(letters)}, phase)


@given(paulis(), paulis())
def test_product_matches_matrices(p, q):
    m = multiply(p, q).to_matrix(N)
    assert np.allclose(m, p.to_matrix(N) @ q.to_matrix(N))


@given(paulis(), paulis(), paulis())
def test_associative(p, q, r):
    assert (p * q) * r == p * (q * r)


@given(paulis(), paulis())
def test_commutes_matches_matrices(p, q):
    a, b = p.to_matrix(N), q.to_matrix(N)
    assert commutes(p, q) == np.allclose(a @ b, b @ a)


@given(paulis())
def test_square_is_identity_up_to_phase(p):
    sq = p * p
    assert sq.support == {}
    assert sq.phase == (2 * p.phase) % 4


def test_identity_letters_dropped():
    p = PauliString({0: "I", 3: "X"})
    assert p.support == {3: "X"} and p.weight == 1


def test_from_letters_and_text():
    p = PauliString.from_letters([2, 0], "ZX", phase=2)
    assert p == PauliString({0: "X", 2: "Z"}, 2)
    assert p.text() == "- X@0 Z@2"
    assert PauliString.identity().text() == "+ I"


def test_xy_is_iz():
    assert PauliString({0: "X"}) * PauliString({0: "Y"}) == PauliString({0: "Z"}, 1)


def test_symplectic():
    v = symplectic(PauliString({0: "X", 1: "Y", 2: "Z"}), 3)
    assert v.tolist() == [1, 1, 0, 0, 1, 1]


def test_product_empty():
    assert product([]) == PauliString.identity()


def test_gf2_solve_and_nullspace():
    gens = np.array([[1, 1, 0], [0, 1, 1]], dtype=np.uint8)
    x = gf2_solve(gens, np.array([1, 0, 1], dtype=np.uint8))
    assert x is not None and ((x @ gens) % 2).tolist() == [1, 0, 1]
    assert gf2_solve(gens, np.array([1, 0, 0], dtype=np.uint8)) is None
    rows = np.array([[1, 1, 0], [1, 1, 0], [0, 1, 1]], dtype=np.uint8)
    ns = gf2_nullspace(rows)
    assert ns.tolist() == [[1, 1, 0]]  # only the repeated row cancels
    assert not ((ns @ rows) % 2).any()
