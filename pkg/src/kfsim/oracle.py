"""Small dense statevector simulator, used as the reference for everything else.

Qubit ``q`` lives on bit ``n - 1 - q`` of the basis index, so qubit 0 is the most
significant bit (the same convention as ``PauliString.to_matrix``).
"""
from __future__ import annotations

import numpy as np

from kfsim.pauli import PauliString

MAX_QUBITS = 22


class TooLarge(ValueError):
    pass


_H = np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2)
_S = np.diag([1, 1j])
_PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.diag([1.0 + 0j, -1.0]),
}


def rotation(axis: str, theta: float) -> np.ndarray:
    """``exp(-i theta/2 sigma_axis)``."""
    p = _PAULI[axis.upper()]
    return np.cos(theta / 2) * np.eye(2) - 1j * np.sin(theta / 2) * p


def cp_matrix(theta: float) -> np.ndarray:
    """Controlled phase ``diag(1, 1, 1, exp(i pi theta))``; ``theta=1`` is CZ."""
    return np.diag([1, 1, 1, np.exp(1j * np.pi * theta)])


def controlled(u: np.ndarray) -> np.ndarray:
    out = np.eye(4, dtype=complex)
    out[2:, 2:] = u
    return out


CNOT = controlled(_PAULI["X"])
CY = controlled(_PAULI["Y"])
CZ = controlled(_PAULI["Z"])


class DenseState:
    def __init__(self, n: int, amps: np.ndarray | None = None):
        if n > MAX_QUBITS:
            raise TooLarge(f"{n} qubits > {MAX_QUBITS}")
        self.n = n
        if amps is None:
            amps = np.zeros(2**n, dtype=complex)
            amps[0] = 1.0
        self.amps = np.asarray(amps, dtype=complex)
        if self.amps.shape != (2**n,):
            raise ValueError("amplitude vector has the wrong length")

    @classmethod
    def zeros(cls, n: int) -> DenseState:
        return cls(n)

    @classmethod
    def product(cls, letters: str) -> DenseState:
        """Product state from characters in ``01+-``."""
        vecs = {"0": [1, 0], "1": [0, 1], "+": [1, 1], "-": [1, -1]}
        v = np.ones(1, dtype=complex)
        for ch in letters:
            w = np.array(vecs[ch], dtype=complex)
            v = np.kron(v, w / np.linalg.norm(w))
        return cls(len(letters), v)

    def copy(self) -> DenseState:
        return DenseState(self.n, self.amps.copy())

    def norm(self) -> float:
        return float(np.linalg.norm(self.amps))

    # gates -------------------------------------------------------------------
    def apply(self, u: np.ndarray, targets) -> DenseState:
        """Apply a ``2**k x 2**k`` unitary to qubits ``targets`` (first target most significant)."""
        targets = list(targets)
        k = len(targets)
        psi = self.amps.reshape([2] * self.n)
        psi = np.moveaxis(psi, targets, range(k))
        shape = psi.shape
        psi = (u @ psi.reshape(2**k, -1)).reshape(shape)
        self.amps = np.moveaxis(psi, range(k), targets).reshape(-1)
        return self

    def h(self, q):
        return self.apply(_H, [q])

    def s(self, q):
        return self.apply(_S, [q])

    def rot(self, axis: str, theta: float, q: int):
        return self.apply(rotation(axis, theta), [q])

    def cp(self, theta: float, a: int, b: int):
        return self.apply(cp_matrix(theta), [a, b])

    def cnot(self, c: int, t: int):
        return self.apply(CNOT, [c, t])

    def cy(self, c: int, t: int):
        return self.apply(CY, [c, t])

    def cz(self, a: int, b: int):
        return self.apply(CZ, [a, b])

    def pauli_rotation(self, p: PauliString, theta: float) -> DenseState:
        """``exp(i theta P)`` for a Hermitian Pauli string."""
        self.amps = np.cos(theta) * self.amps + 1j * np.sin(theta) * _apply_pauli(p, self.amps, self.n)
        return self

    # readout -----------------------------------------------------------------
    def apply_pauli(self, p: PauliString) -> np.ndarray:
        return _apply_pauli(p, self.amps, self.n)

    def expectation(self, p: PauliString) -> complex | float:
        v = np.vdot(self.amps, _apply_pauli(p, self.amps, self.n))
        return float(v.real) if p.is_hermitian() else complex(v)

    def measure(self, p: PauliString, rng: np.random.Generator) -> int:
        """Projective measurement of a Hermitian Pauli; collapses the state."""
        pp = _apply_pauli(p, self.amps, self.n)
        prob_plus = min(1.0, max(0.0, 0.5 * (1 + np.vdot(self.amps, pp).real)))
        out = 1 if rng.random() < prob_plus else -1
        proj = 0.5 * (self.amps + out * pp)
        self.amps = proj / np.linalg.norm(proj)
        return out

    def probabilities(self, qubits) -> np.ndarray:
        """Marginal distribution over computational-basis outcomes of ``qubits``."""
        return _marginal(self.amps, self.n, list(qubits))


def _marginal(amps, n, qubits):
    p = np.abs(amps.reshape([2] * n)) ** 2
    p = np.moveaxis(p, qubits, range(len(qubits)))
    return p.reshape(2 ** len(qubits), -1).sum(axis=1)


def _masks(p: PauliString, n: int) -> tuple[int, int, int]:
    x = z = ny = 0
    for q, l in p.support.items():
        if q >= n:
            raise IndexError(f"Pauli acts on qubit {q} of {n}")
        bit = 1 << (n - 1 - q)
        if l in "XY":
            x |= bit
        if l in "ZY":
            z |= bit
        ny += l == "Y"
    return x, z, ny


def _apply_pauli(p: PauliString, amps: np.ndarray, n: int) -> np.ndarray:
    """``P |psi>``: Z part as per-axis signs, then X part as per-axis flips (Y = i X Z)."""
    _masks(p, n)  # range check
    t = amps.reshape([2] * n)
    zs = [q for q, l in p.support.items() if l in "ZY"]
    xs = tuple(q for q, l in p.support.items() if l in "XY")
    if zs:
        t = t.copy()
        for q in zs:
            idx = [slice(None)] * n
            idx[q] = 1
            t[tuple(idx)] *= -1
    if xs:
        t = np.flip(t, axis=xs)
    ny = sum(l == "Y" for l in p.support.values())
    return (1j ** ((ny + p.phase) % 4)) * t.reshape(-1)


def correlation_from_state(state: DenseState, majoranas) -> np.ndarray:
    """``Gamma_ij = i <c_i c_j>`` for ``i != j`` with Majorana Pauli strings ``majoranas``."""
    m = len(majoranas)
    cpsi = [_apply_pauli(c, state.amps, state.n) for c in majoranas]
    g = np.zeros((m, m))
    for i in range(m):
        for j in range(i + 1, m):
            v = 1j * np.vdot(cpsi[i], cpsi[j])  # <c_i c_j> = <c_i psi | c_j psi>
            g[i, j] = v.real
            g[j, i] = -v.real
    return g


def hamiltonian_matrix(terms, n: int) -> np.ndarray:
    """Dense ``sum coef * P`` from ``(coef, PauliString)`` pairs."""
    if n > 14:
        raise TooLarge("dense Hamiltonian matrix limited to 14 qubits")
    h = np.zeros((2**n, 2**n), dtype=complex)
    for coef, p in terms:
        h += coef * p.to_matrix(n)
    return h
