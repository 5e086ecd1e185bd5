"""Stabilizer tableau (Aaronson-Gottesman) and a vectorized Pauli-frame propagator."""
from __future__ import annotations

import numpy as np

from kfsim.pauli import PauliString


def _g(x1, z1, x2, z2):
    """Power of i picked up when multiplying Pauli (x1, z1) into (x2, z2), per qubit."""
    x1 = x1.astype(np.int8)
    z1 = z1.astype(np.int8)
    x2 = x2.astype(np.int8)
    z2 = z2.astype(np.int8)
    out = np.zeros_like(x1)
    y = (x1 == 1) & (z1 == 1)
    xo = (x1 == 1) & (z1 == 0)
    zo = (x1 == 0) & (z1 == 1)
    out[y] = (z2 - x2)[y]
    out[xo] = (z2 * (2 * x2 - 1))[xo]
    out[zo] = (x2 * (1 - 2 * z2))[zo]
    return out


class CliffordState:
    """``n``-qubit stabilizer state, initialised to ``|0...0>``.

    Rows ``0..n-1`` are destabilizers, ``n..2n-1`` stabilizers, each ``(-1)**r * X^x Z^z`` with
    ``x = z = 1`` read as Y.
    """

    def __init__(self, n: int):
        self.n = n
        self.x = np.zeros((2 * n, n), dtype=bool)
        self.z = np.zeros((2 * n, n), dtype=bool)
        self.r = np.zeros(2 * n, dtype=bool)
        self.x[np.arange(n), np.arange(n)] = True
        self.z[n + np.arange(n), np.arange(n)] = True

    def copy(self) -> CliffordState:
        out = CliffordState.__new__(CliffordState)
        out.n = self.n
        out.x, out.z, out.r = self.x.copy(), self.z.copy(), self.r.copy()
        return out

    # gates -------------------------------------------------------------------
    def h(self, a: int):
        self.r ^= self.x[:, a] & self.z[:, a]
        self.x[:, a], self.z[:, a] = self.z[:, a].copy(), self.x[:, a].copy()

    def s(self, a: int):
        self.r ^= self.x[:, a] & self.z[:, a]
        self.z[:, a] ^= self.x[:, a]

    def sdg(self, a: int):
        self.s(a)
        self.s(a)
        self.s(a)

    def cx(self, c: int, t: int):
        self.r ^= self.x[:, c] & self.z[:, t] & ~(self.x[:, t] ^ self.z[:, c])
        self.x[:, t] ^= self.x[:, c]
        self.z[:, c] ^= self.z[:, t]

    def cz(self, a: int, b: int):
        self.h(b)
        self.cx(a, b)
        self.h(b)

    def cy(self, c: int, t: int):
        self.sdg(t)
        self.cx(c, t)
        self.s(t)

    def pauli(self, a: int, letter: str):
        if letter == "X":
            self.r ^= self.z[:, a]
        elif letter == "Z":
            self.r ^= self.x[:, a]
        elif letter == "Y":
            self.r ^= self.x[:, a] ^ self.z[:, a]

    def apply_pauli_string(self, p: PauliString):
        for q, l in p.support.items():
            self.pauli(q, l)

    # measurement ---------------------------------------------------------------
    def _vec(self, p: PauliString):
        x = np.zeros(self.n, dtype=bool)
        z = np.zeros(self.n, dtype=bool)
        for q, l in p.support.items():
            x[q] = l in "XY"
            z[q] = l in "ZY"
        return x, z

    def _rowsum(self, h: int, i: int):
        tot = 2 * int(self.r[h]) + 2 * int(self.r[i]) + int(_g(self.x[i], self.z[i], self.x[h], self.z[h]).sum())
        self.r[h] = (tot % 4) == 2
        self.x[h] ^= self.x[i]
        self.z[h] ^= self.z[i]

    def _anticommuting_rows(self, x, z):
        return ((self.x & z[None, :]).sum(1) + (self.z & x[None, :]).sum(1)) % 2 == 1

    def peek(self, p: PauliString) -> int | None:
        """Deterministic value (+1/-1) of ``p`` or None if random."""
        if p.phase % 2:
            raise ValueError("non-Hermitian Pauli")
        x, z = self._vec(p)
        anti = self._anticommuting_rows(x, z)
        if anti[self.n:].any():
            return None
        # accumulate the stabilizers paired with anticommuting destabilizers
        sx = np.zeros(self.n, dtype=bool)
        sz = np.zeros(self.n, dtype=bool)
        phase = 0  # power of i
        for i in np.nonzero(anti[: self.n])[0]:
            k = i + self.n
            phase += 2 * int(self.r[k]) + int(_g(self.x[k], self.z[k], sx, sz).sum())
            sx ^= self.x[k]
            sz ^= self.z[k]
        # the product is i**phase * X^sx Z^sz (with Y as XZ-bits) and equals +-P
        val = 1 if phase % 4 == 0 else -1
        return val * (1 if p.phase == 0 else -1)

    def measure_pauli(self, p: PauliString, rng: np.random.Generator | None = None, forced: int | None = None) -> int:
        """Measure a Hermitian Pauli; returns +-1 and collapses the state."""
        if p.weight == 0:
            raise ValueError("identity measurement")
        det = self.peek(p)
        if det is not None:
            return det
        x, z = self._vec(p)
        anti = self._anticommuting_rows(x, z)
        n = self.n
        piv = n + int(np.nonzero(anti[n:])[0][0])
        for i in np.nonzero(anti)[0]:
            if i != piv:
                self._rowsum(int(i), piv)
        self.x[piv - n], self.z[piv - n], self.r[piv - n] = self.x[piv], self.z[piv], self.r[piv]
        if forced is not None:
            out = forced
        else:
            out = 1 if (rng if rng is not None else np.random.default_rng()).random() < 0.5 else -1
        self.x[piv], self.z[piv] = x, z
        self.r[piv] = (out == -1) ^ (p.phase == 2)
        return out

    def measure_z(self, a: int, rng=None) -> int:
        return self.measure_pauli(PauliString({a: "Z"}), rng)

    def measure_x(self, a: int, rng=None) -> int:
        return self.measure_pauli(PauliString({a: "X"}), rng)

    def reset(self, a: int, rng=None):
        if self.measure_z(a, rng) == -1:
            self.pauli(a, "X")

    def stabilizers(self) -> list[PauliString]:
        out = []
        for i in range(self.n, 2 * self.n):
            sup = {}
            for q in np.nonzero(self.x[i] | self.z[i])[0]:
                sup[int(q)] = "Y" if (self.x[i, q] and self.z[i, q]) else ("X" if self.x[i, q] else "Z")
            out.append(PauliString(sup, 2 if self.r[i] else 0))
        return out


class FrameBatch:
    """Pauli frames for ``shots`` noisy copies of a reference circuit, bit-packed as bools."""

    def __init__(self, shots: int, n: int):
        self.shots = shots
        self.n = n
        self.x = np.zeros((shots, n), dtype=bool)
        self.z = np.zeros((shots, n), dtype=bool)

    def h(self, a):
        self.x[:, a], self.z[:, a] = self.z[:, a].copy(), self.x[:, a].copy()

    def s(self, a):
        self.z[:, a] ^= self.x[:, a]

    def cx(self, c, t):
        self.x[:, t] ^= self.x[:, c]
        self.z[:, c] ^= self.z[:, t]

    def cz(self, a, b):
        self.z[:, a] ^= self.x[:, b]
        self.z[:, b] ^= self.x[:, a]

    def cy(self, c, t):
        self.z[:, t] ^= self.x[:, t]
        self.cx(c, t)
        self.z[:, t] ^= self.x[:, t]

    def depolarize(self, qubits, p: float, rng: np.random.Generator, mask=None):
        """Uniform X/Y/Z with total probability ``p`` on each listed qubit."""
        qubits = np.asarray(qubits, dtype=int)
        if p <= 0 or qubits.size == 0:
            return
        u = rng.random((self.shots, qubits.size))
        hit = u < p
        if mask is not None:
            hit &= mask
        kind = (u / p * 3).astype(np.int8)  # 0 X, 1 Y, 2 Z for hits
        self.x[:, qubits] ^= hit & (kind <= 1)
        self.z[:, qubits] ^= hit & (kind >= 1)

    def randomize(self, mask: np.ndarray, rng: np.random.Generator):
        """Fully depolarize the entries selected by ``mask`` (shots x n)."""
        self.x ^= mask & (rng.random(mask.shape) < 0.5)
        self.z ^= mask & (rng.random(mask.shape) < 0.5)

    def flips(self, obs_x: np.ndarray, obs_z: np.ndarray) -> np.ndarray:
        """Per shot and observable, whether the frame anticommutes with it.

        ``obs_x``/``obs_z`` are ``(n_obs, n)`` symplectic rows of the observables.
        """
        a = self.x.astype(np.uint8) @ obs_z.T.astype(np.uint8)
        b = self.z.astype(np.uint8) @ obs_x.T.astype(np.uint8)
        return ((a + b) % 2).astype(bool)


def observable_rows(paulis, n: int) -> tuple[np.ndarray, np.ndarray]:
    ox = np.zeros((len(paulis), n), dtype=bool)
    oz = np.zeros((len(paulis), n), dtype=bool)
    for k, p in enumerate(paulis):
        for q, l in p.support.items():
            ox[k, q] = l in "XY"
            oz[k, q] = l in "ZY"
    return ox, oz
