"""Sparse Pauli strings with exact phase tracking."""
from __future__ import annotations

from dataclasses import dataclass
from functools import reduce
from typing import Iterable, Mapping

import numpy as np

# single-site product table: (a, b) -> (power of i, letter)
_MUL = {
    ("X", "X"): (0, None), ("Y", "Y"): (0, None), ("Z", "Z"): (0, None),
    ("X", "Y"): (1, "Z"), ("Y", "Z"): (1, "X"), ("Z", "X"): (1, "Y"),
    ("Y", "X"): (3, "Z"), ("Z", "Y"): (3, "X"), ("X", "Z"): (3, "Y"),
}
_PHASE_TEXT = {0: "+", 1: "+i", 2: "-", 3: "-i"}
_MATS = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


@dataclass(frozen=True)
class PauliString:
    """``i**phase * prod(letters)``; ``support`` maps site index -> 'X' | 'Y' | 'Z'."""

    support: Mapping[int, str]
    phase: int = 0

    def __post_init__(self):
        object.__setattr__(self, "support", dict(sorted((k, v) for k, v in self.support.items() if v != "I")))
        object.__setattr__(self, "phase", self.phase % 4)

    @classmethod
    def from_letters(cls, sites: Iterable[int], letters: Iterable[str], phase: int = 0) -> PauliString:
        out = cls({}, phase)
        for s, l in zip(sites, letters):
            out = out * cls({s: l})
        return out

    @classmethod
    def identity(cls) -> PauliString:
        return cls({})

    @property
    def weight(self) -> int:
        return len(self.support)

    @property
    def sign(self) -> complex:
        return 1j ** self.phase

    def is_hermitian(self) -> bool:
        return self.phase in (0, 2)

    def __mul__(self, other: PauliString) -> PauliString:
        return multiply(self, other)

    def __neg__(self) -> PauliString:
        return PauliString(self.support, self.phase + 2)

    def scaled(self, power_of_i: int) -> PauliString:
        return PauliString(self.support, self.phase + power_of_i)

    def unsigned(self) -> PauliString:
        return PauliString(self.support, 0)

    def __eq__(self, other) -> bool:
        return isinstance(other, PauliString) and self.phase == other.phase and self.support == other.support

    def __hash__(self) -> int:
        return hash((self.phase, tuple(self.support.items())))

    def text(self, sites=None) -> str:
        """``"+ X@(0,1) Z@(0,2)"``; pass the lattice's site list for coordinates."""
        def name(k):
            if sites is None:
                return str(k)
            s = sites[k]
            return f"({s.row},{s.col})"
        body = " ".join(f"{l}@{name(k)}" for k, l in self.support.items())
        return f"{_PHASE_TEXT[self.phase]} {body}".rstrip() if body else _PHASE_TEXT[self.phase] + " I"

    __str__ = text

    def to_matrix(self, n: int) -> np.ndarray:
        """Dense ``2**n`` matrix, qubit 0 as the most significant bit."""
        mats = [_MATS[self.support.get(q, "I")] for q in range(n)]
        return self.sign * reduce(np.kron, mats)


def multiply(p: PauliString, q: PauliString) -> PauliString:
    support = dict(p.support)
    phase = p.phase + q.phase
    for site, b in q.support.items():
        a = support.get(site)
        if a is None:
            support[site] = b
            continue
        k, c = _MUL[(a, b)]
        phase += k
        if c is None:
            del support[site]
        else:
            support[site] = c
    return PauliString(support, phase)


def product(strings: Iterable[PauliString]) -> PauliString:
    return reduce(multiply, strings, PauliString.identity())


def commutes(p: PauliString, q: PauliString) -> bool:
    small, big = (p, q) if p.weight <= q.weight else (q, p)
    n = 0
    for site, a in small.support.items():
        b = big.support.get(site)
        if b is not None and b != a:
            n += 1
    return n % 2 == 0


def symplectic(p: PauliString, n: int) -> np.ndarray:
    """Bit vector ``(x | z)`` of length ``2n``."""
    v = np.zeros(2 * n, dtype=np.uint8)
    for site, l in p.support.items():
        if l in "XY":
            v[site] = 1
        if l in "ZY":
            v[n + site] = 1
    return v


def gf2_solve(gens: np.ndarray, target: np.ndarray) -> np.ndarray | None:
    """Find ``x`` with ``x @ gens == target`` over GF(2), or None."""
    m, n = gens.shape
    aug = np.concatenate([gens.T, target[:, None]], axis=1).astype(np.uint8) % 2
    pivots = []
    row = 0
    for col in range(m):
        hits = np.nonzero(aug[row:, col])[0]
        if hits.size == 0:
            continue
        piv = row + hits[0]
        aug[[row, piv]] = aug[[piv, row]]
        mask = aug[:, col].astype(bool)
        mask[row] = False
        aug[mask] ^= aug[row]
        pivots.append(col)
        row += 1
        if row == n:
            break
    if aug[row:, -1].any():
        return None
    x = np.zeros(m, dtype=np.uint8)
    for r, col in enumerate(pivots):
        x[col] = aug[r, -1]
    return x


def gf2_nullspace(rows: np.ndarray) -> np.ndarray:
    """Basis (as rows) of ``{x : x @ rows == 0 mod 2}``."""
    m = rows.shape[0]
    aug = np.concatenate([rows % 2, np.eye(m, dtype=np.uint8)], axis=1).astype(np.uint8)
    ncol = rows.shape[1]
    r = 0
    for col in range(ncol):
        hits = np.nonzero(aug[r:, col])[0]
        if hits.size == 0:
            continue
        piv = r + hits[0]
        aug[[r, piv]] = aug[[piv, r]]
        mask = aug[:, col].astype(bool)
        mask[r] = False
        aug[mask] ^= aug[r]
        r += 1
        if r == m:
            break
    return aug[r:, ncol:]
