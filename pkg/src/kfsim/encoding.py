"""Fermion-to-qubit dictionary on the honeycomb.

Majoranas follow the link-string Jordan-Wigner construction: ``c_1`` is a single
Pauli on the first site of the path and ``c_j`` is ``c_1`` times every link operator
on the path up to site ``j``.  Those strings are macroscopic; on the stabilizer
sector (plaquettes and winding loops fixed) every link operator collapses to a
signed bilinear ``u * i c_a c_b``.  :class:`Encoding` computes those signs exactly
with the Pauli algebra, including which stabilizers the identification uses, so
arbitrary flux patterns can be handled by multiplying in their values.
"""
from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from functools import cached_property

import numpy as np

from kfsim.lattice import Lattice, LinkType, complex_fermion_sites, jw_path
from kfsim.pauli import PauliString, gf2_nullspace, gf2_solve, multiply, product, symplectic


class NoPath(ValueError):
    pass


class NotInStabilizerGroup(ArithmeticError):
    pass


@dataclass(frozen=True)
class EffectiveString:
    """A local Pauli string equal to ``i c_i c_j`` once every generator in ``generators`` is +1."""

    i: int
    j: int
    pauli: PauliString
    generators: tuple[int, ...]

    def sign_in(self, generator_values) -> int:
        """Sign relating ``pauli`` to ``i c_i c_j`` for the given stabilizer values."""
        s = 1
        for g in self.generators:
            s *= int(generator_values[g])
        return s


def _link_pauli(lat: Lattice, k: int) -> PauliString:
    l = lat.links[k]
    return PauliString({l.a: l.kind.letter, l.b: l.kind.letter})


class Encoding:
    def __init__(self, lat: Lattice):
        self.lat = lat
        self.path = jw_path(lat)

    # stabilizers ---------------------------------------------------------------
    def link_op(self, k: int) -> PauliString:
        return _link_pauli(self.lat, k)

    def plaquette_op(self, p: int) -> PauliString:
        pl = self.lat.plaquettes[p]
        return PauliString(dict(zip(pl.sites, pl.letters)))

    def loop_op(self, m: int) -> PauliString:
        return PauliString({s: "Z" for s in self.lat.winding_loops[m]})

    @cached_property
    def generators(self) -> list[PauliString]:
        """Plaquettes first, then winding loops."""
        gens = [self.plaquette_op(p) for p in range(len(self.lat.plaquettes))]
        gens += [self.loop_op(m) for m in range(len(self.lat.winding_loops))]
        return gens

    @cached_property
    def _gen_matrix(self) -> np.ndarray:
        n = self.lat.n_data
        return np.array([symplectic(g, n) for g in self.generators], dtype=np.uint8).reshape(-1, 2 * n)

    @cached_property
    def relations(self) -> list[tuple[tuple[int, ...], int]]:
        """Products of generators equal to a pure sign: ``(gens, sign)``.

        On the cylinder these tie each column's plaquette product to its two winding loops.
        """
        out = []
        if not self.generators:
            return out
        for x in gf2_nullspace(self._gen_matrix):
            gens = tuple(int(g) for g in np.nonzero(x)[0])
            p = product(self.generators[g] for g in gens)
            assert p.weight == 0 and p.phase % 2 == 0
            out.append((gens, 1 if p.phase == 0 else -1))
        return out

    def consistent(self, generator_values) -> bool:
        return all(np.prod([generator_values[g] for g in gens]) == s for gens, s in self.relations)

    def decompose_phase(self, q: PauliString) -> tuple[int, tuple[int, ...]]:
        """Write ``q = i**k * prod(generators[g] for g in gens)``; returns (k, gens)."""
        gens: tuple[int, ...] = ()
        if q.weight:
            if not self.generators:
                raise NotInStabilizerGroup(str(q))
            x = gf2_solve(self._gen_matrix, symplectic(q, self.lat.n_data))
            if x is None:
                raise NotInStabilizerGroup(str(q))
            gens = tuple(int(g) for g in np.nonzero(x)[0])
        rest = multiply(q, product(self.generators[g] for g in gens))  # gens commute, each squares to 1
        if rest.weight:
            raise NotInStabilizerGroup(str(q))
        return rest.phase, gens

    def decompose(self, q: PauliString) -> tuple[int, tuple[int, ...]]:
        """Like :meth:`decompose_phase` but insists on a real sign; returns (sign, gens)."""
        k, gens = self.decompose_phase(q)
        if k % 2:
            raise NotInStabilizerGroup(f"imaginary phase for {q}")
        return (1 if k == 0 else -1), gens

    # Majoranas -------------------------------------------------------------------
    @cached_property
    def majoranas(self) -> list[PauliString]:
        order, links = self.path.order, self.path.links
        first = order[0]
        first_letter = "Z"
        if len(links) and self.lat.links[links[0]].kind is LinkType.ZZ:
            first_letter = "X"
        out: list[PauliString | None] = [None] * self.lat.n_data
        cur = PauliString({first: first_letter})
        out[first] = cur
        for pos, k in enumerate(links):
            cur = multiply(cur, self.link_op(k))
            out[order[pos + 1]] = cur
        return [p if p.is_hermitian() else p.scaled(-1) for p in out]

    def bilinear(self, a: int, b: int) -> PauliString:
        """Exact ``i c_a c_b`` (Hermitian)."""
        return multiply(self.majoranas[a], self.majoranas[b]).scaled(1)

    @cached_property
    def link_signs(self) -> list[tuple[int, tuple[int, ...]]]:
        """Per link ``k = (a, b)``: ``(u, gens)`` with ``L_k = u * i c_a c_b * prod(gens)``."""
        out = []
        for k, l in enumerate(self.lat.links):
            q = multiply(self.link_op(k), self.bilinear(l.a, l.b))
            out.append(self.decompose(q))
        return out

    def link_bilinear_sign(self, k: int, generator_values=None) -> int:
        u, gens = self.link_signs[k]
        if generator_values is not None:
            for g in gens:
                u *= int(generator_values[g])
        return u

    def generator_values(self, flux=None) -> np.ndarray:
        """Plaquette values from ``flux`` (default all +1) followed by +1 for every loop."""
        n_p = len(self.lat.plaquettes)
        vals = np.ones(len(self.generators), dtype=int)
        if flux is not None:
            vals[:n_p] = np.asarray(flux, dtype=int)
        return vals

    # pairs -----------------------------------------------------------------------
    @cached_property
    def pairs(self) -> list[tuple[int, int]]:
        """Complex-fermion pairs oriented so that ``i c_a c_b`` equals +ZZ on the flux-free sector."""
        out = []
        for a, b in complex_fermion_sites(self.lat):
            k = self.lat.link_between(a, b)
            if k is not None and self.link_bilinear_sign(k) < 0:
                a, b = b, a
            out.append((a, b))
        return out

    @cached_property
    def pair_of_site(self) -> dict[int, int]:
        return {s: n for n, pr in enumerate(self.pairs) for s in pr}

    # strings ---------------------------------------------------------------------
    def link_path(self, i: int, j: int, avoid: set[int] | frozenset = frozenset()) -> list[int]:
        """Shortest path of link indices from ``i`` to ``j`` (BFS, deterministic)."""
        if i == j:
            return []
        prev: dict[int, tuple[int, int]] = {i: (-1, -1)}
        queue = deque([i])
        while queue:
            u = queue.popleft()
            for v, k in sorted(self.lat.neighbors[u]):
                if v in prev or k in avoid:
                    continue
                prev[v] = (u, k)
                if v == j:
                    queue.clear()
                    break
                queue.append(v)
        if j not in prev:
            raise NoPath(f"{i} -> {j}")
        links = []
        v = j
        while v != i:
            u, k = prev[v]
            links.append(k)
            v = u
        return links[::-1]

    def jw_links(self, i: int, j: int) -> list[int]:
        pi, pj = self.path.position(i), self.path.position(j)
        lo, hi = min(pi, pj), max(pi, pj)
        return list(self.path.links[lo:hi])

    def majorana_string(self, i: int, j: int, links: list[int] | None = None, via: str = "shortest") -> EffectiveString:
        """Local string for ``i c_i c_j`` built from link operators.

        ``via="shortest"`` walks a shortest lattice path (what one would measure);
        ``via="jw"`` uses the segment of the Jordan-Wigner path between the two sites.
        """
        if i == j:
            raise ValueError("need two distinct sites")
        if links is None:
            links = self.jw_links(i, j) if via == "jw" else self.link_path(i, j)
        s = product(self.link_op(k) for k in links)
        k, gens = self.decompose_phase(multiply(s, self.bilinear(i, j)))
        s = s.scaled(-k)  # now s = prod(gens) * i c_i c_j exactly
        return EffectiveString(i, j, s, gens)

    def pair_creation_string(self, pi: int, pj: int) -> EffectiveString:
        """Open string flipping the occupations of complex-fermion sites ``pi`` and ``pj``.

        Picks the closest pair of Majoranas, one from each site, joined by a path that
        does not run over either site's own dimer link.
        """
        if pi == pj:
            raise ValueError("need two distinct complex-fermion sites")
        own = set()
        for pr in (self.pairs[pi], self.pairs[pj]):
            k = self.lat.link_between(*pr)
            if k is not None:
                own.add(k)
        best = None
        for x in self.pairs[pi]:
            for y in self.pairs[pj]:
                try:
                    links = self.link_path(x, y, avoid=own)
                except NoPath:
                    continue
                key = (len(links), x, y)
                if best is None or key < best[0]:
                    best = (key, links)
        if best is None:
            raise NoPath(f"pairs {pi} -> {pj}")
        (_, x, y), links = best
        return self.majorana_string(x, y, links=links)
