"""Honeycomb lattice on a cylinder, embedded in a rectangular array.

Sites live at ``(row, col)`` of a sheared brick-wall layout.  With ``W`` plaquette
columns there are ``2 * W + 2`` site columns.  Link rules (``j`` is the column):

* ``ZZ``: horizontal, ``(r, j) - (r, j + 1)`` with ``j`` odd (the fermion dimers)
* ``YY``: horizontal, ``(r, j) - (r, j + 1)`` with ``j`` even
* ``XX``: diagonal, ``(r, j) - (r + 1, j + 1)`` with ``j`` even; wraps in ``r`` on a cylinder

Plaquette ``(r, j)`` (``j`` even) is the hexagon
``(r, j), (r, j+1), (r, j+2), (r+1, j+3), (r+1, j+2), (r+1, j+1)``.  Every site
carries the letter of its link pointing out of the hexagon, which gives the
cyclic pattern X Z Y X Z Y when read from ``(r, j+1)`` going through ``(r, j)``.

Plaquettes stacked in one column share ZZ links, so each column product is a pair
of Z-only loops around the cylinder.  Sites on the two open edges (``j = 0`` and
``j = 2W + 1``) have no ZZ partner.
"""
from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np


class InvalidGeometry(ValueError):
    pass


class Sublattice(enum.Enum):
    Even = "e"
    Odd = "o"


class LinkType(enum.Enum):
    XX = "X"
    YY = "Y"
    ZZ = "Z"

    @property
    def letter(self) -> str:
        return self.value


class Boundary(enum.Enum):
    Cylinder = "cylinder"
    Open = "open"


@dataclass(frozen=True, order=True)
class Site:
    row: int
    col: int
    ancilla: bool = False

    @property
    def sublattice(self) -> Sublattice:
        return Sublattice.Even if self.col % 2 == 0 else Sublattice.Odd

    def __repr__(self) -> str:
        tag = "a" if self.ancilla else ""
        return f"{tag}({self.row},{self.col})"


@dataclass(frozen=True)
class Link:
    a: int
    b: int
    kind: LinkType

    @property
    def sites(self) -> tuple[int, int]:
        return (self.a, self.b)


@dataclass(frozen=True)
class Plaquette:
    """A hexagon: six data-site indices in cyclic order with their Pauli letters."""

    row: int
    col: int
    sites: tuple[int, ...]
    letters: tuple[str, ...]


@dataclass(frozen=True)
class JwPath:
    order: tuple[int, ...]  # sites in visiting order
    links: tuple[int, ...]  # link indices; links[k] joins order[k] and order[k + 1]

    def position(self, site: int) -> int:
        return self.order.index(site)


@dataclass(frozen=True, eq=False)
class Lattice:
    n_rows: int  # plaquette rows
    n_cols: int  # plaquette columns
    boundary: Boundary
    data_sites: tuple[Site, ...]
    ancilla_sites: tuple[Site, ...]
    links: tuple[Link, ...]
    plaquettes: tuple[Plaquette, ...]
    columns: tuple[tuple[int, ...], ...]
    _index: dict = field(repr=False)

    @property
    def n_data(self) -> int:
        return len(self.data_sites)

    def index(self, row: int, col: int) -> int:
        return self._index[(row, col)]

    def has(self, row: int, col: int) -> bool:
        return (row, col) in self._index

    @property
    def n_site_rows(self) -> int:
        return self.n_rows if self.boundary is Boundary.Cylinder else self.n_rows + 1

    @property
    def n_site_cols(self) -> int:
        return 2 * self.n_cols + 2

    @cached_property
    def link_lookup(self) -> dict[frozenset, int]:
        return {frozenset(l.sites): k for k, l in enumerate(self.links)}

    def link_between(self, a: int, b: int) -> int | None:
        return self.link_lookup.get(frozenset((a, b)))

    @cached_property
    def neighbors(self) -> list[list[tuple[int, int]]]:
        """Per site: list of (neighbor, link index)."""
        out: list[list[tuple[int, int]]] = [[] for _ in self.data_sites]
        for k, l in enumerate(self.links):
            out[l.a].append((l.b, k))
            out[l.b].append((l.a, k))
        return out

    def links_of(self, kind: LinkType) -> list[int]:
        return [k for k, l in enumerate(self.links) if l.kind is kind]

    @cached_property
    def distances(self) -> np.ndarray:
        """All-pairs graph distance over data sites (BFS)."""
        n = self.n_data
        dist = np.full((n, n), -1, dtype=int)
        for s in range(n):
            dist[s, s] = 0
            frontier = [s]
            while frontier:
                nxt = []
                for u in frontier:
                    for v, _ in self.neighbors[u]:
                        if dist[s, v] < 0:
                            dist[s, v] = dist[s, u] + 1
                            nxt.append(v)
                frontier = nxt
        return dist

    @cached_property
    def winding_loops(self) -> list[tuple[int, ...]]:
        """Z-only loops around the cylinder, one per unit-cell column ``(2m, 2m+1)``."""
        if self.boundary is not Boundary.Cylinder:
            return []
        loops = []
        for m in range(self.n_cols + 1):
            loops.append(tuple(self.index(r, c) for r in range(self.n_rows) for c in (2 * m, 2 * m + 1)))
        return loops

    @cached_property
    def unit_cells(self) -> dict[tuple[int, int], tuple[int, int]]:
        """(row, m) -> (even site, odd site) of the ZZ dimer ``(r, 2m+1) - (r, 2m+2)``.

        With this cell the three links of an even site point to cell offsets
        (0, 0) for ZZ, (0, 1) for YY and (1, 1) for XX, always as (d_row, d_m).
        """
        cells = {}
        for r in range(self.n_site_rows):
            for m in range(self.n_cols):
                if self.has(r, 2 * m + 1) and self.has(r, 2 * m + 2):
                    cells[(r, m)] = (self.index(r, 2 * m + 2), self.index(r, 2 * m + 1))
        return cells

    def cell_shift(self, cell: tuple[int, int], offset: tuple[int, int]) -> tuple[int, int] | None:
        r, m = cell[0] + offset[0], cell[1] + offset[1]
        if self.boundary is Boundary.Cylinder:
            r %= self.n_rows
        return (r, m) if (r, m) in self.unit_cells else None

    @cached_property
    def bulk_cells(self) -> list[tuple[int, int]]:
        """Cells all of whose +-1 neighbour cells exist (central 2W - 4 site columns)."""
        offs = [(a, b) for a in (-1, 0, 1) for b in (-1, 0, 1)]
        return sorted(c for c in self.unit_cells if all(self.cell_shift(c, o) is not None for o in offs))

    @property
    def bulk_region(self) -> set[int]:
        return {s for cell in self.bulk_cells for s in self.unit_cells[cell]}

    def to_json(self) -> str:
        return json.dumps(
            {
                "n_rows": self.n_rows,
                "n_cols": self.n_cols,
                "boundary": self.boundary.value,
                "data_sites": [[s.row, s.col, s.sublattice.value] for s in self.data_sites],
                "ancilla_sites": [[s.row, s.col] for s in self.ancilla_sites],
                "links": [[l.a, l.b, l.kind.value] for l in self.links],
                "plaquettes": [{"sites": list(p.sites), "letters": "".join(p.letters)} for p in self.plaquettes],
                "columns": [list(c) for c in self.columns],
            },
            indent=1,
        )


def _hexagon(r: int, j: int) -> list[tuple[tuple[int, int], str]]:
    # start at the upper odd site, walk through the upper-left even site
    return [
        ((r, j + 1), "X"),
        ((r, j), "Z"),
        ((r + 1, j + 1), "Y"),
        ((r + 1, j + 2), "X"),
        ((r + 1, j + 3), "Z"),
        ((r, j + 2), "Y"),
    ]


def build_lattice(rows: int, cols: int, boundary: Boundary | str = Boundary.Cylinder) -> Lattice:
    """Build the honeycomb with ``rows`` x ``cols`` plaquettes.

    ``build_lattice(4, 8)`` is the 72 data + 32 ancilla geometry.  ``Open`` keeps
    only sites that belong to some plaquette, so ``build_lattice(1, 1, "open")`` is a
    single hexagon.
    """
    boundary = Boundary(boundary)
    if rows < 1 or cols < 1:
        raise InvalidGeometry("need at least one plaquette row and column")
    if boundary is Boundary.Cylinder and rows < 2:
        raise InvalidGeometry("a cylinder needs at least two plaquette rows")

    site_rows = rows if boundary is Boundary.Cylinder else rows + 1

    def wrap(r: int) -> int | None:
        if boundary is Boundary.Cylinder:
            return r % site_rows
        return r if 0 <= r < site_rows else None

    hexes = []
    for r in range(rows):
        for q in range(cols):
            cells = []
            for (rr, cc), letter in _hexagon(r, 2 * q):
                cells.append(((wrap(rr), cc), letter))
            hexes.append((r, 2 * q, cells))

    if boundary is Boundary.Cylinder:
        coords = {(r, c) for r in range(site_rows) for c in range(2 * cols + 2)}
    else:
        coords = {rc for _, _, cells in hexes for rc, _ in cells}
    ordered = sorted(coords)
    index = {rc: k for k, rc in enumerate(ordered)}
    data_sites = tuple(Site(r, c) for r, c in ordered)

    links: list[Link] = []
    for (r, c) in ordered:
        right = (r, c + 1)
        if right in index:
            kind = LinkType.ZZ if c % 2 == 1 else LinkType.YY
            links.append(Link(index[(r, c)], index[right], kind))
        if c % 2 == 0:
            rr = wrap(r + 1)
            if rr is not None and (rr, c + 1) in index:
                links.append(Link(index[(r, c)], index[(rr, c + 1)], LinkType.XX))

    plaquettes = []
    for r, j, cells in hexes:
        plaquettes.append(
            Plaquette(r, j, tuple(index[rc] for rc, _ in cells), tuple(letter for _, letter in cells))
        )
    columns = tuple(
        tuple(k for k, p in enumerate(plaquettes) if p.col == 2 * q) for q in range(cols)
    )
    ancillas = tuple(Site(p.row, p.col, ancilla=True) for p in plaquettes)

    lat = Lattice(rows, cols, boundary, data_sites, ancillas, tuple(links), tuple(plaquettes), columns, index)
    _check(lat)
    return lat


def _check(lat: Lattice) -> None:
    seen = {}
    for l in lat.links:
        for s in l.sites:
            key = (s, l.kind)
            if key in seen:
                raise InvalidGeometry(f"site {lat.data_sites[s]} has two {l.kind.name} links")
            seen[key] = True
    for p in lat.plaquettes:
        n = len(p.sites)
        for k in range(n):
            if lat.link_between(p.sites[k], p.sites[(k + 1) % n]) is None:
                raise InvalidGeometry(f"plaquette ({p.row},{p.col}) is not closed")


def complex_fermion_sites(lat: Lattice) -> list[tuple[int, int]]:
    """Pair Majorana sites into complex fermions.

    ZZ links give the dimers.  Sites without a ZZ partner (the open edges) are
    paired with each other, ordered by column then row.
    """
    pairs = []
    used = set()
    for l in lat.links:
        if l.kind is LinkType.ZZ:
            pairs.append((l.a, l.b))
            used.update(l.sites)
    rest = sorted((s for s in range(lat.n_data) if s not in used),
                  key=lambda s: (lat.data_sites[s].col, lat.data_sites[s].row))
    if len(rest) % 2:
        raise InvalidGeometry("odd number of unpaired edge sites")
    pairs.extend((rest[k], rest[k + 1]) for k in range(0, len(rest), 2))
    return pairs


def dimer_partner(lat: Lattice) -> dict[int, int]:
    out = {}
    for a, b in complex_fermion_sites(lat):
        out[a], out[b] = b, a
    return out


def jw_path(lat: Lattice) -> JwPath:
    """Continuous walk through every data site along links, from the top-left corner.

    On a cylinder the walk zigzags up each unit-cell column (alternating YY and
    wrapped XX links) and hops to the next column over a ZZ link.  Open geometries
    fall back to a depth-first Hamiltonian-path search, which is fine for the
    small open patches used in tests.
    """
    path = _column_zigzag(lat) if lat.boundary is Boundary.Cylinder else None
    if path is None:
        path = _dfs_path(lat)
    if path is None:
        raise InvalidGeometry("no Hamiltonian path through the lattice")
    links = tuple(lat.link_between(path[k], path[k + 1]) for k in range(len(path) - 1))
    return JwPath(tuple(path), links)


def _column_zigzag(lat: Lattice) -> list[int] | None:
    R = lat.n_rows
    order: list[int] = []
    for m in range(lat.n_cols + 1):
        start = m % R
        for step in range(R):
            r = (start - step) % R
            order += [lat.index(r, 2 * m), lat.index(r, 2 * m + 1)]
    for a, b in zip(order, order[1:]):
        if lat.link_between(a, b) is None:
            return None
    return order


def _dfs_path(lat: Lattice) -> list[int] | None:
    n = lat.n_data
    start = min(range(n), key=lambda k: (lat.data_sites[k].row, lat.data_sites[k].col))
    path = [start]
    on = {start}

    def grow() -> bool:
        if len(path) == n:
            return True
        for v, _ in sorted(lat.neighbors[path[-1]]):
            if v not in on:
                path.append(v)
                on.add(v)
                if grow():
                    return True
                path.pop()
                on.remove(v)
        return False

    return path if grow() else None
