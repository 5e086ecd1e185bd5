"""Parent-Hamiltonian learning from bulk Majorana correlations and the lattice Chern number.

The unit cell is a ZZ dimer (even site e, odd site o).  For a bulk cell R, an offset
r = (d_row, d_m) in {-1, 0, 1}^2 and a sublattice pair, the open Pauli string joining
(R, l) to (R + r, l') is measured and converted to a gauge-fixed Majorana correlation
in which every link reads ``L = +i c_e c_o``.  Averaging over bulk cells gives a
:class:`StringTable`; minus the table is taken as the real-space blocks ``A_r`` of a
flat-band parent Hamiltonian, Fourier transformed onto a small k-grid, and the Chern
number of the lower band follows from link variables (Fukui-Hatsugai-Suzuki).
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from kfsim.gaussian import Sector
from kfsim.lattice import Lattice
from kfsim.pauli import PauliString

OFFSETS = tuple((a, b) for a in (-1, 0, 1) for b in (-1, 0, 1))
BLOCKS = ("ee", "eo", "oe", "oo")
GAP_TOL = 1e-12


class InsufficientSamples(ValueError):
    pass


class GaplessGrid(ArithmeticError):
    pass


# ----------------------------------------------------------------------------
# string catalogue


@dataclass(frozen=True)
class StringEntry:
    cell: tuple[int, int]
    offset: tuple[int, int]
    block: str
    i: int
    j: int
    pauli: PauliString
    conv: int  # table value = conv * <pauli>
    tau: int  # table value = tau * gamma[i, j]

    @property
    def key(self) -> tuple[tuple[int, int], str]:
        return (self.offset, self.block)


def _gauge_transport(sector: Sector, links) -> int:
    """Product of the even-first link signs along a path (``eps_i eps_j`` of the uniform gauge)."""
    lat = sector.lat
    t = 1
    for k in links:
        l = lat.links[k]
        s = int(sector.signs[k])
        t *= s if lat.data_sites[l.a].col % 2 == 0 else -s
    return t


def string_catalog(sector: Sector, blocks=BLOCKS) -> list[StringEntry]:
    """Every bulk string entering the table, with its conversion sign on ``sector``."""
    lat = sector.lat
    enc = sector.enc
    out = []
    for cell in lat.bulk_cells:
        for off in OFFSETS:
            other = lat.cell_shift(cell, off)
            for b in blocks:
                if off == (0, 0) and b[0] == b[1]:
                    continue
                i = lat.unit_cells[cell][0 if b[0] == "e" else 1]
                j = lat.unit_cells[other][0 if b[1] == "e" else 1]
                links = enc.link_path(i, j)
                es = enc.majorana_string(i, j, links=links)
                tau = _gauge_transport(sector, links)
                out.append(StringEntry(cell, off, b, i, j, es.pauli, tau * sector.string_sign(es), tau))
    return out


# ----------------------------------------------------------------------------
# tables


@dataclass
class StringTable:
    """Bulk-averaged gauge-fixed correlations keyed by (offset, block)."""

    values: dict = field(default_factory=dict)  # (offset, block) -> mean
    counts: dict = field(default_factory=dict)  # (offset, block) -> number of samples pooled

    def __post_init__(self):
        for key, v in self.values.items():
            (dr, dm), b = key
            if abs(dr) > 1 or abs(dm) > 1 or b not in BLOCKS:
                raise ValueError(f"bad table key {key}")
            if not -1 - 1e-9 <= v <= 1 + 1e-9:
                raise ValueError(f"table value {v} outside [-1, 1]")

    def get(self, offset, block) -> float:
        return self.values.get((tuple(offset), block), 0.0)

    def vector(self, keys=None) -> np.ndarray:
        keys = sorted(self.values) if keys is None else keys
        return np.array([self.values.get(k, 0.0) for k in keys])

    def to_json(self) -> str:
        rows = [{"offset": list(o), "block": b, "value": self.values[(o, b)], "count": self.counts.get((o, b), 0)}
                for (o, b) in sorted(self.values)]
        return json.dumps(rows, indent=1)

    @classmethod
    def from_json(cls, text: str) -> StringTable:
        rows = json.loads(text)
        vals = {(tuple(r["offset"]), r["block"]): r["value"] for r in rows}
        cnts = {(tuple(r["offset"]), r["block"]): r["count"] for r in rows}
        return cls(vals, cnts)


def bulk_average(gamma: np.ndarray, sector: Sector, catalog=None) -> StringTable:
    """Table of an exact correlation matrix (noiseless expectation of every bulk string)."""
    if not sector.lat.bulk_cells:
        raise InsufficientSamples("lattice has no bulk cells")
    catalog = string_catalog(sector) if catalog is None else catalog
    sums: dict = {}
    cnts: dict = {}
    for e in catalog:
        sums[e.key] = sums.get(e.key, 0.0) + e.tau * gamma[e.i, e.j]
        cnts[e.key] = cnts.get(e.key, 0) + 1
    return StringTable({k: float(sums[k] / cnts[k]) for k in sums}, cnts)


def table_from_samples(samples: np.ndarray, catalog: list[StringEntry], rows=None) -> StringTable:
    """Pool measured string values (NaN = rejected) of the selected snapshot ``rows``.

    ``samples`` is (n_snapshots, len(catalog)) of raw Pauli outcomes; they are converted
    with each entry's ``conv`` sign, averaged per string over snapshots, then over
    translation-equivalent strings.
    """
    x = np.asarray(samples, dtype=float)
    if rows is not None:
        x = x[rows]
    conv = np.array([e.conv for e in catalog], dtype=float)
    ok = ~np.isnan(x)
    n = ok.sum(axis=0)
    tot = np.where(ok, x, 0.0).sum(axis=0)
    keys = sorted({e.key for e in catalog})
    col = {k: [] for k in keys}
    for c, e in enumerate(catalog):
        col[e.key].append(c)
    vals, cnts = {}, {}
    for k in keys:
        idx = np.array(col[k])
        have = idx[n[idx] > 0]
        if have.size == 0:
            raise InsufficientSamples(f"no accepted samples for offset {k[0]} block {k[1]}")
        vals[k] = float(np.mean(conv[have] * tot[have] / n[have]))
        cnts[k] = int(n[idx].sum())
    return StringTable(vals, cnts)


# ----------------------------------------------------------------------------
# blocks and Bloch Hamiltonian


@dataclass
class Blocks:
    """Real-space blocks ``A_r`` as 3x3 arrays indexed ``[d_row + 1, d_m + 1]``."""

    a: dict  # block -> (3, 3) array
    residual: float = 0.0  # largest violation of the completion relations among measured entries

    def matrix(self, offset) -> np.ndarray:
        dr, dm = offset
        return np.array([[self.a["ee"][dr + 1, dm + 1], self.a["eo"][dr + 1, dm + 1]],
                         [self.a["oe"][dr + 1, dm + 1], self.a["oo"][dr + 1, dm + 1]]])

    def scaled(self, c: float) -> Blocks:
        return Blocks({k: c * v for k, v in self.a.items()}, self.residual)


def _flip(m: np.ndarray) -> np.ndarray:
    """``m[r] -> m[-r]`` for a 3x3 offset grid."""
    return m[::-1, ::-1]


def assemble_blocks(table: StringTable) -> Blocks:
    """Minus the correlations as parent-Hamiltonian blocks, completed by symmetry.

    ``oe`` comes from skew symmetry (``A^oe_r = -A^eo_-r``) and ``oo`` from the
    sublattice-exchanging inversion of the honeycomb (``A^oo_r = -A^ee_r``) whenever they
    are absent.  If they are present the mismatch is reported as ``residual``.
    """
    raw = {}
    for b in BLOCKS:
        m = np.full((3, 3), np.nan)
        for (dr, dm) in OFFSETS:
            if ((dr, dm), b) in table.values:
                m[dr + 1, dm + 1] = -table.values[((dr, dm), b)]
        if b in ("ee", "oo"):
            m[1, 1] = 0.0
        raw[b] = m
    if np.isnan(raw["eo"]).all():
        raise InsufficientSamples("table has no e-o entries")
    eo = np.nan_to_num(raw["eo"])
    ee = np.nan_to_num(raw["ee"])
    # skew completion within the diagonal blocks
    ee = np.where(np.isnan(raw["ee"]), -_flip(np.nan_to_num(raw["ee"])), ee)
    oe_c = -_flip(eo)
    oo_c = -ee
    res = 0.0
    if not np.isnan(raw["oe"]).all():
        res = max(res, float(np.nanmax(np.abs(raw["oe"] - oe_c))))
    if not np.isnan(raw["oo"]).all():
        res = max(res, float(np.nanmax(np.abs(raw["oo"] - oo_c))))
    res = max(res, float(np.nanmax(np.abs(raw["ee"] + _flip(raw["ee"])))) if not np.isnan(raw["ee"]).all() else 0.0)
    # antisymmetrize so the assembled operator is exactly skew
    ee = 0.5 * (ee - _flip(ee))
    return Blocks({"ee": ee, "eo": eo, "oe": -_flip(eo), "oo": -ee}, res)


@dataclass
class BlochHamiltonian:
    ks: np.ndarray  # (n1, n2, 2) momenta along (row, m) reciprocal directions
    h: np.ndarray  # (n1, n2, 2, 2) Hermitian

    @property
    def delta(self) -> np.ndarray:
        return self.h[..., 0, 0].real

    @property
    def xi(self) -> np.ndarray:
        return self.h[..., 0, 1]

    def bands(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.h)


def k_grid(n: int) -> np.ndarray:
    """Uniform n x n grid over one reciprocal cell, including k = 0."""
    k = 2 * np.pi * np.arange(n) / n
    return np.stack(np.meshgrid(k, k, indexing="ij"), axis=-1)


def fourier_bloch(blocks: Blocks, n: int = 5) -> BlochHamiltonian:
    """``H_k = i sum_r A_r exp(i k.r)`` on an ``n x n`` grid."""
    if n < 3:
        raise ValueError("grid must be at least 3x3")
    ks = k_grid(n)
    h = np.zeros((n, n, 2, 2), dtype=complex)
    for off in OFFSETS:
        phase = np.exp(1j * (ks[..., 0] * off[0] + ks[..., 1] * off[1]))
        h += 1j * phase[..., None, None] * blocks.matrix(off)[None, None]
    h = 0.5 * (h + np.conj(np.swapaxes(h, -1, -2)))
    return BlochHamiltonian(ks, h)


@dataclass
class ChernResult:
    chern: int
    curvature: np.ndarray  # (n1, n2) plaquette Berry flux in (-pi, pi]
    min_gap: float
    link_phases: np.ndarray | None = None  # (n1, n2, 2) arg U^mu

    def to_json(self) -> str:
        return json.dumps({"chern": self.chern, "min_gap": self.min_gap,
                           "curvature": self.curvature.tolist(),
                           "total_flux": float(self.curvature.sum())}, indent=1)

    def curvature_csv(self) -> str:
        lines = ["i1,i2,F"]
        for a in range(self.curvature.shape[0]):
            for b in range(self.curvature.shape[1]):
                lines.append(f"{a},{b},{self.curvature[a, b]:.12g}")
        return "\n".join(lines) + "\n"


def lower_band(bh: BlochHamiltonian) -> tuple[np.ndarray, float]:
    w, v = np.linalg.eigh(bh.h)
    gap = float((w[..., 1] - w[..., 0]).min())
    return v[..., :, 0], gap


def chern_from_states(u: np.ndarray) -> tuple[int, np.ndarray, np.ndarray]:
    """Link-variable Chern number of a band given as states ``u[k1, k2, :]`` on a periodic grid."""
    u1 = np.sum(np.conj(u) * np.roll(u, -1, axis=0), axis=-1)
    u2 = np.sum(np.conj(u) * np.roll(u, -1, axis=1), axis=-1)
    u1 = u1 / np.abs(u1)
    u2 = u2 / np.abs(u2)
    f = np.angle(u1 * np.roll(u2, -1, axis=0) / (np.roll(u1, -1, axis=1) * u2))
    total = f.sum() / (2 * np.pi)
    c = int(np.rint(total))
    if abs(total - c) > 1e-9:
        raise ArithmeticError(f"curvature sum {total} is not an integer")
    return c, f, np.stack([np.angle(u1), np.angle(u2)], axis=-1)


def chern_number(bh: BlochHamiltonian) -> ChernResult:
    u, gap = lower_band(bh)
    if gap <= GAP_TOL:
        raise GaplessGrid(f"band gap {gap:.2e} on the grid")
    c, f, ph = chern_from_states(u)
    return ChernResult(c, f, gap, ph)


def table_chern(table: StringTable, n: int = 5) -> ChernResult:
    return chern_number(fourier_bloch(assemble_blocks(table), n))


# ----------------------------------------------------------------------------
# bootstrap and sweeps


@dataclass
class BootstrapResult:
    batch_size: int
    trials: int
    mean: float
    ci_low: float
    ci_high: float
    failures: int  # trials with a gapless grid or an empty offset, scored as C = 0

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def bootstrap_chern(samples: np.ndarray, catalog: list[StringEntry], batch_size: int, trials: int,
                    rng: np.random.Generator, accepted: np.ndarray | None = None, n_grid: int = 5) -> BootstrapResult:
    """Mean Chern number over tables learned from random batches drawn with replacement."""
    if trials < 1:
        raise ValueError("trials must be >= 1")
    x = np.asarray(samples, dtype=float)
    pool = np.arange(len(x)) if accepted is None else np.nonzero(accepted)[0]
    if pool.size == 0:
        raise InsufficientSamples("no accepted snapshots")
    cs = np.zeros(trials)
    fails = 0
    for t in range(trials):
        rows = pool[rng.integers(0, pool.size, size=batch_size)]
        try:
            cs[t] = table_chern(table_from_samples(x, catalog, rows), n_grid).chern
        except (GaplessGrid, InsufficientSamples):
            fails += 1
    se = cs.std(ddof=1) / np.sqrt(trials) if trials > 1 else 0.0
    return BootstrapResult(batch_size, trials, float(cs.mean()), float(cs.mean() - se), float(cs.mean() + se), fails)
