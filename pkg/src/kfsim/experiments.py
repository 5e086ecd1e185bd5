"""Runnable experiments: each turns a protocol into blocks of noisy trajectories.

An experiment exposes ``specs`` (the observable families it records), ``block_size`` and
``simulate(start, n, rng) -> BlockResult``; ``derived`` adds summary rows computed from
the whole snapshot set and ``artifacts`` writes extra files (Chern results, Gamma dumps).

Readout uses conditional expectations: for each trajectory the recorded value is the
expectation of the measured Pauli string given that trajectory's frame and losses (a lost
atom reads out at random, so its observables contribute 0).  Means are those of the
sampled-outcome experiment; confidence intervals are narrower than shot-noise ones.
"""
from __future__ import annotations

import dataclasses
import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from kfsim.chern import (BootstrapResult, GaplessGrid, InsufficientSamples, bootstrap_chern, string_catalog,
                         table_chern, table_from_samples)
from kfsim.gaussian import Sector, save_gamma, vacuum_state
from kfsim.lattice import Lattice, build_lattice
from kfsim.noise import (BlockResult, Frame, NoiseModel, ObservableSpec, PostselectionPolicy, SnapshotSet,
                         SummaryRow, bootstrap_rng, pooled_mean_ci)
from kfsim.prep import DEFAULT_PROFILE, PrepMethod, check_profile, prep_observables, sample_prep
from kfsim.protocols import (ABELIAN_II_ANGLES, PHASE_B_ANGLES, ExchangeVariant, FermionCircuit, GateLayer,
                             HubbardModel, HubbardSpec, cycle_layers, dimer_pairs, exchange_layers, exchange_sites,
                             exchange_targets, frame_signs, initial_frame, nonconservation_sweep,
                             pair_creation_gate, phase_prep_circuit, prep_frames, quench_cycle, support_lost,
                             symplectic_rows)

N_BOOT = 200


# ----------------------------------------------------------------------------
# parameters (one dataclass per protocol kind; field names are the config keys)


INITS = ("phenomenological", "prep")


def _one_of(name, value, allowed):
    if value not in allowed:
        raise ValueError(f"{name} must be one of {allowed}, got {value!r}")


@dataclass(frozen=True)
class PrepParams:
    method: str = "ZXXZ32"
    profile: str = DEFAULT_PROFILE

    def __post_init__(self):
        PrepMethod(self.method)
        check_profile(self.profile)


@dataclass(frozen=True)
class StringsParams:
    state: str = "phase_b"  # phase_b | abelian_ii | vacuum | custom
    angles: tuple[float, ...] = ()
    chern: bool = False
    batch_sizes: tuple[int, ...] = (200,)
    bootstrap_trials: int = 100
    grid: int = 5
    init: str = "phenomenological"
    readout: str = "sampled"  # sampled (+-1 shot outcomes) | expectation

    def __post_init__(self):
        _one_of("state", self.state, ("phase_b", "abelian_ii", "vacuum", "custom"))
        _one_of("init", self.init, INITS)
        _one_of("readout", self.readout, ("sampled", "expectation"))
        if self.state == "custom" and not self.angles:
            raise ValueError("state 'custom' needs angles")
        if any(b < 1 for b in self.batch_sizes) or self.bootstrap_trials < 1 or self.grid < 2:
            raise ValueError("batch sizes and bootstrap trials must be >= 1, grid >= 2")


@dataclass(frozen=True)
class QuenchParams:
    theta_xy: float = -0.125
    theta_z: float = 1.0
    depth: int = 12
    cells: tuple[tuple[int, int], ...] = ((1, 3), (1, 4))
    init: str = "phenomenological"

    def __post_init__(self):
        _one_of("init", self.init, INITS)
        if self.depth < 0 or len(self.cells) != 2:
            raise ValueError("need depth >= 0 and exactly two cells")


@dataclass(frozen=True)
class CorrelationParams:
    theta_xy: float = -0.1876
    theta_z: float = 1.0
    depth: int = 11
    row: int = 1
    ref_col: int = 3
    separations: tuple[int, ...] = (1, 2)
    init: str = "phenomenological"

    def __post_init__(self):
        _one_of("init", self.init, INITS)
        if self.depth < 0 or not self.separations or min(self.separations) < 1:
            raise ValueError("need depth >= 0 and separations >= 1")


@dataclass(frozen=True)
class ExchangeParams:
    cell: tuple[int, int] = (1, 2)
    init: str = "prep"

    def __post_init__(self):
        _one_of("init", self.init, INITS)


@dataclass(frozen=True)
class HubbardParams:
    theta_xy: float = -0.1876
    theta_z: float = 1.0
    theta_u: float = 0.0
    rounds: int = 6

    def __post_init__(self):
        if self.rounds < 1:
            raise ValueError("rounds must be >= 1")


@dataclass(frozen=True)
class ConservationParams:
    theta_xy: float = -0.125
    theta_z: float = 1.0
    cancel_zz: bool = True


# ----------------------------------------------------------------------------
# helpers


class _Readout:
    """Bilinear observables ``P = sigma * i c_i c_j`` evaluated on a trajectory."""

    def __init__(self, n: int, i, j, sigma, paulis):
        self.i = np.asarray(i, dtype=int)
        self.j = np.asarray(j, dtype=int)
        self.sigma = np.asarray(sigma, dtype=float)
        self.ox, self.oz = symplectic_rows(paulis, n)
        self.supp = (self.ox | self.oz).astype(bool)
        self.supports = tuple(tuple(sorted(p.support)) for p in paulis)

    def __call__(self, gamma: np.ndarray, frame: Frame | None) -> np.ndarray:
        v = frame_signs(frame, self.ox, self.oz) * self.sigma * gamma[self.i, self.j]
        v[support_lost(frame, self.supp)] = 0.0
        return v


def _dimer_readout(sector: Sector, pairs) -> _Readout:
    from kfsim.pauli import PauliString
    prs = [sector.enc.pairs[p] for p in pairs]
    return _Readout(sector.n, [a for a, _ in prs], [b for _, b in prs], [sector.pair_sign(p) for p in pairs],
                    [PauliString({a: "Z", b: "Z"}) for a, b in prs])


def _boot_ci(stat, n: int, rng: np.random.Generator, n_boot: int = N_BOOT) -> tuple[float, float]:
    vals = np.array([stat(rng.integers(0, n, size=n)) for _ in range(n_boot)])
    vals = vals[np.isfinite(vals)]
    if vals.size == 0:
        return float("nan"), float("nan")
    return float(np.quantile(vals, 0.16)), float(np.quantile(vals, 0.84))


def _pooled(v: np.ndarray, ok: np.ndarray) -> float:
    c = ok.sum()
    return float(np.where(ok, v, 0.0).sum() / c) if c else float("nan")


class Experiment:
    kind = ""
    block_size = 32
    deterministic = False

    def __init__(self, lat: Lattice, params, noise: NoiseModel | None):
        self.lat = lat
        self.params = params
        self.noise = noise
        self.specs: list[ObservableSpec] = []

    @property
    def noisy(self) -> bool:
        return self.noise is not None and not self.noise.is_noiseless

    def simulate(self, start: int, n: int, rng: np.random.Generator) -> BlockResult:
        raise NotImplementedError

    def derived(self, snaps: SnapshotSet, policy: PostselectionPolicy) -> list[SummaryRow]:
        return []

    def artifacts(self, snaps: SnapshotSet, policy: PostselectionPolicy, out_dir: Path) -> list[Path]:
        return []

    def metadata(self) -> dict:
        return {"kind": self.kind, **{k: _jsonable(v) for k, v in dataclasses.asdict(self.params).items()}}


def _jsonable(v):
    if isinstance(v, tuple):
        return [_jsonable(x) for x in v]
    return v


class _FermionExperiment(Experiment):
    """Trajectories on the Gaussian engine with a Pauli frame."""

    def __init__(self, lat, params, noise):
        super().__init__(lat, params, noise)
        self.sector = Sector.of(lat)
        self.vacuum = vacuum_state(self.sector)
        if getattr(params, "init", "phenomenological") not in ("phenomenological", "prep"):
            raise ValueError(f"unknown init {params.init!r}")

    def frames(self, n: int, rng: np.random.Generator) -> tuple[list[Frame | None], np.ndarray]:
        if not self.noisy:
            return [None] * n, np.zeros(n, dtype=int)
        if self.params.init == "prep":
            return prep_frames(self.lat, self.noise, n, rng)
        return [initial_frame(self.lat, self.noise, rng) for _ in range(n)], np.zeros(n, dtype=int)

    def run(self, circ: FermionCircuit, frame, rng, callback=None) -> np.ndarray:
        noise = self.noise if self.noisy else None
        return circ.run(self.vacuum, frame, noise, rng, callback=callback)

    @staticmethod
    def _pack(start, values, frames, viol, n_data, extra=None) -> BlockResult:
        n = len(viol)
        lost = np.zeros((n, n_data), dtype=bool)
        fx = np.zeros((n, n_data), dtype=bool)
        fz = np.zeros((n, n_data), dtype=bool)
        for t, f in enumerate(frames):
            if f is not None:
                lost[t], fx[t], fz[t] = f.lost, f.x, f.z
        return BlockResult(start, {k: np.asarray(v, dtype=float) for k, v in values.items()}, lost,
                           np.asarray(viol, dtype=int), fx, fz, extra or {})


# ----------------------------------------------------------------------------
# measurement-based preparation


class PrepExperiment(Experiment):
    kind = "prep"
    block_size = 2048

    def __init__(self, lat, params: PrepParams, noise):
        super().__init__(lat, params, noise)
        self.method = PrepMethod(params.method)
        obs = prep_observables(lat)
        self.specs = [ObservableSpec(name, tuple(tuple(sorted(p.support)) for p in obs[key]))
                      for name, key in (("plaquette", "plaquettes"), ("zz_link", "zz_links"), ("loop", "loops"))]

    def simulate(self, start, n, rng):
        noise = self.noise if self.noise is not None else NoiseModel.noiseless()
        s = sample_prep(self.lat, self.method, noise, n, rng, profile=self.params.profile)
        vals = {"plaquette": s.plaquettes, "zz_link": s.zz_links, "loop": s.loops}
        return BlockResult(start, {k: v.astype(float) for k, v in vals.items()}, s.lost,
                           s.column_violations.astype(int), extra={"ancilla_flips": s.outcome_flips.astype(np.int8)})


# ----------------------------------------------------------------------------
# phase preparation, string tables, Chern number


class StringsExperiment(_FermionExperiment):
    kind = "strings"
    block_size = 32

    def __init__(self, lat, params: StringsParams, noise):
        super().__init__(lat, params, noise)
        if params.readout not in ("sampled", "expectation"):
            raise ValueError(f"unknown readout {params.readout!r}")
        self.angles = self.state_angles(params)
        self.circuit = FermionCircuit(self.sector, cycle_layers(self.sector, phase_prep_circuit(lat, self.angles)))
        self.catalog = string_catalog(self.sector)
        cat = self.catalog
        self.strings = _Readout(self.sector.n, [e.i for e in cat], [e.j for e in cat],
                                [e.conv * e.tau for e in cat], [e.pauli for e in cat])
        self.conv = np.array([e.conv for e in cat], dtype=float)
        enc = self.sector.enc
        self.plaq = [enc.plaquette_op(p) for p in range(len(lat.plaquettes))]
        self.plaq_ox, self.plaq_oz = symplectic_rows(self.plaq, self.sector.n)
        self.specs = [ObservableSpec("strings", self.strings.supports),
                      ObservableSpec("plaquette", tuple(tuple(sorted(p.support)) for p in self.plaq))]

    @staticmethod
    def state_angles(p: StringsParams) -> tuple[float, ...]:
        if p.state == "phase_b":
            return PHASE_B_ANGLES
        if p.state == "abelian_ii":
            return ABELIAN_II_ANGLES
        if p.state == "vacuum":
            return ()
        if p.state == "custom":
            return tuple(p.angles)
        raise ValueError(f"unknown state {p.state!r}")

    def simulate(self, start, n, rng):
        frames, viol = self.frames(n, rng)
        s_vals = np.zeros((n, len(self.catalog)))
        p_vals = np.zeros((n, len(self.plaq)))
        for t, f in enumerate(frames):
            g = self.run(self.circuit, f, rng)
            s_vals[t] = self.strings(g, f)
            if self.params.readout == "sampled":
                s_vals[t] = np.where(rng.random(len(self.catalog)) < (1 + s_vals[t]) / 2, 1.0, -1.0)
            p_vals[t] = frame_signs(f, self.plaq_ox, self.plaq_oz)
            if f is not None:
                p_vals[t][support_lost(f, (self.plaq_ox | self.plaq_oz).astype(bool))] = 0.0
        return self._pack(start, {"strings": s_vals, "plaquette": p_vals}, frames, viol, self.sector.n)

    def masked_samples(self, snaps, policy) -> np.ndarray:
        ok = snaps.accepted(self.lat, self.specs[0], policy)
        return np.where(ok, snaps.values["strings"], np.nan)

    def derived(self, snaps, policy):
        ok = snaps.accepted(self.lat, self.specs[0], policy)
        v = snaps.values["strings"] * self.conv[None, :]
        cols: dict = {}
        for c, e in enumerate(self.catalog):
            cols.setdefault(e.key, []).append(c)
        rows = []
        for (off, b), idx in sorted(cols.items()):
            m, lo, hi = pooled_mean_ci(v[:, idx], ok[:, idx])
            rows.append(SummaryRow(f"T[{off[0]:+d},{off[1]:+d},{b}]", m, lo, hi, float(ok[:, idx].mean())))
        if self.params.chern:
            res, boots, _ = self.chern(snaps, policy)
            acc = float(ok.mean())
            c = float("nan") if res is None else float(res.chern)
            rows.append(SummaryRow("chern", c, c, c, acc))
            for b in boots:
                rows.append(SummaryRow(f"chern_bootstrap[{b.batch_size}]", b.mean, b.ci_low, b.ci_high, acc))
        return rows

    def chern(self, snaps, policy):
        x = self.masked_samples(snaps, policy)
        try:
            table = table_from_samples(x, self.catalog)
            res = table_chern(table, self.params.grid)
        except (GaplessGrid, InsufficientSamples):
            table, res = None, None
        boots: list[BootstrapResult] = []
        rng = bootstrap_rng(snaps.seed)
        if snaps.n > 1:
            for b in self.params.batch_sizes:
                boots.append(bootstrap_chern(x, self.catalog, int(b), self.params.bootstrap_trials, rng,
                                             n_grid=self.params.grid))
        return res, boots, table

    def artifacts(self, snaps, policy, out_dir):
        g = self.circuit.run(self.vacuum)
        out = [save_gamma(out_dir / "gamma.bin", g, self.lat, protocol=self.metadata(), noiseless=True)]
        if self.params.chern:
            res, boots, table = self.chern(snaps, policy)
            doc = {"chern": None if res is None else res.chern,
                   "min_gap": None if res is None else res.min_gap,
                   "curvature": None if res is None else res.curvature.tolist(),
                   "table": None if table is None else json.loads(table.to_json()),
                   "bootstrap": [b.to_dict() for b in boots],
                   "angles": list(self.angles)}
            (out_dir / "chern.json").write_text(json.dumps(doc, indent=1))
            out.append(out_dir / "chern.json")
            if res is not None:
                (out_dir / "curvature.csv").write_text(res.curvature_csv())
                out.append(out_dir / "curvature.csv")
        return out


# ----------------------------------------------------------------------------
# quench dynamics


def _pair_at(sector: Sector, cell) -> int:
    lat = sector.lat
    cell = tuple(cell)
    if cell not in lat.unit_cells:
        raise ValueError(f"no dimer at cell {cell}")
    return sector.enc.pair_of_site[lat.unit_cells[cell][0]]


def quench_layers(sector: Sector, theta_xy: float, theta_z: float, depth: int, p: int, q: int) -> list[GateLayer]:
    pair = GateLayer((pair_creation_gate(sector, p, q),), 1, "pair")
    return [pair] + cycle_layers(sector, quench_cycle(sector.lat, theta_xy, theta_z, depth))


class QuenchExperiment(_FermionExperiment):
    kind = "quench"

    def __init__(self, lat, params: QuenchParams, noise):
        super().__init__(lat, params, noise)
        if len(params.cells) != 2 or params.depth < 0:
            raise ValueError("quench needs two initial cells and depth >= 0")
        p, q = (_pair_at(self.sector, c) for c in params.cells)
        self.circuit = FermionCircuit(self.sector, quench_layers(self.sector, params.theta_xy, params.theta_z,
                                                                 params.depth, p, q))
        self.dimers = dimer_pairs(self.sector)
        self.readout = _dimer_readout(self.sector, self.dimers)
        self.specs = [ObservableSpec(f"n_depth{d}", self.readout.supports, reduce="sum")
                      for d in range(params.depth + 1)]

    def simulate(self, start, n, rng):
        frames, viol = self.frames(n, rng)
        vals = {s.name: np.zeros((n, len(self.dimers))) for s in self.specs}
        for t, f in enumerate(frames):
            def grab(li, g, frame, t=t):
                vals[f"n_depth{li - 1}"][t] = (1 - self.readout(g, frame)) / 2
            self.run(self.circuit, f, rng, callback=grab)
        return self._pack(start, vals, frames, viol, self.sector.n)

    def artifacts(self, snaps, policy, out_dir):
        g = self.circuit.run(self.vacuum)
        return [save_gamma(out_dir / "gamma.bin", g, self.lat, protocol=self.metadata(), noiseless=True)]


class CorrelationExperiment(_FermionExperiment):
    """Density-density correlations along one row after a two-fermion quench."""

    kind = "correlations"

    def __init__(self, lat, params: CorrelationParams, noise):
        super().__init__(lat, params, noise)
        sec = self.sector
        self.cut = [_pair_at(sec, (params.row, m)) for m in range(lat.n_cols) if (params.row, m) in lat.unit_cells]
        self.cut_cols = [m for m in range(lat.n_cols) if (params.row, m) in lat.unit_cells]
        self.ref = _pair_at(sec, (params.row, params.ref_col))
        self.ref_k = self.cut.index(self.ref)
        self.readout = _dimer_readout(sec, self.cut)
        self.circuits = {}
        self.specs = []
        for d in params.separations:
            q = _pair_at(sec, (params.row, params.ref_col + d))
            self.circuits[d] = FermionCircuit(sec, quench_layers(sec, params.theta_xy, params.theta_z,
                                                                 params.depth, self.ref, q))
            sup = self.readout.supports
            pair_sup = tuple(tuple(sorted(set(sup[self.ref_k]) | set(s))) for s in sup)
            self.specs += [ObservableSpec(f"n_d{d}", sup, per_member=True),
                           ObservableSpec(f"nn_d{d}", pair_sup)]

    def _nn(self, g, frame) -> np.ndarray:
        """``E[n_ref n_j | trajectory]`` for every cut site (``n_ref`` itself at the reference)."""
        sec = self.sector
        z = self.readout(g, frame)
        s = frame_signs(frame, self.readout.ox, self.readout.oz)
        lost = support_lost(frame, self.readout.supp)
        out = np.zeros(len(self.cut))
        r = self.ref_k
        for k, pq in enumerate(self.cut):
            if k == r:
                out[k] = (1 - z[r]) / 2
                continue
            a, b = sec.enc.pairs[self.ref]
            c, d = sec.enc.pairs[pq]
            cov = sec.pair_sign(self.ref) * sec.pair_sign(pq) * (g[a, d] * g[b, c] - g[a, c] * g[b, d])
            zz = 0.0 if (lost[r] or lost[k]) else s[r] * s[k] * (z[r] * z[k] * s[r] * s[k] + cov)
            out[k] = (1 - z[r] - z[k] + zz) / 4
        return out

    def simulate(self, start, n, rng):
        frames, viol = self.frames(n, rng)
        vals = {s.name: np.zeros((n, len(self.cut))) for s in self.specs}
        for t, f0 in enumerate(frames):
            for d, circ in self.circuits.items():
                f = None if f0 is None else f0.copy()
                g = self.run(circ, f, rng)
                vals[f"n_d{d}"][t] = (1 - self.readout(g, f)) / 2
                vals[f"nn_d{d}"][t] = self._nn(g, f)
                if f is not None:
                    f0.lost |= f.lost  # loss postselection sees every atom lost in any run
        return self._pack(start, vals, frames, viol, self.sector.n)

    def g_profile(self, n_vals, nn_vals, ok_n, ok_nn) -> np.ndarray:
        """``G_ref,j / <n_ref>`` along the cut (0 at the reference)."""
        r = self.ref_k
        nr = _pooled(n_vals[:, r], ok_n[:, r])
        out = np.zeros(len(self.cut))
        for k in range(len(self.cut)):
            if k != r:
                out[k] = (_pooled(nn_vals[:, k], ok_nn[:, k]) - nr * _pooled(n_vals[:, k], ok_n[:, k])) / nr
        return out

    def asymmetry(self, prof: np.ndarray) -> float:
        """|sum of G/n on the side away from the partner| over |sum on the partner's side|."""
        r = self.ref_k
        den = abs(prof[r + 1:].sum())
        return float(abs(prof[:r].sum()) / den) if den > 0 else float("nan")

    def derived(self, snaps, policy):
        rows = []
        rng = bootstrap_rng(snaps.seed)
        for d in self.params.separations:
            sn, snn = self.specs[2 * self.params.separations.index(d)], self.specs[2 * self.params.separations.index(d) + 1]
            nv, nnv = snaps.values[sn.name], snaps.values[snn.name]
            okn, oknn = snaps.accepted(self.lat, sn, policy), snaps.accepted(self.lat, snn, policy)
            prof = self.g_profile(nv, nnv, okn, oknn)
            boots = [self.g_profile(nv[i], nnv[i], okn[i], oknn[i])
                     for i in (rng.integers(0, snaps.n, snaps.n) for _ in range(N_BOOT if snaps.n > 1 else 0))]
            acc = float(oknn.mean())
            for k, m in enumerate(self.cut_cols):
                if k == self.ref_k:
                    continue
                lo, hi = (np.quantile([b[k] for b in boots], [0.16, 0.84]) if boots else (prof[k], prof[k]))
                rows.append(SummaryRow(f"G_d{d}[{m}]", float(prof[k]), float(lo), float(hi), acc))
            a = self.asymmetry(prof)
            ab = [self.asymmetry(b) for b in boots]
            lo, hi = np.quantile(ab, [0.16, 0.84]) if ab else (a, a)
            rows.append(SummaryRow(f"asymmetry_d{d}", a, float(lo), float(hi), acc))
        return rows


# ----------------------------------------------------------------------------
# exchange


class ExchangeExperiment(_FermionExperiment):
    kind = "exchange"

    def __init__(self, lat, params: ExchangeParams, noise):
        super().__init__(lat, params, noise)
        sec = self.sector
        self.sites = exchange_sites(lat, tuple(params.cell))
        self.circuits = {v: FermionCircuit(sec, exchange_layers(sec, v, self.sites)) for v in ExchangeVariant}
        self.readouts = {v: _dimer_readout(sec, exchange_targets(v, self.sites)) for v in ExchangeVariant}
        self.specs = [ObservableSpec(f"density_{v.value}", self.readouts[v].supports) for v in ExchangeVariant]

    def simulate(self, start, n, rng):
        frames, viol = self.frames(n, rng)
        vals = {s.name: np.zeros((n, 2)) for s in self.specs}
        for t, f0 in enumerate(frames):
            for v, circ in self.circuits.items():
                f = None if f0 is None else f0.copy()
                g = self.run(circ, f, rng)
                vals[f"density_{v.value}"][t] = (1 - self.readouts[v](g, f)) / 2
                if f is not None:
                    f0.lost |= f.lost  # loss postselection sees every atom lost in any run
        return self._pack(start, vals, frames, viol, self.sector.n)

    def contrast(self, snaps, policy, rows=None):
        hr = self.specs[[v for v in ExchangeVariant].index(ExchangeVariant.HopAndReturn)]
        fe = self.specs[[v for v in ExchangeVariant].index(ExchangeVariant.FullExchange)]
        a, b = snaps.values[hr.name], snaps.values[fe.name]
        oa, ob = snaps.accepted(self.lat, hr, policy), snaps.accepted(self.lat, fe, policy)
        if rows is not None:
            a, b, oa, ob = a[rows], b[rows], oa[rows], ob[rows]
        return _pooled(a, oa) - _pooled(b, ob), float((oa.mean() + ob.mean()) / 2)

    def derived(self, snaps, policy):
        c, acc = self.contrast(snaps, policy)
        rng = bootstrap_rng(snaps.seed)
        lo, hi = _boot_ci(lambda r: self.contrast(snaps, policy, r)[0], snaps.n, rng) if snaps.n > 1 else (c, c)
        return [SummaryRow("contrast", c, lo, hi, acc)]

    def artifacts(self, snaps, policy, out_dir):
        g = self.circuits[ExchangeVariant.FullExchange].run(self.vacuum)
        return [save_gamma(out_dir / "gamma.bin", g, self.lat, protocol=self.metadata(), noiseless=True)]


# ----------------------------------------------------------------------------
# deterministic experiments


class _Deterministic(Experiment):
    deterministic = True
    block_size = 1 << 20

    def values(self) -> dict[str, np.ndarray]:
        raise NotImplementedError

    def simulate(self, start, n, rng):
        if not hasattr(self, "_cache"):
            self._cache = self.values()
        vals = {k: np.tile(np.asarray(v, dtype=float), (n, 1)) for k, v in self._cache.items()}
        return BlockResult(start, vals, np.zeros((n, self.lat.n_data), dtype=bool), np.zeros(n, dtype=int))


class HubbardExperiment(_Deterministic):
    """Staggered magnetization of the two-spin patch (noiseless)."""

    kind = "hubbard"

    def __init__(self, lat, params: HubbardParams, noise):
        super().__init__(lat, params, noise)
        self.model = HubbardModel(lat.n_rows, lat.n_cols)
        self.spec = HubbardSpec(params.theta_xy, params.theta_z, params.theta_u, params.rounds,
                                lat.n_rows, lat.n_cols)
        self.specs = [ObservableSpec(f"m_s_round{r}", ((),)) for r in range(params.rounds + 1)]

    def trace(self) -> np.ndarray:
        if self.spec.theta_u == 0:
            return self.model.free_trace(self.spec)
        return self.model.oracle_trace(self.spec)

    def values(self):
        tr = self.trace()
        return {f"m_s_round{r}": [tr[r]] for r in range(len(tr))}


class ConservationExperiment(_Deterministic):
    """Bulk particle-number nonconservation of the two-cycle drive."""

    kind = "conservation"

    def __init__(self, lat, params: ConservationParams, noise):
        super().__init__(lat, params, noise)
        self.sector = Sector.of(lat)
        self.specs = [ObservableSpec("nonconservation", ((),))]

    def values(self):
        v = nonconservation_sweep(self.sector, self.params.theta_xy, [self.params.theta_z],
                                  cancel_zz=self.params.cancel_zz)
        return {"nonconservation": [v[0]]}


KINDS = {
    "prep": (PrepParams, PrepExperiment),
    "strings": (StringsParams, StringsExperiment),
    "quench": (QuenchParams, QuenchExperiment),
    "correlations": (CorrelationParams, CorrelationExperiment),
    "exchange": (ExchangeParams, ExchangeExperiment),
    "hubbard": (HubbardParams, HubbardExperiment),
    "conservation": (ConservationParams, ConservationExperiment),
}


def make_experiment(kind: str, lat: Lattice, params, noise: NoiseModel | None) -> Experiment:
    return KINDS[kind][1](lat, params, noise)
