"""Experiment builders: phase preparation, quenches, exchange, Hubbard, plus gate identities.

Every fermionic circuit is a list of :class:`GateLayer`; a gate is ``exp(i phi P)`` for a
Pauli string ``P`` that equals ``sign * i c_i c_j`` on the reference sector.  Noisy
trajectories keep the correlation matrix in the reference sector and carry errors in a
Pauli frame: a frame Pauli that anticommutes with ``P`` flips the gate's sign, gates that
touch lost atoms are dropped, and the frame flips anticommuting observables at readout.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np
import scipy.linalg
import scipy.optimize

from kfsim.chern import bulk_average, string_catalog, table_chern, StringEntry
from kfsim.encoding import Encoding
from kfsim.gaussian import (FloquetCycle, InvariantBreach, Layer, Sector, _rotate_pairs, angle_of, effective_hamiltonian,
                            ground_state, particle_nonconservation, vacuum_state)
from kfsim.lattice import Lattice, LinkType, build_lattice
from kfsim.noise import Frame, NoiseModel, apply_layer_noise
from kfsim.oracle import DenseState, cp_matrix
from kfsim.pauli import PauliString, multiply
from kfsim.prep import DEFAULT_PROFILE, PrepMethod, sample_prep

PHASE_CYCLE = ("X", "Y", "Z")
# Abelian-II circuit: CP[-0.0625], CP[-0.0625], CP[-0.3125] on X, Y, Z links
ABELIAN_II_ANGLES = (-0.125, -0.125, -0.625)
# Floquet time of the target state, read as a gate label
TARGET_THETA = 0.25
# optimiser output for the phase-B target on the 4x8 cylinder (see scripts/optimize_phase_b.py)
PHASE_B_ANGLES = (0.7025, -0.2734, 0.4299, -1.0202, -0.1642, -0.0120)


# ----------------------------------------------------------------------------
# gates and circuits


@dataclass(frozen=True)
class Gate:
    """``exp(i phi P)`` with ``P = sign * i c_i c_j``; ``theta`` is set for link gates."""

    i: int
    j: int
    sign: int
    phi: float
    pauli: PauliString
    theta: float | None = None


@dataclass(frozen=True)
class GateLayer:
    gates: tuple[Gate, ...]
    noise_layers: int = 1  # physical gate layers this step stands for
    label: str = ""


def link_layer(sector: Sector, kind: LinkType | str, theta: float, links=None) -> GateLayer:
    kind = LinkType(kind) if isinstance(kind, str) else kind
    lat = sector.lat
    ks = lat.links_of(kind) if links is None else list(links)
    gates = tuple(Gate(lat.links[k].a, lat.links[k].b, int(sector.signs[k]), angle_of(theta),
                       sector.enc.link_op(k), theta) for k in ks)
    return GateLayer(gates, 1, f"{kind.letter}({theta:g})")


def cycle_layers(sector: Sector, cycle: FloquetCycle) -> list[GateLayer]:
    lat = sector.lat
    out = []
    for lay in cycle.layers:
        kinds = {lat.links[k].kind for k in lay.links}
        kind = kinds.pop() if len(kinds) == 1 else LinkType.ZZ
        gl = link_layer(sector, kind, lay.theta, lay.links)
        out.append(gl)
    return out


def gauge_gate(sector: Sector, i: int, j: int, phi: float, links=None) -> Gate:
    """``exp(i phi * i c~_i c~_j)`` in the uniform gauge where every link is ``+i c~_e c~_o``."""
    enc = sector.enc
    links = enc.link_path(i, j) if links is None else links
    es = enc.majorana_string(i, j, links=links)
    tau = 1
    for k in links:
        l = sector.lat.links[k]
        s = int(sector.signs[k])
        tau *= s if sector.lat.data_sites[l.a].col % 2 == 0 else -s
    # i c~_i c~_j = tau * i c_i c_j = tau * sigma * P
    sigma = sector.string_sign(es)
    return Gate(i, j, sigma, tau * sigma * phi, es.pauli)


class FermionCircuit:
    """Compiled gate layers on one sector, runnable noiselessly or along a noisy trajectory."""

    def __init__(self, sector: Sector, layers: list[GateLayer]):
        self.sector = sector
        self.layers = list(layers)
        n = sector.n
        self._compiled = []
        for lay in self.layers:
            idx = [g.i for g in lay.gates] + [g.j for g in lay.gates]
            if len(set(idx)) != len(idx):
                raise ValueError(f"layer {lay.label!r} has overlapping gates")
            ox = np.zeros((len(lay.gates), n), dtype=np.uint8)
            oz = np.zeros((len(lay.gates), n), dtype=np.uint8)
            for r, g in enumerate(lay.gates):
                for q, l in g.pauli.support.items():
                    ox[r, q] = l in "XY"
                    oz[r, q] = l in "ZY"
            self._compiled.append(dict(
                a=np.array([g.i for g in lay.gates], dtype=int),
                b=np.array([g.j for g in lay.gates], dtype=int),
                sign=np.array([g.sign for g in lay.gates], dtype=float),
                phi=np.array([g.phi for g in lay.gates], dtype=float),
                theta=np.array([np.nan if g.theta is None else g.theta for g in lay.gates]),
                ox=ox, oz=oz, supp=(ox | oz).astype(bool)))

    def __len__(self):
        return len(self.layers)

    @property
    def n_noise_layers(self) -> int:
        return sum(l.noise_layers for l in self.layers)

    def run(self, gamma: np.ndarray, frame: Frame | None = None, noise: NoiseModel | None = None,
            rng: np.random.Generator | None = None, callback=None, stop: int | None = None) -> np.ndarray:
        g = gamma.copy()
        offset = 0.0 if noise is None else noise.angle_offset
        for li, c in enumerate(self._compiled[:stop]):
            if len(c["a"]):
                phi = np.where(np.isnan(c["theta"]), c["phi"], (c["theta"] + offset) * np.pi / 4)
                sign = c["sign"].copy()
                keep = np.ones(len(sign), dtype=bool)
                if frame is not None:
                    anti = (c["ox"] @ frame.z.astype(np.uint8) + c["oz"] @ frame.x.astype(np.uint8)) % 2
                    sign = np.where(anti == 1, -sign, sign)
                    if frame.lost.any():
                        keep = ~(c["supp"] & frame.lost[None, :]).any(axis=1)
                if keep.any():
                    g = _rotate_pairs(g, c["a"][keep], c["b"][keep], np.cos(2 * phi[keep]),
                                      sign[keep] * np.sin(2 * phi[keep]))
            if frame is not None and noise is not None and noise.p_layer > 0:
                for _ in range(self.layers[li].noise_layers):
                    apply_layer_noise(frame, noise.p_layer, noise.loss_fraction_layer, rng, noise.pauli_bias)
            if callback is not None:
                callback(li + 1, g, frame)
        return g


def initial_frame(lat: Lattice, noise: NoiseModel | None, rng: np.random.Generator) -> Frame:
    """Phenomenological initialisation noise: one layer of strength ``p_ini`` on the ideal vacuum."""
    f = Frame.clean(lat.n_data)
    if noise is not None and noise.p_ini > 0:
        apply_layer_noise(f, noise.p_ini, noise.loss_fraction_ini, rng, noise.pauli_bias)
    return f


def prep_frames(lat: Lattice, noise: NoiseModel, shots: int, rng: np.random.Generator,
                method=PrepMethod.ZXXZ32, profile: str = DEFAULT_PROFILE):
    """Initial frames drawn from the Clifford prep sampler; also returns column violations."""
    s = sample_prep(lat, method, noise, shots, rng, profile=profile, keep_frame=True)
    frames = [Frame(s.frame_x[t].copy(), s.frame_z[t].copy(), s.lost[t].copy()) for t in range(shots)]
    return frames, s.column_violations.astype(int)


def frame_signs(frame: Frame | None, ox: np.ndarray, oz: np.ndarray) -> np.ndarray:
    """+-1 per observable row: whether the frame flips it."""
    if frame is None:
        return np.ones(len(ox))
    anti = (ox @ frame.z.astype(np.uint8) + oz @ frame.x.astype(np.uint8)) % 2
    return 1 - 2 * anti.astype(float)


def symplectic_rows(paulis, n: int) -> tuple[np.ndarray, np.ndarray]:
    ox = np.zeros((len(paulis), n), dtype=np.uint8)
    oz = np.zeros((len(paulis), n), dtype=np.uint8)
    for r, p in enumerate(paulis):
        for q, l in p.support.items():
            ox[r, q] = l in "XY"
            oz[r, q] = l in "ZY"
    return ox, oz


def support_lost(frame: Frame | None, supp: np.ndarray) -> np.ndarray:
    if frame is None or not frame.lost.any():
        return np.zeros(len(supp), dtype=bool)
    return (supp & frame.lost[None, :]).any(axis=1)


# ----------------------------------------------------------------------------
# observables on dimers


def dimer_pairs(sector: Sector) -> list[int]:
    """Pair indices of the ZZ dimers (edge pairs without a link are left out)."""
    return [p for p, (a, b) in enumerate(sector.enc.pairs) if sector.lat.link_between(a, b) is not None]


def zz_values(gamma: np.ndarray, sector: Sector, pairs) -> np.ndarray:
    s = sector.pair_signs
    return np.array([s[p] * gamma[sector.enc.pairs[p]] for p in pairs])


def pair_cov(gamma: np.ndarray, sector: Sector, p: int, q: int) -> float:
    """Connected ``<Z_p Z_q> - <Z_p><Z_q>`` of two dimer parities (Wick)."""
    a, b = sector.enc.pairs[p]
    c, d = sector.enc.pairs[q]
    sp, sq = sector.pair_sign(p), sector.pair_sign(q)
    return sp * sq * (gamma[a, d] * gamma[b, c] - gamma[a, c] * gamma[b, d])


# ----------------------------------------------------------------------------
# phase preparation


def phase_prep_circuit(lat: Lattice, angles) -> FloquetCycle:
    """Layers cycling X, Y, Z links with the given gate labels (six for the phase-B circuit)."""
    spec = [(PHASE_CYCLE[k % 3], float(a)) for k, a in enumerate(angles)]
    if not all(np.isfinite(a) for _, a in spec):
        raise ValueError("angles must be finite")
    return FloquetCycle.from_types(lat, spec)


def prepared_state(sector: Sector, angles) -> np.ndarray:
    return FermionCircuit(sector, cycle_layers(sector, phase_prep_circuit(sector.lat, angles))).run(vacuum_state(sector))


def floquet_target(sector: Sector, theta: float = TARGET_THETA, couplings=(1.0, 1.0, 1.0)) -> np.ndarray:
    """Ground state of the effective Hamiltonian of one X, Y, Z cycle with labels ``theta * J``."""
    cyc = FloquetCycle.from_types(sector.lat, [(k, theta * j) for k, j in zip(PHASE_CYCLE, couplings)])
    return ground_state(effective_hamiltonian(sector, cyc))


def table_overlap(t1, t2) -> float:
    keys = sorted(set(t1.values) | set(t2.values))
    a, b = t1.vector(keys), t2.vector(keys)
    den = np.linalg.norm(a) * np.linalg.norm(b)
    return float(a @ b / den) if den > 0 else 0.0


@dataclass
class OptimizeResult:
    angles: tuple[float, ...]
    objective: float
    evaluations: int
    converged: bool


def optimize_prep_angles(sector: Sector, target_table, depth: int = 6, x0=None, tol: float = 1e-6,
                         maxiter: int = 4000, catalog=None, restarts: int = 0,
                         rng: np.random.Generator | None = None) -> OptimizeResult:
    """Nelder-Mead over the layer labels, maximising the bulk-table overlap with the target."""
    if depth < 1:
        raise ValueError("depth must be >= 1")
    catalog = string_catalog(sector) if catalog is None else catalog
    nfev = 0

    def cost(x):
        nonlocal nfev
        nfev += 1
        return -table_overlap(bulk_average(prepared_state(sector, x), sector, catalog), target_table)

    starts = [np.zeros(depth) + 0.1 if x0 is None else np.asarray(x0, dtype=float)]
    rng = np.random.default_rng(0) if rng is None else rng
    starts += [rng.uniform(-0.5, 0.5, depth) for _ in range(restarts)]
    best = None
    for s in starts:
        res = scipy.optimize.minimize(cost, s, method="Nelder-Mead",
                                      options=dict(xatol=tol, fatol=tol, maxiter=maxiter, adaptive=True))
        if best is None or res.fun < best.fun:
            best = res
    return OptimizeResult(tuple(float(v) for v in best.x), float(-best.fun), nfev, bool(best.success))


# ----------------------------------------------------------------------------
# quench


def quench_cycle(lat: Lattice, theta_xy: float, theta_z: float, depth: int) -> FloquetCycle:
    """``depth`` layers of the X, Y, Z drive (the cycle order of the Floquet unitary)."""
    spec = [("X", theta_xy), ("Y", theta_xy), ("Z", theta_z)]
    return FloquetCycle.from_types(lat, [spec[k % 3] for k in range(depth)])


def pair_creation_gate(sector: Sector, p: int, q: int) -> Gate:
    """Applying the open string itself (``exp(i pi/2 S) = i S``) flips both occupations."""
    es = sector.enc.pair_creation_string(p, q)
    return Gate(es.i, es.j, sector.string_sign(es), np.pi / 2, es.pauli)


def conservation_hamiltonian(sector: Sector, theta_xy: float, theta_z: float, cancel_zz: bool = True):
    """Two drive cycles; the second ZZ layer runs at ``-theta_z`` to drop the net ZZ(2 theta)."""
    lat = sector.lat
    spec = [("X", theta_xy), ("Y", theta_xy), ("Z", theta_z),
            ("X", theta_xy), ("Y", theta_xy), ("Z", -theta_z if cancel_zz else theta_z)]
    return effective_hamiltonian(sector, FloquetCycle.from_types(lat, spec))


def nonconservation_sweep(sector: Sector, theta_xy: float, theta_zs, region=None, cancel_zz: bool = True) -> np.ndarray:
    region = sector.lat.bulk_region if region is None else region
    return np.array([particle_nonconservation(conservation_hamiltonian(sector, theta_xy, tz, cancel_zz), sector, region)
                     for tz in theta_zs])


# ----------------------------------------------------------------------------
# exchange


class ExchangeVariant(enum.Enum):
    HopAndReturn = "hop_and_return"
    FullExchange = "full_exchange"
    Control0 = "control0"
    Control2 = "control2"


@dataclass(frozen=True)
class ExchangeSites:
    """Four dimers on a ring A -YY- B -XX- D -YY- C -XX- A (pair indices)."""

    a: int
    b: int
    c: int
    d: int

    @property
    def all(self) -> tuple[int, int, int, int]:
        return (self.a, self.b, self.c, self.d)


def exchange_sites(lat: Lattice, cell=(1, 2)) -> ExchangeSites:
    enc = Encoding(lat)
    pos = {}
    for (r, m), (e, o) in lat.unit_cells.items():
        pos[(r, m)] = enc.pair_of_site[e]
    r, m = cell

    def at(dr, dm):
        c = lat.cell_shift((r, m), (dr, dm)) if (dr or dm) else (r, m)
        if c is None:
            raise ValueError("exchange ring does not fit at this cell")
        return pos[c]

    return ExchangeSites(at(0, 0), at(0, 1), at(1, 1), at(1, 2))


def _cell_sites(sector: Sector, pair: int) -> tuple[int, int]:
    """(even, odd) site of a dimer."""
    a, b = sector.enc.pairs[pair]
    return (a, b) if sector.lat.data_sites[a].col % 2 == 0 else (b, a)


def hop_layer(sector: Sector, hops, label: str = "hop", noise_layers: int = 4) -> GateLayer:
    """Full particle-conserving hops ``exp(i pi/2 (f_p^+ f_q + h.c.))`` for disjoint dimer pairs.

    With ``f = (c~_o + i c~_e)/2`` the generator is ``(i c~_po c~_qe - i c~_pe c~_qo)/2``: one
    term is the link joining the dimers, the other a dressed four-site string.
    """
    gates = []
    for p, q in hops:
        pe, po = _cell_sites(sector, p)
        qe, qo = _cell_sites(sector, q)
        gates.append(gauge_gate(sector, po, qe, np.pi / 4))
        gates.append(gauge_gate(sector, pe, qo, -np.pi / 4))
    return GateLayer(tuple(gates), noise_layers, label)


def partial_creation_layer(sector: Sector, p: int, q: int, noise_layers: int = 3) -> GateLayer:
    """``R = exp(i pi/4 S)`` for an open string ``S`` joining dimers ``p`` and ``q``."""
    es = sector.enc.pair_creation_string(p, q)
    return GateLayer((Gate(es.i, es.j, sector.string_sign(es), np.pi / 4, es.pauli),), noise_layers, "R")


def exchange_layers(sector: Sector, variant: ExchangeVariant | str, sites: ExchangeSites) -> list[GateLayer]:
    v = ExchangeVariant(variant)
    r = partial_creation_layer(sector, sites.a, sites.d)
    h1 = hop_layer(sector, [(sites.a, sites.b), (sites.d, sites.c)], "H1")
    h2 = hop_layer(sector, [(sites.b, sites.d), (sites.c, sites.a)], "H2")
    if v is ExchangeVariant.HopAndReturn:
        return [r, h1, h1, r]
    if v is ExchangeVariant.FullExchange:
        return [r, h1, h2, r]
    if v is ExchangeVariant.Control0:
        return [h1]
    return [r, r, h1]


def exchange_targets(variant: ExchangeVariant | str, sites: ExchangeSites) -> tuple[int, int]:
    """Sites whose density carries the signal: A, D, except B, C after the control hop."""
    v = ExchangeVariant(variant)
    return (sites.b, sites.c) if v in (ExchangeVariant.Control0, ExchangeVariant.Control2) else (sites.a, sites.d)


# ----------------------------------------------------------------------------
# gate identities


def zz_matrix(theta: float) -> np.ndarray:
    """``exp(i theta pi/4 Z x Z)``."""
    return np.diag(np.exp(1j * theta * np.pi / 4 * np.array([1, -1, -1, 1])))


@dataclass
class Decomposition:
    theta: float
    gates: list[tuple[str, float | None]]
    error: float  # max-abs deviation after removing the global phase
    global_phase: complex

    def ok(self, tol: float = 1e-12) -> bool:
        return self.error < tol


def zz_from_cp(theta: float) -> Decomposition:
    """``CP[theta/2] (X x X) CP[theta/2] (X x X)`` equals ``exp(i theta pi/4 ZZ)`` up to a phase."""
    xx = np.kron([[0, 1], [1, 0]], [[0, 1], [1, 0]]).astype(complex)
    cp = cp_matrix(theta / 2)
    u = cp @ xx @ cp @ xx
    target = zz_matrix(theta)
    ph = u[0, 0] / target[0, 0]
    return Decomposition(theta, [("XX", None), ("CP", theta / 2), ("XX", None), ("CP", theta / 2)],
                         float(np.abs(u - ph * target).max()), complex(ph))


def string_propagation_error(theta: float, phi: float) -> float:
    """Max-abs residual of ``ZZ(t) e^{i phi X1} ZZ(t) = ZZ(2t) exp(i phi (cos X1 + sin Y1 Z2))``."""
    x1 = np.kron([[0, 1], [1, 0]], np.eye(2)).astype(complex)
    yz = np.kron([[0, -1j], [1j, 0]], np.diag([1, -1])).astype(complex)
    zz = zz_matrix(theta)
    lhs = zz @ scipy.linalg.expm(1j * phi * x1) @ zz
    c, s = np.cos(theta * np.pi / 2), np.sin(theta * np.pi / 2)
    rhs = zz_matrix(2 * theta) @ scipy.linalg.expm(1j * phi * (c * x1 + s * yz))
    return float(np.abs(lhs - rhs).max())


# ----------------------------------------------------------------------------
# Fermi-Hubbard


@dataclass(frozen=True)
class HubbardSpec:
    """Two copies of the honeycomb patch (spin up and down) coupled by dimer-wise ``ZZ x ZZ`` gates.

    Each round applies the X, Y, Z drive on both halves and then ``exp(i theta_u pi/4
    Z_a Z_b (up) Z_a Z_b (down))`` on every dimer; the interaction after the last round is
    left out because it commutes with the Z-basis readout.
    """

    theta_xy: float = -0.1876
    theta_z: float = 1.0
    theta_u: float = 0.0
    rounds: int = 6
    rows: int = 1
    cols: int = 2

    def __post_init__(self):
        if self.rounds < 0:
            raise ValueError("rounds must be >= 0")
        if not all(np.isfinite(v) for v in (self.theta_xy, self.theta_z, self.theta_u)):
            raise ValueError("angles must be finite")


class HubbardModel:
    """Spin-resolved patch on an open ``rows x cols`` lattice with a checkerboard Neel start."""

    def __init__(self, rows: int = 1, cols: int = 2):
        self.lat = build_lattice(rows, cols, "open")
        self.sector = Sector.of(self.lat)
        enc = self.sector.enc
        self.cells = sorted(self.lat.unit_cells)
        self.dimers = [enc.pair_of_site[self.lat.unit_cells[c][0]] for c in self.cells]
        # +1 where the up spin starts, -1 where the down spin starts
        self.stagger = np.array([1 if (r + m) % 2 == 0 else -1 for r, m in self.cells])

    def initial_gamma(self, spin: int) -> np.ndarray:
        """Vacuum with one fermion on every dimer of the spin's checkerboard sublattice."""
        g = vacuum_state(self.sector)
        want = self.stagger > 0 if spin == 0 else self.stagger < 0
        for p, occ in zip(self.dimers, want):
            if occ:
                a, b = self.sector.enc.pairs[p]
                g[a, b], g[b, a] = -g[a, b], -g[b, a]
        return g

    def drive(self, spec: HubbardSpec) -> list[GateLayer]:
        return cycle_layers(self.sector, quench_cycle(self.lat, spec.theta_xy, spec.theta_z, 3))

    def staggered(self, n_up: np.ndarray, n_dn: np.ndarray) -> float:
        return float(np.mean(self.stagger * (n_up - n_dn)))

    def free_trace(self, spec: HubbardSpec) -> np.ndarray:
        """``m_s`` after each round for ``theta_u = 0`` using one correlation matrix per spin."""
        if spec.theta_u != 0:
            raise ValueError("the free-fermion path needs theta_u = 0; use oracle_trace")
        circ = FermionCircuit(self.sector, self.drive(spec))
        g = [self.initial_gamma(0), self.initial_gamma(1)]
        out = []
        for r in range(spec.rounds + 1):
            if r:
                g = [circ.run(x) for x in g]
            n = [(1 - zz_values(x, self.sector, self.dimers)) / 2 for x in g]
            out.append(self.staggered(*n))
        return np.array(out)

    def oracle_state(self, rng: np.random.Generator) -> DenseState:
        """Random vector projected onto the initial stabilizers of both halves."""
        n = self.lat.n_data
        enc = self.sector.enc
        st = DenseState(2 * n, rng.normal(size=2 ** (2 * n)) + 1j * rng.normal(size=2 ** (2 * n)))
        for spin in (0, 1):
            g = self.initial_gamma(spin)
            cons = [(enc.plaquette_op(k), 1) for k in range(len(self.lat.plaquettes))]
            cons += [(enc.bilinear(a, b), int(round(g[a, b]))) for a, b in enc.pairs]
            for p, v in cons:
                p = _shift(p, spin * n)
                st.amps = 0.5 * (st.amps + v * st.apply_pauli(p))
                nrm = np.linalg.norm(st.amps)
                if nrm < 1e-8:
                    raise InvariantBreach("initial constraints are inconsistent")
                st.amps /= nrm
        return st

    def oracle_trace(self, spec: HubbardSpec, rng: np.random.Generator | None = None) -> np.ndarray:
        """``m_s`` after each round from the dense state of both halves (any ``theta_u``)."""
        n = self.lat.n_data
        st = self.oracle_state(np.random.default_rng(0) if rng is None else rng)
        layers = self.drive(spec)
        zz = [PauliString({a: "Z", b: "Z"}) for a, b in (self.sector.enc.pairs[p] for p in self.dimers)]
        inter = [multiply(z, _shift(z, n)) for z in zz]

        def ms():
            n_up = np.array([(1 - st.expectation(z)) / 2 for z in zz])
            n_dn = np.array([(1 - st.expectation(_shift(z, n))) / 2 for z in zz])
            return self.staggered(n_up, n_dn)

        out = [ms()]
        for r in range(spec.rounds):
            for lay in layers:
                for g in lay.gates:
                    st.pauli_rotation(g.pauli, g.phi)
                    st.pauli_rotation(_shift(g.pauli, n), g.phi)
            out.append(ms())
            if spec.theta_u and r < spec.rounds - 1:
                for p in inter:
                    st.pauli_rotation(p, angle_of(spec.theta_u))
        return np.array(out)


def _shift(p: PauliString, k: int) -> PauliString:
    return PauliString({q + k: l for q, l in p.support.items()}, p.phase)


def hubbard_sweep(model: HubbardModel, spec: HubbardSpec, theta_us, rng_seed: int = 0) -> np.ndarray:
    """Final ``m_s`` for each interaction angle (oracle path)."""
    import dataclasses
    return np.array([model.oracle_trace(dataclasses.replace(spec, theta_u=float(u)),
                                        np.random.default_rng(rng_seed))[-1] for u in theta_us])
