"""Majorana correlation matrices and quadratic Hamiltonians.

Conventions (checked against the dense oracle in the tests):

* ``gamma[i, j] = i <c_i c_j>`` for ``i != j``; pure states have ``gamma @ gamma = -1``.
* ``H = (i/4) sum_ij c_i A_ij c_j``, so a term ``coef * (i c_a c_b)`` puts ``A_ab = 2 coef``.
* Heisenberg evolution ``c -> exp(A t) c`` gives ``gamma -> R gamma R^T`` with ``R = exp(A t)``.
* A gate of angle ``theta`` on a link applies ``exp(i theta pi/4 L)``; ``theta = 1`` is what a
  CZ (or CP(1)) produces on the link's two-qubit parity.
"""
from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np
import scipy.linalg

from kfsim.encoding import EffectiveString, Encoding
from kfsim.lattice import Lattice, LinkType
from kfsim.pauli import PauliString, gf2_solve, multiply, symplectic


class GaplessSpectrum(ArithmeticError):
    pass


class LogBranchAmbiguity(ArithmeticError):
    pass


class NotGaussian(ValueError):
    pass


class InvariantBreach(RuntimeError):
    pass


GAP_TOL = 1e-10


def angle_of(theta: float) -> float:
    """Physical rotation angle ``phi`` of ``exp(i phi L)`` for gate label ``theta``."""
    return theta * np.pi / 4


# ----------------------------------------------------------------------------
# containers


@dataclass
class QuadraticHamiltonian:
    a_matrix: np.ndarray
    link_signs: np.ndarray | None = None

    def __post_init__(self):
        self.a_matrix = np.asarray(self.a_matrix, dtype=float)
        if not np.allclose(self.a_matrix, -self.a_matrix.T, atol=1e-12):
            raise ValueError("A must be skew-symmetric")


@dataclass(frozen=True)
class Layer:
    links: tuple[int, ...]
    theta: float


@dataclass
class FloquetCycle:
    layers: list[Layer]

    def __post_init__(self):
        for layer in self.layers:
            if len(set(layer.links)) != len(layer.links):
                raise ValueError("repeated link in layer")

    def check_disjoint(self, lat: Lattice) -> None:
        for layer in self.layers:
            seen: set[int] = set()
            for k in layer.links:
                a, b = lat.links[k].sites
                if a in seen or b in seen:
                    raise ValueError(f"links in one layer overlap at link {k}")
                seen.update((a, b))

    @classmethod
    def from_types(cls, lat: Lattice, spec: Sequence[tuple[LinkType | str, float]]) -> FloquetCycle:
        """Layers in time order from ``(link type, theta)`` pairs, e.g. ``[("X", .1), ("Y", .1), ("Z", 1)]``."""
        layers = []
        for kind, theta in spec:
            kind = kind if isinstance(kind, LinkType) else LinkType[kind.upper() * 2 if len(kind) == 1 else kind.upper()]
            layers.append(Layer(tuple(lat.links_of(kind)), float(theta)))
        out = cls(layers)
        out.check_disjoint(lat)
        return out

    def repeated(self, n: int) -> FloquetCycle:
        return FloquetCycle(self.layers * n)

    def __len__(self):
        return len(self.layers)


@dataclass
class Sector:
    """Encoding plus the stabilizer values that fix every link's bilinear sign."""

    enc: Encoding
    generator_values: np.ndarray
    signs: np.ndarray = field(init=False)  # per link: L_k = signs[k] * i c_a c_b

    def __post_init__(self):
        if not self.enc.consistent(self.generator_values):
            raise ValueError("flux pattern violates column parity")
        self.signs = np.array([self.enc.link_bilinear_sign(k, self.generator_values)
                               for k in range(len(self.enc.lat.links))], dtype=int)

    @classmethod
    def of(cls, lat_or_enc, flux=None) -> Sector:
        enc = lat_or_enc if isinstance(lat_or_enc, Encoding) else Encoding(lat_or_enc)
        return cls(enc, enc.generator_values(flux))

    @property
    def lat(self) -> Lattice:
        return self.enc.lat

    @property
    def n(self) -> int:
        return self.enc.lat.n_data

    def pair_sign(self, pair: int) -> int:
        """Sign ``s`` with ``Z_a Z_b = s * i c_a c_b``; +1 for edge pairs without a link."""
        a, b = self.enc.pairs[pair]
        k = self.lat.link_between(a, b)
        if k is None:
            return 1
        la = self.lat.links[k]
        return int(self.signs[k]) if la.a == a else -int(self.signs[k])

    @property
    def pair_signs(self) -> np.ndarray:
        return np.array([self.pair_sign(p) for p in range(len(self.enc.pairs))])

    def link_terms(self, couplings: dict) -> list[tuple[float, PauliString, int, int]]:
        """``-J_alpha * L_k`` for every link; keys are LinkType or letters."""
        out = []
        for k, l in enumerate(self.lat.links):
            j = couplings.get(l.kind, couplings.get(l.kind.letter, 0.0))
            if j:
                out.append((-float(j), self.enc.link_op(k), l.a, l.b))
        return out

    def three_spin_terms(self, kappa: float) -> list[tuple[float, PauliString, int, int]]:
        """Time-reversal breaking ``-kappa * s^a_j s^g_k s^b_l`` around each site ``k``."""
        out = []
        if not kappa:
            return out
        for k in range(self.n):
            nbrs = sorted(self.lat.neighbors[k])
            for x in range(len(nbrs)):
                for y in range(x + 1, len(nbrs)):
                    (j, kj), (l, kl) = nbrs[x], nbrs[y]
                    la, lb = self.lat.links[kj].kind.letter, self.lat.links[kl].kind.letter
                    lg = ({"X", "Y", "Z"} - {la, lb}).pop()
                    out.append((-float(kappa), PauliString({j: la, k: lg, l: lb}), j, l))
        return out

    def hamiltonian(self, terms) -> QuadraticHamiltonian:
        """Quadratic form of ``sum coef * P`` where every ``P`` reduces to ``+- i c_a c_b``."""
        a = np.zeros((self.n, self.n))
        for coef, p, i, j in terms:
            s = self.bilinear_sign(p, i, j)
            a[i, j] += 2 * coef * s
            a[j, i] -= 2 * coef * s
        return QuadraticHamiltonian(a, self.signs.copy())

    def kitaev(self, jx=1.0, jy=1.0, jz=1.0, kappa=0.0) -> QuadraticHamiltonian:
        return self.hamiltonian(self.kitaev_terms(jx, jy, jz, kappa))

    def kitaev_terms(self, jx=1.0, jy=1.0, jz=1.0, kappa=0.0):
        return self.link_terms({"X": jx, "Y": jy, "Z": jz}) + self.three_spin_terms(kappa)

    def bilinear_sign(self, p: PauliString, i: int, j: int) -> int:
        """``s`` with ``P = s * i c_i c_j`` on this sector."""
        sign, gens = self.enc.decompose(multiply(p, self.enc.bilinear(i, j)))
        for g in gens:
            sign *= int(self.generator_values[g])
        return sign

    def string_sign(self, es: EffectiveString) -> int:
        return es.sign_in(self.generator_values)

    def number_operator(self, region: Iterable[int] | None = None) -> np.ndarray:
        """``A`` of ``N = sum_i n_i`` (constant dropped), optionally restricted to pairs inside ``region``."""
        a = np.zeros((self.n, self.n))
        keep = None if region is None else set(region)
        for p, (x, y) in enumerate(self.enc.pairs):
            if keep is not None and not (x in keep and y in keep):
                continue
            s = self.pair_sign(p)
            a[x, y] -= s
            a[y, x] += s
        return a


# ----------------------------------------------------------------------------
# states


def check_gamma(gamma: np.ndarray, pure: bool = True, tol: float = 1e-9) -> None:
    if not np.allclose(gamma, -gamma.T, atol=tol):
        raise InvariantBreach("correlation matrix not antisymmetric")
    if np.linalg.norm(gamma, 2) > 1 + tol:
        raise InvariantBreach("correlation matrix has singular value above 1")
    if pure:
        err = np.linalg.norm(gamma @ gamma + np.eye(len(gamma)))
        if err > tol * max(1, len(gamma)):
            raise InvariantBreach(f"state not pure: |G^2 + 1| = {err:.2e}")


def vacuum_state(sector: Sector) -> np.ndarray:
    """All complex-fermion sites empty: every ZZ link (and edge pair) at +1."""
    g = np.zeros((sector.n, sector.n))
    for p, (a, b) in enumerate(sector.enc.pairs):
        s = sector.pair_sign(p)
        g[a, b] = s
        g[b, a] = -s
    return g


def ground_state(h: QuadraticHamiltonian | np.ndarray) -> np.ndarray:
    """Ground-state correlations ``gamma = i sign(iA)``."""
    a = h.a_matrix if isinstance(h, QuadraticHamiltonian) else np.asarray(h)
    w, v = np.linalg.eigh(1j * a)
    if np.min(np.abs(w)) < GAP_TOL:
        raise GaplessSpectrum(f"smallest mode {np.min(np.abs(w)):.2e}")
    g = 1j * (v * np.sign(w)) @ v.conj().T
    g = g.real
    return 0.5 * (g - g.T)


def energy(h: QuadraticHamiltonian | np.ndarray, gamma: np.ndarray) -> float:
    a = h.a_matrix if isinstance(h, QuadraticHamiltonian) else np.asarray(h)
    return float(-0.25 * np.trace(a @ gamma))


def spectrum(h: QuadraticHamiltonian | np.ndarray) -> np.ndarray:
    """Non-negative single-particle energies (each Majorana pair counted once)."""
    a = h.a_matrix if isinstance(h, QuadraticHamiltonian) else np.asarray(h)
    w = np.linalg.eigvalsh(1j * a)
    return np.sort(w[w > 0]) if len(w) % 2 == 0 else np.sort(np.abs(w))


# ----------------------------------------------------------------------------
# evolution


def _rotate_pairs(g: np.ndarray, a_idx, b_idx, c, s) -> np.ndarray:
    """``g -> R g R^T`` with ``R_aa = R_bb = c``, ``R_ab = -s``, ``R_ba = s`` (vectorized over pairs)."""
    a_idx = np.asarray(a_idx, dtype=int)
    b_idx = np.asarray(b_idx, dtype=int)
    c = np.asarray(c, dtype=float)
    s = np.asarray(s, dtype=float)
    ga, gb = g[a_idx].copy(), g[b_idx].copy()
    g[a_idx] = c[:, None] * ga - s[:, None] * gb
    g[b_idx] = s[:, None] * ga + c[:, None] * gb
    ga, gb = g[:, a_idx].copy(), g[:, b_idx].copy()
    g[:, a_idx] = ga * c[None, :] - gb * s[None, :]
    g[:, b_idx] = ga * s[None, :] + gb * c[None, :]
    return g


def apply_layer(gamma: np.ndarray, sector: Sector, layer: Layer, signs: np.ndarray | None = None) -> np.ndarray:
    """Apply ``prod_k exp(i phi L_k)`` over the layer's links; ``signs`` overrides the sector's link signs."""
    if not layer.links or layer.theta == 0:
        return gamma.copy()
    signs = sector.signs if signs is None else signs
    ks = np.asarray(layer.links)
    lat = sector.lat
    a_idx = [lat.links[k].a for k in ks]
    b_idx = [lat.links[k].b for k in ks]
    two_phi = 2 * angle_of(layer.theta)
    c = np.full(len(ks), np.cos(two_phi))
    s = signs[ks] * np.sin(two_phi)
    return _rotate_pairs(gamma.copy(), a_idx, b_idx, c, s)


def layer_orthogonal(sector: Sector, layer: Layer, signs=None) -> np.ndarray:
    """Dense ``R`` of one layer, so that ``apply_layer`` equals ``R gamma R^T``."""
    signs = sector.signs if signs is None else signs
    r = np.eye(sector.n)
    two_phi = 2 * angle_of(layer.theta)
    for k in layer.links:
        a, b = sector.lat.links[k].sites
        s = signs[k] * np.sin(two_phi)
        r[a, a] = r[b, b] = np.cos(two_phi)
        r[a, b] = -s
        r[b, a] = s
    return r


def layer_generator(sector: Sector, layer: Layer, signs=None) -> np.ndarray:
    """``A`` with ``exp(A) = layer_orthogonal``: the layer as a unit-time Hamiltonian."""
    signs = sector.signs if signs is None else signs
    a = np.zeros((sector.n, sector.n))
    two_phi = 2 * angle_of(layer.theta)
    for k in layer.links:
        i, j = sector.lat.links[k].sites
        a[i, j] = -signs[k] * two_phi
        a[j, i] = signs[k] * two_phi
    return a


def evolve(gamma: np.ndarray, sector: Sector, cycle: FloquetCycle | Iterable[Layer], signs=None) -> np.ndarray:
    layers = cycle.layers if isinstance(cycle, FloquetCycle) else cycle
    for layer in layers:
        gamma = apply_layer(gamma, sector, layer, signs)
    return gamma


def cycle_orthogonal(sector: Sector, cycle: FloquetCycle, n_repeats: int = 1, signs=None) -> np.ndarray:
    o = np.eye(sector.n)
    for layer in cycle.layers:
        o = layer_orthogonal(sector, layer, signs) @ o
    return np.linalg.matrix_power(o, n_repeats)


def string_rotation(gamma: np.ndarray, sector: Sector, string: EffectiveString | PauliString, angle: float) -> np.ndarray:
    """Apply ``exp(i angle P)`` for a Pauli string that reduces to one Majorana bilinear."""
    if isinstance(string, PauliString):
        i, j = majorana_endpoints(sector.enc, string)
        s = sector.bilinear_sign(string, i, j)
    else:
        i, j = string.i, string.j
        s = sector.string_sign(string)
    return _rotate_pairs(gamma.copy(), [i], [j], [np.cos(2 * angle)], [s * np.sin(2 * angle)])


def majorana_endpoints(enc: Encoding, p: PauliString) -> tuple[int, int]:
    """The two Majoranas a gauge-invariant Pauli string pairs up; NotGaussian otherwise."""
    lat = enc.lat
    n = lat.n_data
    rows = [symplectic(enc.link_op(k), n) for k in range(len(lat.links))]
    rows += [symplectic(g, n) for g in enc.generators]
    x = gf2_solve(np.array(rows, dtype=np.uint8), symplectic(p, n))
    if x is None:
        raise NotGaussian(f"{p} is not a product of link operators")
    deg = np.zeros(n, dtype=int)
    for k in np.nonzero(x[: len(lat.links)])[0]:
        a, b = lat.links[k].sites
        deg[a] ^= 1
        deg[b] ^= 1
    ends = np.nonzero(deg)[0]
    if len(ends) != 2:
        raise NotGaussian(f"{p} pairs {len(ends)} Majoranas, expected 2")
    return int(ends[0]), int(ends[1])


# ----------------------------------------------------------------------------
# observables


def expect_majorana(gamma: np.ndarray, i: int, j: int, frame: int = 1) -> float:
    """``frame * i <c_i c_j>``; ``frame`` carries flux and Pauli-frame signs."""
    if i == j:
        raise ValueError("need i != j")
    return float(frame * gamma[i, j])


def expect_string(gamma: np.ndarray, sector: Sector, es: EffectiveString, frame: int = 1) -> float:
    return expect_majorana(gamma, es.i, es.j, frame * sector.string_sign(es))


def density(gamma: np.ndarray, sector: Sector, pair: int, check: bool = True) -> float:
    a, b = sector.enc.pairs[pair]
    n = 0.5 * (1 - sector.pair_sign(pair) * gamma[a, b])
    if check and not (-1e-9 <= n <= 1 + 1e-9):
        raise InvariantBreach(f"density {n} outside [0, 1] at pair {pair}")
    return float(n)


def densities(gamma: np.ndarray, sector: Sector) -> np.ndarray:
    pr = np.array(sector.enc.pairs)
    return 0.5 * (1 - sector.pair_signs * gamma[pr[:, 0], pr[:, 1]])


def total_particle_number(gamma: np.ndarray, sector: Sector, region=None) -> float:
    n = densities(gamma, sector)
    if region is not None:
        keep = set(region)
        n = [v for v, (a, b) in zip(n, sector.enc.pairs) if a in keep and b in keep]
    return float(np.sum(n))


def density_density(gamma: np.ndarray, sector: Sector, p: int, q: int) -> float:
    """Connected ``<n_p n_q> - <n_p><n_q>`` from Wick's theorem."""
    if p == q:
        raise ValueError("need two distinct sites")
    a, b = sector.enc.pairs[p]
    c, d = sector.enc.pairs[q]
    s = sector.pair_sign(p) * sector.pair_sign(q)
    return float(0.25 * s * (gamma[a, d] * gamma[b, c] - gamma[a, c] * gamma[b, d]))


def pfaffian(m: np.ndarray) -> complex:
    """Pfaffian of an antisymmetric matrix by Gaussian elimination with pivoting."""
    a = np.array(m, dtype=complex)
    n = len(a)
    if n % 2:
        return 0.0
    pf = 1.0 + 0j
    for k in range(0, n - 1, 2):
        piv = k + 1 + int(np.argmax(np.abs(a[k, k + 1:])))
        if piv != k + 1:
            a[[k + 1, piv]] = a[[piv, k + 1]]
            a[:, [k + 1, piv]] = a[:, [piv, k + 1]]
            pf = -pf
        if a[k, k + 1] == 0:
            return 0.0
        pf *= a[k, k + 1]
        if k + 2 < n:
            tau = a[k, k + 2:] / a[k, k + 1]
            a[k + 2:, k + 2:] += np.outer(tau, a[k + 2:, k + 1]) - np.outer(a[k + 2:, k + 1], tau)
    return pf


def wick_expectation(gamma: np.ndarray, idx: Sequence[int]) -> complex:
    """``<c_i1 c_i2 ... c_i2k>`` for distinct indices, as a Pfaffian of two-point functions."""
    idx = list(idx)
    if len(set(idx)) != len(idx):
        raise ValueError("indices must be distinct")
    m = -1j * gamma[np.ix_(idx, idx)]
    return pfaffian(m)


# ----------------------------------------------------------------------------
# Floquet analysis


def effective_hamiltonian(sector: Sector, cycle: FloquetCycle, n_repeats: int = 1, signs=None,
                          tol: float = 1e-9) -> QuadraticHamiltonian:
    """``A_F`` with ``exp(A_F) = O^n_repeats``, principal branch, per unit evolution time."""
    o = cycle_orthogonal(sector, cycle, n_repeats, signs)
    return QuadraticHamiltonian(orthogonal_log(o, tol), None if signs is None else np.asarray(signs))


def orthogonal_log(o: np.ndarray, tol: float = 1e-9) -> np.ndarray:
    """Real skew log of a special orthogonal matrix via its real Schur form."""
    t, z = scipy.linalg.schur(o, output="real")
    n = len(o)
    lg = np.zeros((n, n))
    i = 0
    while i < n:
        if i + 1 < n and abs(t[i + 1, i]) > 1e-12:
            ang = np.arctan2(t[i + 1, i], t[i, i])
            if np.pi - abs(ang) < tol:
                raise LogBranchAmbiguity("eigenphase at the branch cut")
            lg[i, i + 1] = -ang
            lg[i + 1, i] = ang
            i += 2
        else:
            if t[i, i] < 0:
                raise LogBranchAmbiguity("eigenvalue -1 in the cycle orthogonal")
            i += 1
    a = z @ lg @ z.T
    return 0.5 * (a - a.T)


def particle_nonconservation(h_f: QuadraticHamiltonian | np.ndarray, sector: Sector, region=None) -> float:
    """Spectral norm of ``[A_F, A_N]`` restricted to ``region`` (all sites by default)."""
    a = h_f.a_matrix if isinstance(h_f, QuadraticHamiltonian) else np.asarray(h_f)
    a_n = sector.number_operator(region)
    if region is not None:
        idx = sorted(set(region))
        a = a[np.ix_(idx, idx)]
        a_n = a_n[np.ix_(idx, idx)]
    return float(np.linalg.norm(a @ a_n - a_n @ a, 2))


# ----------------------------------------------------------------------------
# export


def site_order_hash(lat: Lattice) -> str:
    text = ";".join(f"{s.row},{s.col}" for s in lat.data_sites)
    return hashlib.sha256(text.encode()).hexdigest()


def save_gamma(path: str | Path, gamma: np.ndarray, lat: Lattice, **meta) -> Path:
    """Row-major little-endian float64 dump with a JSON sidecar next to it."""
    path = Path(path)
    np.ascontiguousarray(gamma, dtype="<f8").tofile(path)
    side = {"shape": list(gamma.shape), "dtype": "<f8", "order": "C", "site_order_sha256": site_order_hash(lat),
            "sites": [[s.row, s.col] for s in lat.data_sites], **meta}
    path.with_suffix(path.suffix + ".json").write_text(json.dumps(side, indent=1))
    return path


def load_gamma(path: str | Path) -> tuple[np.ndarray, dict]:
    path = Path(path)
    side = json.loads(path.with_suffix(path.suffix + ".json").read_text())
    g = np.fromfile(path, dtype=side["dtype"]).reshape(side["shape"])
    return g, side
