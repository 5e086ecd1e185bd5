"""Measurement-based preparation of the flux-free (vacuum) state.

Black sites are the odd columns, green the even ones.  Each plaquette ``(r, j)`` owns one
ancilla that measures the ZXXZ operator

    Z(r, j-1) X(r, j+1) X(r+1, j+1) Z(r+1, j+3)

on the black sublattice.  The ancilla starts in |+>, talks to the four sites in the order
Z, X, X, Z and is read out in the X basis.  Because every data qubit is still in |0> during
the first step, that first CZ is the identity and is left out.  After feedforward a
parallel CY from each black site onto its green ZZ partner turns every ZXXZ into the
plaquette times two ZZ links, and those links are +1 by construction.

A Z on black site ``(r, j+1)`` flips the ZXXZ values of plaquettes ``(r, j)`` and
``(r-1, j)`` and nothing else, which is what the decoder uses to pair up -1 outcomes
inside a column.
"""
from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

from kfsim.encoding import Encoding
from kfsim.lattice import Boundary, Lattice, LinkType
from kfsim.noise import NoiseModel
from kfsim.pauli import PauliString
from kfsim.tableau import CliffordState, FrameBatch, observable_rows


class InvalidPattern(ValueError):
    pass


class UnpairableColumn(ValueError):
    pass


# Default profile for preparation statistics: half of p_ini lands at initialisation, the
# other half is spread over the gate layers.  Chosen so that p_ini = 0.1 reproduces both the
# raw plaquette parity and the gain from threshold-0 decoding postselection.
DEFAULT_PROFILE = "mixed:0.5"


class PrepMethod(enum.Enum):
    ZXXZ32 = "ZXXZ32"
    ZXXZ16 = "ZXXZ16"
    Hexagons = "Hexagons"


# ----------------------------------------------------------------------------
# geometry helpers


def _site(lat: Lattice, r: int, c: int) -> int | None:
    if lat.boundary is Boundary.Cylinder:
        r %= lat.n_site_rows
    return lat.index(r, c) if lat.has(r, c) else None


def zxxz_support(lat: Lattice, p: int) -> list[tuple[int, str]]:
    """``[(site, letter), ...]`` of the ZXXZ operator of plaquette ``p`` in gate order."""
    pl = lat.plaquettes[p]
    r, j = pl.row, pl.col
    out = []
    for (rr, cc), letter in (((r, j - 1), "Z"), ((r, j + 1), "X"), ((r + 1, j + 1), "X"), ((r + 1, j + 3), "Z")):
        s = _site(lat, rr, cc)
        out.append((s, letter))
    return out


def zxxz_operator(lat: Lattice, p: int) -> PauliString:
    return PauliString({s: l for s, l in zxxz_support(lat, p) if s is not None})


def black_sites(lat: Lattice) -> list[int]:
    return [k for k, s in enumerate(lat.data_sites) if s.col % 2 == 1]


def cy_pairs(lat: Lattice) -> list[tuple[int, int]]:
    """(black control, green target) along every ZZ link."""
    out = []
    for l in lat.links:
        if l.kind is LinkType.ZZ:
            a, b = l.sites
            if lat.data_sites[a].col % 2 == 0:
                a, b = b, a
            out.append((a, b))
    return out


def flip_map(lat: Lattice) -> dict[int, tuple[int, ...]]:
    """Black site -> plaquettes whose ZXXZ value a Z on that site flips."""
    out: dict[int, list[int]] = {}
    for p in range(len(lat.plaquettes)):
        for s, l in zxxz_support(lat, p):
            if s is not None and l == "X":
                out.setdefault(s, []).append(p)
    return {k: tuple(sorted(v)) for k, v in out.items()}


def column_rows(lat: Lattice, m: int) -> list[int]:
    """Plaquette indices of column ``m`` ordered by row."""
    return sorted(lat.columns[m], key=lambda p: lat.plaquettes[p].row)


# ----------------------------------------------------------------------------
# circuit schedules


@dataclass
class PrepCircuit:
    """Gate schedule over data qubits ``0..n-1`` and ancillas ``n..n+n_anc-1``.

    ``rounds`` is a list of measurement rounds; each round is a list of two-qubit gate
    layers followed by an X readout of the listed (ancilla, plaquette) pairs.
    """

    lat: Lattice
    method: PrepMethod
    n_anc: int
    rounds: list[tuple[list[list[tuple[str, int, int]]], list[tuple[int, int]]]]
    final_layers: list[list[tuple[str, int, int]]] = field(default_factory=list)

    @property
    def n_qubits(self) -> int:
        return self.lat.n_data + self.n_anc

    @property
    def measured_operators(self) -> list[PauliString]:
        if self.method is PrepMethod.Hexagons:
            return [PauliString(dict(zip(p.sites, p.letters))) for p in self.lat.plaquettes]
        return [zxxz_operator(self.lat, p) for p in range(len(self.lat.plaquettes))]

    def two_qubit_layers(self) -> int:
        return sum(len(layers) for layers, _ in self.rounds) + len(self.final_layers)


def _zxxz_layers(lat: Lattice, plaq: list[int], anc: dict[int, int], omit_first: bool):
    layers = []
    for step in range(4):
        if step == 0 and omit_first:
            continue
        layer = []
        for p in plaq:
            s, letter = zxxz_support(lat, p)[step]
            if s is None:
                continue
            layer.append(("cz" if letter == "Z" else "cx", anc[p], s))
        layers.append(layer)
    return layers


# Hexagon positions in gate order.  Taking them in plain order 0..5 leaves the plaquettes
# random after readout (gates from neighbouring ancillas fail to commute through each
# other); this order was found by exhaustive search over the 720 orders on the 4x8 cylinder.
HEXAGON_ORDER = (0, 1, 2, 4, 5, 3)


def _hexagon_layers(lat: Lattice, anc: dict[int, int]):
    gate = {"X": "cx", "Y": "cy", "Z": "cz"}
    layers = []
    for pos in HEXAGON_ORDER:
        layers.append([(gate[pl.letters[pos]], anc[p], pl.sites[pos]) for p, pl in enumerate(lat.plaquettes)])
    return layers


def build_prep_circuit(lat: Lattice, method: PrepMethod | str = PrepMethod.ZXXZ32) -> PrepCircuit:
    method = PrepMethod(method)
    n = lat.n_data
    n_p = len(lat.plaquettes)
    if method is PrepMethod.ZXXZ32:
        anc = {p: n + p for p in range(n_p)}
        rounds = [(_zxxz_layers(lat, list(range(n_p)), anc, True), [(anc[p], p) for p in range(n_p)])]
        final = [[("cy", b, g) for b, g in cy_pairs(lat)]]
        return PrepCircuit(lat, method, n_p, rounds, final)
    if method is PrepMethod.ZXXZ16:
        # even plaquette rows first (data still in |0>, first CZ dropped), then odd rows
        # reusing the same ancillas with the full four-gate sequence
        even = [p for p in range(n_p) if lat.plaquettes[p].row % 2 == 0]
        odd = [p for p in range(n_p) if lat.plaquettes[p].row % 2 == 1]
        slots = max(len(even), len(odd))
        anc_e = {p: n + k for k, p in enumerate(even)}
        anc_o = {p: n + k for k, p in enumerate(odd)}
        rounds = [
            (_zxxz_layers(lat, even, anc_e, True), [(anc_e[p], p) for p in even]),
            (_zxxz_layers(lat, odd, anc_o, False), [(anc_o[p], p) for p in odd]),
        ]
        final = [[("cy", b, g) for b, g in cy_pairs(lat)]]
        return PrepCircuit(lat, method, slots, rounds, final)
    anc = {p: n + p for p in range(n_p)}
    rounds = [(_hexagon_layers(lat, anc), [(anc[p], p) for p in range(n_p)])]
    return PrepCircuit(lat, method, n_p, rounds, [])


# ----------------------------------------------------------------------------
# decoding


def check_pattern(lat: Lattice, target) -> np.ndarray:
    t = np.ones(len(lat.plaquettes), dtype=int) if target is None else np.asarray(target, dtype=int)
    if t.shape != (len(lat.plaquettes),) or not np.isin(t, (-1, 1)).all():
        raise InvalidPattern("target must hold one +-1 per plaquette")
    if lat.boundary is Boundary.Cylinder:
        for m in range(lat.n_cols):
            if np.prod(t[list(lat.columns[m])]) != 1:
                raise InvalidPattern(f"column {m} of the target has odd parity")
    return t


def column_parity_violations(lat: Lattice, outcomes) -> int:
    """Number of columns whose ancilla outcomes multiply to -1 (cylinder only)."""
    o = np.asarray(outcomes)
    if lat.boundary is not Boundary.Cylinder:
        return 0
    return int(sum(np.prod(o[list(lat.columns[m])]) == -1 for m in range(lat.n_cols)))


def column_violation_matrix(lat: Lattice, flips: np.ndarray) -> np.ndarray:
    """Per shot and column, whether the column's flip count is odd; ``flips`` is (shots, n_plaq)."""
    if lat.boundary is not Boundary.Cylinder:
        return np.zeros((flips.shape[0], lat.n_cols), dtype=bool)
    out = np.zeros((flips.shape[0], lat.n_cols), dtype=bool)
    for m in range(lat.n_cols):
        out[:, m] = flips[:, list(lat.columns[m])].sum(axis=1) % 2 == 1
    return out


def _column_correctors(lat: Lattice, m: int):
    """For column ``m``: ordered plaquettes and, for each adjacent pair (k, k+1), the black
    site flipping exactly those two; plus boundary sites flipping a single end plaquette."""
    rows = column_rows(lat, m)
    fm = flip_map(lat)
    by_set = {}
    for s, ps in fm.items():
        by_set.setdefault(ps, s)
    pair_site = {}
    R = len(rows)
    for k in range(R):
        a, b = rows[k], rows[(k + 1) % R]
        key = tuple(sorted((a, b)))
        if key in by_set and a != b:
            pair_site[(k, (k + 1) % R)] = by_set[key]
    single = {k: by_set[(rows[k],)] for k in range(R) if (rows[k],) in by_set}
    return rows, pair_site, single


def feedforward_decode(lat: Lattice, outcomes, target=None, rng: np.random.Generator | None = None,
                       strict: bool = True) -> set[int]:
    """Black sites to hit with Z so that the ZXXZ pattern becomes ``target``.

    Inside each column the -1 marks are pushed along the column from a random start in a
    random direction until they meet the next mark.  On open columns the last mark is
    pushed out through the end.  With ``strict`` an odd cylinder column raises
    :class:`UnpairableColumn`; otherwise its last mark is left in place.
    """
    o = np.asarray(outcomes, dtype=int)
    t = np.ones(len(lat.plaquettes), dtype=int) if target is None else np.asarray(target, dtype=int)
    need = (o * t) == -1
    rng = rng if rng is not None else np.random.default_rng()
    out: set[int] = set()
    cyl = lat.boundary is Boundary.Cylinder
    for m in range(lat.n_cols):
        rows, pair_site, single = _column_correctors(lat, m)
        R = len(rows)
        f = need[rows].astype(bool)
        start = int(rng.integers(R))
        step = 1 if rng.random() < 0.5 else -1
        if cyl and f.sum() % 2 and strict:
            raise UnpairableColumn(f"column {m}")
        if not cyl:
            start, step = (0, 1) if step == 1 else (R - 1, -1)
        order = [(start + step * i) % R for i in range(R)]
        carry = False
        for i, k in enumerate(order[:-1]):
            carry ^= bool(f[k])
            if carry:
                nxt = order[i + 1]
                key = (k, nxt) if (k, nxt) in pair_site else (nxt, k)
                out ^= {pair_site[key]}
        carry ^= bool(f[order[-1]])
        if carry and not cyl:
            out ^= {single[order[-1]]}
    return out


# ----------------------------------------------------------------------------
# exact (tableau) run


@dataclass
class PrepOutcome:
    state: CliffordState
    ancilla_outcomes: np.ndarray  # per plaquette, +-1
    corrections: set[int]
    lost: set[int]
    column_parities: np.ndarray  # per column, product of that column's outcomes
    column_violations: int


def _apply(state: CliffordState, op):
    g, a, b = op
    getattr(state, g)(a, b)


def run_prep_circuit(lat: Lattice, method: PrepMethod | str = PrepMethod.ZXXZ32, noise: NoiseModel | None = None,
                     target=None, rng: np.random.Generator | None = None, profile: str = DEFAULT_PROFILE,
                     faults: dict | None = None) -> PrepOutcome:
    """Tableau simulation of the full prep circuit.

    ``faults`` injects deterministic Paulis: ``{(round, "pre_measure"): {qubit: letter}}``.
    Stochastic noise here follows the same profiles as :func:`sample_prep` but is meant for
    small trajectory counts; use the frame sampler for statistics.
    """
    rng = rng if rng is not None else np.random.default_rng()
    t = check_pattern(lat, target)
    circ = build_prep_circuit(lat, method)
    n = lat.n_data
    st = CliffordState(circ.n_qubits)
    outcomes = np.ones(len(lat.plaquettes), dtype=int)
    p_step = _profile_rate(circ, noise, profile)
    faults = faults or {}

    def noisy_layer(qubits):
        if p_step <= 0:
            return
        for q in qubits:
            if rng.random() < p_step:
                st.pauli(q, "XYZ"[rng.integers(3)])

    corrections: set[int] = set()
    all_q = range(circ.n_qubits)
    f_init = _init_fraction(profile)
    if noise is not None and f_init > 0:
        for q in all_q:
            if rng.random() < f_init * noise.p_ini:
                st.pauli(q, "XYZ"[rng.integers(3)])
    for rnd, (layers, readout) in enumerate(circ.rounds):
        for a, _ in readout:
            if rnd > 0:
                st.reset(a, rng)
            st.h(a)
        for layer in layers:
            for op in layer:
                _apply(st, op)
            noisy_layer(all_q)
        for q, l in faults.get((rnd, "pre_measure"), {}).items():
            st.pauli(q, l)
        for a, p in readout:
            outcomes[p] = st.measure_x(a, rng)
    viol = column_parity_violations(lat, outcomes)
    corrections = feedforward_decode(lat, outcomes, t, rng, strict=False)
    for s in corrections:
        st.pauli(s, "Z")
    for layer in circ.final_layers:
        for op in layer:
            _apply(st, op)
        noisy_layer(range(n))
    parities = np.array([np.prod(outcomes[list(lat.columns[m])]) for m in range(lat.n_cols)])
    return PrepOutcome(st, outcomes, corrections, set(), parities, viol)


PROFILES = ("distributed", "per_gate_layer", "final", "initial")


def check_profile(profile: str) -> None:
    """Raise ``ValueError`` unless ``profile`` is a known noise profile or ``mixed:<f>``."""
    if profile.startswith("mixed:"):
        try:
            f = float(profile.split(":", 1)[1])
        except ValueError:
            f = -1.0
        if not 0 <= f <= 1:
            raise ValueError(f"bad mixing fraction in {profile!r}")
    elif profile not in PROFILES:
        raise ValueError(f"unknown noise profile {profile!r}")


def _init_fraction(profile: str) -> float:
    if profile == "initial":
        return 1.0
    if profile.startswith("mixed:"):
        return float(profile.split(":", 1)[1])
    return 0.0


def _profile_rate(circ: PrepCircuit, noise: NoiseModel | None, profile: str) -> float:
    if noise is None or noise.p_ini == 0:
        return 0.0
    if profile == "distributed" or profile.startswith("mixed:"):
        return (1 - _init_fraction(profile)) * noise.p_ini / circ_layers_for_profile(circ)
    if profile == "per_gate_layer":
        return noise.p_ini
    if profile in ("final", "initial"):
        return 0.0
    raise ValueError(f"unknown noise profile {profile!r}")


def circ_layers_for_profile(circ: PrepCircuit) -> int:
    return circ.two_qubit_layers()


# ----------------------------------------------------------------------------
# frame sampling


@dataclass
class PrepSamples:
    lat: Lattice
    plaquettes: np.ndarray  # (shots, n_plaq) +-1, lost-support shots already randomised
    zz_links: np.ndarray  # (shots, n_zz)
    loops: np.ndarray  # (shots, n_loops)
    column_violations: np.ndarray  # (shots,)
    lost: np.ndarray  # (shots, n_data) bool
    outcome_flips: np.ndarray  # (shots, n_plaq) bool, ancilla readout flips
    frame_x: np.ndarray | None = None  # (shots, n_data) residual data frame after the circuit
    frame_z: np.ndarray | None = None

    def accept(self, threshold: int | None) -> np.ndarray:
        if threshold is None:
            return np.ones(len(self.column_violations), dtype=bool)
        return self.column_violations <= threshold


def prep_observables(lat: Lattice) -> dict[str, list[PauliString]]:
    enc = Encoding(lat)
    return {
        "plaquettes": [enc.plaquette_op(p) for p in range(len(lat.plaquettes))],
        "zz_links": [enc.link_op(k) for k in lat.links_of(LinkType.ZZ)],
        "loops": [enc.loop_op(m) for m in range(len(lat.winding_loops))],
    }


def sample_prep(lat: Lattice, method: PrepMethod | str, noise: NoiseModel, shots: int, rng: np.random.Generator,
                profile: str = DEFAULT_PROFILE, extra: list[PauliString] | None = None, target=None,
                keep_frame: bool = False):
    """Monte Carlo over Pauli frames of the prep circuit.

    ``profile="distributed"`` splits ``p_ini`` evenly over the two-qubit gate layers (all
    qubits, data and ancilla, after every layer), with the loss share of ``p_ini``;
    ``profile="per_gate_layer"`` applies depolarizing noise of strength ``p_ini`` on all
    qubits after every two-qubit gate layer and no loss; ``profile="final"`` applies a single
    layer of strength ``p_ini`` (with its loss share) to the data after the ideal circuit.  Loss randomises the lost qubit's
    frame after every later layer and is reported per data site.

    The ideal circuit maps the target flux pattern onto the reference state, so only frame
    flips are tracked: the decoder sees the readout flips, its corrections enter the frame.
    Returns :class:`PrepSamples` plus, if ``extra`` is given, the flips of those observables.
    ``keep_frame`` stores the residual data frame, which seeds the fermionic pipelines.
    """
    method = PrepMethod(method)
    circ = build_prep_circuit(lat, method)
    nq = circ.n_qubits
    n = lat.n_data
    fb = FrameBatch(shots, nq)
    lost = np.zeros((shots, nq), dtype=bool)
    p_step = _profile_rate(circ, noise, profile)
    loss_share = noise.loss_fraction_ini if (profile != "per_gate_layer" and noise is not None) else 0.0
    all_q = np.arange(nq)

    def noise_layer(qubits):
        if p_step <= 0:
            return
        u = rng.random((shots, len(qubits)))
        hit = u < p_step
        is_loss = u < p_step * loss_share
        lost[:, qubits] |= is_loss
        pauli = hit & ~is_loss
        kind = rng.integers(0, 3, size=pauli.shape)
        fb.x[:, qubits] ^= pauli & (kind <= 1)
        fb.z[:, qubits] ^= pauli & (kind >= 1)
        if lost.any():
            fb.randomize(lost, rng)

    flips = np.zeros((shots, len(lat.plaquettes)), dtype=bool)
    f_init = _init_fraction(profile)
    if f_init > 0 and noise is not None and noise.p_ini > 0:
        p_run = p_step
        p_step, loss_share = f_init * noise.p_ini, noise.loss_fraction_ini
        noise_layer(all_q)
        p_step = p_run
    for rnd, (layers, readout) in enumerate(circ.rounds):
        if rnd > 0:  # reused ancillas are reset, which clears their frame
            anc = np.array([a for a, _ in readout])
            fb.x[:, anc] = False
            fb.z[:, anc] = False
            lost[:, anc] = False
        for layer in layers:
            for g, a, b in layer:
                getattr(fb, g)(a, b)
            noise_layer(all_q)
        for a, p in readout:
            flips[:, p] = fb.z[:, a]
    viol = column_violation_matrix(lat, flips).sum(axis=1)
    corr = _decode_flips(lat, flips, rng)
    fb.z[:, :n] ^= corr
    for layer in circ.final_layers:
        for g, a, b in layer:
            getattr(fb, g)(a, b)
        noise_layer(np.arange(n))
    if profile == "final" and noise is not None and noise.p_ini > 0:
        p_step, loss_share = noise.p_ini, noise.loss_fraction_ini
        noise_layer(np.arange(n))
    kept = (fb.x[:, :n].copy(), fb.z[:, :n].copy()) if keep_frame else (None, None)
    # measured data: lost atoms read out at random
    if lost[:, :n].any():
        fb.randomize(np.concatenate([lost[:, :n], np.zeros((shots, nq - n), dtype=bool)], axis=1), rng)
    obs = prep_observables(lat)
    vals = {}
    for key, ps in obs.items():
        ox, oz = observable_rows(ps, nq)
        vals[key] = np.where(fb.flips(ox, oz), -1, 1).astype(np.int8)
    out = PrepSamples(lat, vals["plaquettes"], vals["zz_links"], vals["loops"], viol, lost[:, :n], flips, *kept)
    if extra:
        ox, oz = observable_rows(extra, nq)
        return out, np.where(fb.flips(ox, oz), -1, 1).astype(np.int8)
    return out


def _decode_flips(lat: Lattice, flips: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """Vectorised version of :func:`feedforward_decode` (non-strict) on readout flips."""
    shots = flips.shape[0]
    corr = np.zeros((shots, lat.n_data), dtype=bool)
    cyl = lat.boundary is Boundary.Cylinder
    for m in range(lat.n_cols):
        rows, pair_site, single = _column_correctors(lat, m)
        R = len(rows)
        f = flips[:, rows]
        start = rng.integers(R, size=shots)
        step = np.where(rng.random(shots) < 0.5, 1, -1)
        if not cyl:
            start = np.where(step == 1, 0, R - 1)
        carry = np.zeros(shots, dtype=bool)
        ar = np.arange(shots)
        for i in range(R - 1):
            k = (start + step * i) % R
            nxt = (k + step) % R
            carry ^= f[ar, k]
            for kk in range(R):
                for d in (1, -1):
                    sel = carry & (k == kk) & (step == d)
                    if not sel.any():
                        continue
                    nn = (kk + d) % R
                    key = (kk, nn) if (kk, nn) in pair_site else (nn, kk)
                    corr[sel, pair_site[key]] ^= True
        k_last = (start + step * (R - 1)) % R
        carry ^= f[ar, k_last]
        if not cyl:
            for kk in range(R):
                sel = carry & (k_last == kk)
                if sel.any():
                    corr[sel, single[kk]] ^= True
    return corr
