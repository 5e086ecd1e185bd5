"""Invariant suite shared by ``kfsim validate`` and the tests.

Each check returns a :class:`CheckResult`; ``value`` is the measured deviation or figure of
merit and ``ok`` compares it with the check's tolerance.
"""
from __future__ import annotations

import time
from dataclasses import dataclass

import numpy as np

from kfsim.gaussian import (FloquetCycle, Sector, angle_of, apply_layer, string_rotation, vacuum_state,
                            wick_expectation)
from kfsim.lattice import Lattice, LinkType, build_lattice
from kfsim.oracle import DenseState, correlation_from_state
from kfsim.pauli import PauliString, product


@dataclass
class CheckResult:
    name: str
    ok: bool
    value: float
    detail: str = ""
    seconds: float = 0.0

    def line(self) -> str:
        tag = "PASS" if self.ok else "FAIL"
        return f"{tag}  {self.name:<28s} {self.value:.3g}  {self.detail} ({self.seconds:.2f}s)"


# ----------------------------------------------------------------------------
# oracle helpers


def projected_state(sector: Sector, constraints, rng: np.random.Generator) -> DenseState:
    """Random state projected onto ``P = v`` for each ``(P, v)`` in ``constraints``."""
    n = sector.lat.n_data
    st = DenseState(n, rng.normal(size=2**n) + 1j * rng.normal(size=2**n))
    for p, v in constraints:
        st.amps = 0.5 * (st.amps + v * st.apply_pauli(p))
        nrm = np.linalg.norm(st.amps)
        if nrm < 1e-8:
            raise ArithmeticError("constraints are inconsistent")
        st.amps /= nrm
    return st


def vacuum_oracle(sector: Sector, rng: np.random.Generator) -> DenseState:
    """Dense state with every stabilizer at its sector value and every dimer empty."""
    enc = sector.enc
    cons = list(zip(enc.generators, sector.generator_values))
    cons += [(enc.bilinear(a, b), 1.0) for a, b in enc.pairs]
    return projected_state(sector, cons, rng)


def random_circuit(sector: Sector, rng: np.random.Generator, depth: int = 6):
    """Random sequence of link layers and pair-creation string rotations.

    Returns ``(ops, majoranas)`` where each op is ``("layer", layer)`` or
    ``("string", EffectiveString, angle)``.
    """
    enc = sector.enc
    ops = []
    n_pairs = len(enc.pairs)
    for _ in range(depth):
        if n_pairs > 1 and rng.random() < 0.35:
            p, q = rng.choice(n_pairs, size=2, replace=False)
            ops.append(("string", enc.pair_creation_string(int(p), int(q)), float(rng.uniform(-np.pi, np.pi))))
        else:
            kind = "XYZ"[rng.integers(3)]
            cyc = FloquetCycle.from_types(sector.lat, [(kind, float(rng.uniform(-2, 2)))])
            ops.append(("layer", cyc.layers[0]))
    return ops


def run_both(sector: Sector, ops, st: DenseState) -> tuple[np.ndarray, DenseState]:
    enc = sector.enc
    g = vacuum_state(sector)
    for op in ops:
        if op[0] == "layer":
            layer = op[1]
            g = apply_layer(g, sector, layer)
            for k in layer.links:
                st.pauli_rotation(enc.link_op(k), angle_of(layer.theta))
        else:
            _, es, ang = op
            g = string_rotation(g, sector, es, ang)
            st.pauli_rotation(es.pauli, ang)
    return g, st


def oracle_equivalence(n_circuits: int = 50, seed: int = 0, lat: Lattice | None = None, depth: int = 6) -> float:
    """Max-abs difference of Gamma from the Gaussian engine and from the state vector."""
    lat = lat if lat is not None else build_lattice(1, 1, "open")
    sec = Sector.of(lat)
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(n_circuits):
        st = vacuum_oracle(sec, rng)
        g, st = run_both(sec, random_circuit(sec, rng, depth), st)
        worst = max(worst, float(np.abs(g - correlation_from_state(st, sec.enc.majoranas)).max()))
    return worst


def wick_check(n_samples: int = 20, seed: int = 0, lat: Lattice | None = None) -> float:
    """Four-Majorana expectations from Wick's theorem against the state vector."""
    lat = lat if lat is not None else build_lattice(1, 1, "open")
    sec = Sector.of(lat)
    maj = sec.enc.majoranas
    rng = np.random.default_rng(seed)
    st = vacuum_oracle(sec, rng)
    g, st = run_both(sec, random_circuit(sec, rng, 8), st)
    worst = 0.0
    for _ in range(n_samples):
        idx = sorted(rng.choice(len(maj), size=4, replace=False))
        p = product(maj[i] for i in idx)
        want = np.vdot(st.amps, st.apply_pauli(p))  # <c_a c_b c_c c_d>
        worst = max(worst, abs(wick_expectation(g, idx) - want))
    return float(worst)


# ----------------------------------------------------------------------------
# the suite


def _timed(name, fn, tol, detail=""):
    t0 = time.perf_counter()
    v = float(fn())
    return CheckResult(name, bool(v <= tol), v, detail or f"tol {tol:g}", time.perf_counter() - t0)


def check_prep_fixed_point(seed: int = 0) -> float:
    """Largest deviation of plaquettes, ZZ links and loops from +1 after noiseless prep."""
    from kfsim.prep import prep_observables, run_prep_circuit

    lat = build_lattice(4, 8, "cylinder")
    out = run_prep_circuit(lat, rng=np.random.default_rng(seed))
    worst = 0.0
    for ops in prep_observables(lat).values():
        for p in ops:
            v = out.state.peek(p)
            worst = max(worst, 2.0 if v is None else abs(v - 1))
    return worst


def check_identities(n: int = 100, seed: int = 0) -> float:
    from kfsim.protocols import string_propagation_error, zz_from_cp

    rng = np.random.default_rng(seed)
    th = rng.uniform(-4, 4, size=n)
    ph = rng.uniform(-np.pi, np.pi, size=n)
    return max(max(zz_from_cp(t).error for t in th), max(string_propagation_error(t, p) for t, p in zip(th, ph)))


def check_exchange() -> float:
    """Deviation of the ideal exchange readouts from HopAndReturn = 1, FullExchange = 0."""
    from kfsim.protocols import ExchangeVariant, FermionCircuit, exchange_layers, exchange_sites, exchange_targets
    from kfsim.gaussian import density

    lat = build_lattice(4, 8, "cylinder")
    sec = Sector.of(lat)
    sites = exchange_sites(lat)
    want = {ExchangeVariant.HopAndReturn: 1.0, ExchangeVariant.FullExchange: 0.0}
    worst = 0.0
    for v, w in want.items():
        g = FermionCircuit(sec, exchange_layers(sec, v, sites)).run(vacuum_state(sec))
        a, b = exchange_targets(v, sites)
        worst = max(worst, abs(density(g, sec, a) - w), abs(density(g, sec, b) - w))
    return worst


def check_chern() -> float:
    """Zero when the prepared non-Abelian state has C = 1 and the Abelian one C = 0."""
    from kfsim.chern import bulk_average, table_chern
    from kfsim.protocols import ABELIAN_II_ANGLES, PHASE_B_ANGLES, prepared_state

    sec = Sector.of(build_lattice(4, 8, "cylinder"))
    cb = table_chern(bulk_average(prepared_state(sec, PHASE_B_ANGLES), sec)).chern
    ca = table_chern(bulk_average(prepared_state(sec, ABELIAN_II_ANGLES), sec)).chern
    return abs(cb - 1) + abs(ca)


def check_hubbard_free() -> float:
    from kfsim.protocols import HubbardModel, HubbardSpec

    m = HubbardModel(1, 2)
    spec = HubbardSpec(rounds=3)
    return float(np.abs(m.free_trace(spec) - m.oracle_trace(spec)).max())


def run_suite(fast: bool = False) -> list[CheckResult]:
    res = [
        _timed("prep_fixed_point", check_prep_fixed_point, 0.0),
        _timed("oracle_single_plaquette", lambda: oracle_equivalence(10 if fast else 50), 1e-9),
        _timed("oracle_two_plaquettes", lambda: oracle_equivalence(3 if fast else 10, lat=build_lattice(1, 2, "open")), 1e-9),
        _timed("wick_four_point", wick_check, 1e-9),
        _timed("zz_cp_string_identities", lambda: check_identities(20 if fast else 100), 1e-12),
        _timed("exchange_ideal", check_exchange, 1e-9),
        _timed("chern_phases", check_chern, 0.0),
    ]
    if not fast:
        res.append(_timed("hubbard_free_vs_oracle", check_hubbard_free, 1e-8))
    return res
