"""Noise channels, loss bookkeeping and postselection.

The fermionic pipelines follow the stochastic recipe: after every circuit layer each
site independently suffers, with probability ``p``, either atom loss or a uniformly
drawn single-qubit Pauli.  Paulis live in a frame (two bool arrays) and flip the sign
of every later link gate they anticommute with; at the end the frame flips the
observables it anticommutes with.  Lost sites drop out of every later gate.
"""
from __future__ import annotations

from dataclasses import dataclass, field, asdict

import numpy as np

from kfsim.lattice import Lattice


@dataclass(frozen=True)
class NoiseModel:
    p_ini: float = 0.1
    p_layer: float = 0.01
    loss_fraction_ini: float = 0.06
    loss_fraction_layer: float = 0.40
    pauli_bias: tuple[float, float, float] = (1 / 3, 1 / 3, 1 / 3)  # X, Y, Z
    angle_offset: float = 0.0  # coherent offset added to every gate angle label

    def __post_init__(self):
        for name in ("p_ini", "p_layer", "loss_fraction_ini", "loss_fraction_layer"):
            v = getattr(self, name)
            if not 0 <= v <= 1:
                raise ValueError(f"{name}={v} outside [0, 1]")
        b = np.asarray(self.pauli_bias, dtype=float)
        if b.shape != (3,) or (b < 0).any() or abs(b.sum() - 1) > 1e-9:
            raise ValueError("pauli_bias must be three non-negative weights summing to 1")

    @classmethod
    def noiseless(cls) -> NoiseModel:
        return cls(p_ini=0.0, p_layer=0.0)

    @property
    def is_noiseless(self) -> bool:
        return self.p_ini == 0 and self.p_layer == 0 and self.angle_offset == 0

    def to_dict(self) -> dict:
        d = asdict(self)
        d["pauli_bias"] = list(self.pauli_bias)
        return d


@dataclass(frozen=True)
class PostselectionPolicy:
    loss_radius: int | None = None
    decoding_threshold: int | None = None

    def __post_init__(self):
        if self.loss_radius is not None and self.loss_radius < 0:
            raise ValueError("loss radius must be >= 0")
        if self.decoding_threshold is not None and self.decoding_threshold < 0:
            raise ValueError("decoding threshold must be >= 0")


@dataclass
class Frame:
    """Pauli frame and loss set of one trajectory over the data sites."""

    x: np.ndarray
    z: np.ndarray
    lost: np.ndarray

    @classmethod
    def clean(cls, n: int) -> Frame:
        return cls(np.zeros(n, dtype=bool), np.zeros(n, dtype=bool), np.zeros(n, dtype=bool))

    def copy(self) -> Frame:
        return Frame(self.x.copy(), self.z.copy(), self.lost.copy())

    def anticommutes(self, support: dict[int, str]) -> bool:
        n = 0
        for q, l in support.items():
            if l == "X":
                n += self.z[q]
            elif l == "Z":
                n += self.x[q]
            else:
                n += self.x[q] ^ self.z[q]
        return bool(n % 2)

    def letters(self) -> dict[int, str]:
        out = {}
        for q in np.nonzero(self.x | self.z)[0]:
            out[int(q)] = "Y" if (self.x[q] and self.z[q]) else ("X" if self.x[q] else "Z")
        return out


def apply_layer_noise(frame: Frame, p: float, loss_fraction: float, rng: np.random.Generator,
                      bias=(1 / 3, 1 / 3, 1 / 3), sites=None) -> Frame:
    """One noise layer on ``sites`` (all present sites by default); lost sites are skipped."""
    n = len(frame.x)
    if p <= 0:
        return frame
    idx = np.arange(n) if sites is None else np.asarray(sites, dtype=int)
    idx = idx[~frame.lost[idx]]
    u = rng.random(idx.size)
    hit = u < p
    is_loss = u < p * loss_fraction
    frame.lost[idx[is_loss]] = True
    pauli = idx[hit & ~is_loss]
    if pauli.size:
        kind = rng.choice(3, size=pauli.size, p=np.asarray(bias, dtype=float))
        frame.x[pauli] ^= kind <= 1
        frame.z[pauli] ^= kind >= 1
    return frame


def loss_flags(lat: Lattice, lost: np.ndarray, support, radius: int | None) -> bool:
    """True if the observable on ``support`` is usable: every site within ``radius`` is present."""
    if radius is None:
        return True
    support = list(support)
    if not support:
        return True
    lost_idx = np.nonzero(lost)[0]
    if lost_idx.size == 0:
        return True
    d = lat.distances[np.ix_(support, lost_idx)]
    return bool(d.min() > radius)


def accept_loss(snapshot, support, radius: int | None, lat: Lattice | None = None) -> bool:
    lost = snapshot.lost_mask if hasattr(snapshot, "lost_mask") else np.asarray(snapshot)
    if radius is None:
        return True
    if lat is None:
        lat = snapshot.lattice
    return loss_flags(lat, lost, support, radius)


def accept_decoding(snapshot, threshold: int | None) -> bool:
    if threshold is None:
        return True
    v = snapshot.column_violations if hasattr(snapshot, "column_violations") else int(snapshot)
    return v <= threshold


def binomial_ci(k: int, n: int, z: float = 1.0) -> tuple[float, float]:
    """Wilson interval for a proportion (68% by default)."""
    if n == 0:
        return float("nan"), float("nan")
    p = k / n
    den = 1 + z * z / n
    mid = (p + z * z / (2 * n)) / den
    half = z * np.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / den
    return float(mid - half), float(mid + half)


def bootstrap_ci(values, rng: np.random.Generator, n_boot: int = 1000, level: float = 0.68,
                 stat=np.mean) -> tuple[float, float]:
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        return float("nan"), float("nan")
    if v.size == 1:
        return float(v[0]), float(v[0])
    idx = rng.integers(0, v.size, size=(n_boot, v.size))
    stats = stat(v[idx], axis=1)
    lo = (1 - level) / 2
    return float(np.quantile(stats, lo)), float(np.quantile(stats, 1 - lo))


def mean_ci(values, level_z: float = 1.0) -> tuple[float, float, float]:
    """Mean with a normal-approximation interval."""
    v = np.asarray(values, dtype=float)
    if v.size == 0:
        return float("nan"), float("nan"), float("nan")
    m = float(v.mean())
    if v.size == 1:
        return m, m, m
    se = float(v.std(ddof=1) / np.sqrt(v.size))
    return m, m - level_z * se, m + level_z * se


# ----------------------------------------------------------------------------
# trajectory runner

BOOTSTRAP_KEY = 2**31 - 1  # spawn key of the stream used for summary bootstraps


@dataclass(frozen=True)
class ObservableSpec:
    """A family of ``K`` measured quantities sharing a name, one support per member.

    ``reduce="mean"`` reports the pooled mean over accepted members; ``"sum"`` reports ``K``
    times it (e.g. a particle number from per-dimer densities).  ``per_member`` adds one row
    per member named ``name[k]``.
    """

    name: str
    supports: tuple[tuple[int, ...], ...]
    reduce: str = "mean"
    per_member: bool = False

    @property
    def size(self) -> int:
        return len(self.supports)


@dataclass
class BlockResult:
    start: int
    values: dict[str, np.ndarray]  # name -> (n, K)
    lost: np.ndarray  # (n, n_data) bool
    violations: np.ndarray  # (n,) int
    frame_x: np.ndarray | None = None
    frame_z: np.ndarray | None = None
    extra: dict[str, np.ndarray] = field(default_factory=dict)  # name -> (n, ...)

    @property
    def n(self) -> int:
        return len(self.violations)


@dataclass
class SnapshotRecord:
    trajectory: int
    seed: int
    column_violations: int
    lost_sites: list[int]
    frame: dict[int, str]
    values: dict[str, list[float]]
    extra: dict[str, list]
    protocol: dict

    def to_json(self) -> str:
        import json
        d = asdict(self)
        d["frame"] = {str(k): v for k, v in self.frame.items()}
        return json.dumps(d, separators=(",", ":"), sort_keys=True)


@dataclass
class SnapshotSet:
    """All trajectories of one run, stored column-wise."""

    seed: int
    values: dict[str, np.ndarray]
    lost: np.ndarray
    violations: np.ndarray
    frame_x: np.ndarray | None = None
    frame_z: np.ndarray | None = None
    extra: dict[str, np.ndarray] = field(default_factory=dict)
    protocol: dict = field(default_factory=dict)

    @property
    def n(self) -> int:
        return len(self.violations)

    @classmethod
    def from_blocks(cls, seed: int, blocks: list[BlockResult], protocol: dict | None = None) -> SnapshotSet:
        blocks = sorted(blocks, key=lambda b: b.start)
        cat = lambda xs: np.concatenate(xs, axis=0)
        values = {k: cat([b.values[k] for b in blocks]) for k in blocks[0].values}
        extra = {k: cat([b.extra[k] for b in blocks]) for k in blocks[0].extra}
        fx = cat([b.frame_x for b in blocks]) if blocks[0].frame_x is not None else None
        fz = cat([b.frame_z for b in blocks]) if blocks[0].frame_z is not None else None
        return cls(seed, values, cat([b.lost for b in blocks]), cat([b.violations for b in blocks]),
                   fx, fz, extra, dict(protocol or {}))

    def records(self, limit: int | None = None):
        n = self.n if limit is None else min(limit, self.n)
        for t in range(n):
            frame = {}
            if self.frame_x is not None:
                f = Frame(self.frame_x[t], self.frame_z[t], self.lost[t])
                frame = f.letters()
            yield SnapshotRecord(t, self.seed, int(self.violations[t]), [int(q) for q in np.nonzero(self.lost[t])[0]],
                                 frame, {k: [float(x) for x in v[t]] for k, v in self.values.items()},
                                 {k: np.asarray(v[t]).tolist() for k, v in self.extra.items()}, self.protocol)

    def write_ndjson(self, path, limit: int | None = None) -> None:
        with open(path, "w") as fh:
            for rec in self.records(limit):
                fh.write(rec.to_json() + "\n")

    def accepted(self, lat: Lattice, spec: ObservableSpec, policy: PostselectionPolicy) -> np.ndarray:
        """(n, K) mask of usable values under ``policy``."""
        ok = np.ones((self.n, spec.size), dtype=bool)
        if policy.decoding_threshold is not None:
            ok &= (self.violations <= policy.decoding_threshold)[:, None]
        if policy.loss_radius is not None and self.lost.any():
            near = np.zeros((spec.size, lat.n_data), dtype=bool)
            for k, sup in enumerate(spec.supports):
                if sup:
                    near[k] = lat.distances[list(sup)].min(axis=0) <= policy.loss_radius
            ok &= ~((self.lost.astype(np.uint8) @ near.T.astype(np.uint8)) > 0)
        return ok


@dataclass(frozen=True)
class SummaryRow:
    observable: str
    mean: float
    ci_low: float
    ci_high: float
    acceptance_fraction: float


def pooled_mean_ci(values: np.ndarray, ok: np.ndarray, z: float = 1.0) -> tuple[float, float, float]:
    """Mean over accepted entries with a trajectory-clustered standard error."""
    s = np.where(ok, values, 0.0).sum(axis=1)
    c = ok.sum(axis=1).astype(float)
    tot = c.sum()
    if tot == 0:
        return float("nan"), float("nan"), float("nan")
    m = float(s.sum() / tot)
    n = int((c > 0).sum())
    if n < 2:
        return m, m, m
    se = float(np.sqrt(((s - m * c) ** 2).sum() * n / (n - 1)) / tot)
    return m, m - z * se, m + z * se


def summarize(snaps: SnapshotSet, lat: Lattice, specs: list[ObservableSpec],
              policy: PostselectionPolicy) -> list[SummaryRow]:
    rows = []
    for spec in specs:
        v = snaps.values[spec.name]
        ok = snaps.accepted(lat, spec, policy)
        scale = spec.size if spec.reduce == "sum" else 1
        m, lo, hi = pooled_mean_ci(v, ok)
        rows.append(SummaryRow(spec.name, scale * m, scale * lo, scale * hi, float(ok.mean()) if ok.size else 1.0))
        if spec.per_member:
            for k in range(spec.size):
                m, lo, hi = pooled_mean_ci(v[:, k:k + 1], ok[:, k:k + 1])
                rows.append(SummaryRow(f"{spec.name}[{k}]", m, lo, hi, float(ok[:, k].mean())))
    return rows


def bootstrap_rng(seed: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(BOOTSTRAP_KEY,)))


def format_float(x: float) -> str:
    return "nan" if not np.isfinite(x) else f"{x:.12g}"


SUMMARY_HEADER = ("observable", "mean", "ci_low", "ci_high", "acceptance_fraction")


def summary_csv(rows: list[SummaryRow], extra_cols: dict[str, str] | None = None) -> str:
    import csv
    import io
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    keys = list(extra_cols or {})
    w.writerow(keys + list(SUMMARY_HEADER))
    for r in rows:
        w.writerow([extra_cols[k] for k in keys] + [r.observable, format_float(r.mean), format_float(r.ci_low),
                                                     format_float(r.ci_high), format_float(r.acceptance_fraction)])
    return buf.getvalue()


def block_ranges(n: int, block_size: int) -> list[tuple[int, int, int]]:
    """``(block, start, stop)``; the split depends only on ``n`` and the block size."""
    return [(b, s, min(s + block_size, n)) for b, s in enumerate(range(0, n, block_size))]


def block_rng(seed: int, block: int) -> np.random.Generator:
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(block,)))


def run_trajectories(simulate, n: int, seed: int, block_size: int = 64, workers: int = 1,
                     protocol: dict | None = None) -> SnapshotSet:
    """Run ``simulate(start, count, rng) -> BlockResult`` over fixed blocks of trajectories.

    Block ``b`` always draws from ``SeedSequence(seed, spawn_key=(b,))`` and blocks are
    merged in order, so the output does not depend on ``workers``.  With ``workers > 1``
    ``simulate`` must be picklable.
    """
    if n < 1:
        raise ValueError("need at least one trajectory")
    jobs = block_ranges(n, block_size)
    if workers <= 1 or len(jobs) == 1:
        blocks = [_run_block(simulate, seed, job) for job in jobs]
    else:
        from concurrent.futures import ProcessPoolExecutor
        import functools
        with ProcessPoolExecutor(max_workers=workers) as ex:
            blocks = list(ex.map(functools.partial(_run_block, simulate, seed), jobs))
    return SnapshotSet.from_blocks(seed, blocks, protocol)


def _run_block(simulate, seed: int, job: tuple[int, int, int]) -> BlockResult:
    b, start, stop = job
    return simulate(start, stop - start, block_rng(seed, b))
