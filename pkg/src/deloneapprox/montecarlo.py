"""Orbit hit counting and population statistics over sampled starting points.

Sample ``i`` is a deterministic function of ``(seed, i)`` (SHAKE-256 used as a
counter-based generator), so any subset of samples can be recomputed in any
order or process and the aggregate statistics do not depend on scheduling.
"""
from __future__ import annotations

import hashlib
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field
from typing import Sequence

import gmpy2
from gmpy2 import mpfr, mpq

from .construction import ExperimentConfig
from .delone import IntegerLattice, nearest_point
from .estimators import A_n_measure_table
from .numerics import Scalar, floor, required_precision
from .psi import DIVERGENT

AT_LEAST_LEVELS = (1, 2, 3, 5, 10, 20, 50, 100)
QUANTILES = (0.01, 0.25, 0.5, 0.75, 0.9, 0.99)


@dataclass(frozen=True)
class HitRecord:
    n: int
    y: Scalar
    dist: Scalar
    borderline: bool = False


def counter_bits(seed: int, index: int, bits: int) -> int:
    """``bits`` uniformly distributed bits keyed by ``(seed, index)``."""
    nbytes = (bits + 7) // 8
    digest = hashlib.shake_256(f"deloneapprox:{seed}:{index}".encode()).digest(nbytes)
    return int.from_bytes(digest, "big") >> (8 * nbytes - bits)


def sample_bits(cfg: ExperimentConfig, N: int) -> int:
    return max(cfg.numbers.precision_bits, required_precision(N, cfg.alpha))


def sample_point(cfg: ExperimentConfig, seed: int, index: int, bits: int, rational: bool | None = None) -> Scalar:
    """Uniform point of ``[a, b)`` on a grid of ``2**bits`` cells.

    Rational by default in exact mode, a big float otherwise.
    """
    u = mpq(counter_bits(seed, index, bits), 2**bits)
    x = cfg.a + cfg.width * u
    if rational is None:
        rational = cfg.numbers.exact
    if rational:
        return x
    with cfg.numbers.active():
        return mpfr(x, cfg.numbers.precision_bits)


class _Orbit:
    """Per-n hit test, with an O(1) nearest point for lattices."""

    def __init__(self, cfg: ExperimentConfig, psis: Sequence[Scalar]):
        self.cfg = cfg
        self.psis = psis
        dset = cfg.delone
        self.lattice = isinstance(dset, IntegerLattice)

    def nearest(self, z: Scalar) -> tuple[Scalar, Scalar]:
        if self.lattice:
            dset = self.cfg.delone
            k = floor((z - dset.offset) / dset.scale)
            below = dset.scale * k + dset.offset
            above = below + dset.scale
            if above - z < z - below:
                return above, above - z
            return below, z - below
        return nearest_point(self.cfg.delone, z)

    def walk(self, x: Scalar, N: int):
        """Yield ``(n, y, dist, hit, borderline)`` for ``n = 1..N``."""
        cfg = self.cfg
        numbers = cfg.numbers
        z = x
        for n in range(1, N + 1):
            z = z * cfg.alpha
            y, dist = self.nearest(z)
            hit, borderline = numbers.within(dist, self.psis[n], z)
            yield n, y, dist, hit, borderline


def sample_hits(cfg: ExperimentConfig, x: Scalar, N: int) -> list[HitRecord]:
    """All ``(n, y, dist)`` with ``|alpha**n x - y| <= psi(n)``, ``n = 1..N``."""
    if not cfg.a <= x < cfg.b:
        raise ValueError(f"x={x} outside [{cfg.a}, {cfg.b})")
    if N > cfg.N_max:
        raise ValueError(f"N={N} exceeds N_max={cfg.N_max}")
    psis = [mpq(0)] + [cfg.psi(n) for n in range(1, N + 1)]
    orbit = _Orbit(cfg, psis)
    with cfg.numbers.active():
        return [
            HitRecord(n, y, dist, borderline)
            for n, y, dist, hit, borderline in orbit.walk(x, N)
            if hit
        ]


def _count_chunk(args) -> tuple[list[int], list[Scalar], int]:
    cfg, psis, seed, indices, N, bits, rational = args
    orbit = _Orbit(cfg, psis)
    counts, xs, borderline = [], [], 0
    with cfg.numbers.active():
        for i in indices:
            x = sample_point(cfg, seed, i, bits, rational)
            hits = 0
            for _, _, _, hit, flag in orbit.walk(x, N):
                hits += hit
                borderline += flag
            counts.append(hits)
            xs.append(x)
    return counts, xs, borderline


def quantile(sorted_values: Sequence[int], q: float) -> int:
    """Nearest-rank quantile of a sorted sequence."""
    if not sorted_values:
        raise ValueError("quantile of an empty sample")
    rank = max(1, math.ceil(q * len(sorted_values)))
    return sorted_values[rank - 1]


@dataclass
class DichotomyStats:
    samples: int
    N: int
    seed: int
    mean_hits: Scalar
    std_hits: Scalar
    expected_hits: Scalar
    quantiles: dict[str, int]
    fraction_with_at_least: dict[str, Scalar]
    regime: str
    borderline: int
    sample_bits: int
    hit_counts: list[int] = field(default_factory=list, repr=False)
    xs: list[Scalar] = field(default_factory=list, repr=False)

    @property
    def standard_error(self) -> Scalar:
        return self.std_hits / gmpy2.sqrt(mpfr(self.samples))

    def summary(self) -> dict:
        out = asdict(self)
        out.pop("hit_counts")
        out.pop("xs")
        return out


def summarize_counts(counts: Sequence[int]) -> dict:
    """Mean, standard deviation, quantiles and tail fractions of hit counts."""
    s = len(counts)
    total = sum(counts)
    mean = mpq(total, s)
    sq = sum(c * c for c in counts)
    var = (mpq(sq) - s * mean * mean) / (s - 1) if s > 1 else mpq(0)
    ordered = sorted(counts)
    return {
        "mean_hits": mean,
        "std_hits": gmpy2.sqrt(mpfr(var)) if var else mpq(0),
        "quantiles": {f"{q:g}": quantile(ordered, q) for q in QUANTILES},
        "fraction_with_at_least": {
            str(k): mpq(sum(1 for c in counts if c >= k), s) for k in AT_LEAST_LEVELS
        },
    }


def expected_hits(cfg: ExperimentConfig, N: int) -> Scalar:
    """``sum_{n<=N} measure(A_n) / (b - a)``, exact."""
    with cfg.numbers.active():
        return sum(A_n_measure_table(cfg, N), mpq(0)) / cfg.width


def dichotomy_experiment(
    cfg: ExperimentConfig,
    samples: int,
    seed: int,
    N: int,
    workers: int = 1,
    rational_samples: bool | None = None,
) -> DichotomyStats:
    """Hit counts along ``alpha**n x`` for ``samples`` seeded uniform ``x`` in ``[a, b)``."""
    if samples < 1:
        raise ValueError("samples must be positive")
    if N > cfg.N_max:
        raise ValueError(f"N={N} exceeds N_max={cfg.N_max}")
    bits = sample_bits(cfg, N)
    psis = [mpq(0)] + [cfg.psi(n) for n in range(1, N + 1)]
    chunk = max(1, math.ceil(samples / max(1, workers * 4)))
    jobs = [
        (cfg, psis, seed, range(start, min(start + chunk, samples)), N, bits, rational_samples)
        for start in range(0, samples, chunk)
    ]
    if workers > 1 and len(jobs) > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_count_chunk, jobs))
    else:
        results = [_count_chunk(job) for job in jobs]
    counts = [c for chunk_counts, _, _ in results for c in chunk_counts]
    xs = [x for _, chunk_xs, _ in results for x in chunk_xs]
    borderline = sum(b for _, _, b in results)
    stats = summarize_counts(counts)
    return DichotomyStats(
        samples=samples,
        N=N,
        seed=seed,
        expected_hits=expected_hits(cfg, N),
        regime=cfg.psi.regime,
        borderline=borderline,
        sample_bits=bits,
        hit_counts=counts,
        xs=xs,
        **stats,
    )


def is_divergent(cfg: ExperimentConfig) -> bool:
    return cfg.psi.regime == DIVERGENT
