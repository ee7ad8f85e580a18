"""Measure tables, pairwise intersections and second-moment statistics for A'_n.

All quantities are exact interval computations. For lattice configurations
the sets are handled as periodic unions; otherwise they are enumerated
under the point budget.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass, field
from typing import Sequence

from gmpy2 import mpq

from .construction import (
    DivergenceSetup,
    ExperimentConfig,
    build_A_n,
    build_A_prime_n,
    periodic_A_n,
    periodic_A_prime_n,
    psi_index,
    pruned_points,
)
from .delone import points_in_window
from .errors import UndefinedRatioError
from .numerics import EMPTY, IntervalUnion, Interval, PeriodicUnion, Scalar, _is_integer_ratio, floor, normalize

logger = logging.getLogger(__name__)


class APrimeFamily:
    """Lazily built sets ``A'_1, A'_2, ...`` with cached measures.

    ``use_periodic=False`` forces explicit enumeration (used to cross-check
    the periodic route).
    """

    def __init__(self, cfg: ExperimentConfig, setup: DivergenceSetup, use_periodic: bool = True):
        self.cfg = cfg
        self.setup = setup
        self.use_periodic = use_periodic
        self._sets: dict[int, PeriodicUnion | IntervalUnion] = {}
        self._measures: dict[int, Scalar] = {}

    def set(self, n: int) -> PeriodicUnion | IntervalUnion:
        if n not in self._sets:
            built = periodic_A_prime_n(self.cfg, self.setup, n) if self.use_periodic else None
            if built is None:
                built = build_A_prime_n(self.cfg, self.setup, n)
            self._sets[n] = built
        return self._sets[n]

    @property
    def periodic(self) -> bool:
        """Whether the sets are handled by the periodic engine."""
        return self.use_periodic and isinstance(self.set(1), PeriodicUnion)

    def measure(self, n: int) -> Scalar:
        if n not in self._measures:
            s = self.set(n)
            with self.cfg.numbers.active():
                if isinstance(s, PeriodicUnion):
                    self._measures[n] = s.measure_on(self.cfg.a, self.cfg.b)
                else:
                    self._measures[n] = s.measure()
        return self._measures[n]

    def intersection(self, m: int, n: int) -> Scalar:
        if m == n:
            return self.measure(n)
        if not self.measure(m) or not self.measure(n):
            return mpq(0)
        u, v = self.set(m), self.set(n)
        with self.cfg.numbers.active():
            if isinstance(u, PeriodicUnion) and isinstance(v, PeriodicUnion):
                return u.intersection_measure(v, self.cfg.a, self.cfg.b, self.cfg.numbers)
            u = u if isinstance(u, IntervalUnion) else u.restrict(self.cfg.a, self.cfg.b, self.cfg.point_budget)
            v = v if isinstance(v, IntervalUnion) else v.restrict(self.cfg.a, self.cfg.b, self.cfg.point_budget)
            return u.intersect(v).measure()


def measure_table(cfg: ExperimentConfig, setup: DivergenceSetup, N: int, family: APrimeFamily | None = None) -> list[Scalar]:
    """``[measure(A'_n) for n in 1..N]``."""
    if N < 1:
        raise ValueError("measure_table needs N >= 1")
    family = family or APrimeFamily(cfg, setup)
    return [family.measure(n) for n in range(1, N + 1)]


def intersection_matrix(
    cfg: ExperimentConfig,
    setup: DivergenceSetup,
    N: int,
    band_width: int | None = None,
    family: APrimeFamily | None = None,
) -> list[list[Scalar | None]]:
    """Symmetric ``N x N`` matrix of ``measure(A'_m ∩ A'_n)`` (row/column 0 is ``n = 1``).

    With ``band_width`` set, entries with ``|m - n| > band_width`` are left
    as ``None`` and count as zero downstream.
    """
    if N < 1:
        raise ValueError("intersection_matrix needs N >= 1")
    family = family or APrimeFamily(cfg, setup)
    band = band_width if band_width is not None else cfg.band_width
    mat: list[list[Scalar | None]] = [[None] * N for _ in range(N)]
    for m in range(1, N + 1):
        mat[m - 1][m - 1] = family.measure(m)
        for n in range(m + 1, N + 1):
            if band is not None and n - m > band:
                continue
            value = family.intersection(m, n)
            mat[m - 1][n - 1] = mat[n - 1][m - 1] = value
    return mat


@dataclass
class RatioTrajectory:
    """Second-moment ratio ``(sum_n λ(A'_n))^2 / sum_{m,n} λ(A'_m ∩ A'_n)`` for every prefix."""

    ratios: list[Scalar | None]
    value: Scalar
    running_max: Scalar
    running_max_trajectory: list[Scalar | None] = field(default_factory=list)


def ratio_trajectory(measures: Sequence[Scalar], matrix: Sequence[Sequence[Scalar | None]]) -> RatioTrajectory:
    first_moment = mpq(0)
    second_moment = mpq(0)
    ratios: list[Scalar | None] = []
    maxes: list[Scalar | None] = []
    best = None
    for k, lam in enumerate(measures):
        first_moment += lam
        cross = mpq(0)
        for i in range(k):
            entry = matrix[i][k]
            if entry is not None:
                cross += entry
        second_moment += 2 * cross + lam
        if second_moment:
            ratio = first_moment * first_moment / second_moment
            best = ratio if best is None or ratio > best else best
        else:
            ratio = None
        ratios.append(ratio)
        maxes.append(best)
    if best is None:
        raise UndefinedRatioError("every A'_n is null; the second-moment ratio is undefined")
    return RatioTrajectory(ratios=ratios, value=ratios[-1], running_max=best, running_max_trajectory=maxes)


def chung_erdos_ratio(
    cfg: ExperimentConfig, setup: DivergenceSetup, N: int, family: APrimeFamily | None = None
) -> RatioTrajectory:
    family = family or APrimeFamily(cfg, setup)
    measures = measure_table(cfg, setup, N, family)
    if not any(measures):
        raise UndefinedRatioError("every A'_n is null; the second-moment ratio is undefined")
    matrix = intersection_matrix(cfg, setup, N, family=family)
    return ratio_trajectory(measures, matrix)


def _qi_constant(cfg, setup, N, matrix) -> Scalar:
    psis = [cfg.psi(psi_index(setup, n)) for n in range(1, N + 1)]
    best = None
    with cfg.numbers.active():
        for m in range(N):
            for n in range(m + 1, N):
                denom = cfg.width * psis[m] * psis[n]
                if not denom or matrix[m][n] is None:
                    continue
                value = matrix[m][n] / denom
                if best is None or value > best:
                    best = value
    if best is None:
        raise UndefinedRatioError("no pair m != n with psi(mJ+j) psi(nJ+j) > 0")
    return best


def quasi_independence_constant(
    cfg: ExperimentConfig, setup: DivergenceSetup, N: int, family: APrimeFamily | None = None
) -> Scalar:
    """``max_{m != n} λ(A'_m ∩ A'_n) / ((b - a) psi(mJ+j) psi(nJ+j))``."""
    if N < 2:
        raise ValueError("quasi_independence_constant needs N >= 2")
    matrix = intersection_matrix(cfg, setup, N, family=family)
    return _qi_constant(cfg, setup, N, matrix)


@dataclass
class IndependenceReport:
    N: int
    measures: list[Scalar]
    intersection_matrix: list[list[Scalar | None]]
    trajectory: RatioTrajectory
    quasi_independence_constant: Scalar | None
    K_estimate: Scalar
    psi_indices: list[int]
    periodic: bool

    @property
    def chung_erdos_ratio(self) -> Scalar:
        return self.trajectory.value


def independence_report(
    cfg: ExperimentConfig, setup: DivergenceSetup, N: int, band_width: int | None = None
) -> IndependenceReport:
    family = APrimeFamily(cfg, setup)
    measures = measure_table(cfg, setup, N, family)
    matrix = intersection_matrix(cfg, setup, N, band_width, family)
    trajectory = ratio_trajectory(measures, matrix)
    try:
        qi = _qi_constant(cfg, setup, N, matrix) if N >= 2 else None
    except UndefinedRatioError:
        qi = None
    return IndependenceReport(
        N=N,
        measures=measures,
        intersection_matrix=matrix,
        trajectory=trajectory,
        quasi_independence_constant=qi,
        K_estimate=trajectory.running_max / cfg.width,
        psi_indices=[psi_index(setup, n) for n in range(1, N + 1)],
        periodic=family.periodic,
    )


# ---------------------------------------------------------------------------
# pruned-count chain
# ---------------------------------------------------------------------------


@dataclass
class LowerBoundCheck:
    """Count of ``Y^(n) ∩ [aX, bX)`` against the three-line lower-bound chain.

    The chain is evaluated with the minimal gap ``2r`` and maximal gap ``2R``
    in the roles of the two constants (see ``check_Yn_lower_bound``).
    ``radius_bound`` is the final line with the radii themselves, kept
    for reference.
    """

    n: int
    X: Scalar
    count: int
    line1: Scalar
    line2: Scalar
    bound: Scalar
    radius_bound: Scalar
    steps: dict[str, bool]
    passed: bool

    @property
    def failing_step(self) -> str | None:
        for name, ok in self.steps.items():
            if not ok:
                return name
        return None


def check_Yn_lower_bound(cfg: ExperimentConfig, setup: DivergenceSetup, n: int, X: Scalar) -> LowerBoundCheck:
    """Count pruned points in ``[aX, bX)`` and evaluate the lower-bound chain.

    With ``d = 2r`` (minimal gap) and ``D = 2R`` (maximal gap) the chain reads

        count >= floor((b-a)X/D) - sum_{l<n} (b-a)X/(d beta^l) * (1 + 2/d)   (line1)
              >= (b-a)X (1/D - (1 + 2/d)/(d(beta - 1))) - 1                    (line2)
              >= (b-a)X/(2D) - 1                                               (bound)

    Each link is reported separately. ``passed`` means ``count >= bound``.
    """
    if X <= 0:
        raise ValueError("X must be positive")
    dset = cfg.delone
    with cfg.numbers.active():
        lo, hi = cfg.a * X, cfg.b * X
        pts = pruned_points(cfg, setup, n, lo, hi)
        count = sum(1 for y in pts if y < hi)
        width = cfg.width * X
        d, D = 2 * dset.r, 2 * dset.R
        beta = abs(setup.beta)
        ball = 1 + 2 / d
        losses = mpq(0)
        for ell in range(1, n):
            losses += width / (d * beta**ell) * ball
        line1 = floor(width / D) - losses
        line2 = width * (1 / D - ball / (d * (beta - 1))) - 1
        bound = width / (2 * D) - 1
        radius_bound = width / (2 * dset.R) - 1
        slack = cfg.numbers.tolerance * max(mpq(1), abs(width))
        steps = {
            "count>=line1": count >= line1 - slack,
            "line1>=line2": line1 >= line2 - slack,
            "line2>=bound": line2 >= bound - slack,
        }
        passed = count >= bound - slack
    return LowerBoundCheck(n, X, count, line1, line2, bound, radius_bound, steps, passed)


# ---------------------------------------------------------------------------
# density zoom
# ---------------------------------------------------------------------------


def _A_n_on(cfg: ExperimentConfig, n: int, region: IntervalUnion) -> IntervalUnion:
    """``A_n`` (unclipped) restricted to ``region``."""
    psi_n = cfg.psi(n)
    if not psi_n or not region:
        return EMPTY
    periodic = periodic_A_n(cfg, n)
    pieces: list[Interval] = []
    budget = cfg.point_budget
    for gap in region:
        if periodic is not None:
            part = periodic.restrict(gap.lo, gap.hi, budget)
        else:
            scale = cfg.alpha_pow(n)
            u, v = sorted((gap.lo * scale, gap.hi * scale))
            rho = psi_n / abs(scale)
            clipped = []
            for y in points_in_window(cfg.delone, u - psi_n, v + psi_n, budget):
                c = y / scale
                clipped.append((max(c - rho, gap.lo), min(c + rho, gap.hi)))
            part = normalize(iv for iv in clipped if iv[0] <= iv[1])
        budget -= len(part)
        pieces.extend(part)
    return normalize(pieces)


def union_on_window(cfg: ExperimentConfig, N1: int, N2: int, lo: Scalar, hi: Scalar) -> IntervalUnion:
    """``(A_{N1} ∪ ... ∪ A_{N2}) ∩ [lo, hi]``.

    Each ``A_n`` is only materialised over the part of the window that the
    earlier sets left uncovered.
    """
    if N1 > N2:
        raise ValueError("need N1 <= N2")
    covered = EMPTY
    with cfg.numbers.active():
        for n in range(N1, N2 + 1):
            gaps = covered.complement_in(lo, hi)
            if not gaps:
                break
            covered = covered.union(_A_n_on(cfg, n, gaps))
    return covered


def union_measure_on(cfg: ExperimentConfig, N1: int, N2: int, lo: Scalar, hi: Scalar) -> Scalar:
    """``measure((A_{N1} ∪ ... ∪ A_{N2}) ∩ [lo, hi])``.

    A periodic union is materialised over one period and the leftover tail only.
    """
    period = union_period(cfg, N1, N2)
    with cfg.numbers.active():
        if period is None or period >= hi - lo:
            return union_on_window(cfg, N1, N2, lo, hi).measure()
        copies = floor((hi - lo) / period)
        one = union_on_window(cfg, N1, N2, lo, lo + period).measure()
        tail_lo = lo + copies * period
        tail = union_on_window(cfg, N1, N2, tail_lo, hi).measure() if tail_lo < hi else 0
        return copies * one + tail


def density_zoom(
    cfg: ExperimentConfig,
    setup: DivergenceSetup | None,
    x0: Scalar,
    N1: int,
    N2: int,
    eps_list: Sequence[Scalar],
) -> list[tuple[Scalar, Scalar]]:
    """``measure(U ∩ B(x0, eps)) / (2 eps)`` for each ``eps``, ``U = A_{N1} ∪ ... ∪ A_{N2}``."""
    out = []
    for eps in eps_list:
        if eps <= 0:
            raise ValueError("eps must be positive")
        with cfg.numbers.active():
            out.append((eps, union_measure_on(cfg, N1, N2, x0 - eps, x0 + eps) / (2 * eps)))
    return out


def union_period(cfg: ExperimentConfig, N1: int, N2: int) -> Scalar | None:
    """A common period of ``A_{N1}, ..., A_{N2}``, or ``None`` if there is none to hand."""
    period = None
    periods = []
    for n in range(N1, N2 + 1):
        if not cfg.psi(n):
            continue
        p = periodic_A_n(cfg, n)
        if p is None:
            return None
        periods.append(p.period)
        period = p.period if period is None or p.period > period else period
    if period is None:
        return None
    with cfg.numbers.active():
        if all(_is_integer_ratio(period, p, cfg.numbers) for p in periods):
            return period
    return None


def global_density(cfg: ExperimentConfig, N1: int, N2: int) -> Scalar:
    """``measure(U ∩ [a, b)) / (b - a)``."""
    with cfg.numbers.active():
        return union_measure_on(cfg, N1, N2, cfg.a, cfg.b) / cfg.width


# ---------------------------------------------------------------------------
# measures of the unmodified sets
# ---------------------------------------------------------------------------


def A_n_measure(cfg: ExperimentConfig, n: int) -> Scalar:
    """``measure(A_n)`` via the periodic route when available."""
    periodic = periodic_A_n(cfg, n)
    if periodic is None:
        return build_A_n(cfg, n).measure()
    with cfg.numbers.active():
        return periodic.measure_on(cfg.a, cfg.b)


def A_n_measure_table(cfg: ExperimentConfig, N: int) -> list[Scalar]:
    return [A_n_measure(cfg, n) for n in range(1, N + 1)]
