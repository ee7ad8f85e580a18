"""The sets A_n, the pruned sets Y^(n), the modified sets A'_n and their scales.

Two routes produce the same sets. ``build_A_n`` / ``build_A_prime_n``
enumerate the component intervals explicitly and are limited by the point
budget. ``periodic_A_n`` / ``periodic_A_prime_n`` exploit the translation
symmetry of lattice configurations and return a :class:`PeriodicUnion`,
which the estimators can measure at any scale. The periodic route returns
``None`` whenever the configuration has no such symmetry.
"""
from __future__ import annotations

import bisect
from dataclasses import dataclass, field
from functools import lru_cache

import gmpy2
from gmpy2 import mpq

from .delone import DEFAULT_POINT_BUDGET, DeloneSet, IntegerLattice, points_in_window, window_indices
from .errors import ConfigError, DegeneratePsiError, InvalidPairError, PrecisionError
from .numerics import (
    EMPTY,
    IntervalUnion,
    Numbers,
    PeriodicUnion,
    Scalar,
    is_exact,
    normalize,
    required_precision,
)
from .psi import PsiSpec


@dataclass(frozen=True)
class ExperimentConfig:
    alpha: Scalar
    a: Scalar
    b: Scalar
    N_max: int
    delone: DeloneSet
    psi: PsiSpec
    numbers: Numbers = Numbers()
    point_budget: int = DEFAULT_POINT_BUDGET
    residue_budget: int | None = None
    pruning: bool = True
    band_width: int | None = None
    seed: int = 0
    name: str = ""
    source: dict = field(default_factory=dict, compare=False, repr=False)

    def __post_init__(self):
        if abs(self.alpha) <= 1:
            raise ConfigError(f"|alpha| must exceed 1, got {self.alpha}")
        if not self.a < self.b:
            raise ConfigError(f"need a < b, got a={self.a}, b={self.b}")
        if self.N_max < 1:
            raise ConfigError("N_max must be a positive integer")
        if not self.numbers.exact:
            needed = required_precision(self.N_max, self.alpha)
            if self.numbers.precision_bits < needed:
                raise PrecisionError(
                    f"precision_bits={self.numbers.precision_bits} is below the "
                    f"{needed} bits required for N_max={self.N_max}"
                )

    @property
    def width(self) -> Scalar:
        with self.numbers.active():
            return self.b - self.a

    @property
    def effective_residue_budget(self) -> int:
        return self.residue_budget or 10 * self.N_max

    def alpha_pow(self, n: int) -> Scalar:
        return _cached_pow(self.alpha, n, self.numbers)


@lru_cache(maxsize=8192)
def _cached_pow(base: Scalar, n: int, numbers: Numbers) -> Scalar:
    return numbers.pow(base, n)


@dataclass(frozen=True)
class DivergenceSetup:
    J: int
    j: int
    beta: Scalar

    def __post_init__(self):
        if self.J < 1 or not 0 <= self.j < self.J:
            raise ValueError(f"need J >= 1 and 0 <= j < J, got J={self.J}, j={self.j}")


@dataclass(frozen=True)
class PairOverlap:
    m: int
    n: int
    delta: Scalar
    Delta: Scalar


def _comparison_numbers(*values: Scalar) -> Numbers:
    bits = max([256] + [v.precision for v in values if not is_exact(v)])
    return Numbers(exact=all(is_exact(v) for v in values), precision_bits=bits)


def j_threshold(r: Scalar, R: Scalar) -> Scalar:
    """Lower bound that ``|alpha|**J`` has to reach."""
    return 2 * R * (1 + 2 / r) / r + 1


def choose_J(r: Scalar, R: Scalar, alpha: Scalar) -> int:
    """Smallest ``J >= 1`` with ``|alpha|**J >= 2R(1 + 2/r)/r + 1``."""
    if not 0 < r <= R:
        raise ValueError(f"need 0 < r <= R, got r={r}, R={R}")
    if abs(alpha) <= 1:
        raise ValueError("choose_J needs |alpha| > 1")
    numbers = _comparison_numbers(r, R, alpha)
    with numbers.active():
        threshold = j_threshold(r, R)
        magnitude = abs(alpha)
        J, power = 1, magnitude
        while power < threshold:
            J += 1
            power *= magnitude
    return J


def j_certificate(r: Scalar, R: Scalar, beta: Scalar) -> tuple[Scalar, Scalar, bool]:
    """The inequality ``(1 + 2/r) / (r (|beta| - 1)) <= 1 / (2R)`` that fixes J."""
    numbers = _comparison_numbers(r, R, beta)
    with numbers.active():
        lhs = (1 + 2 / r) / (r * (abs(beta) - 1))
        rhs = 1 / (2 * R)
    return lhs, rhs, bool(lhs <= rhs)


def choose_residue(psi: PsiSpec, J: int, budget_N: int) -> int:
    """Residue class ``j`` maximising ``sum_{n<=budget_N} psi(nJ + j)``; ties go to the smaller j."""
    if budget_N < J:
        raise ValueError(f"residue budget {budget_N} is smaller than J={J}")
    best_j, best_sum = 0, None
    numbers = Numbers(exact=psi.exact, precision_bits=256)
    with numbers.active():
        for j in range(J):
            total = mpq(0)
            for n in range(1, budget_N + 1):
                total += psi(n * J + j)
            if best_sum is None or total > best_sum:
                best_j, best_sum = j, total
    if not best_sum:
        raise DegeneratePsiError(f"psi vanishes on every residue class mod {J} up to n={budget_N}")
    return best_j


def divergence_setup(cfg: ExperimentConfig, J: int | None = None, j: int | None = None) -> DivergenceSetup:
    """J from the radius threshold, j from the residue sums, ``beta = alpha**J``."""
    if J is None:
        J = choose_J(cfg.delone.r, cfg.delone.R, cfg.alpha)
    if j is None:
        j = choose_residue(cfg.psi, J, max(cfg.effective_residue_budget, J))
    return DivergenceSetup(J=J, j=j, beta=cfg.alpha_pow(J))


def _window(lo: Scalar, hi: Scalar, scale: Scalar, pad: Scalar) -> tuple[Scalar, Scalar]:
    u, v = lo * scale, hi * scale
    if u > v:
        u, v = v, u
    return u - pad, v + pad


def _balls(centers_scaled, scale: Scalar, radius: Scalar, a: Scalar, b: Scalar) -> IntervalUnion:
    pieces = []
    rho = radius / abs(scale)
    for y in centers_scaled:
        c = y / scale
        lo, hi = max(c - rho, a), min(c + rho, b)
        if lo < hi:
            pieces.append((lo, hi))
    return normalize(pieces)


def index_set(cfg: ExperimentConfig, n: int, budget: int | None = -1) -> range:
    """Indices ``i`` with ``B(y_i / alpha**n, psi(n) / alpha**n)`` meeting ``[a, b)``.

    The range is lazy, so ``budget=None`` is safe when only its length is needed.
    """
    with cfg.numbers.active():
        scale = cfg.alpha_pow(n)
        lo, hi = _window(cfg.a, cfg.b, scale, cfg.psi(n))
        return window_indices(cfg.delone, lo, hi, cfg.point_budget if budget == -1 else budget)


def build_A_n(cfg: ExperimentConfig, n: int) -> IntervalUnion:
    """``{x in [a, b) : |alpha**n x - y| <= psi(n) for some y in Y}`` by enumeration."""
    if not 1 <= n <= cfg.N_max:
        raise ValueError(f"n={n} outside [1, N_max={cfg.N_max}]")
    psi_n = cfg.psi(n)
    if not psi_n:
        return EMPTY
    with cfg.numbers.active():
        scale = cfg.alpha_pow(n)
        lo, hi = _window(cfg.a, cfg.b, scale, psi_n)
        points = points_in_window(cfg.delone, lo, hi, cfg.point_budget)
        return _balls(points, scale, psi_n, cfg.a, cfg.b)


def periodic_A_n(cfg: ExperimentConfig, n: int) -> PeriodicUnion | None:
    """``A_n`` before clipping, as a periodic union; lattice configurations only."""
    dset = cfg.delone
    if not isinstance(dset, IntegerLattice):
        return None
    with cfg.numbers.active():
        scale = cfg.alpha_pow(n)
        return PeriodicUnion.from_balls(
            [dset.offset / scale], cfg.psi(n) / abs(scale), dset.scale / abs(scale)
        )


def pruning_slack(numbers: Numbers, y: Scalar) -> Scalar:
    return numbers.tolerance * max(mpq(1), abs(y))


def y_n_member(
    setup: DivergenceSetup,
    dset: DeloneSet,
    n: int,
    y: Scalar,
    numbers: Numbers | None = None,
    levels: int | None = None,
) -> bool:
    """Whether ``y`` survives the pruning that defines ``Y^(n)``.

    ``y`` is removed when ``|y - beta**k * y''| <= 1`` for some ``y''`` in Y
    and some ``1 <= k <= n - 1``. ``levels`` caps k (defaults to n - 1).
    In big-float mode the unit radius is widened by the comparison slack,
    so survivors are separated by more than 1 with certainty.
    """
    numbers = numbers or Numbers()
    top = n - 1 if levels is None else min(levels, n - 1)
    if top < 1:
        return True
    with numbers.active():
        reach = 1 + pruning_slack(numbers, y)
        for k in range(1, top + 1):
            scale = _cached_pow(setup.beta, k, numbers)
            lo, hi = _window(y - reach, y + reach, 1 / scale, mpq(0))
            for k2 in window_indices(dset, lo, hi):
                if abs(y - scale * dset.point(k2)) <= reach:
                    return False
    return True


def pruned_points(
    cfg: ExperimentConfig, setup: DivergenceSetup, n: int, lo: Scalar, hi: Scalar
) -> list[Scalar]:
    """Points of ``Y^(n)`` in ``[lo, hi]`` (all of Y there when pruning is off).

    Sieves the window: for each level k the few points of ``beta**k Y`` near
    the window knock out their unit neighbourhoods, instead of querying Y
    once per candidate as :func:`y_n_member` does.
    """
    points = points_in_window(cfg.delone, lo, hi, cfg.point_budget)
    if not cfg.pruning or n < 2 or not points:
        return points
    numbers = cfg.numbers
    removed = [False] * len(points)
    with numbers.active():
        reach = 1 + pruning_slack(numbers, max(abs(lo), abs(hi)))
        for k in range(1, n):
            scale = _cached_pow(setup.beta, k, numbers)
            u, v = _window(lo - reach, hi + reach, 1 / scale, mpq(0))
            for k2 in window_indices(cfg.delone, u, v, cfg.point_budget):
                z = scale * cfg.delone.point(k2)
                first = bisect.bisect_left(points, z - reach)
                last = bisect.bisect_right(points, z + reach)
                for i in range(first, last):
                    if abs(points[i] - z) <= 1 + pruning_slack(numbers, points[i]):
                        removed[i] = True
    return [y for y, gone in zip(points, removed) if not gone]


def a_prime_scale(cfg: ExperimentConfig, setup: DivergenceSetup, n: int) -> Scalar:
    """``alpha**j * beta**n``."""
    return cfg.alpha_pow(setup.j + n * setup.J)


def psi_index(setup: DivergenceSetup, n: int) -> int:
    return n * setup.J + setup.j


def _check_prime_index(cfg: ExperimentConfig, setup: DivergenceSetup, n: int):
    if n < 1 or psi_index(setup, n) > cfg.N_max:
        raise ValueError(f"A'_{n} needs psi({psi_index(setup, n)}) beyond N_max={cfg.N_max}")


def build_A_prime_n(cfg: ExperimentConfig, setup: DivergenceSetup, n: int) -> IntervalUnion:
    """``{x in [a, b) : |alpha**j beta**n x - y| <= psi(nJ + j) for some y in Y^(n)}``."""
    _check_prime_index(cfg, setup, n)
    psi_n = cfg.psi(psi_index(setup, n))
    if not psi_n:
        return EMPTY
    with cfg.numbers.active():
        scale = a_prime_scale(cfg, setup, n)
        lo, hi = _window(cfg.a, cfg.b, scale, psi_n)
        points = pruned_points(cfg, setup, n, lo, hi)
        return _balls(points, scale, psi_n, cfg.a, cfg.b)


def periodic_A_prime_n(cfg: ExperimentConfig, setup: DivergenceSetup, n: int) -> PeriodicUnion | None:
    """Periodic form of ``A'_n``.

    Available for ``Y = sZ`` with integral ``beta``: every ``beta**k Y`` then
    lies inside ``beta Y``, so ``Y^(n)`` for ``n >= 2`` is ``Y`` minus the unit
    neighbourhood of ``s*beta*Z`` and repeats with period ``s*|beta|``.
    Without pruning any lattice offset works.
    """
    _check_prime_index(cfg, setup, n)
    dset = cfg.delone
    if not isinstance(dset, IntegerLattice):
        return None
    pruned = cfg.pruning and n >= 2
    if pruned:
        beta = setup.beta
        if dset.offset != 0 or not is_exact(beta) or beta.denominator != 1 or abs(beta) < 2:
            return None
    psi_n = cfg.psi(psi_index(setup, n))
    with cfg.numbers.active():
        scale = a_prime_scale(cfg, setup, n)
        if pruned:
            y_period = dset.scale * abs(setup.beta)
            reps = [dset.point(k) for k in range(int(abs(setup.beta)))]
            reps = [y for y in reps if y_n_member(setup, dset, n, y, cfg.numbers)]
        else:
            y_period = dset.scale
            reps = [dset.offset]
        return PeriodicUnion.from_balls(
            [y / scale for y in reps], psi_n / abs(scale), y_period / abs(scale)
        )


def delta_Delta(cfg: ExperimentConfig, setup: DivergenceSetup, m: int, n: int) -> PairOverlap:
    """``min`` and ``max`` of ``2 psi(kJ + j) / |alpha**j beta**k|`` over ``k in {m, n}``."""
    if m == n:
        raise InvalidPairError(f"delta_Delta needs m != n, got m = n = {m}")
    with cfg.numbers.active():
        widths = [
            2 * cfg.psi(psi_index(setup, k)) / abs(a_prime_scale(cfg, setup, k)) for k in (m, n)
        ]
    return PairOverlap(m=min(m, n), n=max(m, n), delta=min(widths), Delta=max(widths))
