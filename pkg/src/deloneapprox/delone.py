"""One-dimensional Delone sets with certified packing and covering radii.

Every variant is a two-sided, strictly increasing sequence ``y_k`` (k in Z)
that can be evaluated at any index without global state, so window queries
are O(1) to locate and linear in the number of points returned.
"""
from __future__ import annotations

import hashlib
from abc import ABC, abstractmethod
from dataclasses import dataclass, field

import gmpy2
from gmpy2 import mpq

from .errors import BudgetExceededError, ConfigError, InsufficientWindowError
from .numerics import Numbers, Scalar, ceil, floor, is_exact, operand_context

DEFAULT_POINT_BUDGET = 2_000_000


class DeloneSet(ABC):
    """A generable Delone set ``Y``; ``r`` and ``R`` are certified analytically."""

    variant: str

    @property
    @abstractmethod
    def r(self) -> Scalar: ...

    @property
    @abstractmethod
    def R(self) -> Scalar: ...

    @abstractmethod
    def point(self, k: int) -> Scalar:
        """The ``k``-th point; ``point(0)`` is the anchor and indices increase with value."""

    @abstractmethod
    def _guess_index(self, x: Scalar) -> int: ...

    @abstractmethod
    def describe(self) -> dict: ...

    @property
    def exact(self) -> bool:
        return True

    def first_index_at_least(self, x: Scalar) -> int:
        k = self._guess_index(x)
        while self.point(k - 1) >= x:
            k -= 1
        while self.point(k) < x:
            k += 1
        return k

    def last_index_at_most(self, x: Scalar) -> int:
        k = self.first_index_at_least(x)
        return k if self.point(k) == x else k - 1


@dataclass(frozen=True)
class IntegerLattice(DeloneSet):
    """``scale * Z + offset``."""

    scale: Scalar = mpq(1)
    offset: Scalar = mpq(0)
    variant: str = field(default="integer-lattice", init=False)

    def __post_init__(self):
        if self.scale <= 0:
            raise ConfigError("integer-lattice scale must be positive")

    @property
    def r(self):
        with operand_context(self.scale):
            return self.scale / 2

    @property
    def R(self):
        return self.r

    @property
    def exact(self):
        return is_exact(self.scale) and is_exact(self.offset)

    def point(self, k):
        with operand_context(self.scale, self.offset):
            return self.scale * k + self.offset

    def _guess_index(self, x):
        return ceil((x - self.offset) / self.scale)

    def describe(self):
        return {"variant": self.variant, "scale": str(self.scale), "offset": str(self.offset)}


@dataclass(frozen=True)
class BeattySet(DeloneSet):
    """``{floor(k * theta) : k in Z}`` for ``theta > 1``.

    Gaps take the two values ``floor(theta)`` and ``floor(theta) + 1``.
    """

    theta: Scalar
    numbers: Numbers = Numbers()
    variant: str = field(default="beatty", init=False)

    def __post_init__(self):
        if self.theta <= 1:
            raise ConfigError("beatty theta must exceed 1")

    @property
    def r(self):
        return mpq(floor(self.theta), 2)

    @property
    def R(self):
        return mpq(floor(self.theta) + 1, 2)

    def point(self, k):
        with self.numbers.active():
            return mpq(floor(k * self.theta))

    def _guess_index(self, x):
        with self.numbers.active():
            return ceil(ceil(x) / self.theta)

    def describe(self):
        return {"variant": self.variant, "theta": str(self.theta)}


def _floor_times_inverse_golden(m: int) -> int:
    """``floor(m / phi)`` computed with integers only."""
    if m == 0:
        return 0
    root = int(gmpy2.isqrt(5 * m * m))
    floor_m_sqrt5 = root if m > 0 else -root - 1
    return (floor_m_sqrt5 - m) // 2


@dataclass(frozen=True)
class FibonacciChain(DeloneSet):
    """The Fibonacci chain with gaps ``1`` and ``phi``.

    Gap ``k`` is long exactly when the characteristic Sturmian word of slope
    ``1/phi`` has a one at position ``k``; that gives the closed form
    ``y_k = k + (phi - 1) * floor((k + 1) / phi)`` with ``y_0 = 0``. The
    floor is evaluated in integer arithmetic, so only the final
    combination ``(k - c) + c * phi`` is rounded.
    """

    numbers: Numbers = Numbers(exact=False)
    variant: str = field(default="fibonacci-chain", init=False)

    def __post_init__(self):
        if self.numbers.exact:
            raise ConfigError("fibonacci-chain needs precision mode 'big-float'")
        object.__setattr__(self, "_phi", self.numbers.phi())

    @property
    def phi(self):
        return self._phi

    @property
    def r(self):
        return mpq(1, 2)

    @property
    def R(self):
        with self.numbers.active():
            return self._phi / 2

    @property
    def exact(self):
        return False

    def long_gap_count(self, k: int) -> int:
        """Number of long gaps among ``g_0, ..., g_{k-1}`` (negative for k < 0)."""
        return _floor_times_inverse_golden(k + 1)

    def point(self, k):
        c = self.long_gap_count(k)
        with self.numbers.active():
            return (k - c) + c * self._phi

    def _guess_index(self, x):
        with self.numbers.active():
            mean_gap = 1 + (self._phi - 1) ** 2
            return ceil(x / mean_gap)

    def describe(self):
        return {"variant": self.variant}


@dataclass(frozen=True)
class JitteredLattice(DeloneSet):
    """``k + eps * u_k`` with ``u_k`` in ``[-1, 1)`` hashed from ``(seed, k)``."""

    eps: Scalar
    seed: int = 0
    variant: str = field(default="jittered-lattice", init=False)

    def __post_init__(self):
        if not 0 <= self.eps < mpq(1, 2):
            raise ConfigError("jittered-lattice eps must lie in [0, 1/2)")

    @property
    def r(self):
        with operand_context(self.eps):
            return (1 - 2 * self.eps) / 2

    @property
    def R(self):
        with operand_context(self.eps):
            return (1 + 2 * self.eps) / 2

    @property
    def exact(self):
        return is_exact(self.eps)

    def jitter(self, k: int) -> mpq:
        digest = hashlib.blake2b(f"{self.seed}:{k}".encode(), digest_size=8).digest()
        return mpq(2 * int.from_bytes(digest, "big"), 2**64) - 1

    def point(self, k):
        if not self.eps:
            return mpq(k)
        with operand_context(self.eps):
            return k + self.eps * self.jitter(k)

    def _guess_index(self, x):
        return ceil(x)

    def describe(self):
        return {"variant": self.variant, "eps": str(self.eps), "seed": self.seed}


DeloneSetSpec = DeloneSet


def window_indices(dset: DeloneSet, lo: Scalar, hi: Scalar, budget: int | None = None) -> range:
    """Index range of the points of ``dset`` in ``[lo, hi]``."""
    if lo > hi:
        raise ValueError(f"empty window [{lo}, {hi}]")
    first = dset.first_index_at_least(lo)
    last = dset.last_index_at_most(hi)
    count = max(last - first + 1, 0)
    if budget is not None and count > budget:
        raise BudgetExceededError(count, budget)
    return range(first, last + 1)


def points_in_window(
    dset: DeloneSet, lo: Scalar, hi: Scalar, budget: int | None = DEFAULT_POINT_BUDGET
) -> list[Scalar]:
    """All points of ``dset`` in the closed window ``[lo, hi]``, ascending."""
    return [dset.point(k) for k in window_indices(dset, lo, hi, budget)]


def indexed_points_in_window(
    dset: DeloneSet, lo: Scalar, hi: Scalar, budget: int | None = DEFAULT_POINT_BUDGET
) -> list[tuple[int, Scalar]]:
    return [(k, dset.point(k)) for k in window_indices(dset, lo, hi, budget)]


def nearest_point(dset: DeloneSet, x: Scalar) -> tuple[Scalar, Scalar]:
    """Closest point of ``dset`` to ``x`` and its distance; ties go to the smaller point."""
    k = dset.first_index_at_least(x)
    above, below = dset.point(k), dset.point(k - 1)
    d_above, d_below = above - x, x - below
    if d_above < d_below:
        return above, d_above
    return below, d_below


def estimate_radii(
    dset: DeloneSet, lo: Scalar, hi: Scalar, budget: int | None = DEFAULT_POINT_BUDGET
) -> tuple[Scalar, Scalar]:
    """Half the smallest and largest gap observed in ``[lo, hi]``."""
    pts = points_in_window(dset, lo, hi, budget)
    if len(pts) < 2:
        raise InsufficientWindowError(f"window [{lo}, {hi}] holds {len(pts)} point(s), need 2")
    gaps = [b - a for a, b in zip(pts, pts[1:])]
    return min(gaps) / 2, max(gaps) / 2


def ball_count(dset: DeloneSet, x: Scalar, radius: Scalar = mpq(1)) -> int:
    return len(window_indices(dset, x - radius, x + radius))


def build_delone(spec: dict, numbers: Numbers) -> DeloneSet:
    """Instantiate a Delone set from its config mapping."""
    if not isinstance(spec, dict) or "variant" not in spec:
        raise ConfigError("delone section needs a 'variant'")
    variant = spec["variant"]
    try:
        if variant == "integer-lattice":
            return IntegerLattice(
                scale=numbers.scalar(spec.get("scale", "1")),
                offset=numbers.scalar(spec.get("offset", "0")),
            )
        if variant == "beatty":
            return BeattySet(theta=numbers.scalar(spec.get("theta", "phi")), numbers=numbers)
        if variant == "fibonacci-chain":
            return FibonacciChain(numbers=numbers)
        if variant == "jittered-lattice":
            return JitteredLattice(eps=numbers.scalar(spec.get("eps", "0")), seed=int(spec.get("seed", 0)))
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"bad delone parameters: {exc}") from exc
    raise ConfigError(f"unknown delone variant {variant!r}")
