"""Arbitrary-precision scalars and exact interval-union geometry on the line.

Scalars are ``gmpy2.mpq`` (exact rationals, always in lowest terms) or
``gmpy2.mpfr`` (big floats). Rational inputs stay rational even inside a
big-float experiment; only genuinely irrational quantities become ``mpfr``.
Every big-float operation must run inside :meth:`Numbers.active` so that the
thread-local MPFR context carries the experiment's precision.
"""
from __future__ import annotations

import contextlib
import math
import re
from dataclasses import dataclass
from decimal import Decimal, localcontext
from fractions import Fraction
from typing import Iterable, Iterator, NamedTuple, Sequence, Union

import gmpy2
from gmpy2 import mpfr, mpq

from .errors import BudgetExceededError, ConfigError, InvalidIntervalError, PrecisionError

Scalar = Union[mpq, mpfr]

GUARD_BITS = 64
DEFAULT_PRECISION_BITS = 128

_RATIONAL_RE = re.compile(r"^[+-]?\d+\s*/\s*\d+$")
_SQRT_RE = re.compile(r"^([+-]?)sqrt\((.+)\)$")


def required_precision(n_max: int, alpha: Scalar) -> int:
    """Bits needed to keep ``alpha**n_max * x`` accurate to 64 guard bits."""
    magnitude = abs(alpha)
    if magnitude <= 1:
        return GUARD_BITS
    with gmpy2.context(gmpy2.get_context(), precision=64):
        log2_alpha = gmpy2.log2(mpfr(magnitude))
    return int(math.ceil(n_max * float(log2_alpha))) + GUARD_BITS


def is_exact(value: Scalar) -> bool:
    return isinstance(value, type(mpq()))


def operand_context(*values: Scalar):
    """A gmpy2 context at least as precise as every big-float operand."""
    bits = max([gmpy2.get_context().precision] + [v.precision for v in values if not is_exact(v)])
    return gmpy2.context(gmpy2.get_context(), precision=bits)


def floor(value: Scalar) -> int:
    return int(math.floor(value))


def ceil(value: Scalar) -> int:
    return int(math.ceil(value))


@dataclass(frozen=True)
class Numbers:
    """Precision policy of one experiment.

    ``exact`` is True when every input is rational; all geometry is then
    carried out in ``mpq`` and no rounding happens anywhere.
    """

    exact: bool = True
    precision_bits: int = DEFAULT_PRECISION_BITS

    def __post_init__(self):
        if self.precision_bits < 2:
            raise ConfigError("precision_bits must be at least 2")

    @contextlib.contextmanager
    def active(self) -> Iterator[None]:
        with gmpy2.context(gmpy2.get_context(), precision=self.precision_bits):
            yield

    @property
    def tolerance(self) -> Scalar:
        """Absolute slack for directed comparisons; zero in exact mode."""
        if self.exact:
            return mpq(0)
        return mpq(1, 2 ** max(self.precision_bits - 8, 0))

    def sum_tolerance(self, terms: int) -> Scalar:
        """Slack for a value accumulated from ``terms`` rounded pieces, e.g. a
        union measure, where each endpoint carries its own rounding error."""
        return self.tolerance * max(1, terms)

    def scalar(self, value) -> Scalar:
        """Convert ``value`` (int, str, Fraction, mpq, mpfr) to a Scalar."""
        if isinstance(value, str):
            return parse_scalar(value, self)
        if isinstance(value, bool):
            raise ConfigError(f"boolean is not a number: {value!r}")
        if isinstance(value, int):
            return mpq(value)
        if isinstance(value, Fraction):
            return mpq(value.numerator, value.denominator)
        if isinstance(value, type(mpq())):
            return value
        if isinstance(value, type(mpfr())):
            if self.exact:
                raise ConfigError("irrational value given to an exact-rational experiment")
            with self.active():
                return mpfr(value, self.precision_bits)
        if isinstance(value, float):
            if not math.isfinite(value):
                raise ConfigError(f"non-finite number: {value!r}")
            return mpq(value)
        raise ConfigError(f"cannot interpret {value!r} as a number")

    def phi(self) -> Scalar:
        if self.exact:
            self._no_irrational("phi")
        with self.active():
            return (1 + gmpy2.sqrt(mpfr(5))) / 2

    def sqrt(self, value: Scalar) -> Scalar:
        value = mpq(value) if is_exact(value) else value
        if is_exact(value) and value >= 0:
            num, den = value.numerator, value.denominator
            rn, rd = gmpy2.isqrt(num), gmpy2.isqrt(den)
            if rn * rn == num and rd * rd == den:
                return mpq(rn, rd)
        if self.exact:
            return self._no_irrational(f"sqrt({value})")
        with self.active():
            return gmpy2.sqrt(mpfr(value))

    @staticmethod
    def _no_irrational(what: str):
        raise ConfigError(f"{what} is irrational; use precision mode 'big-float'")

    def pow(self, alpha: Scalar, n: int) -> Scalar:
        """``alpha**n``; exact for rational alpha, correctly rounded otherwise."""
        if n < 0:
            raise ValueError("pow needs a non-negative exponent")
        if is_exact(alpha):
            return alpha**n
        magnitude = abs(alpha)
        if magnitude > 1 and n > 0:
            with gmpy2.context(gmpy2.get_context(), precision=64):
                needed = n * float(gmpy2.log2(mpfr(magnitude)))
            budget = self.precision_bits - GUARD_BITS
            if needed > budget:
                raise PrecisionError(
                    f"alpha**{n} needs {math.ceil(needed)} bits above the guard bits, "
                    f"only {budget} available; raise --precision-bits to at least "
                    f"{math.ceil(needed) + GUARD_BITS}"
                )
        with self.active():
            return alpha**n

    def within(self, distance: Scalar, bound: Scalar, scale: Scalar = 1) -> tuple[bool, bool]:
        """Directed test ``distance <= bound``.

        Returns ``(satisfied, borderline)``. In big-float mode a distance that
        exceeds ``bound`` by no more than ``tolerance * max(1, |scale|)`` still
        counts, and is flagged as borderline.
        """
        if distance <= bound:
            slack = self.tolerance * max(mpq(1), abs(scale))
            return True, bool(slack) and distance >= bound - slack
        if self.exact:
            return False, False
        slack = self.tolerance * max(mpq(1), abs(scale))
        return distance <= bound + slack, distance <= bound + slack


def parse_scalar(text: str, numbers: Numbers | None = None) -> Scalar:
    """Parse ``"3"``, ``"-0.25"``, ``"p/q"``, ``"phi"`` or ``"sqrt(p/q)"``."""
    numbers = numbers or Numbers()
    token = text.strip().replace("_", "")
    if not token:
        raise ConfigError("empty number string")
    lowered = token.lower()
    sign = -1 if lowered.startswith("-") else 1
    bare = lowered.lstrip("+-")
    match = _SQRT_RE.match(lowered)
    if bare in ("phi", "golden") or match:
        if match:
            value, sign = numbers.sqrt(parse_scalar(match.group(2), numbers)), -1 if match.group(1) == "-" else 1
        else:
            value = numbers.phi()
        with numbers.active():
            return value if sign > 0 else -value
    try:
        if _RATIONAL_RE.match(token):
            num, den = (part.strip() for part in token.split("/"))
            if int(den) == 0:
                raise ConfigError(f"zero denominator in {text!r}")
            return mpq(int(num), int(den))
        return mpq(Fraction(Decimal(token)))
    except (ArithmeticError, ValueError) as exc:
        raise ConfigError(f"not a number: {text!r}") from exc


def needs_big_float(text: str) -> bool:
    """True if ``text`` names an irrational constant."""
    lowered = str(text).strip().lower().lstrip("+-")
    if lowered in ("phi", "golden"):
        return True
    match = _SQRT_RE.match(lowered)
    if match:
        try:
            value = parse_scalar(match.group(2))
        except ConfigError:
            return True
        rn, rd = gmpy2.isqrt(value.numerator), gmpy2.isqrt(value.denominator)
        return not (value >= 0 and rn * rn == value.numerator and rd * rd == value.denominator)
    return False


def exact_string(value: Scalar) -> str:
    """``"p/q"`` for rationals (``"p"`` when integral); empty for big floats."""
    if not is_exact(value):
        return ""
    if value.denominator == 1:
        return str(value.numerator)
    return f"{value.numerator}/{value.denominator}"


def decimal_string(value: Scalar, digits: int = 30) -> str:
    """Deterministic decimal rendering with ``digits`` significant digits."""
    exact = value if is_exact(value) else mpq(value)
    if exact == 0:
        return "0"
    with localcontext() as ctx:
        ctx.prec = digits
        result = Decimal(int(exact.numerator)) / Decimal(int(exact.denominator))
        return format(result.normalize(), "f") if abs(result.adjusted()) < 40 else str(result)


# ---------------------------------------------------------------------------
# interval unions
# ---------------------------------------------------------------------------


class Interval(NamedTuple):
    lo: Scalar
    hi: Scalar

    @property
    def length(self) -> Scalar:
        return self.hi - self.lo


@dataclass(frozen=True)
class IntervalUnion:
    """Finite union of closed intervals, kept sorted, disjoint and non-touching."""

    intervals: tuple[Interval, ...] = ()

    def __iter__(self) -> Iterator[Interval]:
        return iter(self.intervals)

    def __len__(self) -> int:
        return len(self.intervals)

    def __bool__(self) -> bool:
        return bool(self.intervals)

    def measure(self) -> Scalar:
        return measure(self)

    def intersect(self, other: "IntervalUnion") -> "IntervalUnion":
        return intersect(self, other)

    def union(self, other: "IntervalUnion") -> "IntervalUnion":
        return normalize([*self.intervals, *other.intervals])

    def clip(self, lo: Scalar, hi: Scalar) -> "IntervalUnion":
        return intersect(self, IntervalUnion((Interval(lo, hi),)) if lo < hi else IntervalUnion())

    def complement_in(self, lo: Scalar, hi: Scalar) -> "IntervalUnion":
        """Closure of ``[lo, hi]`` minus this union."""
        pieces = []
        cursor = lo
        for iv in self.intervals:
            if iv.hi <= cursor:
                continue
            if iv.lo >= hi:
                break
            if iv.lo > cursor:
                pieces.append(Interval(cursor, iv.lo))
            cursor = max(cursor, iv.hi)
        if cursor < hi:
            pieces.append(Interval(cursor, hi))
        return IntervalUnion(tuple(pieces))

    def as_pairs(self) -> list[tuple[Scalar, Scalar]]:
        return [(iv.lo, iv.hi) for iv in self.intervals]


EMPTY = IntervalUnion()


def normalize(intervals: Iterable[Sequence[Scalar]]) -> IntervalUnion:
    """Sort, merge overlapping or touching intervals and drop zero-length ones."""
    cleaned = []
    for item in intervals:
        lo, hi = item
        if lo > hi:
            raise InvalidIntervalError(f"interval has lo > hi: [{lo}, {hi}]")
        if lo < hi:
            cleaned.append((lo, hi))
    cleaned.sort(key=lambda iv: iv[0])
    merged: list[Interval] = []
    for lo, hi in cleaned:
        if merged and lo <= merged[-1].hi:
            if hi > merged[-1].hi:
                merged[-1] = Interval(merged[-1].lo, hi)
        else:
            merged.append(Interval(lo, hi))
    return IntervalUnion(tuple(merged))


def measure(u: IntervalUnion) -> Scalar:
    total = mpq(0)
    if not u.intervals:
        return total
    with operand_context(u.intervals[0].lo, u.intervals[-1].hi):
        for iv in u.intervals:
            total += iv.hi - iv.lo
    return total


def intersect(u: IntervalUnion, v: IntervalUnion) -> IntervalUnion:
    out: list[Interval] = []
    a, b = u.intervals, v.intervals
    i = k = 0
    while i < len(a) and k < len(b):
        lo = max(a[i].lo, b[k].lo)
        hi = min(a[i].hi, b[k].hi)
        if lo < hi:
            out.append(Interval(lo, hi))
        if a[i].hi < b[k].hi:
            i += 1
        else:
            k += 1
    return IntervalUnion(tuple(out))


# ---------------------------------------------------------------------------
# periodic unions
# ---------------------------------------------------------------------------


def _is_integer_ratio(big: Scalar, small: Scalar, numbers: Numbers | None) -> bool:
    ratio = big / small
    if is_exact(ratio):
        return ratio.denominator == 1
    nearest = round(ratio)
    slack = (numbers.tolerance if numbers else mpq(0)) * max(mpq(1), abs(ratio))
    return abs(ratio - nearest) <= slack


@dataclass(frozen=True)
class PeriodicUnion:
    """The set ``motif + period * Z`` with ``motif`` a union inside ``[0, period]``.

    Measures over arbitrarily long windows cost O(len(motif)), which is what
    lets exact computations reach scales where explicit enumeration of the
    component intervals is out of the question.
    """

    period: Scalar
    motif: IntervalUnion

    @classmethod
    def from_balls(cls, centers: Iterable[Scalar], radius: Scalar, period: Scalar) -> "PeriodicUnion":
        if period <= 0:
            raise ValueError("period must be positive")
        if 2 * radius >= period:
            return cls(period, IntervalUnion((Interval(mpq(0), period),)))
        pieces = []
        for c in centers:
            lo = c - radius
            lo = lo - floor(lo / period) * period
            hi = lo + 2 * radius
            if hi <= period:
                pieces.append((lo, hi))
            else:
                pieces.append((lo, period))
                pieces.append((mpq(0), hi - period))
        return cls(period, normalize(pieces))

    def _shifted_clip(self, shift: Scalar, lo: Scalar, hi: Scalar) -> list[Interval]:
        out = []
        for iv in self.motif:
            a, b = max(iv.lo + shift, lo), min(iv.hi + shift, hi)
            if a < b:
                out.append(Interval(a, b))
        return out

    def _decompose(self, lo: Scalar, hi: Scalar) -> tuple[list[Interval], int]:
        """Split ``self ∩ [lo, hi]`` into explicit edge pieces and whole periods.

        Returns ``(edges, k)``: the set equals the edge pieces plus ``k``
        complete translated copies of the motif.
        """
        if lo >= hi:
            return [], 0
        p = self.period
        k_lo, k_hi = ceil(lo / p), floor(hi / p)
        if k_lo > k_hi:
            base = floor(lo / p)
            return self._shifted_clip(base * p, lo, hi), 0
        edges = self._shifted_clip((k_lo - 1) * p, lo, k_lo * p)
        edges += self._shifted_clip(k_hi * p, k_hi * p, hi)
        return edges, k_hi - k_lo

    def measure_on(self, lo: Scalar, hi: Scalar) -> Scalar:
        edges, whole = self._decompose(lo, hi)
        total = mpq(0)
        for iv in edges:
            total += iv.hi - iv.lo
        return total + whole * self.motif.measure() if whole else total

    def restrict(self, lo: Scalar, hi: Scalar, budget: int | None = None) -> IntervalUnion:
        """Explicit interval union of ``self ∩ [lo, hi]``."""
        if lo >= hi:
            return EMPTY
        p = self.period
        k0, k1 = floor(lo / p), floor(hi / p)
        needed = (k1 - k0 + 1) * max(len(self.motif), 1)
        if budget is not None and needed > budget:
            raise BudgetExceededError(needed, budget, "periodic restriction")
        pieces = []
        for k in range(k0, k1 + 1):
            pieces.extend(self._shifted_clip(k * p, lo, hi))
        return normalize(pieces)

    def intersection_measure(
        self, other: "PeriodicUnion", lo: Scalar, hi: Scalar, numbers: Numbers | None = None
    ) -> Scalar:
        """``measure(self ∩ other ∩ [lo, hi])`` for commensurate periods.

        One period must be an integer multiple of the other.
        """
        coarse, fine = (self, other) if self.period >= other.period else (other, self)
        if not _is_integer_ratio(coarse.period, fine.period, numbers):
            raise ValueError("periods are not commensurate")
        edges, whole = coarse._decompose(lo, hi)
        total = mpq(0)
        for iv in edges:
            total += fine.measure_on(iv.lo, iv.hi)
        if whole:
            per_period = mpq(0)
            for iv in coarse.motif:
                per_period += fine.measure_on(iv.lo, iv.hi)
            total += whole * per_period
        return total
