"""Approximation functions psi: N -> [0, inf) and their partial sums.

No monotonicity is assumed anywhere. Whether a family converges or diverges
is analytic metadata attached to the variant, never inferred from a
truncated sum.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import gmpy2
from gmpy2 import mpfr, mpq

from .errors import ConfigError
from .numerics import Numbers, Scalar, is_exact

CONVERGENT = "convergent"
DIVERGENT = "divergent"


class PsiSpec:
    """Base class; subclasses implement :meth:`value` for ``n >= 1``."""

    variant: str

    def __call__(self, n: int) -> Scalar:
        if n < 1:
            raise ValueError(f"psi is defined for n >= 1, got {n}")
        return self.value(n)

    def value(self, n: int) -> Scalar:
        raise NotImplementedError

    @property
    def regime(self) -> str:
        raise NotImplementedError

    @property
    def exact(self) -> bool:
        return True

    def describe(self) -> dict:
        raise NotImplementedError


def _check_nonneg(name: str, value: Scalar) -> Scalar:
    if value < 0:
        raise ConfigError(f"psi parameter {name} must be non-negative, got {value}")
    return value


@dataclass(frozen=True)
class Constant(PsiSpec):
    c: Scalar
    variant = "constant"

    def __post_init__(self):
        _check_nonneg("c", self.c)

    def value(self, n):
        return self.c

    @property
    def regime(self):
        return DIVERGENT if self.c > 0 else CONVERGENT

    @property
    def exact(self):
        return is_exact(self.c)

    def describe(self):
        return {"variant": self.variant, "c": str(self.c)}


@dataclass(frozen=True)
class Power(PsiSpec):
    """``c / n**s``."""

    c: Scalar
    s: Scalar
    numbers: Numbers = Numbers()
    variant = "power"

    def __post_init__(self):
        _check_nonneg("c", self.c)
        if self.s <= 0:
            raise ConfigError("power exponent s must be positive")

    @property
    def _integral_exponent(self) -> bool:
        return is_exact(self.s) and self.s.denominator == 1

    def value(self, n):
        if self._integral_exponent:
            return self.c / mpq(n) ** int(self.s)
        with self.numbers.active():
            return self.c / mpfr(n) ** self.s

    @property
    def regime(self):
        return DIVERGENT if self.c > 0 and self.s <= 1 else CONVERGENT

    @property
    def exact(self):
        return is_exact(self.c) and self._integral_exponent

    def describe(self):
        return {"variant": self.variant, "c": str(self.c), "s": str(self.s)}


@dataclass(frozen=True)
class LogPower(PsiSpec):
    """``c / (n * log(n + 1)**s)``; always a big float."""

    c: Scalar
    s: Scalar
    numbers: Numbers = Numbers(exact=False)
    variant = "log-power"

    def __post_init__(self):
        _check_nonneg("c", self.c)
        if self.s <= 0:
            raise ConfigError("log-power exponent s must be positive")

    def value(self, n):
        if not self.c:
            return mpq(0)
        with self.numbers.active():
            return self.c / (n * gmpy2.log(mpfr(n + 1)) ** self.s)

    @property
    def regime(self):
        return DIVERGENT if self.c > 0 and self.s <= 1 else CONVERGENT

    @property
    def exact(self):
        return not self.c

    def describe(self):
        return {"variant": self.variant, "c": str(self.c), "s": str(self.s)}


@dataclass(frozen=True)
class Geometric(PsiSpec):
    """``c * q**n`` with ``0 < q < 1``."""

    c: Scalar
    q: Scalar
    variant = "geometric"

    def __post_init__(self):
        _check_nonneg("c", self.c)
        if not 0 < self.q < 1:
            raise ConfigError("geometric ratio q must lie in (0, 1)")

    def value(self, n):
        return self.c * self.q**n

    @property
    def regime(self):
        return CONVERGENT

    @property
    def exact(self):
        return is_exact(self.c) and is_exact(self.q)

    def describe(self):
        return {"variant": self.variant, "c": str(self.c), "q": str(self.q)}


@dataclass(frozen=True)
class Table(PsiSpec):
    """``psi(n) = values[n - 1]`` and zero past the end of the table."""

    values: tuple
    variant = "table"

    def __post_init__(self):
        for i, v in enumerate(self.values, start=1):
            _check_nonneg(f"values[{i}]", v)

    def value(self, n):
        return self.values[n - 1] if n <= len(self.values) else mpq(0)

    @property
    def regime(self):
        return CONVERGENT

    @property
    def exact(self):
        return all(is_exact(v) for v in self.values)

    def describe(self):
        return {"variant": self.variant, "values": [str(v) for v in self.values]}


@dataclass(frozen=True)
class ResidueMasked(PsiSpec):
    """``inner(n)`` when ``n % modulus == residue``, else zero."""

    inner: PsiSpec
    modulus: int
    residue: int
    variant = "residue-masked"

    def __post_init__(self):
        if self.modulus < 1 or not 0 <= self.residue < self.modulus:
            raise ConfigError("residue-masked needs modulus >= 1 and 0 <= residue < modulus")

    def value(self, n):
        return self.inner(n) if n % self.modulus == self.residue else mpq(0)

    @property
    def regime(self):
        return self.inner.regime

    @property
    def exact(self):
        return self.inner.exact

    def describe(self):
        return {
            "variant": self.variant,
            "inner": self.inner.describe(),
            "J": self.modulus,
            "j": self.residue,
        }


def eval_psi(spec: PsiSpec, n: int) -> Scalar:
    return spec(n)


def partial_sum(spec: PsiSpec, N: int, numbers: Numbers | None = None) -> Scalar:
    """``sum(psi(n) for n in 1..N)``; exact whenever every term is rational."""
    if N < 1:
        raise ValueError("partial_sum needs N >= 1")
    numbers = numbers or Numbers(exact=spec.exact, precision_bits=256)
    total = mpq(0)
    with numbers.active():
        for n in range(1, N + 1):
            total += spec(n)
    return total


def psi_table(spec: PsiSpec, N: int) -> list[Scalar]:
    """``[psi(1), ..., psi(N)]`` with a dummy slot 0 so that ``table[n] == psi(n)``."""
    return [mpq(0)] + [spec(n) for n in range(1, N + 1)]


PSI_PARAM_KEYS = {
    "constant": ("c",),
    "power": ("c", "s"),
    "log-power": ("c", "s"),
    "geometric": ("c", "q"),
}


def build_psi(spec: dict, numbers: Numbers) -> PsiSpec:
    """Instantiate a psi family from its config mapping (numbers as strings)."""
    if not isinstance(spec, dict) or "variant" not in spec:
        raise ConfigError("psi section needs a 'variant'")
    variant = spec["variant"]

    def num(key: str, default: str | None = None) -> Scalar:
        if key not in spec and default is None:
            raise ConfigError(f"psi variant {variant!r} needs parameter {key!r}")
        return numbers.scalar(spec.get(key, default))

    if variant == "constant":
        return Constant(num("c"))
    if variant == "power":
        return Power(num("c", "1"), num("s"), numbers)
    if variant == "log-power":
        return LogPower(num("c", "1"), num("s"), numbers)
    if variant == "geometric":
        return Geometric(num("c", "1"), num("q"))
    if variant == "table":
        values: Sequence = spec.get("values")
        if not isinstance(values, list):
            raise ConfigError("table psi needs a list 'values'")
        return Table(tuple(numbers.scalar(v) for v in values))
    if variant == "residue-masked":
        try:
            return ResidueMasked(build_psi(spec["inner"], numbers), int(spec["J"]), int(spec["j"]))
        except KeyError as exc:
            raise ConfigError(f"residue-masked psi needs key {exc}") from exc
    raise ConfigError(f"unknown psi variant {variant!r}")
