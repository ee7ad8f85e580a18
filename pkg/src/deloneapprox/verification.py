"""Property suites behind the ``verify`` subcommand.

Each check returns a :class:`CheckResult`; a suite is a list of them. A
check either passes, fails (an invariant violation) or is skipped because
it does not apply to the configuration.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, field

from gmpy2 import mpq

from .construction import (
    DivergenceSetup,
    ExperimentConfig,
    build_A_n,
    build_A_prime_n,
    choose_J,
    index_set,
    j_certificate,
    j_threshold,
    periodic_A_n,
    periodic_A_prime_n,
    psi_index,
    y_n_member,
)
from .delone import ball_count, estimate_radii, nearest_point, points_in_window, window_indices
from .estimators import check_Yn_lower_bound
from .montecarlo import counter_bits
from .numerics import Scalar, decimal_string, floor

PASS, FAIL, SKIP = "pass", "fail", "skip"


@dataclass
class CheckResult:
    name: str
    status: str
    detail: str = ""
    seconds: float = 0.0
    data: dict = field(default_factory=dict, repr=False)

    @property
    def ok(self) -> bool:
        return self.status != FAIL


@dataclass(frozen=True)
class VerifyOptions:
    window: Scalar = mpq(600)
    pair_max_n: int = 6
    lower_bound_max_n: int = 8
    sandwich_max_n: int = 20
    centers: int = 256
    prime_max_n: int = 3

    @classmethod
    def from_runs(cls, runs: dict, numbers) -> "VerifyOptions":
        kw = {}
        if "window" in runs:
            kw["window"] = numbers.scalar(runs["window"])
        for key in ("pair_max_n", "lower_bound_max_n", "sandwich_max_n", "centers", "prime_max_n"):
            if key in runs:
                kw[key] = int(runs[key])
        return cls(**kw)


def _fmt(value: Scalar) -> str:
    return decimal_string(value, 12)


def _centers(cfg: ExperimentConfig, count: int, lo: Scalar, hi: Scalar) -> list[Scalar]:
    """Deterministic pseudo-random test points of ``[lo, hi)``."""
    return [lo + (hi - lo) * mpq(counter_bits(cfg.seed, i, 64), 2**64) for i in range(count)]


def check_radii(cfg: ExperimentConfig, opts: VerifyOptions) -> CheckResult:
    dset = cfg.delone
    with cfg.numbers.active():
        r_obs, R_obs = estimate_radii(dset, -opts.window, opts.window, cfg.point_budget)
        # gaps are differences of points as large as the window
        slack = cfg.numbers.tolerance * max(mpq(1), opts.window)
        ok = r_obs >= dset.r - slack and R_obs <= dset.R + slack
    return CheckResult(
        "radii",
        PASS if ok else FAIL,
        f"observed r={_fmt(r_obs)} R={_fmt(R_obs)}; certified r={_fmt(dset.r)} R={_fmt(dset.R)}",
    )


def check_ball_count(cfg: ExperimentConfig, opts: VerifyOptions) -> CheckResult:
    dset = cfg.delone
    with cfg.numbers.active():
        bound = 1 + 2 / dset.r
        worst = max(ball_count(dset, x) for x in _centers(cfg, opts.centers, -opts.window, opts.window))
    return CheckResult(
        "ball-count",
        PASS if worst <= bound else FAIL,
        f"max card(Y ∩ B(x,1)) = {worst} over {opts.centers} centres; bound 1 + 2/r = {_fmt(bound)}",
    )


def check_covering(cfg: ExperimentConfig, opts: VerifyOptions) -> CheckResult:
    dset = cfg.delone
    with cfg.numbers.active():
        worst = max(nearest_point(dset, x)[1] for x in _centers(cfg, opts.centers, -opts.window, opts.window))
        ok = worst <= dset.R
    return CheckResult(
        "covering",
        PASS if ok else FAIL,
        f"max nearest distance {_fmt(worst)} over {opts.centers} centres; R = {_fmt(dset.R)}",
    )


def check_J_choice(cfg: ExperimentConfig, setup: DivergenceSetup) -> CheckResult:
    r, R = cfg.delone.r, cfg.delone.R
    J = choose_J(r, R, cfg.alpha)
    lhs, rhs, certified = j_certificate(r, R, setup.beta)
    with cfg.numbers.active():
        minimal = J == 1 or abs(cfg.alpha) ** (J - 1) < j_threshold(r, R)
    ok = certified and minimal and J == setup.J
    return CheckResult(
        "J-choice",
        PASS if ok else FAIL,
        f"J={J} j={setup.j}; (1+2/r)/(r(beta-1)) = {_fmt(lhs)} <= 1/(2R) = {_fmt(rhs)}: {certified}; minimal: {minimal}",
    )


def check_separation(cfg: ExperimentConfig, setup: DivergenceSetup, opts: VerifyOptions) -> CheckResult:
    """``|beta**(n-m) y - y'| > 1`` for ``y`` in the window and ``y'`` in ``Y^(n)``."""
    if not cfg.pruning:
        return CheckResult("separation", SKIP, "pruning disabled")
    dset = cfg.delone
    numbers = cfg.numbers
    ys = points_in_window(dset, -opts.window, opts.window, cfg.point_budget)
    pairs = violations = 0
    first = None
    with numbers.active():
        for n in range(2, opts.pair_max_n + 1):
            for m in range(1, n):
                scale = setup.beta ** (n - m)
                for y in ys:
                    z = scale * y
                    for k in window_indices(dset, z - 1, z + 1):
                        y2 = dset.point(k)
                        if abs(z - y2) > 1:
                            continue
                        pairs += 1
                        if y_n_member(setup, dset, n, y2, numbers):
                            violations += 1
                            first = first or (m, n, y, y2)
    detail = f"{len(ys)} points, pairs m<n<={opts.pair_max_n}, {pairs} near misses, {violations} violations"
    if first:
        detail += f"; first at m={first[0]} n={first[1]} y={_fmt(first[2])} y'={_fmt(first[3])}"
    return CheckResult("separation", FAIL if violations else PASS, detail, data={"violations": violations})


def check_lower_bound(cfg: ExperimentConfig, setup: DivergenceSetup, opts: VerifyOptions) -> CheckResult:
    if not cfg.pruning:
        return CheckResult("Yn-lower-bound", SKIP, "pruning disabled")
    beta = abs(setup.beta)
    failures = []
    rows = []
    for n in range(1, opts.lower_bound_max_n + 1):
        for e in (1, 2, 3):
            chk = check_Yn_lower_bound(cfg, setup, n, beta**e)
            rows.append(chk)
            if not chk.passed:
                failures.append(f"n={n} X=beta^{e} ({chk.failing_step or 'count<bound'})")
    steps_broken = [
        f"n={c.n} X={_fmt(c.X)} {c.failing_step}" for c in rows if c.passed and c.failing_step
    ]
    detail = f"{len(rows)} cases, {len(failures)} below bound"
    if failures:
        detail += "; " + ", ".join(failures[:4])
    if steps_broken:
        detail += f"; intermediate links not monotone in {len(steps_broken)} case(s), e.g. {steps_broken[0]}"
    return CheckResult("Yn-lower-bound", FAIL if failures else PASS, detail, data={"checks": rows})


def check_sandwich(cfg: ExperimentConfig, opts: VerifyOptions) -> CheckResult:
    """Card(I_n) between ``floor((b-a)alpha^n/(2R)) - 1`` and ``(b-a)alpha^n/(2r) + 2``.

    Records, per side, the smallest n from which the inequality holds up to
    the last n tested.
    """
    dset = cfg.delone
    lower_from = upper_from = None
    rows = []
    with cfg.numbers.active():
        for n in range(1, opts.sandwich_max_n + 1):
            card = len(index_set(cfg, n, budget=None))
            span = cfg.width * abs(cfg.alpha_pow(n))
            low = floor(span / (2 * dset.R)) - 1
            high = span / (2 * dset.r) + 2
            lo_ok, hi_ok = card >= low, card <= high
            rows.append((n, card, low, high, lo_ok, hi_ok))
            lower_from = (lower_from or n) if lo_ok else None
            upper_from = (upper_from or n) if hi_ok else None
    ok = lower_from is not None and upper_from is not None
    return CheckResult(
        "index-sandwich",
        PASS if ok else FAIL,
        f"n<={opts.sandwich_max_n}: lower side holds from n={lower_from}, upper side from n={upper_from}",
        data={"rows": rows, "lower_from": lower_from, "upper_from": upper_from},
    )


def check_measure_bound(cfg: ExperimentConfig, opts: VerifyOptions) -> CheckResult:
    """``measure(A_n) <= 2 psi(n) card(I_n) / |alpha|^n``."""
    bad = []
    with cfg.numbers.active():
        slack = cfg.numbers.tolerance
        for n in range(1, opts.sandwich_max_n + 1):
            periodic = periodic_A_n(cfg, n)
            if periodic is not None:
                lam = periodic.measure_on(cfg.a, cfg.b)
            else:
                lam = build_A_n(cfg, n).measure()
            bound = 2 * cfg.psi(n) * len(index_set(cfg, n, budget=None)) / abs(cfg.alpha_pow(n))
            if lam > bound + slack:
                bad.append(n)
    return CheckResult(
        "measure-bound",
        FAIL if bad else PASS,
        f"n<={opts.sandwich_max_n}, violations at {bad}" if bad else f"n<={opts.sandwich_max_n}, no violations",
    )


def check_periodic_engine(cfg: ExperimentConfig, setup: DivergenceSetup, opts: VerifyOptions) -> CheckResult:
    """The periodic route agrees with explicit enumeration where both apply."""
    compared = 0
    mismatches = []
    with cfg.numbers.active():
        slack = cfg.numbers.tolerance * cfg.width
        for n in range(1, 9):
            periodic = periodic_A_n(cfg, n)
            if periodic is None:
                break
            compared += 1
            if abs(periodic.measure_on(cfg.a, cfg.b) - build_A_n(cfg, n).measure()) > slack:
                mismatches.append(f"A_{n}")
        for n in range(1, opts.prime_max_n + 1):
            if psi_index(setup, n) > cfg.N_max:
                break
            periodic = periodic_A_prime_n(cfg, setup, n)
            if periodic is None:
                break
            compared += 1
            if abs(periodic.measure_on(cfg.a, cfg.b) - build_A_prime_n(cfg, setup, n).measure()) > slack:
                mismatches.append(f"A'_{n}")
    if not compared:
        return CheckResult("periodic-engine", SKIP, "no periodic form for this Delone set")
    return CheckResult(
        "periodic-engine",
        FAIL if mismatches else PASS,
        f"{compared} sets compared" + (f"; mismatches {mismatches}" if mismatches else ""),
    )


def run_verification(cfg: ExperimentConfig, setup: DivergenceSetup, opts: VerifyOptions) -> list[CheckResult]:
    suite = [
        lambda: check_radii(cfg, opts),
        lambda: check_ball_count(cfg, opts),
        lambda: check_covering(cfg, opts),
        lambda: check_J_choice(cfg, setup),
        lambda: check_separation(cfg, setup, opts),
        lambda: check_lower_bound(cfg, setup, opts),
        lambda: check_sandwich(cfg, opts),
        lambda: check_measure_bound(cfg, opts),
        lambda: check_periodic_engine(cfg, setup, opts),
    ]
    results = []
    for check in suite:
        start = time.perf_counter()
        result = check()
        result.seconds = time.perf_counter() - start
        results.append(result)
    return results
