import pytest
from gmpy2 import mpq
from hypothesis import given, settings
from hypothesis import strategies as st

from deloneapprox.construction import DivergenceSetup, build_A_n, build_A_prime_n, divergence_setup
from deloneapprox.errors import UndefinedRatioError
from deloneapprox.estimators import (
    APrimeFamily,
    A_n_measure_table,
    chung_erdos_ratio,
    density_zoom,
    global_density,
    independence_report,
    intersection_matrix,
    measure_table,
    quasi_independence_constant,
    ratio_trajectory,
    union_measure_on,
    union_on_window,
)

from conftest import make_config

C = mpq(1, 100)


@pytest.fixture(scope="module")
def harmonic():
    cfg = make_config(psi={"variant": "power", "c": "1", "s": "1"}, N_max=300)
    return cfg, divergence_setup(cfg)


def constant(c="1/100", **kw):
    cfg = make_config(psi={"variant": "constant", "c": c}, **kw)
    return cfg, divergence_setup(cfg)


class TestMeasureTable:
    def test_examples(self):
        cfg, setup = constant()
        assert measure_table(cfg, setup, 1) == [2 * C]
        assert measure_table(cfg, setup, 2) == [2 * C, 13 * C / 8]

    def test_zero_psi(self):
        cfg = make_config(psi={"variant": "constant", "c": "0"})
        setup = DivergenceSetup(J=4, j=0, beta=mpq(16))
        assert measure_table(cfg, setup, 5) == [0] * 5
        assert intersection_matrix(cfg, setup, 3) == [[0] * 3 for _ in range(3)]
        with pytest.raises(UndefinedRatioError):
            chung_erdos_ratio(cfg, setup, 3)
        with pytest.raises(UndefinedRatioError):
            quasi_independence_constant(cfg, setup, 3)

    def test_periodic_family_matches_enumeration(self, harmonic):
        cfg, setup = harmonic
        fast, slow = APrimeFamily(cfg, setup), APrimeFamily(cfg, setup, use_periodic=False)
        assert fast.periodic and not slow.periodic
        assert measure_table(cfg, setup, 3, fast) == measure_table(cfg, setup, 3, slow)
        assert intersection_matrix(cfg, setup, 3, family=fast) == intersection_matrix(cfg, setup, 3, family=slow)


class TestIntersections:
    def test_two_by_two(self):
        cfg, setup = constant()
        mat = intersection_matrix(cfg, setup, 2)
        direct = build_A_prime_n(cfg, setup, 1).intersect(build_A_prime_n(cfg, setup, 2)).measure()
        assert mat[0][1] == mat[1][0] == direct
        assert direct <= min(2 * C, 13 * C / 8)

    @given(st.integers(1, 12))
    def test_matrix_structure(self, N):
        cfg = make_config(psi={"variant": "power", "c": "1", "s": "1"}, N_max=60)
        setup = divergence_setup(cfg)
        mat = intersection_matrix(cfg, setup, N)
        diag = measure_table(cfg, setup, N)
        for m in range(N):
            assert mat[m][m] == diag[m]
            for n in range(N):
                assert mat[m][n] == mat[n][m]
                assert mat[m][n] <= min(diag[m], diag[n])

    def test_band(self, harmonic):
        cfg, setup = harmonic
        full = intersection_matrix(cfg, setup, 8)
        band = intersection_matrix(cfg, setup, 8, band_width=2)
        for m in range(8):
            for n in range(8):
                assert band[m][n] == (full[m][n] if abs(m - n) <= 2 else None)


class TestRatio:
    def test_single_term(self):
        cfg, setup = constant()
        assert chung_erdos_ratio(cfg, setup, 1).value == 2 * C

    def test_trajectory_by_hand(self):
        traj = ratio_trajectory([mpq(1, 2), mpq(1, 4)], [[mpq(1, 2), mpq(1, 8)], [mpq(1, 8), mpq(1, 4)]])
        assert traj.ratios == [mpq(1, 2), mpq(9, 16) / mpq(1)]
        assert traj.running_max == mpq(9, 16)

    def test_harmonic_values(self, harmonic):
        cfg, setup = harmonic
        r25 = chung_erdos_ratio(cfg, setup, 25).value
        r50 = chung_erdos_ratio(cfg, setup, 50).value
        assert 0 < r25 <= cfg.width and 0 < r50 <= cfg.width
        assert abs(r50 - r25) <= mpq(1, 5) * r25
        assert round(float(r50), 6) == 0.729039

    @settings(max_examples=15)
    @given(st.integers(1, 20), st.sampled_from(["1/7", "1/3", "1/50"]))
    def test_cauchy_schwarz(self, N, c):
        cfg, setup = constant(c, N_max=200)
        traj = chung_erdos_ratio(cfg, setup, N)
        assert all(r <= cfg.width for r in traj.ratios)
        assert traj.running_max == max(traj.ratios)


class TestQuasiIndependence:
    def test_two_terms(self):
        cfg, setup = constant()
        mat = intersection_matrix(cfg, setup, 2)
        assert quasi_independence_constant(cfg, setup, 2) == mat[0][1] / (C * C)

    def test_needs_two(self, harmonic):
        with pytest.raises(ValueError):
            quasi_independence_constant(*harmonic, 1)

    def test_bounded_with_pruning(self, harmonic):
        cfg, setup = harmonic
        values = [quasi_independence_constant(cfg, setup, N) for N in (16, 32, 64)]
        assert values == [mpq(13, 4)] * 3
        assert values[2] <= mpq(11, 10) * values[1]

    def test_grows_without_pruning(self):
        cfg = make_config(psi={"variant": "power", "c": "1", "s": "1"}, N_max=300, pruning=False)
        setup = divergence_setup(cfg)
        values = [quasi_independence_constant(cfg, setup, N) for N in (16, 32, 64)]
        assert values == [mpq(15, 2), mpq(31, 2), mpq(63, 2)]

    def test_report(self, harmonic):
        cfg, setup = harmonic
        report = independence_report(cfg, setup, 20)
        assert report.K_estimate == report.trajectory.running_max / cfg.width
        assert report.psi_indices == [4 * n for n in range(1, 21)]
        assert report.chung_erdos_ratio == chung_erdos_ratio(cfg, setup, 20).value


class TestZoom:
    def test_saturated(self):
        cfg = make_config(psi={"variant": "constant", "c": "1/2"})
        assert all(d == 1 for _, d in density_zoom(cfg, None, mpq(1, 3), 1, 5, [mpq(1, 8), mpq(1, 64)]))

    def test_zero(self):
        cfg = make_config(psi={"variant": "constant", "c": "0"})
        assert all(d == 0 for _, d in density_zoom(cfg, None, mpq(1, 3), 1, 5, [mpq(1, 8)]))

    @given(st.integers(1, 6), st.integers(0, 5), st.fractions(-2, 2, max_denominator=30), st.fractions(0, 3, max_denominator=30))
    def test_union_matches_explicit(self, N1, extra, lo, length):
        cfg = make_config(psi={"variant": "power", "c": "1/3", "s": "1"}, a="-2", b="5")
        N2 = N1 + extra
        lo = mpq(lo.numerator, lo.denominator)
        hi = lo + mpq(length.numerator, length.denominator)
        pieces = None
        for n in range(N1, N2 + 1):
            u = build_A_n(cfg, n)
            pieces = u if pieces is None else pieces.union(u)
        explicit = pieces.clip(lo, hi).measure()
        assert union_on_window(cfg, N1, N2, lo, hi).measure() == explicit
        assert union_measure_on(cfg, N1, N2, lo, hi) == explicit

    def test_global_density_periodic_shortcut(self):
        cfg = make_config(psi={"variant": "power", "c": "1", "s": "1"})
        assert global_density(cfg, 6, 14) == union_on_window(cfg, 6, 14, cfg.a, cfg.b).measure() == mpq(37001, 45045)

    def test_A_n_table(self):
        cfg = make_config(psi={"variant": "constant", "c": "1/4"})
        assert A_n_measure_table(cfg, 20) == [mpq(1, 2)] * 20
