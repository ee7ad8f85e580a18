import pytest
from gmpy2 import mpq
from hypothesis import given
from hypothesis import strategies as st

from deloneapprox.construction import (
    DivergenceSetup,
    build_A_n,
    build_A_prime_n,
    choose_J,
    choose_residue,
    delta_Delta,
    divergence_setup,
    index_set,
    j_certificate,
    periodic_A_n,
    periodic_A_prime_n,
    pruned_points,
    y_n_member,
)
from deloneapprox.delone import IntegerLattice, points_in_window
from deloneapprox.errors import DegeneratePsiError, InvalidPairError, PrecisionError
from deloneapprox.estimators import check_Yn_lower_bound
from deloneapprox.numerics import Numbers
from deloneapprox.psi import Constant, Power, ResidueMasked

from conftest import make_config

BIG = Numbers(exact=False, precision_bits=256)
Z = IntegerLattice()
SETUP16 = DivergenceSetup(J=4, j=0, beta=mpq(16))


def oracle_pruned(n: int, lo: int, hi: int, beta: int = 16) -> list[int]:
    """Integers in [lo, hi) farther than 1 from every beta**k * Z, 1 <= k < n."""
    return [y for y in range(lo, hi) if all(min(y % beta**k, beta**k - y % beta**k) > 1 for k in range(1, n))]


class TestConfig:
    def test_rejects_small_alpha(self):
        with pytest.raises(Exception):
            make_config(alpha="1")

    def test_rejects_empty_interval(self):
        with pytest.raises(Exception):
            make_config(a="1", b="1")

    def test_rejects_low_precision(self):
        with pytest.raises(PrecisionError):
            make_config(psi={"variant": "log-power", "c": "1", "s": "1"}, precision_bits=80)


class TestChooseJ:
    @pytest.mark.parametrize("alpha, J", [(mpq(2), 4), (mpq(12), 1), (mpq(-2), 4), (mpq(11), 1), (mpq(3), 3)])
    def test_lattice_radii(self, alpha, J):
        assert choose_J(mpq(1, 2), mpq(1, 2), alpha) == J

    def test_fibonacci_radii(self):
        with BIG.active():
            R = BIG.phi() / 2
        assert choose_J(mpq(1, 2), R, mpq(2)) == 5

    @given(
        st.fractions(1, 4, max_denominator=8),
        st.fractions(0, 3, max_denominator=8),
        st.fractions(1, 40, max_denominator=8).filter(lambda a: a > 1),
    )
    def test_minimal_and_certified(self, r, extra, alpha):
        r, R, alpha = (mpq(x.numerator, x.denominator) for x in (r, r + extra, alpha))
        J = choose_J(r, R, alpha)
        threshold = 2 * R * (1 + 2 / r) / r + 1
        assert alpha**J >= threshold
        assert J == 1 or alpha ** (J - 1) < threshold
        assert j_certificate(r, R, alpha**J)[2]


class TestChooseResidue:
    def test_power(self):
        assert choose_residue(Power(mpq(1), mpq(1)), 4, 1000) == 0

    def test_masked(self):
        assert choose_residue(ResidueMasked(Power(mpq(1), mpq(1)), 4, 2), 4, 1000) == 2

    def test_tie_goes_to_smallest(self):
        assert choose_residue(Constant(mpq(1, 4)), 3, 99) == 0

    def test_degenerate(self):
        with pytest.raises(DegeneratePsiError):
            choose_residue(Constant(mpq(0)), 3, 10)


class TestAn:
    def test_example(self):
        cfg = make_config(psi={"variant": "constant", "c": "1/8"})
        u = build_A_n(cfg, 1)
        assert u.as_pairs() == [(0, mpq(1, 16)), (mpq(7, 16), mpq(9, 16)), (mpq(15, 16), 1)]
        assert u.measure() == mpq(1, 4)

    def test_zero_psi(self):
        assert build_A_n(make_config(psi={"variant": "constant", "c": "0"}), 1).measure() == 0

    def test_saturation(self):
        u = build_A_n(make_config(psi={"variant": "constant", "c": "3/4"}), 1)
        assert u.as_pairs() == [(0, 1)]

    @given(st.integers(1, 12), st.sampled_from(["1/8", "1/4", "1/3", "3/7"]))
    def test_periodic_route_agrees(self, n, c):
        cfg = make_config(psi={"variant": "constant", "c": c}, a="-1/3", b="5/4")
        p = periodic_A_n(cfg, n)
        assert p.restrict(cfg.a, cfg.b) == build_A_n(cfg, n)

    @given(st.integers(1, 8))
    def test_negative_alpha_on_symmetric_lattice(self, n):
        pos = make_config(psi={"variant": "power", "c": "1", "s": "1"}, a="-1", b="1")
        neg = make_config(psi={"variant": "power", "c": "1", "s": "1"}, a="-1", b="1", alpha="-2")
        assert build_A_n(pos, n) == build_A_n(neg, n)

    @given(st.integers(1, 8), st.sampled_from(["2", "3", "5/2"]))
    def test_scaling_covariance(self, n, s):
        base = make_config(psi={"variant": "constant", "c": "1/5"}, a="-1/2", b="3/2")
        sv = mpq(s)
        scaled = make_config(
            psi={"variant": "constant", "c": str(mpq(1, 5) * sv)},
            a=str(-sv / 2),
            b=str(sv * 3 / 2),
            delone={"variant": "integer-lattice", "scale": s},
        )
        want = [(sv * lo, sv * hi) for lo, hi in build_A_n(base, n).as_pairs()]
        assert build_A_n(scaled, n).as_pairs() == want

    @given(st.integers(1, 14))
    def test_measure_and_cardinality_bounds(self, n):
        cfg = make_config(psi={"variant": "power", "c": "1", "s": "1"})
        card = len(index_set(cfg, n))
        span = cfg.width * 2**n
        assert card >= span // (2 * Z.R) - 1
        # the upper side needs psi(n) small against the window; here from n = 2
        assert (card <= span / (2 * Z.r) + 2) == (n >= 2)
        assert build_A_n(cfg, n).measure() <= 2 * cfg.psi(n) * card / 2**n


class TestPruning:
    def test_examples(self):
        assert y_n_member(SETUP16, Z, 1, mpq(15))
        assert y_n_member(SETUP16, Z, 2, mpq(5))
        assert not any(y_n_member(SETUP16, Z, 2, mpq(y)) for y in (15, 16, 17))
        assert not y_n_member(SETUP16, Z, 3, mpq(256))

    def test_count_208(self):
        kept = [y for y in range(256) if y_n_member(SETUP16, Z, 2, mpq(y))]
        assert kept == oracle_pruned(2, 0, 256)
        assert len(kept) == 208

    @given(st.integers(2, 4), st.integers(-5000, 5000), st.integers(1, 400))
    def test_sieve_matches_membership(self, n, lo, length):
        cfg = make_config(N_max=40)
        pts = pruned_points(cfg, SETUP16, n, mpq(lo), mpq(lo + length))
        assert pts == [mpq(y) for y in oracle_pruned(n, lo, lo + length + 1)]

    @given(st.integers(2, 5), st.integers(-3000, 3000))
    def test_monotone_levels(self, n, y):
        y = mpq(y)
        assert y_n_member(SETUP16, Z, n + 1, y, levels=n - 1) == y_n_member(SETUP16, Z, n, y)
        if y_n_member(SETUP16, Z, n + 1, y):
            assert y_n_member(SETUP16, Z, n, y)

    def test_pruning_off(self):
        cfg = make_config(pruning=False)
        assert pruned_points(cfg, SETUP16, 3, mpq(0), mpq(20)) == points_in_window(Z, mpq(0), mpq(20))


class TestAPrime:
    @pytest.mark.parametrize("c", ["1/8", "1/5", "1/20"])
    def test_measures(self, c):
        cfg = make_config(psi={"variant": "constant", "c": c})
        setup = divergence_setup(cfg)
        assert (setup.J, setup.j, setup.beta) == (4, 0, 16)
        cv = mpq(c)
        assert build_A_prime_n(cfg, setup, 1).measure() == 2 * cv
        assert build_A_prime_n(cfg, setup, 2).measure() == 13 * cv / 8

    def test_zero_psi_is_empty(self):
        cfg = make_config(psi={"variant": "table", "values": ["1", "1", "1", "0"]})
        setup = DivergenceSetup(J=4, j=0, beta=mpq(16))
        assert not build_A_prime_n(cfg, setup, 1)

    @pytest.mark.parametrize("n", [1, 2, 3])
    @pytest.mark.parametrize("pruning", [True, False])
    def test_periodic_route_agrees(self, n, pruning):
        cfg = make_config(psi={"variant": "power", "c": "1", "s": "1"}, pruning=pruning)
        setup = divergence_setup(cfg)
        p = periodic_A_prime_n(cfg, setup, n)
        assert p.restrict(cfg.a, cfg.b) == build_A_prime_n(cfg, setup, n)

    def test_index_beyond_N_max(self):
        cfg = make_config(N_max=10)
        with pytest.raises(ValueError):
            build_A_prime_n(cfg, divergence_setup(cfg), 3)


class TestDeltaDelta:
    def test_example(self):
        cfg = make_config(psi={"variant": "constant", "c": "1/10"})
        setup = divergence_setup(cfg)
        pair = delta_Delta(cfg, setup, 1, 2)
        assert pair.delta == 2 * mpq(1, 10) / 256
        assert pair.Delta == 2 * mpq(1, 10) / 16

    def test_zero_branch(self):
        cfg = make_config(psi={"variant": "table", "values": ["0", "0", "0", "0", "0", "0", "0", "1/3"]})
        setup = DivergenceSetup(J=4, j=0, beta=mpq(16))
        pair = delta_Delta(cfg, setup, 1, 2)
        assert pair.delta == 0 and pair.Delta == mpq(2, 3) / 256

    @given(st.integers(1, 10), st.integers(1, 10))
    def test_symmetric(self, m, n):
        cfg = make_config(psi={"variant": "power", "c": "1", "s": "1"})
        setup = divergence_setup(cfg)
        if m == n:
            with pytest.raises(InvalidPairError):
                delta_Delta(cfg, setup, m, n)
            return
        a, b = delta_Delta(cfg, setup, m, n), delta_Delta(cfg, setup, n, m)
        assert (a.delta, a.Delta) == (b.delta, b.Delta)
        assert 0 <= a.delta <= a.Delta


class TestLowerBound:
    @pytest.mark.parametrize("n", range(1, 7))
    @pytest.mark.parametrize("e", [1, 2, 3])
    def test_gap_constant_chain_holds(self, n, e):
        cfg = make_config(N_max=100)
        chk = check_Yn_lower_bound(cfg, SETUP16, n, mpq(16) ** e)
        assert chk.passed
        assert chk.count == len(oracle_pruned(n, 0, 16**e))

    def test_radius_version_fails_on_the_lattice(self):
        # with the radii themselves as constants the final line asks for 255 points
        chk = check_Yn_lower_bound(make_config(N_max=100), SETUP16, 2, mpq(256))
        assert chk.count == 208
        assert chk.radius_bound == 255
        assert chk.bound == 127
