from fractions import Fraction

import pytest
from gmpy2 import mpq
from hypothesis import given
from hypothesis import strategies as st

from deloneapprox.errors import ConfigError
from deloneapprox.numerics import Numbers
from deloneapprox.psi import (
    CONVERGENT,
    DIVERGENT,
    Constant,
    Geometric,
    LogPower,
    Power,
    ResidueMasked,
    Table,
    build_psi,
    eval_psi,
    partial_sum,
    psi_table,
)

BIG = Numbers(exact=False, precision_bits=200)

small_rationals = st.fractions(0, 3, max_denominator=12).map(lambda f: mpq(f.numerator, f.denominator))
specs = st.one_of(
    small_rationals.map(Constant),
    st.tuples(small_rationals, st.integers(1, 3)).map(lambda t: Power(t[0], mpq(t[1]))),
    st.tuples(small_rationals, st.fractions(Fraction(1, 10), Fraction(9, 10), max_denominator=10)).map(
        lambda t: Geometric(t[0], mpq(t[1].numerator, t[1].denominator))
    ),
    st.lists(small_rationals, max_size=12).map(lambda v: Table(tuple(v))),
)


class TestExamples:
    def test_power(self):
        assert eval_psi(Power(mpq(1), mpq(2)), 4) == mpq(1, 16)

    def test_constant(self):
        assert eval_psi(Constant(mpq(1, 4)), 10**6) == mpq(1, 4)

    def test_residue_masked(self):
        spec = ResidueMasked(Power(mpq(1), mpq(1)), 4, 2)
        assert spec(6) == mpq(1, 6)
        assert spec(7) == 0

    def test_partial_sum_small(self):
        assert partial_sum(Power(mpq(1), mpq(2)), 2) == mpq(5, 4)

    def test_partial_sum_against_fraction_oracle(self):
        oracle = sum(Fraction(1, n * n) for n in range(1, 101))
        got = partial_sum(Power(mpq(1), mpq(2)), 100)
        assert got == mpq(oracle.numerator, oracle.denominator)
        assert abs(float(got) - 1.63498) <= 1e-5

    def test_geometric_closed_form(self):
        assert partial_sum(Geometric(mpq(1), mpq(1, 2)), 20) == 1 - mpq(1, 2**20)

    def test_table_is_zero_past_the_end(self):
        t = Table((mpq(1), mpq(2)))
        assert [t(n) for n in (1, 2, 3, 50)] == [1, 2, 0, 0]

    def test_non_integral_power_is_big_float(self):
        spec = Power(mpq(1), mpq(1, 2), BIG)
        assert not spec.exact
        with BIG.active():
            assert abs(spec(4) - mpq(1, 2)) < mpq(1, 2**190)

    def test_log_power(self):
        spec = LogPower(mpq(1), mpq(1), BIG)
        assert spec.regime == DIVERGENT
        assert 0 < spec(1) < 2
        assert LogPower(mpq(0), mpq(1), BIG)(3) == 0

    def test_psi_table_layout(self):
        assert psi_table(Power(mpq(1), mpq(1)), 3) == [0, 1, mpq(1, 2), mpq(1, 3)]

    @pytest.mark.parametrize("n", [0, -1])
    def test_domain(self, n):
        with pytest.raises(ValueError):
            Constant(mpq(1))(n)


class TestRegimes:
    @pytest.mark.parametrize(
        "spec, regime",
        [
            (Constant(mpq(1)), DIVERGENT),
            (Constant(mpq(0)), CONVERGENT),
            (Power(mpq(1), mpq(1)), DIVERGENT),
            (Power(mpq(1), mpq(2)), CONVERGENT),
            (Power(mpq(0), mpq(1)), CONVERGENT),
            (Geometric(mpq(5), mpq(1, 2)), CONVERGENT),
            (Table((mpq(1),) * 100), CONVERGENT),
            (ResidueMasked(Power(mpq(1), mpq(1)), 3, 1), DIVERGENT),
        ],
    )
    def test_metadata(self, spec, regime):
        assert spec.regime == regime


class TestBuild:
    def test_round_trip_describe(self):
        n = Numbers()
        for raw in (
            {"variant": "power", "c": "1", "s": "2"},
            {"variant": "constant", "c": "1/4"},
            {"variant": "geometric", "c": "1", "q": "1/2"},
            {"variant": "table", "values": ["1/2", "0", "3"]},
            {"variant": "residue-masked", "inner": {"variant": "power", "c": "1", "s": "1"}, "J": 4, "j": 2},
        ):
            spec = build_psi(raw, n)
            again = build_psi(spec.describe(), n)
            assert [spec(k) for k in range(1, 20)] == [again(k) for k in range(1, 20)]

    @pytest.mark.parametrize(
        "raw",
        [
            {"variant": "power", "c": "-1", "s": "2"},
            {"variant": "power", "c": "1"},
            {"variant": "power", "c": "1", "s": "0"},
            {"variant": "geometric", "c": "1", "q": "1"},
            {"variant": "table", "values": ["1", "-1"]},
            {"variant": "table", "values": "1"},
            {"variant": "residue-masked", "inner": {"variant": "constant", "c": "1"}, "J": 3, "j": 3},
            {"variant": "residue-masked", "J": 3, "j": 1},
            {"variant": "zeta"},
            {"c": "1"},
        ],
    )
    def test_rejects(self, raw):
        with pytest.raises(ConfigError):
            build_psi(raw, Numbers())


class TestProperties:
    @given(specs, st.integers(1, 40))
    def test_non_negative_and_exact(self, spec, n):
        assert spec(n) >= 0
        assert partial_sum(spec, n) >= 0

    @given(specs, st.integers(1, 40))
    def test_partial_sum_monotone(self, spec, N):
        assert partial_sum(spec, N + 1) >= partial_sum(spec, N)
        assert partial_sum(spec, N + 1) - partial_sum(spec, N) == spec(N + 1)

    @given(specs, st.integers(1, 6), st.integers(1, 20))
    def test_residue_classes_partition_the_sum(self, spec, J, N):
        masked = sum((partial_sum(ResidueMasked(spec, J, j), N) for j in range(J)), mpq(0))
        assert masked == partial_sum(spec, N)
