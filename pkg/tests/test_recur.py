"""Recurrence engines: frozen exact values, cross-engine agreement, the
published-form discrepancy, and the coefficient table."""

import math
from fractions import Fraction

import pytest
import sympy

from rgw.model import (
    EMU1_P,
    FiniteAtoms,
    GenFunc,
    example1_measure,
    example2_measure,
    linfrac_measure,
    quadratic_pgf,
    two_poly_measure,
)
from rgw.recur import (
    CnjTable,
    bell_partial_table,
    densities_example1,
    densities_example2,
    densities_general,
    densities_linfrac,
    densities_operator,
    densities_two_poly,
)


class TestExample1:
    def test_first_values(self):
        seq = densities_example1(3)
        assert seq.phi(2) == Fraction(3, 2)
        assert seq.phi(3) == Fraction(16, 9)

    def test_tail_constant_coarse(self):
        # phi_n n^a approaches ~1.2232 already at moderate n
        seq = densities_example1(2500, mode="xfloat")
        alpha = 0.39042951566318193
        val = float(seq.phi(2500)) * 2500.0 ** (-alpha)
        assert abs(val - 1.223219951386792) < 2e-4

    def test_xfloat_matches_rational(self):
        ex = densities_example1(200, mode="xfloat")
        er = densities_example1(200, mode="rational")
        for n in range(1, 201):
            assert abs(ex.phi(n).to_fraction() / er.phi(n) - 1) < Fraction(1, 10 ** 28)


class TestExample2:
    def test_listed_values(self):
        seq = densities_example2(8)
        assert seq.phi_values()[:4] == [1, 3, 4, Fraction(20, 3)]
        assert seq.psi(7) == 4 * (1 - Fraction(1, 7) - Fraction(1, 5) - Fraction(1, 3) + Fraction(1, 21))

    def test_even_step_identity(self):
        seq = densities_example2(40)
        for n in range(2, 41, 2):
            assert seq.phi(n) * (n - 1) == seq.phi(n - 1) * (n + 1)

    def test_linear_growth_constant(self):
        seq = densities_example2(200000, mode="xfloat")
        a_val = 1.0 / (2.0 - 2.0 * math.log(2.0))
        assert abs(float(seq.psi(200000)) - a_val) < 1e-4


class TestTwoPoly:
    def test_second_value(self):
        seq = densities_two_poly(Fraction(7, 16), Fraction(3, 4), 2)
        assert seq.phi(2) == Fraction(208, 111)

    def test_degenerate_pair_matches_single_law(self):
        p = Fraction(3, 5)
        d1 = densities_two_poly(p, p, 25)
        d2 = densities_general(FiniteAtoms([(1, quadratic_pgf(p))]), 25)
        assert d1.phi_values() == d2.phi_values()

    def test_parameter_domain(self):
        with pytest.raises(ValueError):
            densities_two_poly(Fraction(0), Fraction(1, 2), 5)

    def test_xfloat_matches_rational(self):
        a, b = Fraction(1, 2), Fraction(3, 4)
        ex = densities_two_poly(a, b, 150, mode="xfloat")
        er = densities_two_poly(a, b, 150, mode="rational")
        for n in range(1, 151):
            assert abs(ex.phi(n).to_fraction() / er.phi(n) - 1) < Fraction(1, 10 ** 28)

    def test_emulation_parameter_runs(self):
        seq = densities_two_poly(EMU1_P, EMU1_P, 50, mode="xfloat")
        assert float(seq.phi(50)) > 0


class TestLinFrac:
    def test_all_ones(self):
        assert densities_linfrac(5).phi_values() == [1] * 5

    def test_operator_oracle_on_truncated_mixture(self):
        mu = linfrac_measure([(1, Fraction(1, 4)), (2, Fraction(1, 2))], degree_cap=24)
        seq = densities_operator(mu, 10)
        assert seq.phi_values() == [1] * 10


class TestGeneralEngine:
    def test_printed_form_discrepancy(self):
        # the published recurrence without k!/n! overshoots the second
        # density by a factor 2 on the half-interval family
        good = densities_general(example1_measure(), 2)
        bad = densities_general(example1_measure(), 2, printed_form=True)
        assert good.phi(2) == Fraction(3, 2)
        assert bad.phi(2) == 3

    def test_cross_engine_exact_example1(self):
        mu = example1_measure()
        a = densities_example1(40)
        b = densities_general(mu, 40)
        c = densities_operator(mu, 40)
        assert a.phi_values() == b.phi_values() == c.phi_values()

    def test_cross_engine_exact_example2(self):
        mu = example2_measure()
        a = densities_example2(40)
        b = densities_general(mu, 40)
        c = densities_operator(mu, 40)
        assert a.phi_values() == b.phi_values() == c.phi_values()

    def test_cross_engine_exact_two_poly(self):
        a_, b_ = Fraction(7, 16), Fraction(3, 4)
        mu = two_poly_measure(a_, b_)
        a = densities_two_poly(a_, b_, 40)
        b = densities_general(mu, 40)
        c = densities_operator(mu, 40)
        assert a.phi_values() == b.phi_values() == c.phi_values()

    def test_higher_degree_atom(self):
        # cubic offspring law exercises the three-argument Bell path
        P = GenFunc([Fraction(1, 2), Fraction(1, 4), Fraction(1, 4)])
        mu = FiniteAtoms([(1, P)])
        a = densities_general(mu, 20)
        b = densities_operator(mu, 20)
        assert a.phi_values() == b.phi_values()

    def test_scaling_invariance_exact(self):
        mu = example1_measure()
        assert (
            densities_general(mu.scaled(Fraction(1, 2)), 20).phi_values()
            == densities_general(mu, 20).phi_values()
        )
        mu2 = two_poly_measure(Fraction(1, 2), Fraction(3, 4))
        assert (
            densities_general(mu2.scaled(3), 20).phi_values()
            == densities_general(mu2, 20).phi_values()
        )

    def test_positivity_and_unit_head(self):
        for seq in (
            densities_example1(30),
            densities_example2(30),
            densities_two_poly(Fraction(1, 2), Fraction(3, 4), 30),
            densities_general(example2_measure(), 30),
        ):
            seq.check_invariants()


class TestBell:
    def test_against_sympy(self):
        xs = [Fraction(1, 2), Fraction(3, 1), Fraction(2, 7), Fraction(5, 3)]
        table = bell_partial_table(xs, 9)
        syms = sympy.symbols("x1:10")
        vals = [sympy.Rational(x) for x in xs] + [0] * (len(syms) - len(xs))
        for n in range(1, 10):
            for k in range(1, n + 1):
                ref = sympy.bell(n, k, syms[: n - k + 1])
                ref_val = ref.subs(dict(zip(syms, vals)))
                assert table[n][k] == Fraction(str(ref_val)), (n, k)

    def test_quadratic_closed_form(self):
        # with x1 = r, x2 = 2(1-r) only one partition survives
        r = Fraction(2, 5)
        table = bell_partial_table([r, 2 * (1 - r)], 12)
        for n in range(1, 13):
            for k in range((n + 1) // 2, n + 1):
                coeff = Fraction(
                    math.factorial(n),
                    math.factorial(2 * k - n) * math.factorial(n - k),
                )
                assert table[n][k] == coeff * r ** (2 * k - n) * (1 - r) ** (n - k)


class TestCnjTable:
    def test_incremental_matches_direct(self):
        tab = CnjTable(24)
        for n in range(2, 25):
            for j in range(1, n // 2 + 1):
                assert tab.entry(n, j) == tab.direct_entry(n, j)

    def test_known_entries(self):
        tab = CnjTable(6)
        assert tab.entry(2, 1) == Fraction(1, 2)
        assert tab.entry(3, 1) == 1

    def test_range_errors(self):
        tab = CnjTable(6)
        with pytest.raises(IndexError):
            tab.entry(7, 1)
        with pytest.raises(IndexError):
            tab.entry(5, 3)


class TestDensitySeqApi:
    def test_indexing(self):
        seq = densities_example2(5)
        assert seq.phi(1) == 1
        assert seq.psi(4) == Fraction(5, 3)
        with pytest.raises(IndexError):
            seq.phi(6)
        with pytest.raises(IndexError):
            seq.phi(0)

    def test_mode_guards(self):
        with pytest.raises(ValueError):
            densities_example2(10, mode="quadruple")
