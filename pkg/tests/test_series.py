"""Truncated series, composition, and the contraction-operator oracle."""

from fractions import Fraction

import pytest

from rgw.model import (
    FiniteAtoms,
    GenFunc,
    example1_measure,
    example2_measure,
    linfrac_measure,
    quadratic_pgf,
)
from rgw.series import (
    FixpointError,
    TruncSeries,
    averaged_compose,
    compose_poly,
    schroder_apply,
    schroder_fixpoint,
)
from rgw.xprec import DD


class TestCompose:
    def test_identity_series_gives_polynomial(self):
        P = quadratic_pgf(Fraction(1, 3))
        S = TruncSeries.identity(4)
        C = compose_poly(P, S)
        assert C.coeffs == [Fraction(1, 3), Fraction(2, 3), 0, 0]

    def test_monomial_composition(self):
        # S = z + z^2, P = z^2 -> z^2 + z^4
        S = TruncSeries([1, 1, 0, 0])
        P = GenFunc([0, 1])
        C = compose_poly(P, S)
        assert C.coeffs == [0, 1, 0, 1]

    def test_expanded_by_hand(self):
        # S = z + 3z^2, P = (z + z^2)/2, order 3
        S = TruncSeries([1, 3, 0])
        P = quadratic_pgf(Fraction(1, 2))
        C = compose_poly(P, S)
        assert C.coeffs == [Fraction(1, 2), Fraction(5, 4), Fraction(3, 2)]

    def test_xfloat_mode_matches(self):
        S = TruncSeries([DD(1), DD(3), DD(0)])
        P = quadratic_pgf(Fraction(1, 2))
        C = compose_poly(P, S)
        assert abs(C.coeffs[1] - DD(1.25)) < DD(1e-30)

    def test_coefficient_accessor(self):
        S = TruncSeries([5, 7])
        assert S.coefficient(2) == 7
        with pytest.raises(IndexError):
            S.coefficient(3)
        with pytest.raises(IndexError):
            S.coefficient(0)


class TestOperator:
    def test_one_step_from_identity(self):
        A = schroder_apply(example1_measure(), TruncSeries.identity(3))
        assert A.coeffs[0] == 1
        assert A.coeffs[1] == Fraction(1, 3)

    def test_trivial_environment_fixed_point(self):
        mu = FiniteAtoms([(1, GenFunc([1]))])
        S = TruncSeries.identity(4)
        assert schroder_apply(mu, S).coeffs == S.coeffs

    def test_iteration_reaches_second_density(self):
        mu = example1_measure()
        S = TruncSeries.identity(2)
        for _ in range(80):
            S = schroder_apply(mu, S)
        # plain iteration contracts coefficient 2 by 7/9 per sweep
        assert abs(float(S.coeffs[1]) - 1.5) < 1e-8

    def test_averaged_compose_atoms_vs_quad_consistency(self):
        # same measure expressed both ways gives identical averages
        mu_q = example2_measure()
        S = TruncSeries([1, 2, 3, 4])
        avg = averaged_compose(mu_q, S)
        # coefficient 1 is c1 * mass of p1 = 1/2
        assert avg.coeffs[0] == Fraction(1, 2)


class TestFixpoint:
    def test_full_interval_first_four(self):
        seq = schroder_fixpoint(example2_measure(), 4)
        assert seq.phi_values() == [1, 3, 4, Fraction(20, 3)]
        assert seq.meta["iterations"] <= 4 + 2

    def test_linear_fractional_single_atom(self):
        mu = linfrac_measure([(1, Fraction(1, 2))], degree_cap=16)
        seq = schroder_fixpoint(mu, 5)
        assert seq.phi_values() == [1] * 5

    def test_order_one(self):
        seq = schroder_fixpoint(example2_measure(), 1)
        assert seq.phi_values() == [1]

    def test_fixed_point_defect_zero(self):
        mu = example1_measure()
        seq = schroder_fixpoint(mu, 12)
        S = TruncSeries(seq.phi_values())
        assert schroder_apply(mu, S).coeffs == S.coeffs

    def test_positivity_and_unit_first(self):
        seq = schroder_fixpoint(example1_measure(), 16)
        vals = seq.phi_values()
        assert vals[0] == 1
        assert all(v >= 0 for v in vals)

    def test_depth_stability(self):
        # after t sweeps the first t coefficients are already final
        mu = example2_measure()
        final = schroder_fixpoint(mu, 10).phi_values()
        for depth in (2, 5, 8):
            with pytest.raises(FixpointError) as exc:
                schroder_fixpoint(mu, 10, max_iter=depth)
            partial = exc.value.last.coeffs
            assert partial[:depth] == final[:depth]

    def test_fixpoint_error_payload(self):
        with pytest.raises(FixpointError) as exc:
            schroder_fixpoint(example2_measure(), 10, max_iter=3)
        assert exc.value.iterations == 3
        assert exc.value.residual > 0

    def test_xfloat_mode(self):
        seq = schroder_fixpoint(example2_measure(), 8, mode="xfloat")
        ref = schroder_fixpoint(example2_measure(), 8)
        for n in range(1, 9):
            assert abs(seq.phi(n) - DD(ref.phi(n))) < DD(1e-28)

    def test_inadmissible_rejected(self):
        from rgw.model import InadmissibleMeasureError

        with pytest.raises(InadmissibleMeasureError):
            schroder_fixpoint(FiniteAtoms([(1, GenFunc([1]))]), 4)
