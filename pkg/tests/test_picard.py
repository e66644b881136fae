"""Integral-equation fixed point: boundary behavior, constants, identities,
refinement."""

import math

import numpy as np
import pytest

from rgw.picard import (
    A_LIMIT,
    GridFunction,
    check_quarter_integral,
    h1_estimate,
    h_from_densities,
    normalize_to_boundary,
    picard_backward,
    picard_forward,
    verify_parts_identity,
)
from rgw.recur import densities_example2

STEP = 1e-3  # unit tests run on the coarse grid; the fine grid is acceptance


class TestForward:
    def test_boundary_preserved(self):
        res = picard_forward(GridFunction.constant(0.5, STEP), 1)
        assert res.grid.h[0] == 0.5

    def test_plateau_reaches_limit(self):
        res = picard_forward(GridFunction.constant(0.5, STEP), 200)
        assert abs(res.grid.h[-1] - A_LIMIT) < 0.02

    def test_changes_decrease(self):
        res = picard_forward(GridFunction.constant(0.5, STEP), 50)
        assert res.sup_changes[-1] < res.sup_changes[0]


class TestBackward:
    def test_boundary_value_estimate(self):
        res = picard_backward(GridFunction.constant(1.0, STEP), 150)
        assert abs(res.grid.h[0] - (1 - math.log(2))) < 2e-3
        assert abs(h1_estimate(res.grid) - A_LIMIT) < 5e-3

    def test_start_independence(self):
        r1 = picard_backward(GridFunction.constant(1.0, STEP), 200)
        r2 = picard_backward(GridFunction.step_profile(STEP), 200)
        n1 = normalize_to_boundary(r1.grid)
        n2 = normalize_to_boundary(r2.grid)
        assert float(np.max(np.abs(n1.h - n2.h))) < 1e-4

    def test_linearity_scaling(self):
        r1 = picard_backward(GridFunction.constant(1.0, STEP), 40)
        r2 = picard_backward(GridFunction.constant(2.0, STEP), 40)
        assert float(np.max(np.abs(r2.grid.h - 2.0 * r1.grid.h))) < 1e-12

    def test_fixed_point_defect(self):
        res = picard_backward(GridFunction.constant(1.0, STEP), 400)
        again = picard_backward(res.grid, 1)
        assert again.last_change < 1e-10

    def test_refinement_improves_boundary_estimate(self):
        # the right-endpoint rectangle refines roughly first-order (with a
        # logarithmic drag from the contraction-neutral endpoint); the
        # trapezoid default sits far below it at the same step
        eA = abs(
            h1_estimate(
                picard_backward(
                    GridFunction.constant(1.0, 1e-3, "rectangle-right"), 400
                ).grid
            )
            - A_LIMIT
        )
        eB = abs(
            h1_estimate(
                picard_backward(
                    GridFunction.constant(1.0, 5e-4, "rectangle-right"), 600
                ).grid
            )
            - A_LIMIT
        )
        assert 1.3 < eA / eB < 2.3
        eT = abs(
            h1_estimate(
                picard_backward(GridFunction.constant(1.0, 1e-3), 400).grid
            )
            - A_LIMIT
        )
        assert eT < eA / 10

    def test_left_rectangles_lose_the_boundary(self):
        # documented failure mode: the boundary sample never feeds the
        # integral and the iterates drain toward zero
        res = picard_backward(
            GridFunction.constant(1.0, 1e-2, "rectangle-left"), 4000
        )
        assert res.grid.h[0] < 1e-3


class TestDiagnostics:
    def test_quarter_integral_trivial_functions(self):
        assert abs(check_quarter_integral(GridFunction.constant(0.0, STEP)) - 0.25) < 1e-12
        got = check_quarter_integral(GridFunction.constant(0.5, STEP))
        want = abs((1 - math.log(2)) / 2 - 0.25)
        assert abs(got - want) < 1e-5

    def test_quarter_integral_converged(self):
        res = picard_backward(GridFunction.constant(1.0, STEP), 200)
        assert check_quarter_integral(normalize_to_boundary(res.grid)) < 5e-3

    def test_parts_identity_small_and_large_eps(self):
        res = picard_backward(GridFunction.constant(1.0, STEP), 200)
        g = normalize_to_boundary(res.grid)
        assert abs(verify_parts_identity(g, 1e-2).difference) < 5e-3
        assert abs(verify_parts_identity(g, 0.25).difference) < 5e-3

    def test_parts_limit_forces_boundary_value(self):
        # LHS/ln2 approaches H(1) as eps -> 0; the approach is slow (the
        # solution has a (1-z) log(1-z) term at the boundary) so assert the
        # monotone trend and the end value
        res = picard_backward(GridFunction.constant(1.0, 1e-4), 100)
        g = normalize_to_boundary(res.grid)
        errs = [
            abs(verify_parts_identity(g, eps).lhs / math.log(2) - A_LIMIT)
            for eps in (0.25, 0.05, 1e-3)
        ]
        assert errs[0] > errs[1] > errs[2]
        assert errs[2] < 0.02

    def test_eps_domain(self):
        g = GridFunction.constant(1.0, STEP)
        with pytest.raises(ValueError):
            verify_parts_identity(g, 0.7)

    def test_rule_validation(self):
        with pytest.raises(ValueError):
            GridFunction.constant(1.0, STEP, "simpson")


class TestFromDensities:
    def test_zero_limit(self):
        seq = densities_example2(100)
        v, bound = h_from_densities(seq, 0.0)
        assert v == 0.5
        assert bound == 0.0

    def test_matches_fixed_point_mid_interval(self):
        seq = densities_example2(10000, mode="xfloat")
        res = picard_backward(GridFunction.constant(1.0, 1e-4), 100)
        g = normalize_to_boundary(res.grid)
        v, bound = h_from_densities(seq, 0.5)
        assert bound < 1e-12
        assert abs(v - g.value_at(0.5)) < 1e-3

    def test_trend_toward_limit(self):
        seq = densities_example2(100000, mode="xfloat")
        vals = []
        for z in (0.9, 0.99, 0.999):
            v, bound = h_from_densities(seq, z)
            assert bound < 1e-9
            vals.append(v)
        assert vals[0] < vals[1] < vals[2] < A_LIMIT
        assert A_LIMIT - vals[2] < 0.02

    def test_domain(self):
        seq = densities_example2(100)
        with pytest.raises(ValueError):
            h_from_densities(seq, 1.0)
