"""Branching-process simulator vs the exact finite-horizon distribution."""

from fractions import Fraction

import pytest
import scipy.stats

from rgw.mcsim import (
    EmpiricalDist,
    SimConfig,
    chi_square_statistic,
    exact_distribution,
    simulate,
)
from rgw.model import (
    FiniteAtoms,
    GenFunc,
    example2_measure,
    two_poly_measure,
)


class TestExactDistribution:
    def test_zero_horizon_point_mass(self):
        probs, deficit = exact_distribution(example2_measure(), 0, 3)
        assert probs == [1, 0, 0]
        assert deficit == 0

    def test_one_step(self):
        probs, deficit = exact_distribution(example2_measure(), 1, 3)
        assert probs == [Fraction(1, 2), Fraction(1, 2), 0]
        assert deficit == 0

    def test_two_steps_frozen(self):
        probs, deficit = exact_distribution(example2_measure(), 2, 4)
        assert probs == [Fraction(1, 4), Fraction(5, 12), Fraction(1, 6), Fraction(1, 6)]
        assert deficit == 0

    def test_truncation_deficit_reported(self):
        probs, deficit = exact_distribution(example2_measure(), 3, 4)
        assert deficit > 0
        assert sum(probs) + deficit == 1

    def test_ratio_trend_toward_second_density(self):
        mu = example2_measure()
        ratios = []
        for t in range(1, 13):
            probs, _ = exact_distribution(mu, t, 2)
            ratios.append(probs[1] / probs[0])
        assert all(b > a for a, b in zip(ratios, ratios[1:]))
        assert abs(float(ratios[-1]) - 3.0) < 0.05  # phi_2 = 3

    def test_scaling_invariance(self):
        mu = example2_measure()
        assert exact_distribution(mu, 3, 8) == exact_distribution(mu.scaled(Fraction(1, 3)), 3, 8)


class TestSimulate:
    def test_deterministic_lineage(self):
        mu = FiniteAtoms([(1, GenFunc([1]))])  # every individual begets one
        emp = simulate(SimConfig(mu, horizon=7, trials=500, seed=3))
        assert emp.counts == {1: 500}

    def test_seed_determinism_across_threads(self):
        cfg1 = SimConfig(example2_measure(), 3, 50000, seed=11, threads=1)
        cfg2 = SimConfig(example2_measure(), 3, 50000, seed=11, threads=2)
        e1, e2 = simulate(cfg1), simulate(cfg2)
        assert e1.counts == e2.counts
        assert e1.capped == e2.capped

    def test_different_seeds_differ(self):
        e1 = simulate(SimConfig(example2_measure(), 3, 20000, seed=1))
        e2 = simulate(SimConfig(example2_measure(), 3, 20000, seed=2))
        assert e1.counts != e2.counts

    def test_scaled_measure_equivalence(self):
        mu = example2_measure()
        e1 = simulate(SimConfig(mu, 2, 30000, seed=5))
        e2 = simulate(SimConfig(mu.scaled(Fraction(1, 2)), 2, 30000, seed=5))
        assert e1.counts == e2.counts

    def test_chi_square_quadratic_family(self):
        mu = example2_measure()
        probs, _ = exact_distribution(mu, 2, 4)
        emp = simulate(SimConfig(mu, 2, 200000, seed=42))
        stat, dof = chi_square_statistic(emp, probs)
        assert stat < scipy.stats.chi2.ppf(0.99, dof)

    def test_chi_square_atom_family(self):
        mu = two_poly_measure(Fraction(7, 16), Fraction(3, 4))
        probs, _ = exact_distribution(mu, 3, 8)
        emp = simulate(SimConfig(mu, 3, 200000, seed=9))
        stat, dof = chi_square_statistic(emp, probs)
        assert stat < scipy.stats.chi2.ppf(0.99, dof)

    def test_population_cap_flags_trials(self):
        mu = two_poly_measure(Fraction(1, 10), Fraction(2, 10))  # fast growth
        emp = simulate(SimConfig(mu, 12, 2000, seed=1, cap=100))
        assert emp.capped > 0
        assert sum(emp.counts.values()) + emp.capped == emp.trials

    def test_ratio_estimate(self):
        mu = example2_measure()
        emp = simulate(SimConfig(mu, 2, 100000, seed=2))
        ratio, se = emp.ratio_to_one(2)
        assert abs(ratio - 5.0 / 3.0) < 5 * se

    def test_config_guards(self):
        with pytest.raises(ValueError):
            SimConfig(example2_measure(), 2, 0)
        with pytest.raises(ValueError):
            SimConfig(example2_measure(), -1, 10)


class TestEmpiricalDist:
    def test_accounting_invariant(self):
        with pytest.raises(AssertionError):
            EmpiricalDist({1: 5}, capped=1, trials=10, horizon=2)

    def test_ratio_errors_without_singletons(self):
        emp = EmpiricalDist({2: 10}, capped=0, trials=10, horizon=1)
        with pytest.raises(ZeroDivisionError):
            emp.ratio_to_one(2)
