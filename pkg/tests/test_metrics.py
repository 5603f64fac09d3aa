import math

import numpy as np
import pytest

from smfg import (
    CurveTableParams,
    EnumerationBudgetError,
    SimplexPoint,
    exploitability,
    exploitability_report,
    exploitability_with_std_error,
    expected_payoff,
    make_beach_bar,
    make_constant,
    make_curve_table,
    make_linear,
    population_metrics,
    sample_uniform_points,
)


def congestion_op():
    """F(mu) = (1 - mu(1), 1 - mu(2))."""
    return make_curve_table(CurveTableParams(curves=(
        np.array([[0.0, 1.0], [1.0, 0.0]]),
        np.array([[0.0, 1.0], [1.0, 0.0]]),
    )))


class TestExpectedPayoff:
    def test_two_player_enumeration(self):
        # four profiles at probability 1/4 each pay 0, 0.5, 0.5, 0
        profile = [SimplexPoint([0.5, 0.5])] * 2
        assert expected_payoff(congestion_op(), profile, 0) == pytest.approx(0.25)

    def test_constant_operator(self):
        op = make_constant([0.37, 0.37, 0.37])
        rng = np.random.default_rng(0)
        profile = [SimplexPoint(p) for p in sample_uniform_points(3, 4, rng)]
        for i in range(4):
            assert expected_payoff(op, profile, i) == pytest.approx(0.37)

    def test_mc_matches_exact(self):
        rng = np.random.default_rng(1)
        profile = [SimplexPoint([0.5, 0.5])] * 2
        mc = expected_payoff(
            congestion_op(), profile, 0, method="monte-carlo", mc_samples=100_000, rng=rng
        )
        assert abs(mc - 0.25) <= 0.005

    def test_override_policy(self):
        profile = [SimplexPoint([0.5, 0.5])] * 2
        v = expected_payoff(congestion_op(), profile, 0, override=SimplexPoint([1.0, 0.0]))
        # opponent splits: mu is (1,0) or (.5,.5) -> payoffs 0 or 0.5
        assert v == pytest.approx(0.25)

    def test_mc_needs_rng(self):
        profile = [SimplexPoint([0.5, 0.5])] * 2
        with pytest.raises(ValueError):
            expected_payoff(congestion_op(), profile, 0, method="monte-carlo")


class TestExploitability:
    def test_both_on_first_action(self):
        profile = [SimplexPoint([1.0, 0.0])] * 2
        # staying pays F((1,0))(1) = 0; deviating pays F((.5,.5))(2) = 0.5
        assert exploitability(congestion_op(), profile, 0) == pytest.approx(0.5)

    def test_constant_operator_zero(self):
        op = make_constant([0.4, 0.4])
        rng = np.random.default_rng(2)
        profile = [SimplexPoint(p) for p in sample_uniform_points(2, 3, rng)]
        for i in range(3):
            assert abs(exploitability(op, profile, i)) <= 1e-12

    def test_exact_never_meaningfully_negative(self):
        rng = np.random.default_rng(3)
        op = make_linear(3, rng)
        for _ in range(20):
            profile = sample_uniform_points(3, 4, rng)
            for i in range(4):
                assert exploitability(op, profile, i) >= -1e-9

    def test_mc_nonnegative_by_construction(self):
        rng = np.random.default_rng(4)
        op = make_linear(3, rng)
        profile = sample_uniform_points(3, 4, rng)
        val = exploitability(op, profile, 0, method="monte-carlo", mc_samples=500, rng=rng)
        assert val >= 0.0

    def test_vertex_optimality_of_deviations(self):
        rng = np.random.default_rng(5)
        op = make_linear(3, rng)
        profile = sample_uniform_points(3, 4, rng)
        pure_best = max(
            expected_payoff(op, profile, 0, override=SimplexPoint.one_hot(a, 3))
            for a in (1, 2, 3)
        )
        mixed = [
            expected_payoff(op, profile, 0, override=SimplexPoint(p))
            for p in sample_uniform_points(3, 100, rng)
        ]
        assert pure_best >= max(mixed) - 1e-9


class TestEnumerationPaths:
    def test_multinomial_agrees_with_product(self):
        # symmetric profile routed through multinomial weights must match the
        # generic product-enumeration path run on the same (identical) rows
        op = make_beach_bar(3, 1.0)
        shared = SimplexPoint([0.2, 0.5, 0.3])
        profile_sym = [shared] * 5
        v_sym = expected_payoff(op, profile_sym, 0)
        jitter = np.asarray(shared, dtype=np.float64).copy()
        profile_het = np.stack([jitter] * 5)
        profile_het[1, 0] += 1e-13  # break exact equality, keep value
        profile_het[1] /= profile_het[1].sum()
        v_het = expected_payoff(op, profile_het, 0)
        assert v_sym == pytest.approx(v_het, abs=1e-9)

    def test_budget_error_on_large_heterogeneous(self):
        rng = np.random.default_rng(6)
        op = make_beach_bar(3, 1.0)
        profile = sample_uniform_points(3, 16, rng)  # 3^15 > 1e6
        with pytest.raises(EnumerationBudgetError):
            expected_payoff(op, profile, 0)

    def test_symmetric_profile_moderate_population(self):
        op = make_beach_bar(3, 1.0)
        profile = [SimplexPoint.uniform(3)] * 40
        value = exploitability(op, profile, 0)
        assert 0.0 <= value < 1.0


class TestReports:
    def test_exact_report_symmetric_shortcut(self):
        op = congestion_op()
        profile = [SimplexPoint([0.7, 0.3])] * 3
        rep = exploitability_report(op, profile, method="exact-enumeration")
        assert rep.method == "exact-enumeration"
        assert rep.std_error == 0.0
        assert np.all(rep.per_agent == rep.per_agent[0])
        assert rep.max == pytest.approx(rep.per_agent.max())

    def test_mc_report_matches_exact_within_4_se(self):
        rng = np.random.default_rng(7)
        op = make_linear(3, rng)
        profile = sample_uniform_points(3, 4, rng)
        exact = np.array([exploitability(op, profile, i) for i in range(4)])
        rep = exploitability_report(op, profile, mc_samples=20_000, rng=rng)
        per_agent_se = np.empty(4)
        for i in range(4):
            _, per_agent_se[i] = exploitability_with_std_error(op, profile, i, 20_000, rng)
        assert np.all(np.abs(rep.per_agent - exact) <= 4 * np.maximum(per_agent_se, 1e-4))

    def test_report_entries_respect_mc_floor(self):
        rng = np.random.default_rng(8)
        op = make_beach_bar(4, 1.0)
        profile = sample_uniform_points(4, 10, rng)
        rep = exploitability_report(op, profile, mc_samples=300, rng=rng)
        assert np.all(rep.per_agent >= -2 * rep.std_error)
        assert rep.mc_samples == 300


class TestValueLipschitz:
    def test_own_policy_perturbation(self):
        op = congestion_op()
        rng = np.random.default_rng(9)
        base = sample_uniform_points(2, 3, rng)
        k = 2
        for _ in range(20):
            moved = rng.dirichlet(np.ones(k))
            d = np.linalg.norm(moved - base[0])
            v0 = expected_payoff(op, base, 0)
            v1 = expected_payoff(op, base, 0, override=moved)
            assert abs(v1 - v0) <= math.sqrt(k) * d + 1e-12

    def test_opponent_policy_perturbation(self):
        op = congestion_op()
        lip = op.lipschitz
        rng = np.random.default_rng(10)
        base = sample_uniform_points(2, 3, rng)
        n, k = 3, 2
        for _ in range(20):
            perturbed = base.copy()
            perturbed[1] = rng.dirichlet(np.ones(k))
            d = np.linalg.norm(perturbed[1] - base[1])
            v0 = expected_payoff(op, base, 0)
            v1 = expected_payoff(op, perturbed, 0)
            assert abs(v1 - v0) <= (2 * lip * math.sqrt(2 * k) / n) * d + 1e-12


class TestPopulationMetrics:
    def test_identical_policies(self):
        shared = SimplexPoint([0.3, 0.7])
        pm = population_metrics([shared] * 4)
        assert np.all(pm.per_agent_deviation == 0.0)
        assert np.array_equal(pm.mean_policy.weights, shared.weights)

    def test_two_opposed_agents(self):
        pm = population_metrics([SimplexPoint([1.0, 0.0]), SimplexPoint([0.0, 1.0])])
        assert pm.mean_policy.weights == pytest.approx([0.5, 0.5])
        assert pm.per_agent_deviation == pytest.approx([0.5, 0.5])

    def test_distances_to_reference(self):
        uniform = SimplexPoint.uniform(3)
        pm = population_metrics([uniform] * 5, pi_star=uniform)
        assert pm.mean_dist_to_mfne == 0.0
        assert pm.mean_sq_dist_to_mfne == 0.0

    def test_no_reference_leaves_none(self):
        pm = population_metrics([SimplexPoint.uniform(2)] * 2)
        assert pm.mean_dist_to_mfne is None
