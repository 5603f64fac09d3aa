import math

import numpy as np
import pytest

from smfg import (
    CurveTableParams,
    SimplexPoint,
    custom_operator,
    estimate_lipschitz,
    estimate_monotonicity,
    linear_from_params,
    load_curve_table_csv,
    make_beach_bar,
    make_collision,
    make_constant,
    make_curve_table,
    make_kl,
    make_linear,
    sample_uniform_points,
)


def kl_raw_gradient(mu, mu_ref, gamma):
    """Independent oracle: the potential gradient before the library-wide
    sign flip, gamma*log((gamma*mu + (1-gamma)*mu_ref)/mu_ref) + gamma."""
    mu = np.asarray(mu, float)
    m = np.asarray(mu_ref, float)
    return gamma * np.log((gamma * mu + (1 - gamma) * m) / m) + gamma


def tangent_spectral_norm(mat, iters=2000):
    """Power-iteration oracle for the largest singular value of M restricted
    to the sum-zero tangent space of the simplex."""
    k = mat.shape[0]
    proj = np.eye(k) - np.ones((k, k)) / k
    mp = mat @ proj
    v = np.ones(k) + np.arange(k)  # deterministic start
    v = proj @ v
    for _ in range(iters):
        v = mp.T @ (mp @ v)
        v /= np.linalg.norm(v)
    return float(np.linalg.norm(mp @ v))


class TestLinear:
    def test_negative_identity(self):
        op = linear_from_params(np.eye(2), np.zeros((2, 2)), np.zeros(2))
        assert np.allclose(op(SimplexPoint([1.0, 0.0])), [-1.0, 0.0])
        assert op.lipschitz == pytest.approx(1.0)
        assert op.monotonicity == pytest.approx(1.0)

    def test_sampled_monotonicity_witness(self):
        rng = np.random.default_rng(10)
        op = make_linear(4, rng, normalize=False)
        lam = op.monotonicity
        x1 = sample_uniform_points(4, 10_000, rng)
        x2 = sample_uniform_points(4, 10_000, rng)
        df = op.eval_many(x1) - op.eval_many(x2)
        dm = x1 - x2
        inner = np.einsum("ij,ij->i", df, dm)
        sq = np.einsum("ij,ij->i", dm, dm)
        assert np.all(inner <= -lam * sq + 1e-9)

    def test_normalized_outputs_in_unit_interval(self):
        rng = np.random.default_rng(11)
        op = make_linear(5, rng, normalize=True)
        vals = op.eval_many(sample_uniform_points(5, 10_000, rng))
        assert vals.min() >= -1e-12 and vals.max() <= 1 + 1e-12

    def test_antisymmetric_part_contributes_nothing(self):
        rng = np.random.default_rng(12)
        op = make_linear(4, rng, normalize=True)
        X = op.parameters.X
        for _ in range(100):
            d = rng.dirichlet(np.ones(4)) - rng.dirichlet(np.ones(4))
            assert abs(d @ (X @ d)) <= 1e-10

    def test_estimates_bracket_exact_constants(self):
        rng = np.random.default_rng(13)
        op = make_linear(4, rng, normalize=False)
        M = -op.parameters.S + op.parameters.X
        exact = float(np.linalg.svd(M, compute_uv=False)[0])
        assert op.lipschitz == pytest.approx(exact)
        lhat = estimate_lipschitz(op, 10_000, rng)
        assert lhat <= exact + 1e-9
        assert lhat >= 0.5 * tangent_spectral_norm(M)

    def test_rejects_bad_matrices(self):
        with pytest.raises(ValueError):
            linear_from_params(np.array([[1.0, 0.5], [0.0, 1.0]]), np.zeros((2, 2)), np.zeros(2))
        with pytest.raises(ValueError):
            linear_from_params(np.eye(2), np.eye(2), np.zeros(2))
        with pytest.raises(ValueError):
            linear_from_params(-np.eye(2), np.zeros((2, 2)), np.zeros(2))


class TestKl:
    def test_reference_point_value(self):
        # the raw gradient is the constant gamma there; the operator is its negation
        op = make_kl(SimplexPoint([0.5, 0.5]), 0.1)
        assert np.allclose(op(SimplexPoint([0.5, 0.5])), [-0.1, -0.1])

    def test_matches_negated_gradient_formula(self):
        mu_ref = SimplexPoint([0.5, 0.5])
        op = make_kl(mu_ref, 0.1)
        mu = np.array([1.0, 0.0])
        raw = kl_raw_gradient(mu, mu_ref.weights, 0.1)
        assert raw[0] == pytest.approx(0.109531, abs=1e-6)
        assert np.allclose(op(SimplexPoint(mu)), -raw)

    def test_descending_monotone_after_negation(self):
        rng = np.random.default_rng(14)
        op = make_kl(SimplexPoint([0.2, 0.3, 0.5]), 0.1)
        assert estimate_monotonicity(op, 10_000, rng) >= 0.0

    def test_rejects_bad_params(self):
        with pytest.raises(ValueError):
            make_kl(SimplexPoint([1.0, 0.0]), 0.1)
        with pytest.raises(ValueError):
            make_kl(SimplexPoint([0.5, 0.5]), 0.0)
        with pytest.raises(ValueError):
            make_kl(SimplexPoint([0.5, 0.5]), 1.5)


class TestBeachBar:
    def test_uniform_measure_values(self):
        op = make_beach_bar(5, 1.0)
        vals = op(SimplexPoint.uniform(5))
        assert vals[1] == pytest.approx(1 - math.log(1.2), abs=1e-6)  # action 2
        assert vals[3] == pytest.approx(1 - 0.4 - math.log(1.2), abs=1e-6)  # action 4

    def test_all_mass_at_bar(self):
        op = make_beach_bar(5, 1.0)
        assert op(SimplexPoint.one_hot(2, 5))[1] == pytest.approx(1 - math.log(2), abs=1e-9)

    def test_alpha_zero_is_constant_in_mu(self):
        op = make_beach_bar(5, 0.0)
        u, v = op(SimplexPoint.uniform(5)), op(SimplexPoint.one_hot(1, 5))
        assert np.array_equal(u, v)

    def test_alpha_zero_bar_profile_unexploitable(self):
        # without congestion the bar location dominates, so everyone standing
        # at the bar is already a best response
        from smfg import exploitability

        op = make_beach_bar(5, 0.0)
        profile = [SimplexPoint.one_hot(2, 5)] * 4
        assert exploitability(op, profile, 0) == pytest.approx(0.0, abs=1e-12)

    def test_monotonicity_estimate_nonnegative(self):
        rng = np.random.default_rng(15)
        op = make_beach_bar(5, 1.0)
        assert estimate_monotonicity(op, 10_000, rng) >= 0.0

    def test_declared_range_matches_far_corner(self):
        op = make_beach_bar(5, 1.0)
        lo, hi = op.declared_range
        assert lo == pytest.approx(1 - 0.6 - math.log(2))  # about -0.29
        assert hi == 1.0


class TestCollision:
    def test_branch_values(self):
        n = 10
        op = make_collision([0.9, 0.9], n)
        x = np.array([[1 / n, 1.5 / n]])
        vals = op.eval_many(x)[0]
        assert vals[0] == pytest.approx(0.9)
        assert vals[1] == pytest.approx(0.45)
        assert op.eval_many(np.array([[2 / n, 0.25]]))[0][0] == pytest.approx(0.0)

    def test_middle_branch_unit_alpha(self):
        n = 10
        op = make_collision([1.0, 1.0], n)
        assert op.eval_many(np.array([[1.5 / n, 0.5]]))[0][0] == pytest.approx(0.5)

    def test_lipschitz_estimate_below_declared(self):
        rng = np.random.default_rng(16)
        op = make_collision([0.5, 1.0, 0.25], 8)
        assert op.lipschitz == pytest.approx(8.0)
        assert estimate_lipschitz(op, 10_000, rng) <= 8.0 + 1e-9

    def test_monotone(self):
        rng = np.random.default_rng(17)
        op = make_collision([1.0, 0.7, 0.4], 6)
        assert estimate_monotonicity(op, 5_000, rng) >= -1e-12


class TestCurveTable:
    def test_linear_interpolation(self):
        op = make_curve_table(CurveTableParams(curves=(
            np.array([[0.0, 1.0], [1.0, 0.0]]),
        )))
        assert op.eval_many(np.array([[0.3]]))[0][0] == pytest.approx(0.7)

    def test_constant_curves_zero_monotonicity(self):
        rng = np.random.default_rng(18)
        op = make_curve_table(CurveTableParams(curves=(
            np.array([[0.0, 0.4], [1.0, 0.4]]),
            np.array([[0.0, 0.4], [1.0, 0.4]]),
        )))
        assert estimate_monotonicity(op, 5_000, rng) == pytest.approx(0.0, abs=1e-12)

    def test_strict_decrease_gives_strong_monotonicity(self):
        rng = np.random.default_rng(19)
        op = make_curve_table(CurveTableParams(curves=(
            np.array([[0.0, 1.0], [1.0, 0.5]]),
            np.array([[0.0, 0.9], [0.5, 0.6], [1.0, 0.3]]),
        )))
        assert estimate_monotonicity(op, 10_000, rng) >= 0.5 - 1e-6

    def test_malformed_knots(self):
        with pytest.raises(ValueError):
            make_curve_table(CurveTableParams(curves=(np.array([[0.1, 1.0], [1.0, 0.0]]),)))
        with pytest.raises(ValueError):
            make_curve_table(CurveTableParams(curves=(np.array([[0.0, 1.0], [0.9, 0.5]]),)))
        with pytest.raises(ValueError):
            make_curve_table(CurveTableParams(curves=(np.array([[0.0, 0.2], [1.0, 0.9]]),)))
        with pytest.raises(ValueError):
            make_curve_table(CurveTableParams(curves=(
                np.array([[0.0, 1.0], [0.5, 0.8], [0.5, 0.6], [1.0, 0.0]]),
            )))


class TestCurveCsv:
    def test_roundtrip(self, tmp_path):
        path = tmp_path / "curves.csv"
        path.write_text(
            "action,occupancy,payoff\n"
            "1,0.0,1.0\n1,1.0,0.0\n"
            "2,0.0,0.8\n2,0.5,0.5\n2,1.0,0.1\n"
        )
        op = make_curve_table(load_curve_table_csv(path))
        assert op.K == 2
        assert op.eval_many(np.array([[0.5, 0.25]]))[0] == pytest.approx([0.5, 0.65])

    def test_bad_header(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("a,b,c\n1,0,1\n")
        with pytest.raises(ValueError):
            load_curve_table_csv(path)

    def test_unsorted_rows(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("action,occupancy,payoff\n1,1.0,0.0\n1,0.0,1.0\n")
        with pytest.raises(ValueError):
            load_curve_table_csv(path)

    def test_action_gap(self, tmp_path):
        path = tmp_path / "bad.csv"
        path.write_text("action,occupancy,payoff\n1,0.0,1.0\n1,1.0,0.0\n3,0.0,1.0\n3,1.0,0.0\n")
        with pytest.raises(ValueError):
            load_curve_table_csv(path)


class TestEstimators:
    def test_negative_identity_constants(self):
        rng = np.random.default_rng(20)
        op = linear_from_params(np.eye(3), np.zeros((3, 3)), np.zeros(3))
        lhat = estimate_lipschitz(op, 10_000, rng)
        assert 0.9 <= lhat <= 1.0 + 1e-9
        # the ratio is exactly 1 on every sampled pair
        assert estimate_monotonicity(op, 1_000, rng) == 1.0

    def test_constant_operator(self):
        rng = np.random.default_rng(21)
        op = make_constant([0.3, 0.7])
        assert estimate_lipschitz(op, 1_000, rng) == 0.0
        assert estimate_monotonicity(op, 1_000, rng) == 0.0

    def test_anti_monotone_flagged(self):
        rng = np.random.default_rng(22)
        op = custom_operator(lambda mu: mu.copy(), 3, (0.0, 1.0))
        assert estimate_monotonicity(op, 1_000, rng) == -1.0

    def test_need_two_samples(self):
        rng = np.random.default_rng(23)
        op = make_constant([0.5, 0.5])
        with pytest.raises(ValueError):
            estimate_lipschitz(op, 1, rng)


class TestOperatorContract:
    def test_eval_deterministic(self):
        rng = np.random.default_rng(24)
        op = make_linear(4, rng)
        mu = SimplexPoint.uniform(4)
        assert np.array_equal(op(mu), op(mu))

    def test_dimension_mismatch(self):
        op = make_beach_bar(5, 1.0)
        with pytest.raises(ValueError):
            op(SimplexPoint.uniform(4))

    def test_range_enforced_on_validated_path(self):
        op = custom_operator(lambda mu: mu + 5.0, 2, (0.0, 1.0))
        with pytest.raises(ValueError):
            op(SimplexPoint.uniform(2))


class TestNoPotentialCycle:
    def test_four_term_cycle_sum_nonzero(self):
        # monotone 3-action operator F(mu) = (-mu1 - mu2, mu1, -mu3); summing
        # the four deviation identities a potential would have to satisfy
        # around the cycle leaves a nonzero residue, so no potential exists
        S = np.array([[1.0, 0.0, 0.0], [0.0, 0.0, 0.0], [0.0, 0.0, 1.0]])
        X = np.array([[0.0, -1.0, 0.0], [1.0, 0.0, 0.0], [0.0, 0.0, 0.0]])
        op = linear_from_params(S, X, np.zeros(3))
        mu_211 = np.array([2 / 3, 1 / 3, 0.0])
        mu_311 = np.array([2 / 3, 0.0, 1 / 3])
        mu_321 = np.array([1 / 3, 1 / 3, 1 / 3])
        mu_221 = np.array([1 / 3, 2 / 3, 0.0])
        f = lambda mu, a: op(SimplexPoint(mu))[a - 1]
        cycle = (
            f(mu_211, 2) - f(mu_311, 3)
            + f(mu_311, 1) - f(mu_321, 2)
            + f(mu_321, 3) - f(mu_221, 2)
            + f(mu_221, 2) - f(mu_211, 1)
        )
        assert abs(cycle) >= 0.1
        assert cycle == pytest.approx(2 / 3, abs=1e-12)
