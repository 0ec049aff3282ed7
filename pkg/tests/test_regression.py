import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from clusterreg.errors import RegressionError
from clusterreg.regression import (
    DesignMatrix,
    PenaltySpec,
    compute_mse,
    compute_r2,
    compute_sparsity,
    cross_validate,
    fit_elastic_net,
    fit_lasso,
    fit_ols,
    fit_penalized,
    fit_report,
    fit_ridge,
    iterate_lambda,
    kkt_check,
    lasso_lambda_max,
    predict,
    soft_threshold,
)

from oracles import grid_minimize, penalized_objective, random_instance

UNI_X = DesignMatrix(np.array([[1.0], [2.0], [3.0]]), np.array([1.0, 2.0, 3.0]), ("x",))
UNI_PM = DesignMatrix(np.array([[1.0], [-1.0]]), np.array([1.0, -1.0]), ("x",))


def random_design(seed=0, n=8, p=3):
    rng = np.random.default_rng(seed)
    x = rng.normal(size=(n, p))
    y = x @ rng.normal(size=p) + rng.normal() + 0.2 * rng.normal(size=n)
    return DesignMatrix(x, y, tuple(f"c{j}" for j in range(p)))


class TestOls:
    def test_exact_linear_data(self):
        d = DesignMatrix([[1.0], [2.0], [3.0]], [2.0, 4.0, 6.0], ("x",))
        m = fit_ols(d)
        assert m.coefficients == pytest.approx([2.0], abs=1e-12)
        assert m.intercept == pytest.approx(0.0, abs=1e-12)
        assert fit_report(m, d).mse == pytest.approx(0.0, abs=1e-20)

    def test_symmetric_two_point(self):
        m = fit_ols(UNI_PM)
        assert m.coefficients == pytest.approx([1.0], abs=1e-12)
        assert m.intercept == pytest.approx(0.0, abs=1e-12)

    def test_matches_normal_equations_oracle(self):
        d = random_design(seed=42)
        m = fit_ols(d)
        xc = d.x - d.x.mean(axis=0)
        yc = d.y - d.y.mean()
        beta = np.linalg.solve(xc.T @ xc, xc.T @ yc)  # independent route
        assert m.coefficients == pytest.approx(beta, abs=1e-8)

    def test_singular_system_flagged_minimum_norm(self):
        x = np.array([[1.0, 2.0], [2.0, 4.0], [3.0, 6.0]])  # rank 1
        d = DesignMatrix(x, np.array([1.0, 2.0, 3.0]), ("a", "b"))
        m = fit_ols(d)
        assert "singular_system" in m.flags
        # minimum-norm solution of the centered system
        assert np.linalg.norm(m.coefficients) <= 1.0


class TestRidge:
    def test_lambda_zero_equals_ols(self):
        d = random_design(seed=1)
        ols = fit_ols(d)
        ridge = fit_ridge(d, 0.0)
        assert ridge.coefficients == pytest.approx(ols.coefficients, abs=1e-10)
        assert ridge.intercept == pytest.approx(ols.intercept, abs=1e-10)

    def test_univariate_closed_form(self):
        m = fit_ridge(UNI_X, 1.0, fit_intercept=False)
        assert m.coefficients[0] == pytest.approx(14.0 / 15.0, abs=1e-10)
        assert m.intercept == 0.0

    def test_matches_independent_solve(self):
        d = random_design(seed=7)
        lam = 0.37
        m = fit_ridge(d, lam)
        xc = d.x - d.x.mean(axis=0)
        yc = d.y - d.y.mean()
        beta = np.linalg.solve(xc.T @ xc + lam * np.eye(d.p), xc.T @ yc)
        assert m.coefficients == pytest.approx(beta, abs=1e-10)

    def test_shrinkage_monotone_in_lambda(self):
        d = random_design(seed=3)
        norms = [np.linalg.norm(fit_ridge(d, lam).coefficients)
                 for lam in [0.0, 0.01, 0.1, 1.0, 10.0, 100.0]]
        assert all(b <= a + 1e-12 for a, b in zip(norms, norms[1:]))

    def test_negative_lambda_rejected(self):
        with pytest.raises(RegressionError):
            fit_ridge(UNI_X, -0.1)


class TestSoftThreshold:
    def test_dead_zone(self):
        assert soft_threshold(0.5, 1.0) == 0.0

    def test_shrinks_toward_zero(self):
        assert soft_threshold(2.0, 0.5) == 1.5
        assert soft_threshold(-2.0, 0.5) == -1.5

    @given(st.floats(-1e6, 1e6))
    @settings(max_examples=60, deadline=None)
    def test_identity_at_zero_gamma(self, z):
        assert soft_threshold(z, 0.0) == z

    @given(st.floats(-1e3, 1e3), st.floats(0.0, 1e3))
    @settings(max_examples=60, deadline=None)
    def test_contraction_and_sign(self, z, gamma):
        out = soft_threshold(z, gamma)
        assert abs(out) <= max(abs(z) - gamma, 0.0) + 1e-12
        assert out == 0.0 or np.sign(out) == np.sign(z)


class TestLasso:
    def test_lambda_zero_equals_ols(self):
        d = random_design(seed=5)
        ols = fit_ols(d)
        lasso = fit_lasso(d, 0.0)
        assert lasso.converged
        assert lasso.coefficients == pytest.approx(ols.coefficients, abs=1e-8)

    def test_univariate_subgradient_value(self):
        m = fit_lasso(UNI_PM, 1.0, fit_intercept=False)
        assert m.coefficients[0] == pytest.approx(0.75, abs=1e-10)

    def test_dead_zone_beyond_lambda_max(self):
        d = random_design(seed=9)
        lam_max = lasso_lambda_max(d)
        m = fit_lasso(d, lam_max * 1.0001)
        assert np.all(m.coefficients == 0.0)
        assert m.intercept == pytest.approx(float(d.y.mean()), abs=1e-12)

    def test_non_convergence_flagged(self):
        d = random_design(seed=13, n=8, p=3)
        m = fit_lasso(d, 1e-10, max_iter=1)
        assert not m.converged
        assert "non_converged" in m.flags


class TestElasticNet:
    def test_lambda1_zero_equals_ridge(self):
        d = random_design(seed=11)
        ridge = fit_ridge(d, 0.8)
        enet = fit_elastic_net(d, 0.0, 0.8)
        assert enet.coefficients == pytest.approx(ridge.coefficients, abs=1e-8)

    def test_lambda2_zero_equals_lasso(self):
        d = random_design(seed=12)
        lasso = fit_lasso(d, 0.3)
        enet = fit_elastic_net(d, 0.3, 0.0)
        assert enet.coefficients == pytest.approx(lasso.coefficients, abs=1e-8)

    def test_univariate_closed_form(self):
        m = fit_elastic_net(UNI_PM, 1.0, 1.0, fit_intercept=False)
        assert m.coefficients[0] == pytest.approx(0.5, abs=1e-10)

    def test_spec_construction(self):
        spec = PenaltySpec.elastic_net_total(2.0, 0.5)
        assert spec.lam1 == spec.lam2 == 1.0
        assert spec.alpha == 0.5
        with pytest.raises(RegressionError):
            PenaltySpec.elastic_net_total(1.0, 1.5)


class TestKkt:
    def test_exact_univariate_solution(self):
        m = fit_lasso(UNI_PM, 1.0, fit_intercept=False)
        assert kkt_check(m, UNI_PM) < 1e-8

    def test_all_zero_beyond_lambda_max_has_zero_violation(self):
        d = random_design(seed=15)
        lam = lasso_lambda_max(d) * 1.01
        m = fit_lasso(d, lam)
        assert np.all(m.coefficients == 0.0)
        assert kkt_check(m, d) == 0.0

    def test_perturbed_solution_violates(self):
        d = random_design(seed=16)
        m = fit_lasso(d, 0.1)
        bad = type(m)(
            intercept=m.intercept,
            coefficients=m.coefficients + 0.1,
            penalty=m.penalty,
            column_names=m.column_names,
        )
        assert kkt_check(bad, d) > 1e-3

    def test_converged_fits_pass_within_ten_tol(self):
        rng = np.random.default_rng(77)
        for _ in range(25):
            x, y = random_instance(rng)
            d = DesignMatrix(x, y, tuple(f"c{j}" for j in range(x.shape[1])))
            lam1 = float(rng.uniform(0.0, 2.0))
            lam2 = float(rng.uniform(0.0, 2.0))
            for m in (fit_lasso(d, lam1, tol=1e-10),
                      fit_elastic_net(d, lam1, lam2, tol=1e-10)):
                assert m.converged
                assert kkt_check(m, d) < 10 * 1e-10 * max(
                    1.0, float(np.abs(2 * d.x.T @ d.y).max()))

    def test_standardized_fit_rejected(self):
        d = random_design(seed=17)
        m = fit_lasso(d, 0.1, standardize=True)
        with pytest.raises(RegressionError, match="unstandardized"):
            kkt_check(m, d)


class TestGridOracle:
    def test_solvers_match_brute_force_minimizer(self):
        rng = np.random.default_rng(123)
        for _ in range(12):
            x, y = random_instance(rng)
            d = DesignMatrix(x, y, tuple(f"c{j}" for j in range(x.shape[1])))
            lam = float(rng.uniform(0.01, 2.0))
            cases = [
                (fit_ridge(d, lam), 0.0, lam),
                (fit_lasso(d, lam), lam, 0.0),
                (fit_elastic_net(d, lam, 0.5 * lam), lam, 0.5 * lam),
            ]
            for model, lam1, lam2 in cases:
                a, beta, value = grid_minimize(x, y, lam1, lam2)
                solver_value = penalized_objective(
                    x, y, model.intercept, model.coefficients, lam1, lam2)
                assert value <= solver_value + 1e-6 * max(1.0, abs(solver_value))
                assert model.coefficients == pytest.approx(beta, abs=1.5e-3)
                assert model.intercept == pytest.approx(a, abs=1.5e-3)


class TestCrossValidate:
    def test_single_lambda_grid(self):
        d = random_design(seed=19, n=10)
        spec, table = cross_validate(d, "lasso", [0.25], folds=2)
        assert spec.lam == 0.25
        assert len(table) == 1

    def test_exact_sparse_truth_prefers_small_lambda(self):
        rng = np.random.default_rng(20)
        x = rng.normal(size=(12, 3))
        y = 2.0 * x[:, 0] - 1.0 * x[:, 2] + 0.5  # exact, support {0, 2}
        d = DesignMatrix(x, y, ("a", "b", "c"))
        grid = [1e-8, 1e-4, 1e-2, 1.0, 10.0]
        spec, table = cross_validate(d, "lasso", grid, folds=3)
        assert spec.lam == 1e-8
        m = fit_lasso(d, spec.lam)
        support = {i for i, b in enumerate(m.coefficients) if abs(b) > 1e-10}
        assert support == {0, 2}
        mses = dict(table)
        assert mses[1e-8] == min(mses.values())

    def test_tie_breaks_toward_larger_lambda(self):
        d = random_design(seed=21, n=10)
        lam_max = lasso_lambda_max(d)
        # both grid points sit past the dead zone: identical all-zero models
        spec, table = cross_validate(d, "lasso", [lam_max * 2, lam_max * 3], folds=2)
        assert spec.lam == lam_max * 3
        assert table[0][1] == table[1][1]

    def test_elastic_net_grid_uses_alpha_split(self):
        d = random_design(seed=22, n=10)
        spec, _ = cross_validate(d, "elastic_net", [1.0], folds=2, alpha=0.25)
        assert spec.lam1 == pytest.approx(0.25)
        assert spec.lam2 == pytest.approx(0.75)

    def test_preconditions(self):
        d = random_design(seed=23, n=4)
        with pytest.raises(RegressionError):
            cross_validate(d, "lasso", [], folds=2)
        with pytest.raises(RegressionError):
            cross_validate(d, "lasso", [0.1], folds=5)

    def test_contiguous_blocks_used(self):
        # fold boundaries follow sample order: a time-ordered step target is
        # predicted well only when blocks are contiguous
        x = np.arange(10.0).reshape(-1, 1)
        y = np.arange(10.0)
        d = DesignMatrix(x, y, ("t",))
        spec, table = cross_validate(d, "ridge", [0.0], folds=5)
        assert table[0][1] == pytest.approx(0.0, abs=1e-18)


class TestIterateLambda:
    def test_dead_zone_tail_is_zero(self):
        d = random_design(seed=25)
        lam_max = lasso_lambda_max(d)
        grid = [0.001, 0.1, lam_max * 1.5, lam_max * 2.0]
        path = iterate_lambda(d, "lasso", grid)
        assert np.all(path.coefficient_matrix[2:] == 0.0)

    def test_path_equals_pointwise_refits(self):
        d = random_design(seed=26)
        grid = [0.01, 0.1, 1.0]
        path = iterate_lambda(d, "lasso", grid)
        for i, lam in enumerate(grid):
            one_off = fit_lasso(d, lam)
            assert np.array_equal(path.coefficient_matrix[i], one_off.coefficients)

    def test_ridge_grid_metrics_recorded(self):
        d = random_design(seed=27)
        grid = [0.0, 0.25, 0.5]
        path = iterate_lambda(d, "ridge", grid)
        assert len(path.r2) == 3
        assert path.r2[0] == max(path.r2)  # training fit degrades with lambda

    def test_grid_must_ascend(self):
        d = random_design(seed=28)
        with pytest.raises(RegressionError, match="ascending"):
            iterate_lambda(d, "lasso", [0.1, 0.1])

    def test_csv_rows_shape(self):
        d = random_design(seed=29)
        path = iterate_lambda(d, "lasso", [0.1, 0.2])
        assert path.header() == ["lambda", "c0", "c1", "c2", "r2", "mse"]
        assert len(path.rows()) == 2 and len(path.rows()[0]) == 6


class TestMetrics:
    def test_perfect_fit(self):
        y = np.array([1.0, 2.0, 3.0])
        assert compute_mse(y, y) == 0.0
        assert compute_r2(y, y) == 1.0

    def test_null_model_r2_zero(self):
        y = np.array([1.0, 2.0, 3.0])
        y_hat = np.full(3, y.mean())
        assert compute_r2(y, y_hat) == pytest.approx(0.0, abs=1e-15)

    def test_seven_of_sixteen_sparsity(self):
        beta = np.zeros(16)
        beta[[2, 8, 9, 10, 13, 14, 15]] = [0.28, 0.12, 0.17, 0.02, 0.09, 0.0005, 0.35]
        m = fit_ols(random_design(seed=30, n=20, p=16))
        m = type(m)(intercept=0.0, coefficients=beta, penalty=None,
                    column_names=m.column_names)
        assert compute_sparsity(m) == 0.4375

    def test_zero_variance_target_errors(self):
        with pytest.raises(RegressionError, match="zero variance"):
            compute_r2([2.0, 2.0], [1.0, 3.0])

    def test_permutation_invariance(self):
        rng = np.random.default_rng(31)
        y = rng.normal(size=9)
        y_hat = rng.normal(size=9)
        perm = rng.permutation(9)
        assert compute_mse(y, y_hat) == pytest.approx(compute_mse(y[perm], y_hat[perm]))
        assert compute_r2(y, y_hat) == pytest.approx(compute_r2(y[perm], y_hat[perm]))

    def test_length_mismatch(self):
        with pytest.raises(RegressionError):
            compute_mse([1.0], [1.0, 2.0])


class TestPredict:
    def test_zero_model(self):
        d = random_design(seed=33)
        m = fit_ols(d)
        zero = type(m)(intercept=0.0, coefficients=np.zeros(d.p), penalty=None,
                       column_names=m.column_names)
        assert np.all(predict(zero, d.x) == 0.0)

    def test_width_mismatch(self):
        d = random_design(seed=34)
        m = fit_ols(d)
        with pytest.raises(RegressionError, match="width"):
            predict(m, np.ones((2, d.p + 1)))

    def test_training_predictions_match_report(self):
        d = random_design(seed=35)
        m = fit_ridge(d, 0.2)
        report = fit_report(m, d)
        again = predict(m, d.x)
        assert np.array_equal(report.y_hat, again)


class TestInvariants:
    def test_boundary_reductions_random_corpus(self):
        rng = np.random.default_rng(40)
        for _ in range(15):
            x, y = random_instance(rng)
            d = DesignMatrix(x, y, tuple(f"c{j}" for j in range(x.shape[1])))
            lam = float(rng.uniform(0.05, 1.5))
            ols = fit_ols(d)
            assert fit_lasso(d, 0.0).coefficients == pytest.approx(
                ols.coefficients, abs=1e-8)
            assert fit_ridge(d, 0.0).coefficients == pytest.approx(
                ols.coefficients, abs=1e-8)
            assert fit_elastic_net(d, 0.0, lam).coefficients == pytest.approx(
                fit_ridge(d, lam).coefficients, abs=1e-8)
            assert fit_elastic_net(d, lam, 0.0).coefficients == pytest.approx(
                fit_lasso(d, lam).coefficients, abs=1e-8)

    def test_ols_r2_dominates_penalized(self):
        rng = np.random.default_rng(41)
        for _ in range(10):
            x, y = random_instance(rng)
            d = DesignMatrix(x, y, tuple(f"c{j}" for j in range(x.shape[1])))
            r2_ols = fit_report(fit_ols(d), d).r2
            for lam in (0.01, 0.5, 5.0):
                assert fit_report(fit_ridge(d, lam), d).r2 <= r2_ols + 1e-10
                assert fit_report(fit_lasso(d, lam), d).r2 <= r2_ols + 1e-10

    def test_fit_penalized_dispatch(self):
        d = random_design(seed=43)
        m = fit_penalized(d, PenaltySpec.ridge(0.3))
        assert m.penalty.kind == "ridge"
        m = fit_penalized(d, PenaltySpec.elastic_net(0.1, 0.2))
        assert m.penalty.kind == "elastic_net"
