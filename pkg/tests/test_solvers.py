import numpy as np
import pytest
from sklearn.base import clone

from oracles import lasso_cd, lasso_objective
from trimsindy.experiments import lorenz_problem
from trimsindy.library import Library, integral_library
from trimsindy.metrics import support_recovery
from trimsindy.numerics import RankDeficiencyError
from trimsindy.preprocess import scale_library
from trimsindy.solvers import (ConvergenceError, EnsembleSTLSRegressor, IRL1Regressor,
                               STLSRegressor, TrimConfig, TrimmedLassoRegressor, ensemble_stls,
                               irl1, irl1_grid, lasso, stls, trim_gradient, trim_ivp, trim_path,
                               trim_solve, trimmed_lasso, trimmed_lasso_penalty)


def _random_problem(seed, M=40, P=8, sparsity=3, noise=0.1):
    rng = np.random.default_rng(seed)
    A = rng.standard_normal((M, P))
    xi = np.zeros(P)
    xi[rng.choice(P, sparsity, replace=False)] = rng.uniform(1, 3, sparsity) * rng.choice([-1, 1],
                                                                                          sparsity)
    return A, A @ xi + noise * rng.standard_normal(M), xi


@pytest.fixture(scope="module")
def noiseless_lorenz():
    return lorenz_problem(10, 0.01, 0.0, 0, 2)


class TestLasso:
    def test_orthonormal_soft_threshold(self):
        Q, _ = np.linalg.qr(np.random.default_rng(0).standard_normal((20, 5)))
        y = np.random.default_rng(1).standard_normal(20)
        lam, eta = 0.3, 0.05
        b = Q.T @ y
        expected = np.sign(b) * np.maximum(np.abs(b) - (lam + eta), 0)
        np.testing.assert_allclose(lasso(Q, y, lam, eta).coefficients, expected, atol=1e-10)

    def test_zero_threshold(self):
        A, y, _ = _random_problem(2)
        lam = np.abs(A.T @ y).max()
        assert lasso(A, y, lam).card == 0

    @pytest.mark.parametrize("seed", range(5))
    def test_matches_oracle(self, seed):
        A, y, _ = _random_problem(seed + 10, 50, 8)
        alpha = 0.2 * np.abs(A.T @ y).max()
        sol = lasso(A, y, alpha)
        ref = lasso_cd(A, y, alpha)
        assert abs(sol.hyperparams["objective"] - lasso_objective(A, y, ref, alpha)) < 1e-6
        assert sol.support == tuple(np.flatnonzero(ref))

    def test_linear_term_tilts_solution(self):
        A, y, _ = _random_problem(3)
        gamma = np.zeros(A.shape[1])
        gamma[0] = 5.0
        a = lasso(A, y, 1.0).coefficients
        b = lasso(A, y, 1.0, linear_term=gamma).coefficients
        assert b[0] > a[0]

    def test_non_convergence_raises_with_iterate(self):
        rng = np.random.default_rng(4)
        base = rng.standard_normal((30, 1))
        A = base + 1e-6 * rng.standard_normal((30, 6))
        y = rng.standard_normal(30)
        with pytest.raises(ConvergenceError) as info:
            lasso(A, y, 1e-4, max_sweeps=1)
        assert info.value.xi.shape == (6,)
        assert info.value.gap > 0

    def test_rejects_zero_penalty(self):
        with pytest.raises(ValueError):
            lasso(np.eye(3), np.ones(3), 0.0)


class TestSTLS:
    def test_small_threshold_is_least_squares(self):
        A, y, _ = _random_problem(5, noise=0.5)
        ls = np.linalg.lstsq(A, y, rcond=None)[0]
        np.testing.assert_allclose(stls(A, y, 1e-8)[0].coefficients, ls, atol=1e-10)

    def test_large_threshold_is_zero(self):
        A, y, _ = _random_problem(6)
        assert stls(A, y, 1e8)[0].card == 0

    def test_noiseless_lorenz(self, noiseless_lorenz):
        prob = noiseless_lorenz
        sols = stls(prob.library, prob.targets, 0.1, normalize=False)
        est = np.column_stack([s.coefficients for s in sols])
        assert support_recovery(est, prob.truth) == 1
        np.testing.assert_allclose(est, prob.truth, atol=1e-6)

    def test_rank_deficiency_names_labels(self):
        x = np.linspace(0, 1, 20)
        lib = Library(np.column_stack([x, 2 * x, x**2]), ["a", "b", "c"])
        with pytest.raises(RankDeficiencyError) as info:
            stls(lib, x + x**2, 1e-6, normalize=False)
        assert "a" in str(info.value) or "b" in str(info.value)

    def test_multiple_targets(self):
        A, y, _ = _random_problem(7)
        sols = stls(A, np.column_stack([y, -y]), 0.05)
        np.testing.assert_allclose(sols[1].coefficients, -sols[0].coefficients, atol=1e-9)


class TestEnsembleSTLS:
    def test_noiseless_matches_stls(self):
        A, y, _ = _random_problem(8, noise=0.0)
        e = ensemble_stls(A, y, 0.5, B=20, seed=1)
        s = stls(A, y, 0.5)[0]
        assert e.support == s.support
        np.testing.assert_allclose(e.coefficients, s.coefficients, atol=1e-8)

    def test_full_inclusion_drops_disputed_columns(self):
        A, y, xi = _random_problem(9, M=25, noise=1.5)
        loose = ensemble_stls(A, y, 0.3, B=50, inclusion=0.1, seed=2)
        strict = ensemble_stls(A, y, 0.3, B=50, inclusion=1.0, seed=2)
        assert set(strict.support) <= set(loose.support)
        assert len(strict.support) < len(loose.support)

    def test_deterministic(self):
        A, y, _ = _random_problem(10, noise=0.5)
        a = ensemble_stls(A, y, 0.3, B=10, seed=4)
        b = ensemble_stls(A, y, 0.3, B=10, seed=4)
        np.testing.assert_array_equal(a.coefficients, b.coefficients)

    def test_rejects_single_draw(self):
        A, y, _ = _random_problem(11)
        with pytest.raises(ValueError):
            ensemble_stls(A, y, 0.3, B=1)


class TestIRL1:
    def test_small_exponent_keeps_lasso_support(self):
        A, y, _ = _random_problem(12, noise=0.3)
        S, _ = scale_library(A)
        lam = 0.1 * np.abs(S.T @ y).max()
        assert irl1(A, y, lam, gamma_exponent=1e-8).support == lasso(S, y, lam).support

    def test_zero_stays_zero(self):
        A, y, _ = _random_problem(13, noise=0.3)
        S, _ = scale_library(A)
        for frac in (0.05, 0.2, 0.5):
            lam = frac * np.abs(S.T @ y).max()
            assert set(irl1(A, y, lam, 2.0).support) <= set(lasso(S, y, lam).support)

    def test_noiseless_lorenz_dof1_exact_somewhere(self, noiseless_lorenz):
        prob = noiseless_lorenz
        sols = irl1_grid(prob.library, prob.targets[:, 0], np.geomspace(1e-10, 1e6, 75), [2.0])
        truth = set(np.flatnonzero(prob.truth[:, 0]))
        assert any(s is not None and set(s.support) == truth for s in sols)

    def test_grid_layout_matches_single_calls(self):
        A, y, _ = _random_problem(14, noise=0.3)
        lams = [0.5, 0.05]
        flat = irl1_grid(A, y, lams, [1.0, 2.0])
        for e, q in enumerate((1.0, 2.0)):
            for i, lam in enumerate(lams):
                ref = irl1(A, y, lam, q)
                np.testing.assert_allclose(flat[e * 2 + i].coefficients, ref.coefficients,
                                           atol=1e-6)


class TestTrimmedPenalty:
    def test_examples(self):
        xi = np.array([3.0, -1.0, 2.0])
        assert trimmed_lasso_penalty(xi, 1) == 3.0
        assert trimmed_lasso_penalty(xi, 0) == 6.0
        assert trimmed_lasso_penalty(xi, 3) == 0.0

    def test_gradient_examples(self):
        xi = np.array([3.0, -1.0, 2.0])
        np.testing.assert_array_equal(trim_gradient(xi, 1, 0.5), [0.5, 0, 0])
        np.testing.assert_array_equal(trim_gradient(xi, 0, 0.5), [0, 0, 0])
        np.testing.assert_array_equal(trim_gradient(xi, 2, 1.0), [1, 0, 1])

    def test_ties_go_to_lower_index(self):
        np.testing.assert_array_equal(trim_gradient(np.array([1.0, -1.0, 1.0]), 1, 1.0),
                                      [1, 0, 0])
        np.testing.assert_array_equal(trim_gradient(np.array([0.0, -2.0, 2.0]), 1, 1.0),
                                      [0, -1, 0])

    def test_rejects_bad_k(self):
        with pytest.raises(ValueError):
            trimmed_lasso_penalty(np.ones(3), 4)
        with pytest.raises(ValueError):
            trim_gradient(np.ones(3), -1, 1.0)


class TestTrimSolve:
    def test_returns_least_squares_when_k_matches(self):
        rng = np.random.default_rng(15)
        A = rng.standard_normal((10, 3))
        y = A @ np.array([1.0, -2.0, 0.5])
        sol = trim_solve(A, y, k=3)
        np.testing.assert_allclose(sol.coefficients, [1.0, -2.0, 0.5], atol=1e-10)

    def test_k_zero_alternation_is_lasso(self):
        A, y, _ = _random_problem(16)
        S, _ = scale_library(A)
        lam, eta = 0.3, 1e-3
        xi, f = trimmed_lasso(S, y, 0, lam, eta, xi0=np.random.default_rng(0).standard_normal(8))
        ref = lasso(S, y, lam, eta)
        assert f == pytest.approx(ref.hyperparams["objective"], abs=1e-8)
        assert tuple(np.flatnonzero(xi)) == ref.support

    def test_cardinality_bound(self):
        for seed in range(5):
            A, y, _ = _random_problem(20 + seed, noise=1.0)
            for k in (1, 2, 4):
                assert trim_solve(A, y, k=k, seed=seed).card <= k

    def test_residual_monotone_in_k(self):
        for seed in range(4):
            A, y, _ = _random_problem(30 + seed, P=6, noise=0.5)
            res = [s.residual_norm for s in trim_path(A, y, range(1, 7))]
            assert np.all(np.diff(res) <= 1e-9 * res[0])

    def test_residual_consistent_with_coefficients(self):
        A, y, _ = _random_problem(40)
        sol = trim_solve(A, y, k=3)
        assert sol.recompute_residual(A, y) == pytest.approx(sol.residual_norm, rel=1e-10)
        assert sol.support == tuple(np.flatnonzero(sol.coefficients))

    def test_permutation_equivariance(self):
        A, y, _ = _random_problem(41, noise=0.3)
        perm = np.random.default_rng(0).permutation(A.shape[1])
        a = trim_solve(A, y, k=3, seed=5)
        b = trim_solve(A[:, perm], y, k=3, seed=5)
        assert sorted(perm[list(b.support)]) == sorted(a.support)

    def test_reports_projection_flag(self):
        A, y, _ = _random_problem(42)
        sol = trim_solve(A, y, k=2, nu=5, restarts=1)
        assert sol.flags["projected"] is False
        assert sol.hyperparams["k"] == 2

    def test_duplicate_columns_are_merged(self):
        A, y, _ = _random_problem(43)
        A2 = np.column_stack([A, A[:, 0]])
        assert trim_solve(A2, y, k=3).card <= 3

    def test_config_validation(self):
        with pytest.raises(ValueError):
            TrimConfig(nu=3)
        with pytest.raises(ValueError):
            TrimConfig(eta=0.0)
        with pytest.raises(ValueError):
            trim_solve(np.eye(3), np.ones(3), k=4)

    @staticmethod
    def _lorenz_dof2(seed):
        prob = lorenz_problem(4, 0.01, 2.0, seed, 3)
        sol = trim_solve(prob.library, prob.targets[:, 1], k=3, seed=seed)
        labels = prob.library.labels
        coef = [sol.coefficients[labels.index(t)] for t in ("x", "y", "x*z")]
        return set(sol.support_labels) == {"x", "y", "x*z"}, coef

    def test_lorenz_second_state_coefficients(self):
        hits = 0
        for seed in range(10):
            found, coef = self._lorenz_dof2(seed)
            if found:
                np.testing.assert_allclose(coef, [28.0, -1.0, -1.0], rtol=0.1)
                hits += 1
        assert hits > 0

    @pytest.mark.xfail(strict=True, reason="the alternation settles on {x, x*z, y*z} for "
                       "some noise draws although {x, y, x*z} has a lower residual")
    def test_lorenz_second_state_every_seed(self):
        assert all(self._lorenz_dof2(seed)[0] for seed in range(10))


class TestTrimIVP:
    def test_exponential(self):
        dt = 0.01
        t = np.arange(501) * dt
        z = np.exp(-t)
        other = np.cos(3 * t)
        lib = Library(np.column_stack([z, other]), ["z", "c"])
        sol, z0 = trim_ivp(integral_library(lib, dt), z, k=1)
        assert sol.support_labels == ["z"]
        assert sol.coefficients[0] == pytest.approx(-1.0, abs=1e-3)
        assert z0 == pytest.approx(1.0, abs=1e-3)

    def test_constant_signal(self):
        rng = np.random.default_rng(44)
        lib = Library(rng.standard_normal((50, 3)), ["a", "b", "c"])
        sol, z0 = trim_ivp(integral_library(lib, 0.1), np.full(50, 2.5), k=0)
        assert z0 == pytest.approx(2.5)
        np.testing.assert_array_equal(sol.coefficients, 0.0)


class TestEstimators:
    @pytest.mark.parametrize("est", [STLSRegressor(threshold=0.5),
                                     EnsembleSTLSRegressor(threshold=0.5, n_bootstrap=10),
                                     IRL1Regressor(alpha=0.05), TrimmedLassoRegressor(k=3)])
    def test_fit_predict(self, est):
        A, y, xi = _random_problem(50, noise=0.0)
        model = clone(est).fit(A, y)
        assert model.coef_.shape == (8,)
        np.testing.assert_allclose(model.predict(A), A @ model.coef_)
        assert len(model.support_) == 1

    def test_trim_estimator_multi_output(self):
        A, y, _ = _random_problem(51, noise=0.0)
        model = TrimmedLassoRegressor(k=3).fit(A, np.column_stack([y, -y]))
        assert model.coef_.shape == (2, 8)
        np.testing.assert_allclose(model.coef_[1], -model.coef_[0], atol=1e-8)


@pytest.mark.xfail(strict=True, reason="with RICc selection over the 100-point threshold grid "
                   "bagging recovers 32 of 60 runs against 36 for plain STLS")
def test_ensemble_at_least_as_reliable_as_stls_on_noisy_lorenz():
    from trimsindy.experiments import lorenz_trial

    hits = {"stls": 0, "estls": 0}
    for T in (2, 6, 10):
        for seed in range(20):
            for r in lorenz_trial(T, 2.0, seed, 2, estimators=("stls", "estls")):
                hits[r.estimator] += r.support_exact
    assert hits["estls"] >= hits["stls"]
