import numpy as np
import pytest

from trimsindy.experiments import lorenz_problem
from trimsindy.library import poly_library
from trimsindy.preprocess import (ScalingRecord, TikhonovSmoother, add_awgn, add_correlated_noise,
                                  derivative_path, regularized_derivative, scale_library,
                                  select_denoise_lambda, tikhonov_denoise, tikhonov_path,
                                  trim_slice)


def _d2(M, dt):
    return np.diff(np.eye(M), 2, axis=0) / dt**2


class TestTikhonovDenoise:
    def test_zero_lambda_is_identity(self):
        z = np.random.default_rng(0).standard_normal(50)
        np.testing.assert_array_equal(tikhonov_denoise(z, 0.0), z)

    def test_large_lambda_tends_to_affine_fit(self):
        rng = np.random.default_rng(1)
        t = np.linspace(0, 1, 60)
        z = np.sin(5 * t) + 0.1 * rng.standard_normal(60)
        affine = np.polyval(np.polyfit(t, z, 1), t)
        errs = [np.abs(tikhonov_denoise(z, lam, t[1] - t[0]) - affine).max()
                for lam in (1e-2, 1.0, 1e2)]
        assert errs[0] > errs[1] > errs[2]
        assert errs[2] < 1e-4

    def test_satisfies_normal_equations(self):
        rng = np.random.default_rng(2)
        M, dt, lam = 80, 0.05, 1e-3
        z = rng.standard_normal(M)
        zh = tikhonov_denoise(z, lam, dt)
        D2 = _d2(M, dt)
        lhs = zh + lam * D2.T @ (D2 @ zh)
        assert np.linalg.norm(lhs - z) / np.linalg.norm(z) < 1e-8

    def test_multichannel_matches_columnwise(self):
        rng = np.random.default_rng(3)
        Z = rng.standard_normal((40, 3))
        out = tikhonov_denoise(Z, 0.1, 0.1)
        for j in range(3):
            np.testing.assert_allclose(out[:, j], tikhonov_denoise(Z[:, j], 0.1, 0.1))

    def test_rejects_non_finite(self):
        z = np.ones(10)
        z[3] = np.nan
        with pytest.raises(ValueError):
            tikhonov_denoise(z, 1.0)
        with pytest.raises(ValueError):
            tikhonov_denoise(np.ones(10), -1.0)

    def test_path_matches_direct_solves(self):
        rng = np.random.default_rng(4)
        z = np.cumsum(rng.standard_normal(120))
        lams = np.logspace(-6, -2, 5)
        path = tikhonov_path(z, 0.1, lams)
        for i, lam in enumerate(lams):
            np.testing.assert_allclose(path["fitted"][i], tikhonov_denoise(z, lam, 0.1),
                                       atol=1e-8)
        assert np.all(np.diff(path["dof"]) < 0)
        assert np.all(np.diff(path["residual"]) > 0)

    def test_gcv_choice_close_to_rmse_optimum(self):
        rng = np.random.default_rng(5)
        dt = 0.01
        t = np.arange(400) * dt
        clean = np.sin(2 * np.pi * t) + 0.5 * np.cos(5 * t)
        noisy = clean + 0.05 * rng.standard_normal(t.size)
        lams = np.logspace(-11, 0, 50)
        _, path = select_denoise_lambda(noisy, dt, lams, "gcv")
        err = np.sqrt(((path["fitted"] - clean) ** 2).mean(axis=1))
        assert abs(path["chosen"] - int(np.argmin(err))) <= 1

    def test_smoother_estimator(self):
        rng = np.random.default_rng(6)
        t = np.linspace(0, 2, 300)
        X = np.column_stack([np.sin(3 * t), np.cos(2 * t)])
        Xn = X + 0.02 * rng.standard_normal(X.shape)
        sm = TikhonovSmoother(dt=t[1] - t[0]).fit(Xn)
        out = sm.transform(Xn)
        assert out.shape == X.shape
        assert np.abs(out - X).mean() < np.abs(Xn - X).mean()


class TestRegularizedDerivative:
    def test_derivative_of_square(self):
        dt = 1e-3
        t = np.arange(1001) * dt
        d = regularized_derivative(t**2, dt, 1, 1e-14)
        assert np.abs(d - 2 * t[trim_slice(t.size)]).max() < 1e-2

    def test_constant_has_zero_derivative(self):
        for order in (1, 2):
            d = regularized_derivative(np.full(200, 3.0), 0.01, order, 1e-6)
            np.testing.assert_allclose(d, 0.0, atol=1e-12)

    def test_second_derivative_of_cubic(self):
        dt = 1e-2
        t = np.arange(301) * dt
        d = regularized_derivative(t**3, dt, 2, 1e-20, newton_order=3)
        np.testing.assert_allclose(d, 6 * t[trim_slice(t.size)], atol=1e-5)

    def test_noisy_sine_beats_forward_differences(self):
        dt = 0.01
        t = np.arange(0, 10 + dt / 2, dt)
        zn = add_awgn(np.sin(t), 1.0, 0)
        path = derivative_path(zn, dt, 1)
        pts = np.column_stack([np.log(path["residual"]), np.log(path["seminorm"])])
        from trimsindy.selection import lcurve_corner
        lam = path["lambdas"][lcurve_corner(pts)]
        keep = trim_slice(t.size)
        d = regularized_derivative(zn, dt, 1, lam)
        fd = (np.diff(zn) / dt)[keep]
        reg_rmse = np.sqrt(np.mean((d - np.cos(t[keep])) ** 2))
        fd_rmse = np.sqrt(np.mean((fd - np.cos(t[:-1][keep])) ** 2))
        assert 5 * reg_rmse < fd_rmse

    def test_linear_in_data(self):
        rng = np.random.default_rng(7)
        z1, z2 = rng.standard_normal((2, 100))
        op = lambda z: regularized_derivative(z, 0.1, 1, 1e-4)  # noqa: E731
        np.testing.assert_allclose(op(2 * z1 - 3 * z2), 2 * op(z1) - 3 * op(z2), atol=1e-8)

    def test_trimming_and_validation(self):
        assert regularized_derivative(np.arange(100.0), 1.0, 1, 1e-6).size == 90
        with pytest.raises(ValueError):
            regularized_derivative(np.arange(100.0), 1.0, 1, -1.0)
        with pytest.raises(ValueError):
            regularized_derivative(np.arange(5.0), 1.0, 1, 1.0)
        with pytest.raises(ValueError):
            regularized_derivative(np.arange(50.0), 1.0, 3, 1.0)


class TestScaling:
    def test_diagonal_example(self):
        theta = np.array([[2.0, 0.0], [0.0, 3.0]])
        S, rec = scale_library(theta)
        np.testing.assert_allclose(S, np.eye(2))
        np.testing.assert_allclose(rec.diag, [2, 3])

    def test_round_trip(self):
        rec = ScalingRecord(np.array([0.5, 2.0, 7.0]))
        xi = np.random.default_rng(8).standard_normal(3)
        np.testing.assert_allclose(rec.unscale_coefficients(rec.scale_coefficients(xi)), xi,
                                   rtol=1e-12)

    def test_fitted_values_unchanged(self):
        rng = np.random.default_rng(9)
        theta = rng.standard_normal((30, 4)) * [1, 10, 100, 0.01]
        xi = rng.standard_normal(4)
        S, rec = scale_library(theta)
        np.testing.assert_allclose(S @ rec.scale_coefficients(xi), theta @ xi, atol=1e-10)

    def test_zero_column_named(self):
        lib = poly_library(np.column_stack([np.zeros(10), np.arange(10.0)]), ["a", "b"], 1)
        with pytest.raises(ValueError, match="a"):
            scale_library(lib)

    def test_library_type_preserved(self):
        lib = poly_library(np.random.default_rng(0).standard_normal((20, 2)), ["a", "b"], 2)
        S, _ = scale_library(lib)
        assert S.labels == lib.labels
        np.testing.assert_allclose(np.linalg.norm(S.matrix, axis=0), 1.0)

    def test_lorenz_cubic_condition_number_drops(self):
        prob = lorenz_problem(4, 0.01, 2.0, 0, 3)
        S, _ = scale_library(prob.library)
        assert np.linalg.cond(S.matrix) < np.linalg.cond(prob.library.matrix)


class TestNoise:
    def test_zero_level_unchanged(self):
        z = np.arange(10.0)
        np.testing.assert_array_equal(add_awgn(z, 0, 1), z)
        np.testing.assert_array_equal(add_correlated_noise(z, 0, 1), z)

    def test_awgn_level(self):
        z = np.sin(np.linspace(0, 100, 100000))
        e = add_awgn(z, 2.0, 11) - z
        assert abs(np.std(e) / (0.02 * np.std(z)) - 1) < 0.05

    def test_deterministic(self):
        z = np.linspace(0, 1, 100)
        np.testing.assert_array_equal(add_awgn(z, 3.0, 5), add_awgn(z, 3.0, 5))
        np.testing.assert_array_equal(add_correlated_noise(z, 3.0, 5),
                                      add_correlated_noise(z, 3.0, 5))

    def test_correlated_autocovariance(self):
        z = np.sin(np.linspace(0, 200, 200000))
        e = add_correlated_noise(z, 3.0, 12) - z
        e = e - e.mean()
        c0 = np.mean(e * e)
        c2 = np.mean(e[:-2] * e[2:])
        assert abs(c2 / c0 - np.exp(-1)) < 0.1 * np.exp(-1)
        assert abs(np.sqrt(c0) / (0.03 * np.std(z)) - 1) < 0.05

    def test_negative_level_rejected(self):
        with pytest.raises(ValueError):
            add_awgn(np.ones(5), -1, 0)
