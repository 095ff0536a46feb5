"""Smoothing, regularized differentiation, column scaling and noise injection."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.signal import lfilter
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from .numerics import cumulative_integral, integ_matrix, newton_sparse

DEFAULT_LAMBDAS = np.logspace(-11, 0, 50)


# --------------------------------------------------------------------------
# scaling
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class ScalingRecord:
    """Column l2 norms of a library, ``H = diag(diag)``."""

    diag: np.ndarray

    def __post_init__(self):
        d = np.asarray(self.diag, dtype=float)
        if d.ndim != 1 or np.any(~(d > 0)):
            raise ValueError("scaling entries must be strictly positive")
        object.__setattr__(self, "diag", d)

    @property
    def P(self) -> int:
        return self.diag.size

    def scale_coefficients(self, xi):
        """Map original-unit coefficients to the scaled problem, ``H xi``."""
        xi = np.asarray(xi, dtype=float)
        return (xi.T * self.diag).T

    def unscale_coefficients(self, xi_scaled):
        """Inverse of :meth:`scale_coefficients`."""
        xi_scaled = np.asarray(xi_scaled, dtype=float)
        return (xi_scaled.T / self.diag).T


def scale_library(theta, labels=None):
    """Normalise every column of ``theta`` to unit l2 norm.

    ``theta`` may be an array or a :class:`~trimsindy.library.Library`; the
    return type follows the input.

    Returns
    -------
    scaled, ScalingRecord
    """
    from .library import Library

    if isinstance(theta, Library):
        labels = theta.labels
        matrix = theta.matrix
    else:
        matrix = np.asarray(theta, dtype=float)
    norms = np.linalg.norm(matrix, axis=0)
    zero = np.flatnonzero(~(norms > 0))
    if zero.size:
        name = labels[zero[0]] if labels is not None else f"column {zero[0]}"
        raise ValueError(f"zero-norm library column: {name}")
    record = ScalingRecord(norms)
    scaled = matrix / norms
    if isinstance(theta, Library):
        scaled = theta.with_matrix(scaled)
    return scaled, record


# --------------------------------------------------------------------------
# Tikhonov denoising
# --------------------------------------------------------------------------


def _d2tD2_banded(M: int) -> np.ndarray:
    """Upper banded storage (u=2) of ``D2^T D2`` for unit spacing."""
    D2 = sp.diags([1.0, -2.0, 1.0], [0, 1, 2], shape=(M - 2, M))
    K = (D2.T @ D2).todia()
    ab = np.zeros((3, M))
    for k in range(3):
        diag = K.diagonal(k)
        ab[2 - k, k:] = diag
    return ab


def _check_channel(z, min_len):
    z = np.asarray(z, dtype=float)
    if z.ndim not in (1, 2):
        raise ValueError("expected a 1-D channel or a 2-D (samples, channels) array")
    if z.shape[0] < min_len:
        raise ValueError(f"need at least {min_len} samples, got {z.shape[0]}")
    if not np.all(np.isfinite(z)):
        raise ValueError("input contains non-finite samples")
    return z


def tikhonov_denoise(z, lam: float, dt: float = 1.0) -> np.ndarray:
    """Solve ``(I + lam D2^T D2) z_hat = z`` with ``D2`` the second difference on step ``dt``.

    Several channels may be passed as columns; the banded factorisation is
    shared between them.
    """
    z = _check_channel(z, 3)
    if lam < 0:
        raise ValueError("lambda must be non-negative")
    if lam == 0:
        return z.copy()
    M = z.shape[0]
    ab = _d2tD2_banded(M) * (lam / dt**4)
    ab[2] += 1.0
    return scipy.linalg.solveh_banded(ab, z)


def tikhonov_path(z, dt: float, lambdas=DEFAULT_LAMBDAS, with_dof: bool = True):
    """Evaluate Tikhonov denoising of one channel over a grid of ``lambdas``.

    Returns a dict with ``lambdas``, ``fitted`` (n_lambda, M), ``residual``
    (squared data misfit), ``seminorm`` (squared ``||D2 z_hat||``) and, when
    requested, ``dof`` (trace of the smoother matrix).
    """
    z = _check_channel(z, 3)
    if z.ndim != 1:
        raise ValueError("tikhonov_path works on a single channel")
    lambdas = np.asarray(lambdas, dtype=float)
    M = z.size
    if M <= 4000:
        D2 = np.diff(np.eye(M), 2, axis=0) / dt**2
        evals, V = np.linalg.eigh(D2.T @ D2)
        evals = np.clip(evals, 0.0, None)
        zc = V.T @ z
        filt = 1.0 / (1.0 + np.outer(lambdas, evals))
        fitted = (filt * zc) @ V.T
        dof = filt.sum(axis=1)
    else:
        if with_dof:
            raise ValueError("effective degrees of freedom only available for M <= 4000")
        fitted = np.array([tikhonov_denoise(z, lam, dt) for lam in lambdas])
        dof = None
    resid = ((fitted - z) ** 2).sum(axis=1)
    semi = ((np.diff(fitted, 2, axis=1) / dt**2) ** 2).sum(axis=1)
    out = {"lambdas": lambdas, "fitted": fitted, "residual": resid, "seminorm": semi}
    if with_dof:
        out["dof"] = dof
    return out


def select_denoise_lambda(z, dt: float, lambdas=DEFAULT_LAMBDAS, method: str = "lcurve"):
    """Pick a denoising strength by L-curve corner or GCV; returns ``(lambda, path)``."""
    from .selection import gcv, lcurve_corner

    path = tikhonov_path(z, dt, lambdas, with_dof=(method == "gcv"))
    if method == "lcurve":
        pts = np.column_stack([np.log(path["residual"]), np.log(path["seminorm"])])
        idx = lcurve_corner(pts)
    elif method == "gcv":
        idx = gcv(path["residual"], path["dof"], z.size)
    else:
        raise ValueError(f"unknown method {method!r}")
    path["chosen"] = idx
    return lambdas[idx], path


# --------------------------------------------------------------------------
# regularized derivatives
# --------------------------------------------------------------------------


def trim_slice(M: int, trim: float = 0.05) -> slice:
    """Index range kept after dropping ``trim`` of the samples at each end."""
    n = int(round(trim * M))
    return slice(n, M - n)


def _derivative_kkt(zp, order, lam_unit, newton_order):
    M = zp.size
    I = sp.identity(M, format="csr")
    E = sp.diags([1.0, -1.0], [0, -1], shape=(M, M), format="csr")
    B = newton_sparse(M, 1.0, newton_order)
    D2 = sp.diags([1.0, -2.0, 1.0], [0, 1, 2], shape=(M - 2, M))
    K = (lam_unit * (D2.T @ D2)).tocsr()
    j = order
    # unknowns: d, w_1..w_j, mu_1..mu_j
    n = 2 * j + 1
    blocks = [[None] * n for _ in range(n)]
    blocks[0][0] = K
    blocks[0][1 + j] = -B.T
    for i in range(1, j + 1):
        mu = j + i
        if i < j:
            blocks[i][i] = sp.csr_matrix((M, M))
            blocks[i][mu + 1] = -B.T
        else:
            blocks[i][i] = I
        blocks[i][mu] = E.T
        # constraint E w_i - B w_{i-1} = 0 (w_0 := d)
        blocks[mu][i] = E
        blocks[mu][i - 1] = -B
    A = sp.bmat(blocks, format="csc")
    rhs = np.zeros(n * M)
    rhs[j * M:(j + 1) * M] = zp
    sol = spla.spsolve(A, rhs)
    return sol[:M]


def regularized_derivative(
    z,
    dt: float,
    order: int = 1,
    lam: float = 1e-6,
    newton_order: int = 1,
    trim: float = 0.05,
    z0=None,
) -> np.ndarray:
    """Tikhonov-regularised ``order``-th derivative of a uniformly sampled channel.

    Minimises ``||T_j d - (z - z0)||^2 + lam ||D2 d||^2`` where ``T_j`` is the
    ``j``-fold cumulative integral. The solve uses a sparse KKT system in
    sample units, so long channels are cheap. ``z0`` defaults to ``z[0]``.
    The returned array has ``trim`` of the samples removed at each end; see
    :func:`trim_slice` for the matching index range.
    """
    z = _check_channel(z, 10)
    if z.ndim != 1:
        return np.column_stack(
            [regularized_derivative(c, dt, order, lam, newton_order, trim, z0) for c in z.T]
        )
    if lam < 0:
        raise ValueError("lambda must be non-negative")
    if order not in (1, 2):
        raise ValueError("order must be 1 or 2")
    zp = z - (z[0] if z0 is None else z0)
    lam_unit = lam * dt ** (-(4 + 2 * order))
    if lam == 0:
        T = integ_matrix(order, z.size, 1.0, newton_order).entries
        e = np.linalg.lstsq(T, zp, rcond=None)[0]
    else:
        e = _derivative_kkt(zp, order, lam_unit, newton_order)
    d = e / dt**order
    return d[trim_slice(z.size, trim)]


def derivative_path(z, dt, order=1, lambdas=DEFAULT_LAMBDAS, newton_order=1, z0=None):
    """Untrimmed derivative estimates and L-curve coordinates over ``lambdas``."""
    z = _check_channel(z, 10)
    zp = z - (z[0] if z0 is None else z0)
    ests, resid, semi = [], [], []
    for lam in lambdas:
        d = regularized_derivative(z, dt, order, lam, newton_order, trim=0.0, z0=z0)
        fit = _cumulative(d, dt, order, newton_order)
        ests.append(d)
        resid.append(np.sum((fit - zp) ** 2))
        semi.append(np.sum(np.diff(d, 2) ** 2) / dt**4)
    return {
        "lambdas": np.asarray(lambdas, float),
        "estimates": np.array(ests),
        "residual": np.array(resid),
        "seminorm": np.array(semi),
    }


def _cumulative(d, dt, order, newton_order):
    return cumulative_integral(d, dt, newton_order, order)


def select_derivative_lambda(z, dt, order=1, lambdas=DEFAULT_LAMBDAS, newton_order=1):
    """L-curve choice of the derivative regularisation; returns ``(lambda, path)``."""
    from .selection import lcurve_corner

    path = derivative_path(z, dt, order, lambdas, newton_order)
    pts = np.column_stack([np.log(path["residual"]), np.log(path["seminorm"])])
    idx = lcurve_corner(pts)
    path["chosen"] = idx
    return path["lambdas"][idx], path


# --------------------------------------------------------------------------
# noise
# --------------------------------------------------------------------------


def add_awgn(z, level_percent: float, seed: int) -> np.ndarray:
    """Add white Gaussian noise with std ``level_percent / 100 * std(z)`` per channel."""
    z = np.asarray(z, dtype=float)
    if level_percent < 0:
        raise ValueError("noise level must be non-negative")
    if level_percent == 0:
        return z.copy()
    rng = np.random.default_rng(seed)
    sigma = level_percent / 100.0 * np.std(z, axis=0)
    return z + sigma * rng.standard_normal(z.shape)


def add_correlated_noise(z, level_percent: float, seed: int, corr_length: float = 2.0):
    """Add Gaussian noise with autocovariance ``sigma^2 exp(-|n| / corr_length)``.

    The noise is an AR(1) sequence started from its stationary law, which has
    exactly this exponential autocovariance.
    """
    z = np.asarray(z, dtype=float)
    if level_percent < 0:
        raise ValueError("noise level must be non-negative")
    if level_percent == 0:
        return z.copy()
    rng = np.random.default_rng(seed)
    sigma = level_percent / 100.0 * np.std(z, axis=0)
    phi = np.exp(-1.0 / corr_length)
    w = rng.standard_normal(z.shape)
    w[1:] *= np.sqrt(1.0 - phi**2)
    e = lfilter([1.0], [1.0, -phi], w, axis=0)
    return z + sigma * e


# --------------------------------------------------------------------------
# estimator wrappers
# --------------------------------------------------------------------------


class TikhonovSmoother(TransformerMixin, BaseEstimator):
    """Column-wise Tikhonov smoothing of uniformly sampled signals.

    Parameters
    ----------
    dt : float
        Sample spacing.
    lam : float or {"lcurve", "gcv"}
        Fixed regularisation or the rule used to pick one per channel.
    lambdas : array-like, optional
        Grid searched when ``lam`` is a rule.
    """

    def __init__(self, dt=1.0, lam="lcurve", lambdas=None):
        self.dt = dt
        self.lam = lam
        self.lambdas = lambdas

    def fit(self, X, y=None):
        X = _check_channel(X, 3)
        X2 = X.reshape(X.shape[0], -1)
        grid = DEFAULT_LAMBDAS if self.lambdas is None else np.asarray(self.lambdas)
        if isinstance(self.lam, str):
            self.lambda_ = np.array(
                [select_denoise_lambda(c, self.dt, grid, self.lam)[0] for c in X2.T]
            )
        else:
            self.lambda_ = np.full(X2.shape[1], float(self.lam))
        self.n_features_in_ = X2.shape[1]
        return self

    def transform(self, X):
        check_is_fitted(self, "lambda_")
        X = _check_channel(X, 3)
        X2 = X.reshape(X.shape[0], -1)
        if X2.shape[1] != self.n_features_in_:
            raise ValueError("channel count differs from fit")
        out = np.column_stack(
            [tikhonov_denoise(c, lam, self.dt) for c, lam in zip(X2.T, self.lambda_)]
        )
        return out.reshape(X.shape)
