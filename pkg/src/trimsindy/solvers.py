"""Sparse regression estimators: Lasso, STLS, ensembled STLS, IRL1 and the trimmed Lasso."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np
from sklearn.base import BaseEstimator, RegressorMixin
from sklearn.utils.validation import check_is_fitted, validate_data

from . import _kernels
from .library import AugmentedLibrary, Library
from .numerics import RankDeficiencyError, least_squares
from .preprocess import ScalingRecord, scale_library


class ConvergenceError(RuntimeError):
    """An iterative solver stopped before meeting its optimality tolerance.

    Attributes
    ----------
    xi : ndarray
        Best iterate reached.
    gap : float
        KKT residual of that iterate.
    """

    def __init__(self, message, xi=None, gap=np.nan):
        super().__init__(message)
        self.xi = xi
        self.gap = gap


@dataclass
class SparseSolution:
    """Coefficients of one target together with their support and fit quality."""

    coefficients: np.ndarray
    residual_norm: float
    hyperparams: Dict[str, float] = field(default_factory=dict)
    labels: Optional[List[str]] = None
    flags: Dict[str, object] = field(default_factory=dict)

    def __post_init__(self):
        self.coefficients = np.asarray(self.coefficients, dtype=float)

    @property
    def support(self) -> tuple:
        return tuple(np.flatnonzero(self.coefficients).tolist())

    @property
    def card(self) -> int:
        return int(np.count_nonzero(self.coefficients))

    @property
    def support_labels(self) -> List[str]:
        if self.labels is None:
            return [str(i) for i in self.support]
        return [self.labels[i] for i in self.support]

    def recompute_residual(self, theta, y) -> float:
        return float(np.linalg.norm(_matrix(theta) @ self.coefficients - np.asarray(y, float)))

    def equation(self, precision: int = 4) -> str:
        terms = [
            f"{self.coefficients[i]:+.{precision}g} {lab}"
            for i, lab in zip(self.support, self.support_labels)
        ]
        return " ".join(terms) if terms else "0"


@dataclass
class TrimConfig:
    """Settings of the trimmed-Lasso solver.

    ``restarts`` random standard-normal starts are tried per penalty level;
    with ``warm_start`` the best iterate of the previous level is tried too,
    and with ``ls_start`` the minimum-norm least-squares solution as well.
    """

    k: int = 1
    nu: int = 10
    eta: float = 1e-3
    tol: float = 1e-8
    seed: int = 0
    restarts: int = 3
    max_alternations: int = 200
    warm_start: bool = True
    ls_start: bool = True
    debias: bool = True
    kkt_tol: float = 1e-10
    max_sweeps: int = 100000

    def __post_init__(self):
        if self.k < 0:
            raise ValueError("k must be non-negative")
        if self.nu < 5:
            raise ValueError("nu must be at least 5")
        if not self.eta > 0:
            raise ValueError("eta must be positive")
        if self.restarts < 1:
            raise ValueError("restarts must be >= 1")


def _matrix(theta) -> np.ndarray:
    if isinstance(theta, (Library, AugmentedLibrary)):
        return theta.matrix
    return np.asarray(theta, dtype=float)


def _labels(theta):
    return list(theta.labels) if isinstance(theta, (Library, AugmentedLibrary)) else None


def _targets(y):
    y = np.asarray(y, dtype=float)
    return y[:, None] if y.ndim == 1 else y


def _finish(A, y, xi, hyper, labels, flags=None) -> SparseSolution:
    res = float(np.linalg.norm(A @ xi - y))
    return SparseSolution(xi, res, dict(hyper), labels, dict(flags or {}))


def _debias(A, y, mask):
    try:
        return least_squares(A, y, mask)
    except RankDeficiencyError as exc:
        raise RankDeficiencyError(str(exc), exc.columns) from None


# --------------------------------------------------------------------------
# penalties
# --------------------------------------------------------------------------


def trimmed_lasso_penalty(xi, k: int) -> float:
    """Sum of the ``P - k`` smallest coefficient magnitudes."""
    xi = np.asarray(xi, dtype=float)
    if not 0 <= k <= xi.size:
        raise ValueError("k must lie in [0, P]")
    return float(_kernels.trimmed_penalty(xi, int(k)))


def trim_gradient(xi, k: int, lam: float) -> np.ndarray:
    """Linear term ``gamma``: ``lam * sign`` on the ``k`` largest entries, 0 elsewhere.

    Ties in magnitude go to the lower index.
    """
    xi = np.asarray(xi, dtype=float)
    if not 0 <= k <= xi.size:
        raise ValueError("k must lie in [0, P]")
    return _kernels.trim_gradient(xi, int(k), float(lam))


# --------------------------------------------------------------------------
# Lasso
# --------------------------------------------------------------------------


def _lasso_gram(G, c, alpha, gamma, xi0, tol, max_sweeps):
    xi = np.zeros(c.size) if xi0 is None else np.array(xi0, dtype=float)
    scale = max(np.abs(c).max(initial=0.0), np.finfo(float).tiny)
    gap, sweeps = _kernels.cd_lasso(G, c, alpha, gamma, xi, tol * scale, max_sweeps)
    if gap > tol * scale:
        raise ConvergenceError(
            f"coordinate descent stopped after {sweeps} sweeps (KKT gap {gap:.3g})", xi, gap
        )
    return xi


def lasso(theta, y, lam: float, eta: float = 0.0, linear_term=None, weights=None,
          xi0=None, tol: float = 1e-11, max_sweeps: int = 100000) -> SparseSolution:
    """Coordinate-descent solution of the (linearly tilted) Lasso.

    Minimises ``0.5 ||A x - y||^2 + (eta + lam) sum_i w_i |x_i| - <gamma, x>``.
    Coefficients are in the units of ``theta`` (no internal scaling).

    Raises
    ------
    ConvergenceError
        If the KKT residual stays above ``tol * ||A^T y||_inf``.
    """
    A = _matrix(theta)
    y = np.asarray(y, dtype=float)
    if not lam > 0 and not eta > 0:
        raise ValueError("the l1 weight eta + lam must be positive")
    P = A.shape[1]
    G = A.T @ A
    c = A.T @ y
    w = np.ones(P) if weights is None else np.asarray(weights, dtype=float)
    alpha = (eta + lam) * w
    gamma = np.zeros(P) if linear_term is None else np.asarray(linear_term, dtype=float)
    xi = _lasso_gram(G, c, alpha, gamma, xi0, tol, max_sweeps)
    obj = 0.5 * np.sum((A @ xi - y) ** 2) + np.sum(alpha * np.abs(xi)) - gamma @ xi
    return _finish(A, y, xi, {"lambda": lam, "eta": eta, "objective": obj}, _labels(theta))


# --------------------------------------------------------------------------
# STLS and its ensemble
# --------------------------------------------------------------------------


def stls(theta, targets, phi: float, max_iters: int = 20,
         normalize: bool = True) -> List[SparseSolution]:
    """Sequentially thresholded least squares, one solution per target column.

    The threshold applies to coefficients of the column-normalised library
    when ``normalize`` is true; returned coefficients are in original units.
    """
    if not phi > 0:
        raise ValueError("threshold must be positive")
    A = _matrix(theta)
    Y = _targets(targets)
    S, rec = scale_library(A) if normalize else (A, ScalingRecord(np.ones(A.shape[1])))
    out = []
    for y in Y.T:
        xi = least_squares(S, y)
        mask = np.ones(A.shape[1], dtype=bool)
        it = 0
        for it in range(1, max_iters + 1):
            new = np.abs(xi) >= phi
            if np.array_equal(new, mask):
                break
            mask = new
            xi = least_squares(S, y, mask)
        coef = rec.unscale_coefficients(xi)
        out.append(_finish(A, y, coef, {"phi": phi, "iterations": it}, _labels(theta)))
    return out


def _bootstrap_grams(S, y, B, seed):
    rng = np.random.default_rng(seed)
    M = S.shape[0]
    idx = rng.integers(0, M, size=(B, M))
    grams, cs = [], []
    for b in range(B):
        w = np.bincount(idx[b], minlength=M).astype(float)
        Sw = S * w[:, None]
        grams.append(Sw.T @ S)
        cs.append(Sw.T @ y)
    return grams, cs


def ensemble_stls_path(theta, y, phis: Sequence[float], B: int = 100, inclusion: float = 0.6,
                       seed: int = 0, max_iters: int = 20, normalize: bool = True):
    """Bagged STLS evaluated for every threshold in ``phis`` on shared resamples.

    Each entry of the returned list is a :class:`SparseSolution` whose
    coefficients come from a least-squares refit on the columns selected in
    at least ``inclusion`` of the ``B`` bootstrap fits. Thresholds whose refit
    fails carry the exception under ``flags["error"]`` and zero coefficients.
    """
    if B < 2:
        raise ValueError("need at least two bootstrap resamples")
    A = _matrix(theta)
    y = np.asarray(y, dtype=float)
    S, rec = scale_library(A) if normalize else (A, ScalingRecord(np.ones(A.shape[1])))
    grams, cs = _bootstrap_grams(S, y, B, seed)
    out = []
    for phi in phis:
        if not phi > 0:
            raise ValueError("threshold must be positive")
        draws = np.zeros((B, A.shape[1]))
        failed = 0
        for b in range(B):
            xi, ok = _kernels.stls_gram(grams[b], cs[b], float(phi), max_iters)
            if not ok:
                failed += 1
                xi = np.zeros(A.shape[1])
            draws[b] = xi
        freq = (draws != 0).mean(axis=0)
        keep = freq >= inclusion
        median = np.where(keep, np.median(draws, axis=0), 0.0)
        hyper = {"phi": float(phi), "B": B, "inclusion": inclusion}
        flags = {"inclusion_frequency": freq, "median": rec.unscale_coefficients(median),
                 "failed_resamples": failed}
        try:
            coef = rec.unscale_coefficients(_debias(S, y, keep))
        except RankDeficiencyError as exc:
            flags["error"] = exc
            coef = np.zeros(A.shape[1])
        out.append(_finish(A, y, coef, hyper, _labels(theta), flags))
    return out


def ensemble_stls(theta, target, phi: float, B: int = 100, inclusion: float = 0.6,
                  seed: int = 0, max_iters: int = 20, normalize: bool = True) -> SparseSolution:
    """Bagged STLS (median aggregation with an inclusion-frequency cut) at one threshold."""
    sol = ensemble_stls_path(theta, target, [phi], B, inclusion, seed, max_iters, normalize)[0]
    if "error" in sol.flags:
        raise sol.flags["error"]
    return sol


# --------------------------------------------------------------------------
# IRL1
# --------------------------------------------------------------------------


def irl1(theta, y, lam: float, gamma_exponent: float = 1.0, reweight_iters: int = 2,
         eps_w: float = 1e-6, normalize: bool = True, tol: float = 1e-11,
         max_sweeps: int = 100000) -> SparseSolution:
    """Iteratively reweighted l1 (adaptive Lasso) followed by a least-squares refit.

    Stage 0 is a plain Lasso; each reweighting uses ``1 / (|xi| + eps_w)**gamma``.
    Coefficients that are exactly zero get an infinite weight and stay zero.
    """
    return irl1_path(theta, y, [lam], gamma_exponent, reweight_iters, eps_w, normalize, tol,
                     max_sweeps)[0]


def irl1_path(theta, y, lambdas: Sequence[float], gamma_exponent: float = 1.0,
              reweight_iters: int = 2, eps_w: float = 1e-6, normalize: bool = True,
              tol: float = 1e-11, max_sweeps: int = 100000) -> List[SparseSolution]:
    """:func:`irl1` at every penalty in ``lambdas`` sharing one scaling and Gram matrix.

    Penalties are visited from largest to smallest and each stage-0 Lasso is
    started from the previous one, which does not change the (unique) Lasso
    solutions but saves most of the coordinate-descent sweeps. Solutions are
    returned in the order of ``lambdas``.
    """
    return irl1_grid(theta, y, lambdas, [gamma_exponent], reweight_iters, eps_w, normalize,
                     tol, max_sweeps)


def irl1_grid(theta, y, lambdas: Sequence[float], exponents: Sequence[float],
              reweight_iters: int = 2, eps_w: float = 1e-6, normalize: bool = True,
              tol: float = 1e-11, max_sweeps: int = 100000) -> List[SparseSolution]:
    """IRL1 over the product of ``exponents`` and ``lambdas``.

    The stage-0 Lasso does not depend on the exponent and is computed once
    per penalty. The result is ordered exponent-major: entry
    ``e * len(lambdas) + i`` belongs to ``(lambdas[i], exponents[e])``.
    """
    lambdas = np.asarray(lambdas, dtype=float)
    if np.any(~(lambdas > 0)):
        raise ValueError("lambda must be positive")
    if any(not q >= 0 for q in exponents):
        raise ValueError("gamma exponent must be non-negative")
    A = _matrix(theta)
    y = np.asarray(y, dtype=float)
    S, rec = scale_library(A) if normalize else (A, ScalingRecord(np.ones(A.shape[1])))
    G = S.T @ S
    c = S.T @ y
    P = c.size
    zero = np.zeros(P)
    stage0: List[Optional[np.ndarray]] = [None] * lambdas.size
    start = None
    for i in np.argsort(-lambdas, kind="stable"):
        stage0[i] = _lasso_gram(G, c, np.full(P, lambdas[i]), zero, start, tol, max_sweeps)
        start = stage0[i].copy()
    out = []
    for q in exponents:
        for i, lam in enumerate(lambdas):
            xi = stage0[i].copy()
            for _ in range(reweight_iters):
                w = np.full(P, np.inf)
                nz = xi != 0
                w[nz] = 1.0 / (np.abs(xi[nz]) + eps_w) ** q
                xi = _lasso_gram(G, c, lam * w, zero, xi, tol, max_sweeps)
            coef = rec.unscale_coefficients(_debias(S, y, xi != 0))
            hyper = {"lambda": float(lam), "gamma_exponent": float(q),
                     "reweight_iters": reweight_iters}
            out.append(_finish(A, y, coef, hyper, _labels(theta),
                               {"penalty": float(np.abs(rec.scale_coefficients(coef)).sum())}))
    return out


# --------------------------------------------------------------------------
# trimmed Lasso
# --------------------------------------------------------------------------


def trimmed_lasso(theta, y, k: int, lam: float, eta: float = 1e-3, xi0=None,
                  tol: float = 1e-8, max_alternations: int = 200, kkt_tol: float = 1e-10,
                  max_sweeps: int = 100000):
    """Alternating minimisation of the trimmed Lasso at a single penalty level.

    Works on ``theta`` as given (no scaling). Returns ``(xi, objective)`` where
    the objective is ``0.5 ||A xi - y||^2 + lam T(xi, k) + eta ||xi||_1``.
    """
    A = _matrix(theta)
    y = np.asarray(y, dtype=float)
    G = A.T @ A
    c = A.T @ y
    xi = np.zeros(c.size) if xi0 is None else np.array(xi0, dtype=float)
    f, _, ok, gap = _run_alternation(G, c, float(y @ y), k, lam, eta, xi, tol,
                                     max_alternations, kkt_tol, max_sweeps)
    return xi, f


def _run_alternation(G, c, yy, k, lam, eta, xi, tol, max_alt, kkt_tol, max_sweeps):
    scale = max(np.abs(c).max(initial=0.0), np.finfo(float).tiny)
    f, s, ok, gap = _kernels.trim_alternate(G, c, yy, int(k), float(lam), float(eta), xi,
                                            tol, max_alt, kkt_tol * scale, max_sweeps)
    if not ok:
        raise ConvergenceError(f"inner Lasso failed at lambda={lam:.3g}", xi.copy(), gap)
    return f, s, ok, gap


def trim_lambda_grid(y, nu: int) -> np.ndarray:
    """Geometric grid of ``nu`` penalty levels from ``1e-3 ||y||`` to ``||y||``."""
    ny = float(np.linalg.norm(y))
    if ny == 0:
        return np.zeros(nu)
    return np.geomspace(1e-3 * ny, ny, nu)


def duplicate_columns(S, rtol: float = 1e-12) -> np.ndarray:
    """Index of the first column each unit-norm column duplicates (up to sign)."""
    P = S.shape[1]
    C = np.abs(S.T @ S)
    rep = np.arange(P)
    for j in range(P):
        for i in range(j):
            if rep[i] == i and C[i, j] > 1.0 - rtol:
                rep[j] = i
                break
    return rep


def _trim_scaled(S, y, config: TrimConfig, lambdas=None):
    """Run the penalty sweep on a normalised design; returns (winner, info).

    Exactly duplicated columns are merged onto their first occurrence before
    solving, since any split of a coefficient across copies fits equally well
    and costs at least as much penalty.
    """
    k = config.k
    P = S.shape[1]
    if k > P:
        raise ValueError(f"k={k} exceeds the number of columns {P}")
    rep = duplicate_columns(S)
    cols = np.flatnonzero(rep == np.arange(P))
    xi_r, info = _trim_reduced(S[:, cols], y, config, min(k, cols.size), lambdas)
    xi = np.zeros(P)
    xi[cols] = xi_r
    info["merged_columns"] = int(P - cols.size)
    return xi, info


def _trim_reduced(S, y, config, k, lambdas):
    P = S.shape[1]
    G = S.T @ S
    c = S.T @ y
    yy = float(y @ y)
    lambdas = trim_lambda_grid(y, config.nu) if lambdas is None else np.asarray(lambdas)
    rng = np.random.default_rng(config.seed)
    candidates = []
    last = None
    prev = None
    failed = 0
    xi_ls = np.linalg.lstsq(S, y, rcond=None)[0] if config.ls_start else None
    for lam in lambdas:
        starts = [rng.standard_normal(P) for _ in range(config.restarts)]
        if config.warm_start and prev is not None:
            starts.append(prev.copy())
        if xi_ls is not None:
            starts.append(xi_ls.copy())
        best = None
        for xi in starts:
            try:
                f, _, _, _ = _run_alternation(G, c, yy, k, lam, config.eta, xi, config.tol,
                                              config.max_alternations, config.kkt_tol,
                                              config.max_sweeps)
            except ConvergenceError:
                failed += 1
                continue
            if best is None or f < best[0]:
                best = (f, xi)
        if best is None:
            continue
        prev = best[1]
        last = (float(lam), best[1], best[0])
        if np.count_nonzero(best[1]) == k:
            candidates.append((best[0], float(lam), best[1]))
    if last is None:
        raise ConvergenceError("no start converged at any penalty level")
    base = {"failed_starts": failed}
    if candidates:
        f, lam, xi = min(candidates, key=lambda t: t[0])
        return xi, {"lambda": lam, "objective": f, "projected": False,
                    "n_candidates": len(candidates), **base}
    lam, xi, f = last
    proj = np.zeros(P)
    if k > 0:
        top = np.argsort(-np.abs(xi), kind="stable")[:k]
        proj[top] = xi[top]
    return proj, {"lambda": lam, "objective": f, "projected": True, "n_candidates": 0, **base}


def trim_solve(theta, y, config: Optional[TrimConfig] = None, **overrides) -> SparseSolution:
    """Trimmed-Lasso estimate with exactly ``config.k`` nonzeros (or fewer if projected).

    The library is normalised internally, a geometric penalty grid is swept
    with multi-start alternating minimisation, the exactly ``k``-sparse
    iterate with the lowest objective wins, and its support is refit by
    least squares (``config.debias``). If no grid point reaches ``k`` nonzeros
    the last iterate is projected onto its ``k`` largest entries and
    ``flags["projected"]`` is set.
    """
    config = _config(config, overrides)
    A = _matrix(theta)
    y = np.asarray(y, dtype=float)
    S, rec = scale_library(A)
    xi, info = _trim_scaled(S, y, config)
    mask = xi != 0
    coef_scaled = _debias(S, y, mask) if config.debias else xi
    coef = rec.unscale_coefficients(coef_scaled)
    hyper = {"k": config.k, "lambda": info["lambda"], "eta": config.eta, "nu": config.nu,
             "objective": info["objective"]}
    return _finish(A, y, coef, hyper, _labels(theta), {"projected": info["projected"]})


def _config(config, overrides):
    if config is None:
        config = TrimConfig(**overrides)
    elif overrides:
        config = TrimConfig(**{**config.__dict__, **overrides})
    return config


def trim_path(theta, y, k_grid: Sequence[int], config: Optional[TrimConfig] = None,
              **overrides) -> List[SparseSolution]:
    """:func:`trim_solve` for each sparsity in ``k_grid`` with per-k derived seeds."""
    config = _config(config, overrides)
    out = []
    for k in k_grid:
        seed = int(np.random.SeedSequence([config.seed, int(k)]).generate_state(1)[0])
        out.append(trim_solve(theta, y, config, k=int(k), seed=seed))
    return out


def trim_ivp(gamma: AugmentedLibrary, z, config: Optional[TrimConfig] = None, **overrides):
    """Trimmed Lasso on ``Gamma = [1, T1 Theta]`` with an unpenalised ones column.

    The ones column is profiled out by centring, so sparsity ``k`` counts
    library terms only. Returns ``(solution, z0)`` where ``solution`` holds
    the library coefficients and ``z0`` the fitted coefficient on the ones
    column (the initial value).
    """
    config = _config(config, overrides)
    G = gamma.matrix
    z = np.asarray(z, dtype=float)
    lib = G[:, 1:]
    centred = lib - lib.mean(axis=0)
    zc = z - z.mean()
    P = lib.shape[1]
    if config.k == 0:
        mask = np.zeros(P, dtype=bool)
        lam, projected = 0.0, False
    else:
        S, rec = scale_library(centred)
        xi, info = _trim_scaled(S, zc, config)
        mask = xi != 0
        lam, projected = info["lambda"], info["projected"]
    full_mask = np.concatenate([[True], mask])
    psi = _debias(G, z, full_mask)
    z0 = float(psi[0])
    coef = psi[1:]
    res = float(np.linalg.norm(G @ psi - z))
    sol = SparseSolution(coef, res, {"k": config.k, "lambda": lam, "eta": config.eta,
                                     "z0": z0}, list(gamma.base.labels),
                         {"projected": projected})
    return sol, z0


# --------------------------------------------------------------------------
# estimator interface
# --------------------------------------------------------------------------


class _SparseRegressor(RegressorMixin, BaseEstimator):
    """Shared fit/predict plumbing; subclasses implement ``_solve(X, y)``."""

    def fit(self, X, y):
        X, y = validate_data(self, X, y, multi_output=True, y_numeric=True)
        Y = _targets(y)
        self.solutions_ = [self._solve(X, Y[:, j]) for j in range(Y.shape[1])]
        coef = np.vstack([s.coefficients for s in self.solutions_])
        self.coef_ = coef[0] if np.ndim(y) == 1 else coef
        self.intercept_ = 0.0
        return self

    def predict(self, X):
        check_is_fitted(self, "coef_")
        X = validate_data(self, X, reset=False)
        return X @ np.asarray(self.coef_).T

    @property
    def support_(self):
        check_is_fitted(self, "solutions_")
        return [s.support for s in self.solutions_]


class STLSRegressor(_SparseRegressor):
    """Sequentially thresholded least squares.

    Parameters
    ----------
    threshold : float
        Hard threshold applied to column-normalised coefficients.
    max_iter : int
        Maximum number of threshold/refit rounds.
    """

    def __init__(self, threshold=0.1, max_iter=20):
        self.threshold = threshold
        self.max_iter = max_iter

    def _solve(self, X, y):
        return stls(X, y, self.threshold, self.max_iter)[0]


class EnsembleSTLSRegressor(_SparseRegressor):
    """Bootstrap-aggregated STLS with median coefficients and an inclusion cut."""

    def __init__(self, threshold=0.1, n_bootstrap=100, inclusion=0.6, random_state=0,
                 max_iter=20):
        self.threshold = threshold
        self.n_bootstrap = n_bootstrap
        self.inclusion = inclusion
        self.random_state = random_state
        self.max_iter = max_iter

    def _solve(self, X, y):
        return ensemble_stls(X, y, self.threshold, self.n_bootstrap, self.inclusion,
                             self.random_state, self.max_iter)


class IRL1Regressor(_SparseRegressor):
    """Reweighted l1 regression with a least-squares refit."""

    def __init__(self, alpha=1e-2, gamma=1.0, n_reweight=2):
        self.alpha = alpha
        self.gamma = gamma
        self.n_reweight = n_reweight

    def _solve(self, X, y):
        return irl1(X, y, self.alpha, self.gamma, self.n_reweight)


class TrimmedLassoRegressor(_SparseRegressor):
    """Trimmed-Lasso regression returning exactly ``k`` active terms.

    Parameters
    ----------
    k : int
        Target number of nonzero coefficients per output.
    nu : int
        Size of the geometric penalty grid.
    eta : float
        Small l1 stabiliser added to the trimmed penalty.
    restarts : int
        Random starts per penalty level.
    random_state : int
        Seed for the random starts.
    debias : bool
        Refit the selected support by least squares.
    """

    def __init__(self, k=1, nu=10, eta=1e-3, restarts=3, random_state=0, debias=True):
        self.k = k
        self.nu = nu
        self.eta = eta
        self.restarts = restarts
        self.random_state = random_state
        self.debias = debias

    def _solve(self, X, y):
        cfg = TrimConfig(k=self.k, nu=self.nu, eta=self.eta, restarts=self.restarts,
                         seed=self.random_state, debias=self.debias)
        return trim_solve(X, y, cfg)
