"""Experiment protocols shared by the command line and the acceptance checks.

Each protocol turns a simulated benchmark into a regression problem, runs
one or more estimators with automatic hyperparameter selection and returns
plain result objects. All randomness is derived from a single integer seed
through :func:`derive_seed`.
"""

from __future__ import annotations

import zlib
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence

import numpy as np
from scipy.optimize import minimize

from .library import Library, custom_library, delay_shift, integral_library, poly_library
from .metrics import TrialResult, evaluate
from .preprocess import (add_awgn, add_correlated_noise, regularized_derivative,
                         select_denoise_lambda, select_derivative_lambda, trim_slice)
from .selection import SelectionPath, select_path, sweep
from .solvers import (SparseSolution, TrimConfig, ensemble_stls_path, irl1, irl1_grid, stls,
                      trim_ivp, trim_solve)
from .systems import (BoucWenParams, ChatterParams, LinearEstimate, LorenzParams,
                      boucwen_latent_state, boucwen_simulate, dde_simulate, estimate_flin,
                      simulate_lorenz)

ESTIMATORS = ("trim", "stls", "estls", "irl1")
DEFAULT_SELECTION = {"trim": "trim_lcurve", "stls": "ricc", "estls": "ricc", "irl1": "ricc"}


def derive_seed(seed: int, tag: str, index: int = 0) -> int:
    """Stream seed for purpose ``tag`` and item ``index`` under a top-level ``seed``."""
    ss = np.random.SeedSequence([int(seed), zlib.crc32(tag.encode()), int(index)])
    return int(ss.generate_state(1)[0])


def add_noise(X, level: float, seed: int, kind: str = "awgn") -> np.ndarray:
    """Corrupt ``X`` with white (``"awgn"``) or exponentially correlated noise."""
    if kind == "awgn":
        return add_awgn(X, level, seed)
    if kind == "correlated":
        return add_correlated_noise(X, level, seed)
    raise ValueError(f"unknown noise kind {kind!r}")


# --------------------------------------------------------------------------
# Lorenz 63
# --------------------------------------------------------------------------


@dataclass
class Problem:
    """A library, its regression targets and (optionally) the true coefficients."""

    library: Library
    targets: np.ndarray
    target_names: List[str]
    truth: Optional[np.ndarray] = None
    meta: dict = field(default_factory=dict)


def lorenz_problem(T: float, dt: float = 0.01, noise: float = 0.0, seed: int = 0,
                   degree: int = 2, noise_kind: str = "awgn",
                   params: LorenzParams = LorenzParams()) -> Problem:
    """Derivative-form Lorenz 63 regression problem.

    States and analytic derivatives are corrupted independently at the same
    relative ``noise`` level (percent of each channel's standard deviation);
    no denoising is applied. The library holds all monomials of degree
    ``1..degree`` in ``x, y, z`` without a constant column.
    """
    ts = simulate_lorenz(T, dt, params)
    X = ts.data[:, :3]
    dX = ts.data[:, 3:]
    if noise > 0:
        X = add_noise(X, noise, derive_seed(seed, "path"), noise_kind)
        dX = add_noise(dX, noise, derive_seed(seed, "trajectory"), noise_kind)
    lib = poly_library(X, ["x", "y", "z"], degree)
    truth = lorenz_coefficients_for(lib, params)
    meta = {"system": "lorenz", "T": T, "dt": dt, "noise": noise, "seed": seed,
            "degree": degree, "noise_kind": noise_kind}
    return Problem(lib, dX, ["dx", "dy", "dz"], truth, meta)


def lorenz_coefficients_for(lib: Library, params: LorenzParams = LorenzParams()) -> np.ndarray:
    from .systems import lorenz_coefficients

    return lorenz_coefficients(params, lib.labels)


def default_grid(estimator: str, P: int):
    """Hyperparameter grid used when none is configured.

    ``trim``: sparsities ``1..min(8, P)``; ``stls``/``estls``: 100 thresholds
    log-spaced on ``[1e-3, 1e3]``; ``irl1``: 75 penalties log-spaced on
    ``[1e-10, 1e6]`` crossed with exponents ``2, 2.5, ..., 5``.
    """
    if estimator == "trim":
        return np.arange(1, min(8, P) + 1)
    if estimator in ("stls", "estls"):
        return np.geomspace(1e-3, 1e3, 100)
    if estimator == "irl1":
        lam = np.geomspace(1e-10, 1e6, 75)
        q = np.arange(2.0, 5.0 + 1e-9, 0.5)
        return np.array([(a, b) for b in q for a in lam])
    raise ValueError(f"unknown estimator {estimator!r}")


def identify(theta, targets, estimator: str, select: Optional[str] = None, grid=None,
             seed: int = 0, trim_config: Optional[TrimConfig] = None, B: int = 100,
             inclusion: float = 0.6, n_jobs: int = 1) -> List[SelectionPath]:
    """Fit one estimator over its grid for every target column and select a model.

    Parameters
    ----------
    estimator : {"trim", "stls", "estls", "irl1"}
    select : str, optional
        Selection method; defaults to ``trim_lcurve`` for TRIM and ``ricc``
        for the baselines.
    grid : array_like, optional
        Overrides :func:`default_grid`. For ``irl1`` rows are ``(lambda, q)``.
    """
    if estimator not in ESTIMATORS:
        raise ValueError(f"unknown estimator {estimator!r}; expected one of {ESTIMATORS}")
    select = select or DEFAULT_SELECTION[estimator]
    Y = np.asarray(targets, dtype=float)
    Y = Y[:, None] if Y.ndim == 1 else Y
    P = theta.matrix.shape[1] if hasattr(theta, "matrix") else np.shape(theta)[1]
    grid = default_grid(estimator, P) if grid is None else np.asarray(grid)
    if grid.shape[0] == 0:
        raise ValueError("empty hyperparameter grid")

    if estimator == "irl1":
        if grid.ndim != 2 or grid.shape[1] != 2:
            raise ValueError("irl1 grid rows must be (lambda, q) pairs")
        return [_irl1_selected(theta, Y[:, j], grid, select) for j in range(Y.shape[1])]

    if estimator == "estls":
        out = []
        for j in range(Y.shape[1]):
            sols = ensemble_stls_path(theta, Y[:, j], grid, B=B, inclusion=inclusion,
                                      seed=derive_seed(seed, "estls", j))
            errors = {i: s.flags["error"] for i, s in enumerate(sols) if "error" in s.flags}
            sols = [None if i in errors else s for i, s in enumerate(sols)]
            out.append(select_path(sols, grid, theta, Y[:, j], select, errors=errors))
        return out

    if estimator == "trim":
        cfg = trim_config or TrimConfig(seed=seed)

        def fit(th, y, k):
            kseed = int(np.random.SeedSequence([cfg.seed, int(k)]).generate_state(1)[0])
            return trim_solve(th, y, cfg, k=int(k), seed=kseed)
    else:
        def fit(th, y, phi):
            return stls(th, y, float(phi))[0]
    return sweep(fit, grid, theta, Y, select, n_jobs=n_jobs)


def _irl1_selected(theta, y, grid, select):
    """IRL1 over ``(lambda, q)`` rows; the stage-0 Lasso is shared between exponents."""
    qs = np.unique(grid[:, 1])
    groups = [np.flatnonzero(grid[:, 1] == q) for q in qs]
    lams = grid[groups[0], 0]
    sols: List[Optional[SparseSolution]] = [None] * grid.shape[0]
    errors = {}
    if all(np.array_equal(grid[g, 0], lams) for g in groups):
        try:
            flat = irl1_grid(theta, y, lams, qs)
            for e, g in enumerate(groups):
                for i, r in enumerate(g):
                    sols[r] = flat[e * lams.size + i]
            return select_path(sols, grid, theta, y, select)
        except (ValueError, ArithmeticError, np.linalg.LinAlgError, RuntimeError):
            pass
    for r in range(grid.shape[0]):
        try:
            sols[r] = irl1(theta, y, float(grid[r, 0]), float(grid[r, 1]), 2)
        except (ValueError, ArithmeticError, np.linalg.LinAlgError, RuntimeError) as exc:
            errors[r] = exc
    return select_path(sols, grid, theta, y, select, errors=errors)


def coefficient_matrix(paths: Sequence[SelectionPath]) -> np.ndarray:
    """Chosen coefficients stacked as a ``(P, N)`` matrix."""
    return np.column_stack([p.best.coefficients for p in paths])


def lorenz_trial(T: float, noise: float, seed: int, degree: int = 2,
                 estimators: Sequence[str] = ESTIMATORS, dt: float = 0.01,
                 states: Optional[Sequence[int]] = None, **kwargs) -> List[TrialResult]:
    """One noise realisation scored for each estimator.

    ``states`` restricts scoring to a subset of the three equations (for
    example ``[1]`` for the second state only).
    """
    prob = lorenz_problem(T, dt, noise, seed, degree)
    cols = list(range(3)) if states is None else list(states)
    out = []
    for name in estimators:
        paths = identify(prob.library, prob.targets[:, cols], name,
                         seed=derive_seed(seed, name), **kwargs)
        est = coefficient_matrix(paths)
        out.append(evaluate(prob.library, est, prob.truth[:, cols], name,
                            noise=noise, T=T, degree=degree, seed=seed))
    return out


# --------------------------------------------------------------------------
# Bouc Wen
# --------------------------------------------------------------------------

BOUCWEN_CHANNELS = ["x", "|x|", "xdot", "|xdot|", "y", "|y|"]


def boucwen_library(x, xdot, y, u) -> Library:
    """Degree-2 monomials of ``x, |x|, xdot, |xdot|, y, |y|`` plus the input (28 columns)."""
    X = np.column_stack([x, np.abs(x), xdot, np.abs(xdot), y, np.abs(y)])
    return custom_library([(X, BOUCWEN_CHANNELS, 2)], {"u": np.asarray(u, dtype=float)})


@dataclass
class BoucWenResult:
    """Outcome of the three-step hysteresis identification."""

    linear: LinearEstimate
    library: Library
    solution: SparseSolution
    y0: float
    y: np.ndarray
    mck: tuple
    mck_refit: Optional[tuple] = None
    meta: dict = field(default_factory=dict)

    def coefficient(self, label: str) -> float:
        return float(self.solution.coefficients[self.library.labels.index(label)])


def boucwen_identify(params: BoucWenParams = BoucWenParams(), dt: float = 1e-3,
                     T: float = 12.0, k: int = 3, lam: float = 1e-24, newton_order: int = 3,
                     linear: str = "estimated", refit: bool = False,
                     trim_config: Optional[TrimConfig] = None) -> BoucWenResult:
    """Identify the hysteretic force of the Bouc Wen oscillator.

    Step 1 estimates the linear part from the free decay (``linear="estimated"``,
    mass assumed known) or uses the simulator's ``m, c, k`` (``"exact"``).
    Step 2 forms ``y = u - f_lin`` and fits ``y = y0 + int Theta(x, xdot, y) xi``
    with the trimmed Lasso at sparsity ``k``. Step 3 (``refit=True``) adjusts
    ``(m, c, k)`` by a Nelder-Mead search that minimises the mismatch between
    ``u - f_lin(m, c, k)`` and the integrated identified model.
    """
    ts = boucwen_simulate(params, dt, T)
    est = estimate_flin(ts, params.t_end, mass=params.m, lam=lam, newton_order=newton_order)
    keep = est.keep
    x = ts["x"][keep]
    u = ts["u"][keep]
    if linear == "estimated":
        wn, zeta = est.omega_n, est.zeta
        mck = (params.m, 2 * zeta * wn * params.m, wn**2 * params.m)
    elif linear == "exact":
        mck = (params.m, params.c, params.k)
    else:
        raise ValueError("linear must be 'estimated' or 'exact'")
    f_lin = mck[0] * est.xddot + mck[1] * est.xdot + mck[2] * x
    y = boucwen_latent_state(u, f_lin)
    lib = boucwen_library(x, est.xdot, y, u)
    gamma = integral_library(lib, dt)
    sol, y0 = trim_ivp(gamma, y, trim_config, k=k)
    res = BoucWenResult(est, lib, sol, y0, y, mck,
                        meta={"linear": linear, "lambda": lam, "newton_order": newton_order,
                              "t0": float(ts.t[keep][0])})
    if refit:
        res.mck_refit = _refit_linear(est, x, u, sol, dt, mck)
    return res


def _refit_linear(est, x, u, sol, dt, mck0):
    support = list(sol.support)

    def loss(p):
        m, c, k = p
        y = u - (m * est.xddot + c * est.xdot + k * x)
        lib = boucwen_library(x, est.xdot, y, u)
        G = integral_library(lib, dt).matrix
        A = np.column_stack([G[:, 0], G[:, 1:][:, support]])
        coef, *_ = np.linalg.lstsq(A, y, rcond=None)
        return float(np.sum((A @ coef - y) ** 2) / np.sum(y**2))

    scale = np.asarray(mck0, dtype=float)
    r = minimize(lambda s: loss(s * scale), np.ones(3), method="Nelder-Mead",
                 options={"xatol": 1e-6, "fatol": 1e-12, "maxiter": 400})
    return tuple(float(v) for v in r.x * scale)


# --------------------------------------------------------------------------
# chatter
# --------------------------------------------------------------------------

CHATTER_DENOISE_GRID = np.logspace(-22, -8, 50)
CHATTER_DERIVATIVE_GRID = np.logspace(-40, -22, 25)


@dataclass
class ChatterProblem:
    """Delay-library regression problem built from noisy, denoised displacement."""

    library: Library
    target: np.ndarray
    truth: Dict[str, float]
    noise_level: float
    snr_db: float
    lambdas: Dict[str, float]
    meta: dict = field(default_factory=dict)


def snr_db(clean, estimate) -> float:
    clean = np.asarray(clean, dtype=float)
    err = np.asarray(estimate, dtype=float) - clean
    return float(20 * np.log10(np.sqrt(np.mean(clean**2)) / np.sqrt(np.mean(err**2))))


def chatter_problem(params: ChatterParams = ChatterParams(), dt: float = 1e-5, T: float = 0.2,
                    noise: float = 15.0, seed: int = 0, degree: int = 3, newton_order: int = 3,
                    denoise_grid=CHATTER_DENOISE_GRID,
                    derivative_grid=CHATTER_DERIVATIVE_GRID) -> ChatterProblem:
    """Simulate, corrupt, denoise and differentiate the chatter displacement.

    Displacement is corrupted with AWGN at ``noise`` percent and denoised by
    Tikhonov regularisation with an L-curve choice of penalty. Velocity and
    acceleration come from regularised derivatives of the denoised signal,
    each with its own L-curve penalty. The library is
    ``[1, P(x, xdot; degree), P(x_tau; degree)]`` restricted to samples whose
    delayed value lies inside the record, and the target is the acceleration.
    """
    ts = dde_simulate(params, dt, T)
    x = ts["x"]
    M = x.size
    xn = add_awgn(x, noise, derive_seed(seed, "chatter-noise"))
    lam_d, path = select_denoise_lambda(xn, dt, denoise_grid)
    xs = path["fitted"][path["chosen"]]
    lam_v, _ = select_derivative_lambda(xs, dt, 1, derivative_grid, newton_order)
    lam_a, _ = select_derivative_lambda(xs, dt, 2, derivative_grid, newton_order)
    v = regularized_derivative(xs, dt, 1, lam_v, newton_order)
    a = regularized_derivative(xs, dt, 2, lam_a, newton_order)
    keep = trim_slice(M)
    idx = np.arange(M)[keep]
    s = delay_shift(params.tau, dt)
    ok = idx >= s
    lib = custom_library([(np.column_stack([xs[idx[ok]], v[ok]]), ["x", "xdot"], degree),
                          (xs[idx[ok] - s][:, None], ["x_tau"], degree)], include_constant=True)
    lambdas = {"denoise": float(lam_d), "velocity": float(lam_v),
               "acceleration": float(lam_a)}
    meta = {"T": T, "dt": dt, "seed": seed, "growth": ts.meta["growth"],
            "unstable": ts.meta["unstable"], "delay_samples": s,
            "acceleration_rel_error": float(np.linalg.norm(a[ok] - ts["xddot"][idx[ok]])
                                            / np.linalg.norm(ts["xddot"][idx[ok]]))}
    return ChatterProblem(lib, a[ok], params.coefficients(), noise, snr_db(x, xs), lambdas, meta)
