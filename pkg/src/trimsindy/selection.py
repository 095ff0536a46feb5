"""Hyperparameter selection: information criteria, L-curve corners, GCV and grid sweeps."""

from __future__ import annotations

import csv
import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, List, Optional, Sequence

import numpy as np

from .solvers import SparseSolution, _matrix

CRITERIA = ("aic", "aicc", "bic", "hqc", "ric", "ricc")
METHODS = CRITERIA + ("lcurve", "trim_lcurve", "gcv")
HQC_C = 2.01
N_RESAMPLE = 200
FLOOR_REL = 1e-10


class NoCornerError(ValueError):
    """The L-curve has no point of positive curvature (for example a straight line)."""


# --------------------------------------------------------------------------
# information criteria
# --------------------------------------------------------------------------


def penalty_factor(kind: str, card: int, M: int, P: int, c: float = HQC_C) -> float:
    """Multiplier ``Pi`` of ``sigma^2 * card`` for a named information criterion."""
    kind = kind.lower()
    if kind == "aic":
        return 2.0
    if kind == "aicc":
        if card >= M - 1:
            raise ValueError(f"AICc undefined for card={card} with M={M}")
        return 2.0 + 2.0 * (card + 1) / (M - card - 1)
    if kind == "bic":
        return math.log(M)
    if kind == "hqc":
        if not c > 2:
            raise ValueError("HQC needs c > 2")
        return c * math.log(math.log(M))
    if kind == "ric":
        return 2.0 * math.log(P)
    if kind == "ricc":
        return 2.0 * (math.log(P) + math.log(math.log(P)))
    raise ValueError(f"unknown criterion {kind!r}")


def info_criterion(rss: float, card: int, M: int, P: int, sigma2: float, kind: str = "ricc",
                   c: float = HQC_C) -> float:
    """Penalised residual ``rss + Pi * sigma2 * card``.

    Parameters
    ----------
    rss : float
        Residual sum of squares of the candidate model.
    card : int
        Number of nonzero coefficients.
    M, P : int
        Sample count and library size.
    sigma2 : float
        Noise-variance estimate, usually :func:`ls_noise_variance`.
    kind : {"aic", "aicc", "bic", "hqc", "ric", "ricc"}
    """
    if rss < 0 or sigma2 < 0:
        raise ValueError("rss and sigma2 must be non-negative")
    return float(rss + penalty_factor(kind, card, M, P, c) * sigma2 * card)


def ls_noise_variance(theta, y) -> float:
    """``||Theta xi_LS - y||^2 / (M - P)`` from the full least-squares fit.

    A minimum-norm solve is used so that collinear libraries still give a
    variance estimate; the denominator uses the numerical rank.
    """
    A = _matrix(theta)
    y = np.asarray(y, dtype=float)
    M, P = A.shape
    if M <= P:
        raise ValueError("noise variance plug-in needs M > P")
    xi, _, rank, _ = np.linalg.lstsq(A, y, rcond=None)
    return float(np.sum((A @ xi - y) ** 2) / (M - rank))


# --------------------------------------------------------------------------
# L-curve corner
# --------------------------------------------------------------------------


def _curvature(p):
    a = p[1:-1] - p[:-2]
    b = p[2:] - p[1:-1]
    cvec = p[2:] - p[:-2]
    cross = a[:, 0] * b[:, 1] - a[:, 1] * b[:, 0]
    den = (np.linalg.norm(a, axis=1) * np.linalg.norm(b, axis=1) * np.linalg.norm(cvec, axis=1))
    with np.errstate(divide="ignore", invalid="ignore"):
        k = np.where(den > 0, 2.0 * cross / den, 0.0)
    return k


def lcurve_corner(points, n_resample: int = N_RESAMPLE) -> int:
    """Index of the point of maximum curvature on a discrete L-curve.

    Both coordinates are mapped to ``[0, 1]``, the polyline is traversed in
    the direction of increasing abscissa, resampled uniformly by arc length
    and the signed curvature of each consecutive triple is taken from its
    circumscribed circle. The original point closest (in arc length) to the
    largest positive curvature is returned.

    Raises
    ------
    NoCornerError
        If no positive curvature is found.
    """
    p = np.asarray(points, dtype=float)
    if p.ndim != 2 or p.shape[1] != 2 or p.shape[0] < 4:
        raise ValueError("need at least four (abscissa, ordinate) points")
    if not np.all(np.isfinite(p)):
        raise ValueError("L-curve points must be finite")
    n = p.shape[0]
    span = p.max(axis=0) - p.min(axis=0)
    if np.any(span == 0):
        raise NoCornerError("no corner: one coordinate is constant")
    q = (p - p.min(axis=0)) / span
    reverse = q[-1, 0] < q[0, 0]
    if reverse:
        q = q[::-1]
    seg = np.linalg.norm(np.diff(q, axis=0), axis=1)
    s = np.concatenate([[0.0], np.cumsum(seg)])
    keep = np.concatenate([[True], seg > 0])
    sk, qk = s[keep], q[keep]
    if sk.size < 3:
        raise NoCornerError("no corner: fewer than three distinct points")
    grid = np.linspace(0.0, s[-1], n_resample)
    r = np.column_stack([np.interp(grid, sk, qk[:, 0]), np.interp(grid, sk, qk[:, 1])])
    kap = _curvature(r)
    j = int(np.argmax(kap))
    if not kap[j] > 1e-8:
        raise NoCornerError("no corner: curve has no positive curvature")
    s_star = grid[j + 1]
    idx = int(np.argmin(np.abs(s - s_star)))
    return n - 1 - idx if reverse else idx


def gcv(residual, dof, M: int) -> int:
    """Index minimising ``rss / (M (1 - dof/M)^2)`` along a linear-smoother path."""
    residual = np.asarray(residual, dtype=float)
    dof = np.asarray(dof, dtype=float)
    if np.any(dof >= M):
        raise ValueError("effective degrees of freedom must be below M")
    return int(np.argmin(gcv_scores(residual, dof, M)))


def gcv_scores(residual, dof, M: int) -> np.ndarray:
    residual = np.asarray(residual, dtype=float)
    dof = np.asarray(dof, dtype=float)
    return residual / (M * (1.0 - dof / M) ** 2)


# --------------------------------------------------------------------------
# sparsity L-curve
# --------------------------------------------------------------------------


def _floored(residuals, floor_rel):
    r = np.asarray(residuals, dtype=float)
    floor = floor_rel * r.max()
    return np.maximum(r, floor)


def trim_select_index(residuals, k_grid, tol_percent: float = 5.0,
                      floor_rel: float = FLOOR_REL) -> int:
    """Grid index chosen by the sparsity L-curve plus forward stepping.

    Residuals below ``floor_rel * max(residuals)`` are treated as equal to
    that floor, so round-off differences in exact fits do not count as
    improvements. With fewer than four grid points there is no corner to
    locate; forward stepping then starts from the sparsest model.
    """
    k = np.asarray(k_grid)
    r = _floored(residuals, floor_rel)
    if k.size != r.size:
        raise ValueError("residuals and k_grid differ in length")
    if np.any(np.diff(k) <= 0):
        raise ValueError("k_grid must be strictly increasing")
    if np.any(r <= 0):
        raise ValueError("residuals must be positive")
    if r.size < 4:
        warnings.warn("fewer than four sparsity levels; forward stepping from the first")
        i = 0
    else:
        i = lcurve_corner(np.column_stack([np.log(r), k.astype(float)]))
    ratio = 1.0 + tol_percent / 100.0
    while i + 1 < r.size and r[i] ** 2 / r[i + 1] ** 2 > ratio:
        i += 1
    return i


def trim_select(residuals, k_grid, tol_percent: float = 5.0, floor_rel: float = FLOOR_REL) -> int:
    """Sparsity chosen by the residual-versus-k L-curve with forward stepping.

    Examples
    --------
    >>> trim_select([10, 9.8, 1.0, 0.99, 0.985], [1, 2, 3, 4, 5])
    3
    """
    return int(np.asarray(k_grid)[trim_select_index(residuals, k_grid, tol_percent, floor_rel)])


# --------------------------------------------------------------------------
# sweeps
# --------------------------------------------------------------------------


@dataclass
class SelectionPath:
    """Solutions over a hyperparameter grid with their scores and the chosen index.

    ``solutions`` holds ``None`` where the estimator failed; such points have
    ``nan`` scores and are listed in ``errors``.
    """

    grid: np.ndarray
    solutions: List[Optional[SparseSolution]]
    points: np.ndarray
    scores: np.ndarray
    chosen: int
    method: str
    errors: dict = field(default_factory=dict)

    def __post_init__(self):
        if len(self.scores) != len(self.solutions):
            raise ValueError("scores and solutions differ in length")
        if not 0 <= self.chosen < len(self.solutions):
            raise ValueError("chosen index out of range")

    @property
    def best(self) -> SparseSolution:
        return self.solutions[self.chosen]

    def to_csv(self, path, grid_names: Optional[Sequence[str]] = None) -> None:
        """Write ``<grid columns>,residual,penalty,score,card,chosen`` rows.

        A one-dimensional grid gives a single ``grid`` column; a grid of
        tuples (for example ``(lambda, q)``) gives one column per entry,
        named by ``grid_names`` or ``grid_0, grid_1, ...``.
        """
        grid = np.asarray(self.grid, dtype=float)
        rows = grid.reshape(len(self.solutions), -1)
        if grid_names is None:
            grid_names = ["grid"] if grid.ndim == 1 else [f"grid_{j}" for j in range(rows.shape[1])]
        if len(grid_names) != rows.shape[1]:
            raise ValueError("grid_names does not match the grid dimension")
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(list(grid_names) + ["residual", "penalty", "score", "card", "chosen"])
            for i, sol in enumerate(self.solutions):
                card = "" if sol is None else sol.card
                w.writerow([repr(float(v)) for v in rows[i]]
                           + [repr(float(self.points[i, 0])), repr(float(self.points[i, 1])),
                              repr(float(self.scores[i])), card, int(i == self.chosen)])


def sweep(estimator: Callable, grid: Sequence, theta, targets, method: str = "ricc",
          tol_percent: float = 5.0, sigma2=None, n_jobs: int = 1) -> List[SelectionPath]:
    """Fit ``estimator(theta, y, value)`` over ``grid`` for each target and select one model.

    Parameters
    ----------
    estimator : callable
        ``estimator(theta, y, value) -> SparseSolution``.
    grid : sequence
        Hyperparameter values (sparsities for ``trim_lcurve``, increasing).
    method : str
        An information criterion name, ``"lcurve"`` (log residual against the
        log l1 norm of column-normalised coefficients), ``"trim_lcurve"`` or
        ``"gcv"`` (with the support size as degrees of freedom).
    sigma2 : float or sequence, optional
        Noise variances per target; defaults to :func:`ls_noise_variance`.
    n_jobs : int
        Worker threads used across grid points.

    Grid points where the estimator raises are recorded in ``errors`` and
    excluded from selection.
    """
    method = _check_method(method)
    Y = np.asarray(targets, dtype=float)
    Y = Y[:, None] if Y.ndim == 1 else Y
    out = []
    for j in range(Y.shape[1]):
        y = Y[:, j]

        def run(value, y=y):
            try:
                return estimator(theta, y, value), None
            except (ValueError, ArithmeticError, np.linalg.LinAlgError, RuntimeError) as exc:
                return None, exc

        if n_jobs > 1:
            from concurrent.futures import ThreadPoolExecutor
            with ThreadPoolExecutor(n_jobs) as ex:
                results = list(ex.map(run, grid))
        else:
            results = [run(v) for v in grid]
        sols = [r[0] for r in results]
        errors = {i: r[1] for i, r in enumerate(results) if r[1] is not None}
        s2 = None if sigma2 is None else np.atleast_1d(sigma2)[min(j, np.size(sigma2) - 1)]
        out.append(select_path(sols, grid, theta, y, method, tol_percent, s2, errors))
    return out


def _check_method(method):
    method = method.lower()
    if method not in METHODS:
        raise ValueError(f"unknown selection method {method!r}")
    return method


def select_path(solutions: Sequence[Optional[SparseSolution]], grid, theta, y,
                method: str = "ricc", tol_percent: float = 5.0, sigma2=None,
                errors: Optional[dict] = None) -> SelectionPath:
    """Score an already computed solution path and pick one model.

    ``solutions`` may contain ``None`` for failed grid points; see
    :func:`sweep` for the meaning of ``method``.
    """
    method = _check_method(method)
    A = _matrix(theta)
    y = np.asarray(y, dtype=float)
    M, P = A.shape
    grid = np.asarray(grid)
    sols = list(solutions)
    if len(sols) != grid.shape[0]:
        raise ValueError("one solution slot per grid point required")
    errors = dict(errors or {})
    ok = np.array([s is not None for s in sols])
    if not ok.any():
        raise RuntimeError(f"every grid point failed: {errors}")
    norms = np.linalg.norm(A, axis=0)
    rss = np.array([s.residual_norm ** 2 if s is not None else np.nan for s in sols])
    card = np.array([s.card if s is not None else -1 for s in sols])
    l1 = np.array([np.abs(s.coefficients * norms).sum() if s is not None else np.nan
                   for s in sols])
    scores = np.full(len(sols), np.nan)
    if method in CRITERIA:
        s2 = ls_noise_variance(A, y) if sigma2 is None else float(sigma2)
        points = np.column_stack([rss, card.astype(float)])
        for i in np.flatnonzero(ok):
            try:
                scores[i] = info_criterion(rss[i], int(card[i]), M, P, s2, method)
            except ValueError:
                scores[i] = np.nan
        chosen = int(np.nanargmin(scores))
    elif method == "gcv":
        points = np.column_stack([rss, card.astype(float)])
        valid = ok & (card < M)
        scores[valid] = gcv_scores(rss[valid], card[valid], M)
        chosen = int(np.nanargmin(scores))
    elif method == "lcurve":
        with np.errstate(divide="ignore"):
            points = np.column_stack([np.log(rss), np.log(l1)])
        valid = ok & np.all(np.isfinite(points), axis=1)
        chosen = _corner_on_subset(points, valid)
        scores[valid] = 0.0
        scores[chosen] = 1.0
    else:
        valid = ok & np.isfinite(rss)
        res = np.full(rss.shape, np.nan)
        res[valid] = _floored(np.sqrt(rss[valid]), FLOOR_REL)
        points = np.column_stack([np.log(res), grid.astype(float)])
        idx = np.flatnonzero(valid)
        if idx.size == 1:
            chosen = int(idx[0])
        else:
            sub = trim_select_index(res[idx], grid[idx], tol_percent)
            chosen = int(idx[sub])
        scores[valid] = 0.0
        scores[chosen] = 1.0
    return SelectionPath(grid, sols, points, scores, chosen, method, errors)


def _corner_on_subset(points, valid):
    idx = np.flatnonzero(valid)
    if idx.size == 0:
        raise RuntimeError("no valid L-curve points")
    if idx.size < 4:
        warnings.warn("fewer than four L-curve points; taking the last valid one")
        return int(idx[-1])
    return int(idx[lcurve_corner(points[idx])])
