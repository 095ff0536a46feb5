"""Residual and wild bootstrap on a fixed support."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import List, Optional, Sequence

import numpy as np

from .numerics import RankDeficiencyError, least_squares
from .solvers import ConvergenceError, SparseSolution, TrimConfig, _labels, _matrix, trim_solve

MODES = ("resample", "wild_sign", "wild_gaussian")


@dataclass
class BootstrapEnsemble:
    """Bootstrap coefficient draws restricted to a fixed support.

    Attributes
    ----------
    support : tuple of int
        Column indices held fixed across draws.
    draws : ndarray, shape (B_ok, len(support))
        Coefficients of the successful draws.
    B : int
        Number of draws requested.
    mode : str
    seed : int
    labels : list of str, optional
        Labels of the support columns.
    excluded : list of int
        Draw indices whose re-estimation failed or left the support.
    meta : dict
    """

    support: tuple
    draws: np.ndarray
    B: int
    mode: str
    seed: int
    labels: Optional[List[str]] = None
    excluded: List[int] = field(default_factory=list)
    meta: dict = field(default_factory=dict)

    def quantiles(self, percentiles: Sequence[float] = (5, 50, 95)) -> np.ndarray:
        return confidence_intervals(self, percentiles)

    def median(self) -> np.ndarray:
        return np.median(self.draws, axis=0)

    def full_coefficients(self, P: int, values=None) -> np.ndarray:
        """Embed support values (median by default) into a length-``P`` vector."""
        out = np.zeros(P)
        out[list(self.support)] = self.median() if values is None else values
        return out

    def to_csv(self, path) -> None:
        """Draw index followed by one column per support label."""
        names = self.labels or [str(i) for i in self.support]
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["draw"] + names)
            for i, row in enumerate(self.draws):
                w.writerow([i] + [repr(float(v)) for v in row])

    def quantiles_to_csv(self, path, percentiles: Sequence[float] = (5, 50, 95)) -> None:
        names = self.labels or [str(i) for i in self.support]
        q = confidence_intervals(self, percentiles)
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["term"] + [f"p{p:g}" for p in percentiles])
            for j, nm in enumerate(names):
                w.writerow([nm] + [repr(float(v)) for v in q[:, j]])


def _perturb(resid, mode, rng):
    M = resid.size
    if mode == "resample":
        centred = resid - resid.mean()
        return centred[rng.integers(0, M, size=M)]
    if mode == "wild_sign":
        return resid * rng.choice(np.array([-1.0, 1.0]), size=M)
    if mode == "wild_gaussian":
        return resid * rng.standard_normal(M)
    raise ValueError(f"unknown bootstrap mode {mode!r}; expected one of {MODES}")


def draw_rng(seed: int, index: int) -> np.random.Generator:
    """Independent stream for draw ``index`` derived from ``seed``."""
    return np.random.default_rng(np.random.SeedSequence([int(seed), int(index)]))


def bootstrap(model: SparseSolution, theta, z, B: int = 100, mode: str = "resample",
              seed: int = 0, refit: str = "ls", trim_config: Optional[TrimConfig] = None,
              n_jobs: int = 1) -> BootstrapEnsemble:
    """Bootstrap the coefficients of ``model`` with its support held fixed.

    For each draw the residual ``r = z - Theta xi`` is perturbed (centred and
    resampled with replacement, or multiplied by Rademacher or Gaussian
    weights), a
    synthetic target ``Theta xi + r'`` is formed and the model is re-estimated
    either by least squares on the support (``refit="ls"``) or by the trimmed
    Lasso with ``k = |support|`` (``refit="trim"``). Draws that fail or whose
    trimmed-Lasso support moves are excluded and listed in ``excluded``.
    """
    if mode not in MODES:
        raise ValueError(f"unknown bootstrap mode {mode!r}")
    if B < 1:
        raise ValueError("B must be positive")
    support = tuple(model.support)
    if not support:
        raise ValueError("model support is empty")
    A = _matrix(theta)
    z = np.asarray(z, dtype=float)
    fitted = A @ model.coefficients
    resid = z - fitted
    mask = np.zeros(A.shape[1], dtype=bool)
    mask[list(support)] = True

    def one(b):
        rng = draw_rng(seed, b)
        zb = fitted + _perturb(resid, mode, rng)
        try:
            if refit == "ls":
                coef = least_squares(A, zb, mask)
            elif refit == "trim":
                cfg = trim_config or TrimConfig()
                sol = trim_solve(A, zb, cfg, k=len(support), seed=int(rng.integers(2**31)))
                if sol.support != support:
                    return None
                coef = sol.coefficients
            else:
                raise ValueError(f"unknown refit {refit!r}")
        except (RankDeficiencyError, ConvergenceError):
            return None
        return coef[list(support)]

    if n_jobs > 1:
        from concurrent.futures import ThreadPoolExecutor
        with ThreadPoolExecutor(n_jobs) as ex:
            results = list(ex.map(one, range(B)))
    else:
        results = [one(b) for b in range(B)]
    excluded = [b for b, r in enumerate(results) if r is None]
    kept = [r for r in results if r is not None]
    draws = np.array(kept) if kept else np.empty((0, len(support)))
    labels = _labels(theta) or model.labels
    sup_labels = [labels[i] for i in support] if labels else None
    return BootstrapEnsemble(support, draws, B, mode, seed, sup_labels, excluded,
                             {"refit": refit, "residual_rms": float(np.sqrt(np.mean(resid**2)))})


def confidence_intervals(ens: BootstrapEnsemble, percentiles: Sequence[float] = (5, 95)):
    """Per-coefficient empirical percentiles (linear interpolation), shape (len(p), |S|)."""
    p = np.asarray(percentiles, dtype=float)
    if np.any((p <= 0) | (p >= 100)):
        raise ValueError("percentiles must lie strictly between 0 and 100")
    if ens.draws.shape[0] == 0:
        raise ValueError("ensemble has no successful draws")
    return np.percentile(ens.draws, p, axis=0, method="linear")
