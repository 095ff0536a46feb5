"""Stability lobes of the single-mode regenerative chatter model."""

from __future__ import annotations

import csv
import warnings
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Optional, Sequence

import numpy as np

from .systems import ChatterParams

TERMS = ("1", "x", "xdot", "x_tau")


@dataclass(frozen=True)
class ChatterModel:
    """Physical parameters recovered from ``xddot = c0 + cx x + cv xdot + cd x_tau``.

    ``c1 = 2 zeta omega_n + rho omega_n^2`` is the total viscous term; only
    ``c1`` enters the stability analysis. ``zeta`` and ``rho`` are split only
    when a separate damping-ratio estimate is supplied, otherwise ``rho`` is
    set to zero and ``flags`` records the assumption.
    """

    omega_n: float
    kappa: float
    c1: float
    f: float = np.nan
    zeta: float = np.nan
    rho: float = np.nan
    flags: tuple = ()

    @classmethod
    def from_params(cls, p: ChatterParams) -> "ChatterModel":
        c1 = 2 * p.zeta * p.omega_n + p.rho * p.omega_n**2
        return cls(p.omega_n, p.kappa, c1, p.f, p.zeta, p.rho)

    @classmethod
    def from_coefficients(cls, coeffs, zeta: Optional[float] = None) -> "ChatterModel":
        """Invert the coefficient mapping.

        Parameters
        ----------
        coeffs : dict or sequence
            Either a mapping with keys ``"1", "x", "xdot", "x_tau"`` or the
            four values in that order.
        zeta : float, optional
            Independent damping-ratio estimate used to split ``c1``.
        """
        if not isinstance(coeffs, dict):
            coeffs = dict(zip(TERMS, np.asarray(coeffs, dtype=float)))
        c0, cx, cv, cd = (float(coeffs[t]) for t in TERMS)
        w2 = -cx - cd
        if not w2 > 0:
            raise ValueError(f"recovered omega_n^2 = {w2:.6g} is not positive")
        wn = np.sqrt(w2)
        kappa = cd / w2
        c1 = -cv
        f = c0 / cd if cd != 0 else np.nan
        if zeta is None:
            return cls(wn, kappa, c1, f, c1 / (2 * wn), 0.0, ("rho_assumed_zero",))
        return cls(wn, kappa, c1, f, zeta, (c1 - 2 * zeta * wn) / w2)

    def coefficients(self) -> Dict[str, float]:
        w2 = self.omega_n**2
        return {"1": self.kappa * self.f * w2, "x": -(1 + self.kappa) * w2,
                "xdot": -self.c1, "x_tau": self.kappa * w2}


@dataclass(frozen=True)
class DelayStateSpace:
    """``q' = A1 q + A2 q(t - 1)`` in time scaled by the spindle speed ``Omega``."""

    A1: np.ndarray
    A2: np.ndarray
    omega_spindle: float
    kappa: float

    def characteristic(self, s: complex, mu: float) -> complex:
        """``det(s I - A1 - exp(-j 2 pi mu) A2)``."""
        M = s * np.eye(2) - self.A1 - np.exp(-2j * np.pi * mu) * self.A2
        return complex(np.linalg.det(M))


def _model(coeffs) -> ChatterModel:
    if isinstance(coeffs, ChatterModel):
        return coeffs
    if isinstance(coeffs, ChatterParams):
        return ChatterModel.from_params(coeffs)
    return ChatterModel.from_coefficients(coeffs)


def state_space(coeffs, Omega: float, kappa: Optional[float] = None) -> DelayStateSpace:
    """Delayed state-space matrices for spindle speed ``Omega`` (rev/s) and depth ``kappa``."""
    m = _model(coeffs)
    if not Omega > 0:
        raise ValueError("spindle speed must be positive")
    kappa = m.kappa if kappa is None else kappa
    w2 = m.omega_n**2
    A1 = np.array([[0.0, 1.0], [-(w2 + kappa * w2) / Omega**2, -m.c1 / Omega]])
    A2 = np.array([[0.0, 0.0], [kappa * w2 / Omega**2, 0.0]])
    return DelayStateSpace(A1, A2, float(Omega), float(kappa))


@dataclass
class StabilityLobe:
    """One lobe of the stability boundary, ordered by spindle speed."""

    lobe_index: int
    omega_spindle: np.ndarray
    kappa: np.ndarray
    chatter_freq: np.ndarray
    mu: np.ndarray
    residual: np.ndarray = field(default_factory=lambda: np.empty(0))

    def kappa_at(self, Omega) -> np.ndarray:
        """Critical depth interpolated at ``Omega`` (``inf`` outside the lobe)."""
        return np.interp(Omega, self.omega_spindle, self.kappa, left=np.inf, right=np.inf)


def scaled_determinant(ss: DelayStateSpace, w_scaled: float, mu: float) -> float:
    """``|det|`` at ``s = j w_scaled`` divided by ``max(||A1||, w_scaled)^2``."""
    scale = max(np.linalg.norm(ss.A1, 2), abs(w_scaled)) ** 2
    return abs(ss.characteristic(1j * w_scaled, mu)) / scale


def stability_boundary(coeffs, omega_grid, lobes: Iterable[int] = range(0, 5),
                       det_tol: float = 1e-6) -> List[StabilityLobe]:
    """Stability lobes by a sweep over chatter frequency.

    For a chatter frequency ``w > omega_n`` the real and imaginary parts of the
    characteristic equation fix the regenerative phase ``phi0`` in ``(pi, 2 pi)``
    (so ``mu = phi0 / 2 pi`` lies in ``(1/2, 1)``) and the critical depth
    ``kappa = (w^2 - omega_n^2) / (omega_n^2 (1 - cos phi0))``. Lobe ``n`` has
    delay ``tau = (phi0 + 2 pi n) / w`` and spindle speed ``Omega = 1 / tau``.
    Every point is checked against the determinant condition in scaled time.
    """
    m = _model(coeffs)
    w = np.asarray(omega_grid, dtype=float)
    if w.size == 0:
        raise ValueError("empty chatter-frequency grid")
    w = w[w > m.omega_n]
    out = []
    if w.size == 0:
        warnings.warn("no chatter frequency above omega_n; boundary is empty")
        return out
    wn2 = m.omega_n**2
    q = w * m.c1 / (wn2 - w**2)
    phi0 = 2.0 * np.arctan2(1.0, q)
    kap = (w**2 - wn2) / (wn2 * (1.0 - np.cos(phi0)))
    mu = phi0 / (2 * np.pi)
    for n in lobes:
        tau = (phi0 + 2 * np.pi * n) / w
        Om = 1.0 / tau
        res = np.empty(w.size)
        for i in range(w.size):
            ss = state_space(m, Om[i], kap[i])
            res[i] = scaled_determinant(ss, w[i] / Om[i], mu[i])
        good = np.isfinite(res) & (res < det_tol) & (kap > 0)
        if not good.any():
            warnings.warn(f"lobe {n}: no verified boundary points")
            continue
        order = np.argsort(Om[good])
        out.append(StabilityLobe(int(n), Om[good][order], kap[good][order], w[good][order],
                                 mu[good][order], res[good][order]))
    return out


def critical_depth(lobes: Sequence[StabilityLobe], Omega) -> np.ndarray:
    """Lower envelope of the lobes at spindle speed(s) ``Omega``."""
    Omega = np.atleast_1d(np.asarray(Omega, dtype=float))
    if not lobes:
        return np.full(Omega.shape, np.inf)
    return np.min([lb.kappa_at(Omega) for lb in lobes], axis=0)


def default_frequency_grid(coeffs, n: int = 2000, span: float = 0.5) -> np.ndarray:
    """Chatter frequencies from just above ``omega_n`` to ``(1 + span) omega_n``."""
    m = _model(coeffs)
    return m.omega_n * (1.0 + np.geomspace(1e-5, span, n))


def percentile_models(quantiles, labels: Sequence[str], percentiles=(5, 95)) -> dict:
    """Coefficient dictionaries at each percentile from a quantile table.

    ``quantiles`` has shape ``(len(percentiles), len(labels))``; labels must
    include ``"1", "x", "xdot", "x_tau"``.
    """
    q = np.asarray(quantiles, dtype=float)
    out = {}
    for r, p in enumerate(percentiles):
        d = dict(zip(labels, q[r]))
        out[p] = {t: d.get(t, 0.0) for t in TERMS}
    return out


def propagate_uncertainty(bounds: dict, omega_grid, lobes: Iterable[int] = range(0, 5)):
    """Stability lobes at each percentile coefficient set.

    Parameters
    ----------
    bounds : dict
        ``{label: coefficients}``, typically ``{5: ..., 95: ...}`` from
        :func:`percentile_models`.

    Returns
    -------
    dict
        ``{label: list of StabilityLobe}``; a percentile whose coefficients
        do not map to a valid oscillator is omitted with a warning.
    """
    lobes = list(lobes)
    out = {}
    for key, coeffs in bounds.items():
        try:
            out[key] = stability_boundary(coeffs, omega_grid, lobes)
        except ValueError as exc:
            warnings.warn(f"bound {key!r} omitted: {exc}")
    return out


def band(bound_lobes: dict, Omega) -> tuple:
    """Pointwise (min, max) of the lower envelopes across the supplied bounds."""
    env = np.array([critical_depth(lb, Omega) for lb in bound_lobes.values()])
    return env.min(axis=0), env.max(axis=0)


def lobes_to_csv(lobes: Sequence[StabilityLobe], path, bound_lobes: Optional[dict] = None):
    """Write ``lobe_index,Omega,kappa_crit,omega,mu`` plus envelope bounds when given."""
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        head = ["lobe_index", "Omega", "kappa_crit", "omega", "mu"]
        if bound_lobes:
            head += ["kappa_lower", "kappa_upper"]
        w.writerow(head)
        for lb in lobes:
            lo = hi = None
            if bound_lobes:
                lo, hi = band(bound_lobes, lb.omega_spindle)
            for i in range(lb.omega_spindle.size):
                row = [lb.lobe_index] + [repr(float(v)) for v in
                                         (lb.omega_spindle[i], lb.kappa[i],
                                          lb.chatter_freq[i], lb.mu[i])]
                if bound_lobes:
                    row += [repr(float(lo[i])), repr(float(hi[i]))]
                w.writerow(row)
