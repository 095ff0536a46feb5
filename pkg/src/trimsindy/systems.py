"""Benchmark simulators: fixed-step RK4, Lorenz 63, the Bouc Wen oscillator and a chatter DDE."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Callable, List, Sequence

import numpy as np
from scipy.signal import find_peaks

from . import _kernels
from .library import delay_shift
from .preprocess import regularized_derivative, trim_slice


class SimulationError(ArithmeticError):
    """A trajectory became non-finite; ``time`` holds the first bad sample time."""

    def __init__(self, message, time=np.nan):
        super().__init__(message)
        self.time = time


@dataclass
class TimeSeries:
    """Uniformly sampled channels.

    Attributes
    ----------
    t : ndarray, shape (M,)
    data : ndarray, shape (M, C)
    names : list of str
    meta : dict
        Free-form provenance (parameters, flags such as ``"unstable"``).
    """

    t: np.ndarray
    data: np.ndarray
    names: List[str]
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=float)
        self.data = np.asarray(self.data, dtype=float)
        if self.data.ndim == 1:
            self.data = self.data[:, None]
        if self.data.shape != (self.t.size, len(self.names)):
            raise ValueError("data must have shape (len(t), len(names))")
        if len(set(self.names)) != len(self.names):
            raise ValueError("channel names must be unique")

    @property
    def dt(self) -> float:
        return float(self.t[1] - self.t[0])

    @property
    def M(self) -> int:
        return self.t.size

    def __getitem__(self, name: str) -> np.ndarray:
        if name not in self.names:
            raise KeyError(f"no channel {name!r}; available: {self.names}")
        return self.data[:, self.names.index(name)]

    def select(self, names: Sequence[str]) -> "TimeSeries":
        idx = [self.names.index(n) for n in names]
        return TimeSeries(self.t, self.data[:, idx], list(names), dict(self.meta))

    def to_csv(self, path) -> None:
        """Write ``t,<names>`` with 17 significant digits."""
        with open(path, "w", newline="") as fh:
            fh.write(",".join(["t"] + self.names) + "\n")
            np.savetxt(fh, np.column_stack([self.t, self.data]), fmt="%.17g", delimiter=",")

    @classmethod
    def from_csv(cls, path) -> "TimeSeries":
        with open(path, newline="") as fh:
            header = next(csv.reader(fh))
        arr = np.loadtxt(path, delimiter=",", skiprows=1, ndmin=2)
        if header[0] != "t":
            raise ValueError("first CSV column must be 't'")
        return cls(arr[:, 0], arr[:, 1:], header[1:])


# --------------------------------------------------------------------------
# RK4
# --------------------------------------------------------------------------


def _n_steps(T, dt):
    if not dt > 0:
        raise ValueError("dt must be positive")
    if not T >= dt:
        raise ValueError("T must be at least dt")
    n = int(round(T / dt))
    if abs(n * dt - T) > 1e-9 * max(T, 1.0):
        raise ValueError("T must be an integer multiple of dt")
    return n


def rk4_integrate(field_fn: Callable, z0, dt: float, T: float, names=None,
                  substeps: int = 1) -> TimeSeries:
    """Classical fixed-step RK4 from ``t=0`` to ``t=T`` (inclusive).

    Parameters
    ----------
    field_fn : callable
        ``field_fn(t, z) -> dz/dt``.
    z0 : array_like
        Initial state.
    dt : float
        Output sampling interval.
    T : float
        Final time; must be a multiple of ``dt``.
    substeps : int
        Internal RK4 steps per output sample.

    Returns
    -------
    TimeSeries
        Channels ``names`` followed by ``d<name>``, the vector field
        evaluated along the trajectory.
    """
    z = np.array(z0, dtype=float)
    n = _n_steps(T, dt)
    names = list(names) if names is not None else [f"z{i}" for i in range(z.size)]
    h = dt / substeps
    Z = np.empty((n + 1, z.size))
    Z[0] = z
    for i in range(n):
        for s in range(substeps):
            ts = (i * substeps + s) * h
            k1 = field_fn(ts, z)
            k2 = field_fn(ts + 0.5 * h, z + 0.5 * h * k1)
            k3 = field_fn(ts + 0.5 * h, z + 0.5 * h * k2)
            k4 = field_fn(ts + h, z + h * k3)
            z = z + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.all(np.isfinite(z)):
            raise SimulationError(f"state blew up at t={(i + 1) * dt:.6g}", (i + 1) * dt)
        Z[i + 1] = z
    tt = np.arange(n + 1) * dt
    dZ = np.array([field_fn(ti, zi) for ti, zi in zip(tt, Z)])
    return TimeSeries(tt, np.column_stack([Z, dZ]), names + [f"d{nm}" for nm in names])


# --------------------------------------------------------------------------
# Lorenz 63
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class LorenzParams:
    sigma: float = 10.0
    rho: float = 28.0
    beta: float = 8.0 / 3.0
    z0: tuple = (-8.0, 7.0, 27.0)


def lorenz63(params: LorenzParams = LorenzParams()) -> Callable:
    """Vector field ``f(t, z)`` of the Lorenz 63 system."""
    s, r, b = params.sigma, params.rho, params.beta

    def f(t, z):
        x, y, w = z
        return np.array([s * (y - x), x * (r - w) - y, x * y - b * w])

    return f


def lorenz_coefficients(params: LorenzParams = LorenzParams(), labels=None) -> np.ndarray:
    """True coefficient matrix (P, 3) over a polynomial library with ``labels``."""
    labels = list(labels)
    Xi = np.zeros((len(labels), 3))
    terms = [{"x": -params.sigma, "y": params.sigma},
             {"x": params.rho, "y": -1.0, "x*z": -1.0},
             {"x*y": 1.0, "z": -params.beta}]
    for j, eq in enumerate(terms):
        for lab, val in eq.items():
            Xi[labels.index(lab), j] = val
    return Xi


def simulate_lorenz(T: float, dt: float, params: LorenzParams = LorenzParams()) -> TimeSeries:
    """Lorenz 63 trajectory with channels ``x, y, z, dx, dy, dz``."""
    ts = rk4_integrate(lorenz63(params), params.z0, dt, T, names=["x", "y", "z"])
    ts.meta.update({"system": "lorenz", "params": params.__dict__})
    return ts


# --------------------------------------------------------------------------
# Bouc Wen
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class BoucWenParams:
    """Bouc Wen oscillator with a single-sine input that stops at ``t_end``.

    The forcing is ``amplitude * sin(2 pi frequency t)`` for ``t < t_end``
    and zero afterwards, leaving a free decay.
    """

    m: float = 2.0
    c: float = 10.0
    k: float = 5e4
    alpha: float = 5e4
    beta: float = 8e2
    delta: float = 1.1e3
    nu: float = 1.0
    amplitude: float = 50.0
    frequency: float = 10.0
    t_end: float = 6.0

    def forcing(self, t):
        t = np.asarray(t, dtype=float)
        return np.where(t < self.t_end, self.amplitude * np.sin(2 * np.pi * self.frequency * t),
                        0.0)


def boucwen_field(p: BoucWenParams) -> Callable:
    """Vector field of the state ``(x, xdot, z)``."""

    def f(t, s):
        x, v, z = s
        u = p.amplitude * np.sin(2 * np.pi * p.frequency * t) if t < p.t_end else 0.0
        az = abs(z)
        if p.nu == 1.0:
            zd = p.alpha * v - p.beta * abs(v) * z - p.delta * v * az
        else:
            zd = p.alpha * v - p.beta * abs(v) * az ** (p.nu - 1) * z - p.delta * v * az ** p.nu
        return np.array([v, (u - p.c * v - p.k * x - z) / p.m, zd])

    return f


def boucwen_simulate(params: BoucWenParams = BoucWenParams(), dt: float = 1e-3,
                     T: float = 12.0, substeps: int = 1) -> TimeSeries:
    """Simulate from rest; channels ``x, xdot, xddot, z, u``."""
    if not params.nu > 0:
        raise ValueError("nu must be positive")
    ts = rk4_integrate(boucwen_field(params), [0.0, 0.0, 0.0], dt, T,
                       names=["x", "xdot", "z"], substeps=substeps)
    u = params.forcing(ts.t)
    data = np.column_stack([ts["x"], ts["xdot"], ts["dxdot"], ts["z"], u])
    return TimeSeries(ts.t, data, ["x", "xdot", "xddot", "z", "u"],
                      {"system": "boucwen", "params": params.__dict__})


def boucwen_latent_state(u, f_lin) -> np.ndarray:
    """Measurable proxy ``y = u - f_lin`` of the hysteretic force."""
    u = np.asarray(u, dtype=float)
    f_lin = np.asarray(f_lin, dtype=float)
    if u.shape != f_lin.shape:
        raise ValueError("u and f_lin must have the same length")
    return u - f_lin


def log_decrement(x, min_peaks: int = 2, rel_floor: float = 1e-3) -> float:
    """Damping ratio from the averaged logarithmic decrement of positive peaks.

    Peaks below ``rel_floor`` times the largest magnitude are ignored so the
    numerical noise floor of a fully decayed record does not bias the mean.
    """
    x = np.asarray(x, dtype=float)
    idx, _ = find_peaks(x)
    idx = idx[x[idx] > rel_floor * np.abs(x).max()]
    if idx.size < max(min_peaks, 2):
        raise ValueError(f"need at least {max(min_peaks, 2)} positive peaks, found {idx.size}")
    pk = x[idx]
    dlt = np.mean(np.log(pk[:-1] / pk[1:]))
    return float(dlt / np.sqrt(4 * np.pi**2 + dlt**2))


def spectral_peak(x, dt: float, min_freq: float = 1.0) -> float:
    """Dominant angular frequency with three-bin quadratic interpolation of |FFT|.

    Bins below ``min_freq`` (Hz) are ignored so a slowly settling offset is
    not mistaken for the oscillation.
    """
    x = np.asarray(x, dtype=float) - np.mean(x)
    n = x.size
    mag = np.abs(np.fft.rfft(x * np.hanning(n)))
    lo = max(int(np.ceil(min_freq * n * dt)), 1)
    i = int(np.argmax(mag[lo:])) + lo
    if 1 <= i < mag.size - 1:
        a, b, c = np.log(mag[i - 1:i + 2] + 1e-300)
        den = a - 2 * b + c
        off = 0.5 * (a - c) / den if den != 0 else 0.0
    else:
        off = 0.0
    return float(2 * np.pi * (i + off) / (n * dt))


@dataclass
class LinearEstimate:
    zeta: float
    omega_d: float
    omega_n: float
    f_lin: np.ndarray
    xdot: np.ndarray
    xddot: np.ndarray
    keep: slice


def estimate_flin(ts: TimeSeries, t_decay: float, mass: float = 1.0, lam: float = 1e-24,
                  trim: float = 0.05, x_name: str = "x", newton_order: int = 3,
                  min_freq: float = 1.0) -> LinearEstimate:
    """Linear-oscillator force estimated from the free decay.

    ``zeta`` comes from the log decrement of the decay window (``t >= t_decay``,
    measured about the settled value at its end) and ``omega_d`` from its
    spectral peak; ``omega_n = omega_d / sqrt(1 - zeta^2)``.
    Velocity and acceleration are Tikhonov-regularised derivatives of ``x``.
    ``f_lin = mass * (xddot + 2 zeta omega_n xdot + omega_n^2 x)`` is returned
    on the trimmed index range ``keep``.
    """
    x = ts[x_name]
    w = ts.t >= t_decay
    if w.sum() < 16:
        raise ValueError("decay window too short")
    xw = x[w] - np.mean(x[w][-max(w.sum() // 20, 1):])
    zeta = log_decrement(xw, min_peaks=2)
    wd = spectral_peak(xw, ts.dt, min_freq)
    wn = wd / np.sqrt(max(1.0 - zeta**2, 1e-12))
    keep = trim_slice(ts.M, trim)
    xd = regularized_derivative(x, ts.dt, 1, lam, newton_order, trim=trim)
    xdd = regularized_derivative(x, ts.dt, 2, lam, newton_order, trim=trim)
    f = mass * (xdd + 2 * zeta * wn * xd + wn**2 * x[keep])
    return LinearEstimate(zeta, wd, wn, f, xd, xdd, keep)


# --------------------------------------------------------------------------
# chatter DDE
# --------------------------------------------------------------------------


@dataclass(frozen=True)
class ChatterParams:
    """Single-mode turning model with regenerative delay and process damping."""

    tau: float = 2.0e-2
    f: float = 3.0e-3
    zeta: float = 2.38e-2
    omega_n: float = 2.129e3
    kappa: float = 1.5e-1
    rho: float = 1.247e-5
    history: float = 1e-6

    def coefficients(self) -> dict:
        """Coefficients of ``xddot = c0 + cx x + cv xdot + cd x(t - tau)``."""
        w2 = self.omega_n**2
        return {"1": self.kappa * self.f * w2, "x": -(w2 + self.kappa * w2),
                "xdot": -(2 * self.zeta * self.omega_n + self.rho * w2),
                "x_tau": self.kappa * w2}


def dde_simulate(params: ChatterParams = ChatterParams(), dt: float = 1e-5, T: float = 0.1,
                 raise_on_blowup: bool = True) -> TimeSeries:
    """Method-of-steps RK4 for the chatter DDE.

    History is ``params.history`` on ``[-tau, 0)`` with ``x(0) = 0`` and zero
    initial velocity. Delayed values at half steps use cubic interpolation
    of the stored grid. Channels: ``x, xdot, xddot, x_tau``.
    ``meta["growth"]`` is the ratio of late to early RMS of ``x - kappa f``.
    """
    s = delay_shift(params.tau, dt)
    if s < 3:
        raise ValueError("tau must span at least three samples")
    n = _n_steps(T, dt)
    c = params.coefficients()
    x, v, bad = _kernels.dde_rk4(c["1"], c["x"], c["xdot"], c["x_tau"], s, dt, n,
                                 params.history, 0.0, 0.0)
    if bad >= 0:
        if raise_on_blowup:
            raise SimulationError(f"chatter DDE blew up at t={bad * dt:.6g}", bad * dt)
        x, v = x[:bad], v[:bad]
    t = np.arange(x.size) * dt
    xt = np.concatenate([np.full(s, params.history), x])[: x.size]
    a = c["1"] + c["x"] * x + c["xdot"] * v + c["x_tau"] * xt
    meta = {"system": "chatter", "params": params.__dict__, "delay_samples": s,
            "growth": growth_ratio(x, params.kappa * params.f)}
    meta["unstable"] = bool(meta["growth"] > 1.0)
    return TimeSeries(t, np.column_stack([x, v, a, xt]), ["x", "xdot", "xddot", "x_tau"], meta)


def _rms(x):
    peak = np.abs(x).max()
    if peak == 0 or not np.isfinite(peak):
        return float(peak)
    return float(peak * np.sqrt(np.mean((x / peak) ** 2)))


def growth_ratio(x, offset: float = 0.0, window: float = 0.2) -> float:
    """RMS of ``x - offset`` over the last ``window`` fraction divided by the first."""
    d = np.asarray(x, dtype=float) - offset
    n = max(int(window * d.size), 1)
    early = _rms(d[:n])
    late = _rms(d[-n:])
    return float(late / early) if early > 0 else np.inf
