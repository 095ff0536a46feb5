"""Recovery metrics and their aggregation over trials."""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from typing import Dict, Iterable, List, Sequence, Tuple

import numpy as np
from scipy.stats import norm


def _as_supports(supports) -> List[frozenset]:
    """Normalise per-state supports to a list of frozensets.

    Accepts a coefficient matrix ``(P, N)`` (nonzeros define the supports)
    or a sequence of index collections.
    """
    if isinstance(supports, np.ndarray) and supports.dtype.kind == "f":
        arr = supports[:, None] if supports.ndim == 1 else supports
        return [frozenset(np.flatnonzero(arr[:, j]).tolist()) for j in range(arr.shape[1])]
    return [frozenset(int(i) for i in s) for s in supports]


def support_recovery(estimated, true) -> int:
    """1 when every per-state support matches the truth exactly, else 0."""
    est, tru = _as_supports(estimated), _as_supports(true)
    if len(est) != len(tru):
        raise ValueError("number of states differs")
    return int(all(a == b for a, b in zip(est, tru)))


def rmse(theta, est, true) -> float:
    """Root mean square of ``Theta (est - true)`` over all entries."""
    A = np.asarray(getattr(theta, "matrix", theta), dtype=float)
    E = np.asarray(est, dtype=float)
    T = np.asarray(true, dtype=float)
    if E.shape != T.shape:
        raise ValueError(f"shape mismatch {E.shape} vs {T.shape}")
    if A.shape[1] != E.shape[0]:
        raise ValueError("library columns and coefficient rows differ")
    R = A @ (E - T)
    return float(np.sqrt(np.mean(R**2)))


def coeff_error(est, true) -> float:
    """``||est - true|| / ||true||`` (Frobenius norms)."""
    E = np.asarray(est, dtype=float)
    T = np.asarray(true, dtype=float)
    if E.shape != T.shape:
        raise ValueError(f"shape mismatch {E.shape} vs {T.shape}")
    nt = np.linalg.norm(T)
    if nt == 0:
        raise ValueError("true coefficients are all zero")
    return float(np.linalg.norm(E - T) / nt)


def wilson_interval(successes: int, n: int, confidence: float = 0.95) -> Tuple[float, float]:
    """Wilson score interval for a binomial proportion."""
    if n <= 0:
        return (0.0, 1.0)
    z = norm.ppf(0.5 + confidence / 2)
    p = successes / n
    den = 1 + z**2 / n
    mid = (p + z**2 / (2 * n)) / den
    half = z * np.sqrt(p * (1 - p) / n + z**2 / (4 * n**2)) / den
    return (float(max(mid - half, 0.0)), float(min(mid + half, 1.0)))


@dataclass
class TrialResult:
    """Outcome of one identification trial."""

    support_exact: int
    rmse: float
    coeff_error: float
    estimator: str
    scenario: Dict[str, float] = field(default_factory=dict)


def evaluate(theta, est, true, estimator: str, **scenario) -> TrialResult:
    return TrialResult(support_recovery(est, true), rmse(theta, est, true),
                       coeff_error(est, true), estimator, dict(scenario))


SCENARIO_KEYS = ("noise", "T", "degree")


def aggregate(trials: Iterable[TrialResult], keys: Sequence[str] = SCENARIO_KEYS) -> List[dict]:
    """Group trials by estimator and scenario ``keys`` (seed is averaged out).

    Each row holds the mean recovery rate with its Wilson interval and the
    mean coefficient error and RMSE.
    """
    groups: Dict[tuple, List[TrialResult]] = {}
    for t in trials:
        key = (t.estimator,) + tuple(t.scenario.get(k) for k in keys)
        groups.setdefault(key, []).append(t)
    rows = []
    for key, ts in sorted(groups.items(), key=lambda kv: tuple(map(str, kv[0]))):
        n = len(ts)
        s = sum(t.support_exact for t in ts)
        lo, hi = wilson_interval(s, n)
        row = {"estimator": key[0]}
        row.update(dict(zip(keys, key[1:])))
        row.update({"trials": n, "E_S": s / n, "E_S_low": lo, "E_S_high": hi,
                    "E_c": float(np.mean([t.coeff_error for t in ts])),
                    "RMSE": float(np.mean([t.rmse for t in ts]))})
        rows.append(row)
    return rows


def write_table(rows: List[dict], path) -> None:
    """Write aggregated rows as CSV (column order from the first row)."""
    if not rows:
        raise ValueError("nothing to write")
    with open(path, "w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0].keys()), lineterminator="\n")
        w.writeheader()
        for r in rows:
            w.writerow({k: (repr(v) if isinstance(v, float) else v) for k, v in r.items()})
