"""Dense linear-algebra helpers and discrete differentiation/integration operators."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
import scipy.sparse as sp
import scipy.linalg


class RankDeficiencyError(np.linalg.LinAlgError):
    """Raised when a restricted least-squares design is numerically rank deficient.

    Attributes
    ----------
    columns : list of int
        Indices (in the original design) of the columns found to be dependent.
    """

    def __init__(self, message: str, columns: Sequence[int] = ()):
        super().__init__(message)
        self.columns = list(columns)


@dataclass(frozen=True)
class OperatorMatrix:
    """A discrete derivative or cumulative-integral operator on a uniform grid."""

    entries: np.ndarray
    kind: str
    order: int
    dt: float
    newton_order: Optional[int] = None

    def __post_init__(self):
        self.entries.setflags(write=False)

    @property
    def shape(self):
        return self.entries.shape

    def __matmul__(self, other):
        return self.entries @ other


def _first_difference(M: int, dt: float) -> np.ndarray:
    D = np.zeros((M - 1, M))
    idx = np.arange(M - 1)
    D[idx, idx] = -1.0
    D[idx, idx + 1] = 1.0
    return D / dt


def diff_matrix(order: int, M: int, dt: float) -> OperatorMatrix:
    """Forward difference operator of the given order, shape ``(M - order, M)``.

    Higher orders are built by chaining first differences, ``D_{i+1} = D_1 D_i``.
    """
    order = int(order)
    if order < 1:
        raise ValueError("order must be >= 1")
    if M <= order:
        raise ValueError(f"need M > order, got M={M}, order={order}")
    if not dt > 0:
        raise ValueError("dt must be positive")
    D = _first_difference(M, dt)
    for i in range(1, order):
        D = _first_difference(M - i, dt) @ D
    return OperatorMatrix(D, "derivative", order, float(dt))


def newton_sparse(M: int, dt: float, newton_order: int = 1) -> sp.csr_matrix:
    """Sparse per-interval quadrature weights ``B`` (row ``i`` integrates ``[t_{i-1}, t_i]``)."""
    if newton_order not in (1, 2, 3):
        raise ValueError(f"newton_order must be 1, 2 or 3, got {newton_order}")
    B = sp.lil_matrix((M, M))
    if newton_order == 1:
        i = np.arange(1, M)
        B[i, i - 1] = 1.0
        B[i, i] = 1.0
        return (B * (dt / 2.0)).tocsr()
    if newton_order == 2:
        i = np.arange(1, M - 1)
        B[i, i - 1] = 5.0
        B[i, i] = 8.0
        B[i, i + 1] = -1.0
        B[M - 1, M - 3:] = (-1.0, 8.0, 5.0)
        return (B * (dt / 12.0)).tocsr()
    B[1, :4] = (9.0, 19.0, -5.0, 1.0)
    i = np.arange(2, M - 1)
    B[i, i - 2] = -1.0
    B[i, i - 1] = 13.0
    B[i, i] = 13.0
    B[i, i + 1] = -1.0
    B[M - 1, M - 4:] = (1.0, -5.0, 19.0, 9.0)
    return (B * (dt / 24.0)).tocsr()


def newton_matrix(M: int, dt: float, newton_order: int = 1) -> np.ndarray:
    """Dense form of :func:`newton_sparse`."""
    return newton_sparse(M, dt, newton_order).toarray()


def cumulative_integral(X, dt: float, newton_order: int = 1, order: int = 1) -> np.ndarray:
    """Apply ``T_order`` to the columns of ``X`` without forming the dense operator."""
    X = np.asarray(X, dtype=float)
    if X.shape[0] < 4:
        raise ValueError("integral operators need M >= 4")
    B = newton_sparse(X.shape[0], dt, newton_order)
    out = X
    for _ in range(order):
        w = B @ out
        w[0] = 0.0
        out = np.cumsum(w, axis=0)
    return out


def integ_matrix(order: int, M: int, dt: float, newton_order: int = 1) -> OperatorMatrix:
    """Cumulative integral operator ``T_order`` of shape ``(M, M)``.

    ``T_1 = L B`` where ``L`` sums intervals and ``B`` holds the Newton
    quadrature stencil; ``T_{i+1} = T_1 T_i``. The first row is zero.
    """
    order = int(order)
    if order < 1:
        raise ValueError("order must be >= 1")
    if newton_order not in (1, 2, 3):
        raise ValueError(f"newton_order must be 1, 2 or 3, got {newton_order}")
    if M < 4:
        raise ValueError("integral operators need M >= 4")
    if not dt > 0:
        raise ValueError("dt must be positive")
    L = np.tril(np.ones((M, M)))
    L[:, 0] = 0.0
    T1 = L @ newton_matrix(M, dt, newton_order)
    T = T1
    for _ in range(1, order):
        T = T1 @ T
    return OperatorMatrix(T, "integral", order, float(dt), newton_order)


def least_squares(A, b, support=None, rtol: float = 1e-10) -> np.ndarray:
    """Least squares restricted to ``support`` via QR, zeros elsewhere.

    Columns are normalised before factorisation so the rank test is scale
    free. ``b`` may hold several right-hand sides as columns.

    Raises
    ------
    RankDeficiencyError
        If the restricted design has (numerically) dependent columns.
    """
    A = np.asarray(A, dtype=float)
    b = np.asarray(b, dtype=float)
    P = A.shape[1]
    if support is None:
        cols = np.arange(P)
    else:
        cols = np.flatnonzero(_as_mask(support, P))
    out_shape = (P,) + b.shape[1:]
    x = np.zeros(out_shape)
    if cols.size == 0:
        return x
    As = A[:, cols]
    if As.shape[0] < cols.size:
        raise RankDeficiencyError(
            f"{As.shape[0]} rows cannot determine {cols.size} coefficients", cols
        )
    norms = np.linalg.norm(As, axis=0)
    if np.any(norms == 0):
        raise RankDeficiencyError("zero column in restricted design", cols[norms == 0])
    Q, R, piv = scipy.linalg.qr(As / norms, mode="economic", pivoting=True)
    d = np.abs(np.diag(R))
    bad = d <= rtol * max(d[0], 1.0) * max(As.shape)
    if np.any(bad):
        raise RankDeficiencyError(
            "restricted design is rank deficient", sorted(cols[piv[bad]].tolist())
        )
    coef = scipy.linalg.solve_triangular(R, Q.T @ b)
    sol = np.empty_like(coef)
    sol[piv] = coef
    x[cols] = (sol.T / norms).T
    return x


def _as_mask(support, P: int) -> np.ndarray:
    support = np.asarray(support)
    if support.dtype == bool:
        if support.shape != (P,):
            raise ValueError("boolean support must have one entry per column")
        return support
    mask = np.zeros(P, dtype=bool)
    mask[support.astype(int)] = True
    return mask
