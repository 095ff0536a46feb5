"""Candidate-function libraries and the integral-augmented design."""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from itertools import combinations_with_replacement
from math import comb
from typing import Dict, List, Optional, Sequence

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .numerics import OperatorMatrix, cumulative_integral


@dataclass(frozen=True)
class Library:
    """Library matrix with one symbolic label per column."""

    matrix: np.ndarray
    labels: List[str]
    state_names: List[str] = field(default_factory=list)
    includes_constant: bool = False

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=float)
        if m.ndim != 2:
            raise ValueError("library matrix must be 2-D")
        if m.shape[1] != len(self.labels):
            raise ValueError(
                f"{m.shape[1]} columns but {len(self.labels)} labels"
            )
        if len(set(self.labels)) != len(self.labels):
            dup = sorted({l for l in self.labels if self.labels.count(l) > 1})
            raise ValueError(f"duplicate library labels: {dup}")
        object.__setattr__(self, "matrix", m)
        object.__setattr__(self, "labels", list(self.labels))

    @property
    def shape(self):
        return self.matrix.shape

    @property
    def P(self) -> int:
        return self.matrix.shape[1]

    def with_matrix(self, matrix) -> "Library":
        return replace(self, matrix=np.asarray(matrix, dtype=float))

    def rows(self, index) -> "Library":
        return self.with_matrix(self.matrix[index])

    def index(self, label: str) -> int:
        return self.labels.index(label)


@dataclass(frozen=True)
class AugmentedLibrary:
    """``Gamma = [1, T1 Theta]`` for the integral (initial value) formulation."""

    matrix: np.ndarray
    labels: List[str]
    base: Library

    def __post_init__(self):
        if not np.all(self.matrix[:, 0] == 1.0):
            raise ValueError("first column of an augmented library must be all ones")


def _monomial_label(names: Sequence[str], powers: Dict[int, int]) -> str:
    parts = []
    for i in sorted(powers):
        p = powers[i]
        parts.append(names[i] if p == 1 else f"{names[i]}^{p}")
    return "*".join(parts)


def n_poly_terms(n_vars: int, degree: int, include_constant: bool = False) -> int:
    """Number of monomials of total degree ``1..degree`` (plus the constant)."""
    return comb(n_vars + degree, degree) - (0 if include_constant else 1)


def poly_library(X, names: Optional[Sequence[str]] = None, degree: int = 2,
                 include_constant: bool = False) -> Library:
    """All monomials of total degree ``1..degree`` in graded lexicographic order.

    ``X`` is ``(M, v)``; the constant column, when requested, is column 0.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    M, v = X.shape
    if v < 1:
        raise ValueError("need at least one channel")
    if degree < 1:
        raise ValueError("degree must be >= 1")
    names = list(names) if names is not None else [f"x{i}" for i in range(v)]
    if len(names) != v:
        raise ValueError("one name per channel required")
    cols, labels = [], []
    if include_constant:
        cols.append(np.ones(M))
        labels.append("1")
    for d in range(1, degree + 1):
        for combo in combinations_with_replacement(range(v), d):
            powers: Dict[int, int] = {}
            for i in combo:
                powers[i] = powers.get(i, 0) + 1
            cols.append(np.prod(X[:, list(combo)], axis=1))
            labels.append(_monomial_label(names, powers))
    return Library(np.column_stack(cols), labels, names, include_constant)


def custom_library(blocks: Sequence, passthrough: Optional[Dict[str, np.ndarray]] = None,
                   include_constant: bool = False) -> Library:
    """Concatenate polynomial blocks and passthrough columns.

    Parameters
    ----------
    blocks : sequence of ``(X, names, degree)``
        Each block expands to :func:`poly_library` without a constant.
    passthrough : dict, optional
        Extra columns (e.g. an input ``u``) appended verbatim.
    include_constant : bool
        Adds a single ones column at index 0.
    """
    parts: List[Library] = []
    lengths = set()
    for X, names, degree in blocks:
        lib = poly_library(X, names, degree, include_constant=False)
        parts.append(lib)
        lengths.add(lib.shape[0])
    passthrough = passthrough or {}
    for name, col in passthrough.items():
        col = np.asarray(col, dtype=float).ravel()
        parts.append(Library(col[:, None], [name], [name]))
        lengths.add(col.size)
    if not parts:
        raise ValueError("empty library specification")
    if len(lengths) != 1:
        raise ValueError(f"misaligned channel lengths: {sorted(lengths)}")
    M = lengths.pop()
    cols, labels, states = [], [], []
    if include_constant:
        cols.append(np.ones((M, 1)))
        labels.append("1")
    for lib in parts:
        cols.append(lib.matrix)
        labels.extend(lib.labels)
        states.extend(s for s in lib.state_names if s not in states)
    return Library(np.hstack(cols), labels, states, include_constant)


def delay_shift(tau: float, dt: float) -> int:
    """Integer number of samples in a delay; ``tau`` must sit on the grid."""
    s = tau / dt
    n = int(round(s))
    if abs(s - n) > 1e-9 * max(1.0, abs(s)) or n < 1:
        raise ValueError(f"delay {tau} is not a positive integer multiple of dt={dt}")
    return n


def delay_embed(x, tau: float, dt: float):
    """Return ``(x[s:], x[:-s])``: current samples and the samples one delay earlier."""
    x = np.asarray(x, dtype=float)
    s = delay_shift(tau, dt)
    if s >= x.shape[0]:
        raise ValueError("delay longer than the record")
    return x[s:], x[:-s]


def augment_integral(theta: Library, T1: OperatorMatrix) -> AugmentedLibrary:
    """Build ``Gamma = [1_M, T1 Theta]``; the ones coefficient is the initial value."""
    if T1.kind != "integral" or T1.order != 1:
        raise ValueError("augment_integral needs a first-order integral operator")
    M = theta.shape[0]
    if T1.shape != (M, M):
        raise ValueError(f"operator shape {T1.shape} does not match {M} samples")
    G = np.column_stack([np.ones(M), T1.entries @ theta.matrix])
    return AugmentedLibrary(G, ["1"] + list(theta.labels), theta)


def integral_library(theta: Library, dt: float, newton_order: int = 1) -> AugmentedLibrary:
    """Same as :func:`augment_integral` with ``T1`` applied matrix-free (for long records)."""
    M = theta.shape[0]
    G = np.column_stack([np.ones(M), cumulative_integral(theta.matrix, dt, newton_order)])
    return AugmentedLibrary(G, ["1"] + list(theta.labels), theta)


class PolynomialLibrary(TransformerMixin, BaseEstimator):
    """Transformer form of :func:`poly_library` for use in pipelines."""

    def __init__(self, degree=2, include_constant=False, feature_names=None):
        self.degree = degree
        self.include_constant = include_constant
        self.feature_names = feature_names

    def fit(self, X, y=None):
        X = check_array(X)
        self.n_features_in_ = X.shape[1]
        names = self.feature_names or [f"x{i}" for i in range(X.shape[1])]
        self.library_ = poly_library(X[:1], names, self.degree, self.include_constant)
        return self

    def transform(self, X):
        check_is_fitted(self, "library_")
        X = check_array(X)
        if X.shape[1] != self.n_features_in_:
            raise ValueError("feature count differs from fit")
        return poly_library(X, self.library_.state_names, self.degree,
                            self.include_constant).matrix

    def get_feature_names_out(self, input_features=None):
        check_is_fitted(self, "library_")
        return np.asarray(self.library_.labels, dtype=object)
