"""Epsilon-insensitive support vector regression, solved in the dual.

The dual is the standard box-constrained QP over stacked coefficient
pairs (one raising, one lowering per training point) with a single
equality constraint. Optimization is sequential minimal optimization on
the maximal KKT-violating pair; ties pick the lowest index, so runs are
deterministic. The reported convergence flag means exactly: the largest
KKT violation is at or below the configured tolerance.

Unscaled euro-valued targets make absolute tolerances meaningless across
datasets, so an unset tolerance resolves to 1e-3 * max(1, std(y)) at fit
time and the resolved value is recorded on the returned model.
"""

from __future__ import annotations

from collections import OrderedDict
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .errors import DimensionMismatch, TooFewRows, ValidationError
from .model import KernelKind, KernelSpec, ModelSpec, SvrConfig


def kernel_eval(spec: KernelSpec, u: np.ndarray, v: np.ndarray) -> float:
    """Scalar kernel value; an unset gamma falls back to 1/len(u)."""
    u = np.asarray(u, dtype=float).ravel()
    v = np.asarray(v, dtype=float).ravel()
    if u.shape != v.shape:
        raise DimensionMismatch(f"vectors of length {len(u)} and {len(v)}")
    return float(_kernel_matrix(spec.resolved(len(u)), u[None, :], v[None, :])[0, 0])


def _kernel_matrix(spec: KernelSpec, A: np.ndarray, B: np.ndarray) -> np.ndarray:
    inner = A @ B.T
    if spec.kind is KernelKind.LINEAR:
        return inner
    if spec.kind is KernelKind.POLYNOMIAL:
        return (spec.gamma * inner + spec.coef0) ** spec.degree
    if spec.kind is KernelKind.RADIAL:
        sq = np.maximum(
            (A * A).sum(axis=1)[:, None] + (B * B).sum(axis=1)[None, :] - 2.0 * inner,
            0.0,
        )
        return np.exp(-spec.gamma * sq)
    return np.tanh(spec.gamma * inner + spec.coef0)


class _RowCache:
    """Bounded LRU over kernel matrix rows, keyed by training index."""

    def __init__(self, X: np.ndarray, spec: KernelSpec, capacity: int):
        self._X = X
        self._spec = spec
        self._capacity = capacity
        self._rows: OrderedDict[int, np.ndarray] = OrderedDict()

    def row(self, index: int) -> np.ndarray:
        cached = self._rows.get(index)
        if cached is not None:
            self._rows.move_to_end(index)
            return cached
        computed = _kernel_matrix(self._spec, self._X[index : index + 1], self._X)[0]
        self._rows[index] = computed
        if len(self._rows) > self._capacity:
            self._rows.popitem(last=False)
        return computed


@dataclass(frozen=True)
class SvrModel:
    """Fitted model: support vectors, signed dual coefficients, bias.

    config carries the resolved hyperparameters actually used (epsilon,
    tolerance, kernel gamma), not the unset placeholders.
    """

    support_vectors: np.ndarray
    dual_coefficients: np.ndarray
    bias: float
    config: SvrConfig
    n_features: int
    n_iterations: int
    converged: bool
    dual_objective: float
    feature_names: tuple[str, ...] | None = None
    spec: ModelSpec | None = None
    objective_history: tuple[float, ...] | None = None


def svr_fit(X: np.ndarray, y: np.ndarray, config: SvrConfig | None = None,
            feature_names: Sequence[str] | None = None, spec: ModelSpec | None = None,
            track_objective: bool = False) -> SvrModel:
    """Solve the dual by SMO.

    Never raises on hitting the iteration cap; the model comes back with
    converged=False so callers can decide what a partial solve is worth.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    if X.ndim != 2:
        raise ValidationError("X must be a 2-D array")
    n, p = X.shape
    if n == 0:
        raise TooFewRows("cannot fit on zero rows")
    if y.shape[0] != n:
        raise ValidationError(f"X has {n} rows but y has {y.shape[0]}")
    if config is None:
        config = SvrConfig()

    y_scale = float(np.std(y))
    kernel = config.kernel.resolved(p)
    epsilon = config.epsilon if config.epsilon is not None else 0.1 * y_scale
    tolerance = config.tolerance if config.tolerance is not None else 1e-3 * max(1.0, y_scale)
    resolved = replace(config, kernel=kernel, epsilon=epsilon, tolerance=tolerance)

    C = resolved.cost
    m = 2 * n
    z = np.concatenate([np.ones(n), -np.ones(n)])
    alpha = np.zeros(m)
    linear_term = np.concatenate([epsilon - y, epsilon + y])
    gradient = linear_term.copy()
    cache = _RowCache(X, kernel, resolved.cache_rows)
    history: list[float] = []

    def objective() -> float:
        # max-form dual; gradient identity keeps this O(m).
        return -float(0.5 * alpha @ gradient + 0.5 * alpha @ linear_term)

    iterations = 0
    converged = False
    while iterations < resolved.max_iterations:
        if track_objective:
            history.append(objective())
        score = -z * gradient
        up = ((z > 0) & (alpha < C)) | ((z < 0) & (alpha > 0))
        low = ((z > 0) & (alpha > 0)) | ((z < 0) & (alpha < C))
        score_up = np.where(up, score, -np.inf)
        score_low = np.where(low, score, np.inf)
        i = int(np.argmax(score_up))
        j = int(np.argmin(score_low))
        gap = score_up[i] - score_low[j]
        if not np.isfinite(gap) or gap <= tolerance:
            converged = True
            break

        bi, bj = i % n, j % n
        k_ii = cache.row(bi)[bi]
        row_j = cache.row(bj)
        curvature = k_ii + row_j[bj] - 2.0 * row_j[bi]
        step = gap / curvature if curvature > 0 else np.inf
        cap_i = C - alpha[i] if z[i] > 0 else alpha[i]
        cap_j = alpha[j] if z[j] > 0 else C - alpha[j]
        lam = min(step, cap_i, cap_j)

        alpha[i] += z[i] * lam
        alpha[j] -= z[j] * lam
        if lam == cap_i:
            alpha[i] = C if z[i] > 0 else 0.0
        if lam == cap_j:
            alpha[j] = 0.0 if z[j] > 0 else C

        row_i2 = np.tile(cache.row(bi), 2)
        row_j2 = np.tile(row_j, 2)
        gradient += (z[i] * lam) * (z[i] * z * row_i2) + (-z[j] * lam) * (z[j] * z * row_j2)
        iterations += 1

    if track_objective:
        history.append(objective())

    beta = alpha[:n] - alpha[n:]
    support = beta != 0.0
    free = (alpha > 0) & (alpha < C)
    final_score = -z * gradient
    if free.any():
        bias = float(final_score[free].mean())
    else:
        up = ((z > 0) & (alpha < C)) | ((z < 0) & (alpha > 0))
        low = ((z > 0) & (alpha > 0)) | ((z < 0) & (alpha < C))
        hi = np.max(np.where(up, final_score, -np.inf))
        lo = np.min(np.where(low, final_score, np.inf))
        if not np.isfinite(hi) or not np.isfinite(lo):
            bias = float(np.median(y))
        else:
            bias = float((hi + lo) / 2.0)

    return SvrModel(
        support_vectors=X[support].copy(),
        dual_coefficients=beta[support].copy(),
        bias=bias,
        config=resolved,
        n_features=p,
        n_iterations=iterations,
        converged=converged,
        dual_objective=objective(),
        feature_names=tuple(feature_names) if feature_names is not None else None,
        spec=spec,
        objective_history=tuple(history) if track_objective else None,
    )


def svr_predict(model: SvrModel, X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != model.n_features:
        raise DimensionMismatch(f"expected {model.n_features} columns, got {X.shape}")
    if len(model.dual_coefficients) == 0:
        return np.full(X.shape[0], model.bias)
    K = _kernel_matrix(model.config.kernel, model.support_vectors, X)
    return model.dual_coefficients @ K + model.bias
