"""Independent reference implementations the tests check against.

Each oracle deliberately takes a different computational route from the
code under test: Gaussian elimination instead of QR, exhaustive split
enumeration instead of prefix-sum scoring, dense projected-gradient QP
instead of pairwise coordinate updates, and plain-python group-bys
instead of vectorized passes. Shared dataclasses are the only overlap.
"""

from __future__ import annotations

import math
import statistics

import numpy as np

from yieldfinder.forest import Leaf, Split
from yieldfinder.model import KernelKind


# --- least squares via normal equations -------------------------------------


def ols_normal_equations(X, y):
    """Solve (X'X) b = X'y by Gaussian elimination with partial pivoting."""
    X = [[float(v) for v in row] for row in np.asarray(X)]
    y = [float(v) for v in np.asarray(y)]
    n, k = len(X), len(X[0])
    xtx = [[sum(X[r][i] * X[r][j] for r in range(n)) for j in range(k)] for i in range(k)]
    xty = [sum(X[r][i] * y[r] for r in range(n)) for i in range(k)]

    augmented = [row[:] + [rhs] for row, rhs in zip(xtx, xty)]
    for col in range(k):
        pivot = max(range(col, k), key=lambda r: abs(augmented[r][col]))
        if abs(augmented[pivot][col]) == 0.0:
            raise ZeroDivisionError("singular normal equations")
        augmented[col], augmented[pivot] = augmented[pivot], augmented[col]
        for row in range(col + 1, k):
            factor = augmented[row][col] / augmented[col][col]
            for j in range(col, k + 1):
                augmented[row][j] -= factor * augmented[col][j]
    beta = [0.0] * k
    for row in range(k - 1, -1, -1):
        acc = augmented[row][k] - sum(augmented[row][j] * beta[j] for j in range(row + 1, k))
        beta[row] = acc / augmented[row][row]
    return np.array(beta)


# --- exhaustive regression tree ----------------------------------------------


def _sse(values) -> float:
    mean = sum(values) / len(values)
    return sum((v - mean) ** 2 for v in values)


def oracle_tree(X, y, min_leaf: int = 1):
    """Grow a tree by trying every (feature, midpoint) split naively.

    Same stopping and tie-break rules as the production grower: best SSE
    decrease wins, ties to the lowest feature then lowest threshold, and
    a midpoint that fails to separate its neighbors is not a split.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    rows = list(range(len(y)))
    return _oracle_grow(X, y, rows, min_leaf)


def _oracle_grow(X, y, rows, min_leaf):
    values = [y[r] for r in rows]
    if len(rows) <= min_leaf or min(values) == max(values):
        return Leaf(prediction=float(sum(values) / len(values)), n_samples=len(rows))

    parent_sse = _sse(values)
    scored = []  # (gain, feature, threshold)
    for feature in range(X.shape[1]):
        ordered = sorted({float(X[r, feature]) for r in rows})
        for lo, hi in zip(ordered, ordered[1:]):
            threshold = (lo + hi) / 2.0
            if not threshold < hi:
                continue
            left = [y[r] for r in rows if X[r, feature] <= threshold]
            right = [y[r] for r in rows if X[r, feature] > threshold]
            if not left or not right:
                continue
            scored.append((parent_sse - _sse(left) - _sse(right), feature, threshold))
    best_gain = max((g for g, _, _ in scored), default=0.0)
    if not best_gain > 0.0:
        return Leaf(prediction=float(sum(values) / len(values)), n_samples=len(rows))

    # Same-partition splits on different features tie exactly in real
    # arithmetic; a vanishing slack absorbs the rounding spread before
    # the (feature, threshold) rule picks the winner.
    slack = 1e-10 * sum(v * v for v in values)
    _, feature, threshold = min(
        (c for c in scored if c[0] >= best_gain - slack), key=lambda c: (c[1], c[2])
    )
    left_rows = [r for r in rows if X[r, feature] <= threshold]
    right_rows = [r for r in rows if X[r, feature] > threshold]
    return Split(
        feature=feature,
        threshold=threshold,
        n_samples=len(rows),
        left=_oracle_grow(X, y, left_rows, min_leaf),
        right=_oracle_grow(X, y, right_rows, min_leaf),
    )


def trees_match(a, b, rel=1e-9) -> bool:
    """Structural equality with a float tolerance on predictions/thresholds."""
    if isinstance(a, Leaf) and isinstance(b, Leaf):
        return a.n_samples == b.n_samples and math.isclose(a.prediction, b.prediction, rel_tol=rel, abs_tol=1e-12)
    if isinstance(a, Split) and isinstance(b, Split):
        return (
            a.feature == b.feature
            and a.n_samples == b.n_samples
            and math.isclose(a.threshold, b.threshold, rel_tol=rel, abs_tol=1e-12)
            and trees_match(a.left, b.left, rel)
            and trees_match(a.right, b.right, rel)
        )
    return False


# --- dense QP for the SVR dual ----------------------------------------------


def _oracle_kernel(spec, u, v):
    inner = sum(a * b for a, b in zip(u, v))
    gamma = spec.gamma if spec.gamma is not None else 1.0 / len(u)
    if spec.kind is KernelKind.LINEAR:
        return inner
    if spec.kind is KernelKind.POLYNOMIAL:
        return (gamma * inner + spec.coef0) ** spec.degree
    if spec.kind is KernelKind.RADIAL:
        return math.exp(-gamma * sum((a - b) ** 2 for a, b in zip(u, v)))
    return math.tanh(gamma * inner + spec.coef0)


def svr_dual_matrices(X, y, kernel, epsilon):
    """Dense (Q, p, z) of the stacked dual in minimization form."""
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    n = len(y)
    K = np.array([[_oracle_kernel(kernel, X[i], X[j]) for j in range(n)] for i in range(n)])
    z = np.concatenate([np.ones(n), -np.ones(n)])
    Q = np.outer(z, z) * np.tile(K, (2, 2))
    p = np.concatenate([epsilon - y, epsilon + y])
    return Q, p, z


def _project_box_hyperplane(v, z, C):
    """Euclidean projection onto {0 <= a <= C, z.a = 0} by bisection.

    g(t) = z . clip(v - t z, 0, C) is non-increasing and piecewise
    linear in t, so the root bracket just expands until signs differ.
    """

    def g(t):
        return float(z @ np.clip(v - t * z, 0.0, C))

    lo, hi = -1.0, 1.0
    while g(lo) < 0.0:
        lo *= 2.0
        if lo < -1e18:
            break
    while g(hi) > 0.0:
        hi *= 2.0
        if hi > 1e18:
            break
    for _ in range(200):
        mid = (lo + hi) / 2.0
        if g(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    return np.clip(v - ((lo + hi) / 2.0) * z, 0.0, C)


def solve_svr_dual(X, y, kernel, C=1.0, epsilon=0.1, max_iterations=400_000):
    """Projected gradient on the dense dual; returns (alpha, max-form objective)."""
    Q, p, z = svr_dual_matrices(X, y, kernel, epsilon)
    m = len(p)
    eigenvalues = np.linalg.eigvalsh((Q + Q.T) / 2.0)
    lipschitz = max(float(eigenvalues[-1]), 1e-9)
    step = 1.0 / lipschitz
    alpha = np.zeros(m)
    previous = math.inf
    for _ in range(max_iterations):
        gradient = Q @ alpha + p
        alpha = _project_box_hyperplane(alpha - step * gradient, z, C)
        current = float(0.5 * alpha @ Q @ alpha + p @ alpha)
        if abs(previous - current) < 1e-14 * max(1.0, abs(current)):
            break
        previous = current
    objective = float(0.5 * alpha @ Q @ alpha + p @ alpha)
    return alpha, -objective


# --- group-by index ----------------------------------------------------------


def oracle_annuity(price, cost_rate, down_fraction, monthly_rate, months):
    principal = price * (1.0 + cost_rate - down_fraction)
    if monthly_rate == 0.0:
        return principal / months
    factor = (1.0 + monthly_rate) ** months
    return principal * monthly_rate * factor / (factor - 1.0)


def oracle_index(listings, terms):
    """Plain-python group-by version of the yield index.

    Returns {(normalized neighborhood, bucket label): index} for cells
    with samples on both sides.
    """
    import unicodedata

    def norm(name):
        decomposed = unicodedata.normalize("NFKD", name)
        return " ".join("".join(c for c in decomposed if not unicodedata.combining(c)).split()).casefold()

    def bucket_label(size):
        for lo, hi, label in ((30, 60, "30-60"), (60, 90, "60-90"), (90, 120, "90-120"), (120, 150, "120-150")):
            if lo <= size < hi:
                return label
        return "150+" if size >= 150 else None

    rents: dict = {}
    mortgages: dict = {}
    for listing in listings:
        label = bucket_label(listing.size)
        if label is None:
            continue
        key = (norm(listing.neighborhood), label)
        if listing.operation.value == "rent":
            rents.setdefault(key, []).append(listing.price)
        else:
            mortgages.setdefault(key, []).append(
                oracle_annuity(
                    listing.price,
                    terms.transaction_cost_rate,
                    terms.down_payment_fraction,
                    terms.monthly_rate,
                    terms.months,
                )
            )
    out = {}
    for key in set(rents) & set(mortgages):
        out[key] = statistics.mean(rents[key]) / statistics.mean(mortgages[key])
    return out
