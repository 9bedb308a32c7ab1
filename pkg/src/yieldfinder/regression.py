"""Feature encoding and linear least squares with inference.

Four nested feature sets (spec 1 through 4) build toward the full
hedonic model. Encoding is strict about missingness: a row lacking any
feature its spec needs is dropped, so sample size shrinks as richer
specs pull in sparser fields. The price-per-area field is the exception;
it can be imputed beforehand from neighborhood rent levels, which keeps
the row set stable between spec 2 and spec 3.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

from .errors import NoUsableRows, RankDeficient, SpecMismatch, TooFewRows, ValidationError
from .model import Listing, ModelSpec, Operation, PropertyType, Status, normalize_name

_FEATURES: dict[str, Callable[[Listing], float | None]] = {
    "size": lambda l: l.size,
    "exterior": lambda l: None if l.exterior is None else float(l.exterior),
    "floor": lambda l: None if l.floor is None else float(l.floor),
    "lift": lambda l: None if l.lift is None else float(l.lift),
    "price_by_area": lambda l: l.price_by_area,
    "status_good": lambda l: float(l.status is Status.GOOD),
    "status_new_development": lambda l: float(l.status is Status.NEW_DEVELOPMENT),
    "status_renew": lambda l: float(l.status is Status.RENEW),
    "bathrooms_per_sqm": lambda l: l.bathrooms / l.size,
    "type_duplex": lambda l: float(l.property_type is PropertyType.DUPLEX),
    "type_flat": lambda l: float(l.property_type is PropertyType.FLAT),
    "parking": lambda l: None if l.parking is None else float(l.parking),
    "photos": lambda l: float(l.photos),
}

SPEC_FEATURES: dict[ModelSpec, tuple[str, ...]] = {
    ModelSpec.SPEC1: ("size", "exterior", "floor"),
    ModelSpec.SPEC2: ("size", "exterior", "floor", "lift"),
    ModelSpec.SPEC3: ("size", "exterior", "floor", "lift", "price_by_area"),
    ModelSpec.SPEC4: (
        "size", "exterior", "floor", "lift", "price_by_area",
        "status_good", "status_new_development", "status_renew",
        "bathrooms_per_sqm", "type_duplex", "type_flat", "parking", "photos",
    ),
}


@dataclass(frozen=True)
class Encoded:
    """Design matrix plus target and the ids of surviving rows."""

    X: np.ndarray
    y: np.ndarray
    ids: tuple[str, ...]
    feature_names: tuple[str, ...]
    spec: ModelSpec


def encode(listings: Sequence[Listing], spec: ModelSpec, add_intercept: bool = True) -> Encoded:
    """Numeric design matrix for a spec; the target is the listing price.

    Rows missing any required feature are dropped (listwise deletion).
    Raises NoUsableRows when nothing survives.
    """
    names = SPEC_FEATURES[spec]
    rows, targets, ids = [], [], []
    for listing in listings:
        values = [_FEATURES[name](listing) for name in names]
        if any(v is None for v in values):
            continue
        rows.append(values)
        targets.append(listing.price)
        ids.append(listing.id)
    if not rows:
        raise NoUsableRows(f"no listing has the full spec {int(spec)} feature set")
    X = np.asarray(rows, dtype=float)
    if add_intercept:
        X = np.hstack([np.ones((X.shape[0], 1)), X])
        names = ("intercept",) + names
    return Encoded(X=X, y=np.asarray(targets, dtype=float), ids=tuple(ids), feature_names=names, spec=spec)


def missing_features(listing: Listing, spec: ModelSpec) -> tuple[str, ...]:
    """Names of the spec's features this listing cannot supply."""
    return tuple(name for name in SPEC_FEATURES[spec] if _FEATURES[name](listing) is None)


def impute_price_by_area(listings: Sequence[Listing], reference: Sequence[Listing] | None = None) -> list[Listing]:
    """Fill missing price-per-area from neighborhood rent levels.

    The fill value is the mean price/size ratio over the reference's
    rental listings in the same (normalized) neighborhood. Listings with
    no rental reference for their neighborhood stay missing.
    """
    if reference is None:
        reference = listings
    ratios: dict[str, list[float]] = {}
    for listing in reference:
        if listing.operation is Operation.RENT:
            ratios.setdefault(normalize_name(listing.neighborhood), []).append(listing.price / listing.size)
    means = {name: sum(v) / len(v) for name, v in ratios.items()}

    out = []
    for listing in listings:
        if listing.price_by_area is None:
            fill = means.get(normalize_name(listing.neighborhood))
            if fill is not None:
                listing = listing.with_price_by_area(fill)
        out.append(listing)
    return out


@dataclass(frozen=True)
class OlsFit:
    """Least-squares estimates with classical standard errors."""

    feature_names: tuple[str, ...]
    coefficients: np.ndarray
    standard_errors: np.ndarray
    t_stats: np.ndarray
    r_squared: float
    adj_r_squared: float
    n_observations: int
    residual_variance: float
    spec: ModelSpec | None = None


# Two-sided normal critical values: 1%, 5%, 10%.
_STAR_LEVELS = (
    (2.5758293035489004, "***"),
    (1.959963984540054, "**"),
    (1.6448536269514722, "*"),
)


def significance_stars(t_stat: float) -> str:
    for threshold, stars in _STAR_LEVELS:
        if abs(t_stat) > threshold:
            return stars
    return ""


def ols_fit(X: np.ndarray, y: np.ndarray, feature_names: Sequence[str] | None = None,
            spec: ModelSpec | None = None) -> OlsFit:
    """Fit y = X b by least squares via QR, with normal-theory inference.

    Needs strictly more rows than columns. Collinear columns are reported
    by name rather than silently absorbed.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float).ravel()
    if X.ndim != 2:
        raise ValidationError("X must be a 2-D array")
    n, k = X.shape
    if y.shape[0] != n:
        raise ValidationError(f"X has {n} rows but y has {y.shape[0]}")
    if n <= k:
        raise TooFewRows(f"{n} rows cannot identify {k} coefficients")
    names = tuple(feature_names) if feature_names is not None else tuple(f"x{j}" for j in range(k))
    if len(names) != k:
        raise ValidationError(f"{len(names)} names for {k} columns")

    Q, R = np.linalg.qr(X)
    column_norms = np.linalg.norm(X, axis=0)
    bad = [names[j] for j in range(k) if abs(R[j, j]) <= 1e-10 * max(column_norms[j], 1e-300)]
    if bad:
        raise RankDeficient(bad)

    qty = Q.T @ y
    beta = np.empty(k)
    for j in range(k - 1, -1, -1):
        beta[j] = (qty[j] - R[j, j + 1 :] @ beta[j + 1 :]) / R[j, j]

    residuals = y - X @ beta
    ssr = float(residuals @ residuals)
    sigma2 = ssr / (n - k)
    # diag((X'X)^-1) = row sums of squared R^-1.
    r_inv = np.linalg.inv(R)
    xtx_inv_diag = (r_inv**2).sum(axis=1)
    standard_errors = np.sqrt(sigma2 * xtx_inv_diag)
    with np.errstate(divide="ignore", invalid="ignore"):
        t_stats = np.where(standard_errors > 0, beta / np.where(standard_errors > 0, standard_errors, 1.0), np.inf)

    centered = y - y.mean()
    sst = float(centered @ centered)
    if sst > 0:
        r_squared = 1.0 - ssr / sst
    else:
        # constant target: call the fit perfect when residuals are pure
        # rounding noise, worthless otherwise
        r_squared = 1.0 if ssr <= 1e-20 * max(1.0, float(y @ y)) else 0.0
    adj_r_squared = 1.0 - (1.0 - r_squared) * (n - 1) / (n - k)

    return OlsFit(
        feature_names=names,
        coefficients=beta,
        standard_errors=standard_errors,
        t_stats=t_stats,
        r_squared=r_squared,
        adj_r_squared=adj_r_squared,
        n_observations=n,
        residual_variance=sigma2,
        spec=spec,
    )


def ols_predict(fit: OlsFit, X: np.ndarray) -> np.ndarray:
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != len(fit.coefficients):
        raise SpecMismatch(f"expected {len(fit.coefficients)} columns, got {X.shape}")
    return X @ fit.coefficients


def _fit_label(fit: OlsFit, position: int) -> str:
    return f"Spec {int(fit.spec)}" if fit.spec is not None else f"Model {position + 1}"


def _row_order(fits: Sequence[OlsFit]) -> list[str]:
    order: list[str] = []
    for fit in fits:
        for name in fit.feature_names:
            if name not in order:
                order.append(name)
    return order


def ols_report_text(fits: Sequence[OlsFit]) -> str:
    """Side-by-side coefficient table, stars inline, SEs in parentheses."""
    labels = [_fit_label(fit, i) for i, fit in enumerate(fits)]
    rows = _row_order(fits)
    cells: dict[tuple[str, int], tuple[str, str]] = {}
    for i, fit in enumerate(fits):
        for name, coef, se, t in zip(fit.feature_names, fit.coefficients, fit.standard_errors, fit.t_stats):
            cells[(name, i)] = (f"{coef:.4g}{significance_stars(t)}", f"({se:.4g})")

    width = max(18, *(len(label) + 2 for label in labels))
    name_width = max(len(name) for name in rows) + 2
    lines = ["".ljust(name_width) + "".join(label.rjust(width) for label in labels)]
    for name in rows:
        top = name.ljust(name_width)
        bottom = "".ljust(name_width)
        for i in range(len(fits)):
            coef, se = cells.get((name, i), ("", ""))
            top += coef.rjust(width)
            bottom += se.rjust(width)
        lines.append(top)
        lines.append(bottom)
    lines.append("N".ljust(name_width) + "".join(str(fit.n_observations).rjust(width) for fit in fits))
    lines.append("R2".ljust(name_width) + "".join(f"{fit.r_squared:.3f}".rjust(width) for fit in fits))
    lines.append("adj R2".ljust(name_width) + "".join(f"{fit.adj_r_squared:.3f}".rjust(width) for fit in fits))
    return "\n".join(lines)


def ols_report_csv(fits: Sequence[OlsFit]) -> bytes:
    """Long-format export of the same table: one row per (model, feature)."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["model", "feature", "coefficient", "std_error", "t_stat", "stars"])
    for i, fit in enumerate(fits):
        label = _fit_label(fit, i)
        for name, coef, se, t in zip(fit.feature_names, fit.coefficients, fit.standard_errors, fit.t_stats):
            writer.writerow([label, name, repr(float(coef)), repr(float(se)), repr(float(t)), significance_stars(t)])
        writer.writerow([label, "n_observations", fit.n_observations, "", "", ""])
        writer.writerow([label, "r_squared", repr(fit.r_squared), "", "", ""])
        writer.writerow([label, "adj_r_squared", repr(fit.adj_r_squared), "", "", ""])
    return buffer.getvalue().encode("utf-8")
