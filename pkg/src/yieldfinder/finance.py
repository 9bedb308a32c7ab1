"""Mortgage arithmetic and the neighborhood yield index.

The financed principal is the purchase price plus proportional
transaction costs, minus the down payment: (1 + c - d) * P. The index
for a (neighborhood, size bucket) cell is the mean rental price divided
by the mean monthly mortgage payment over the sale listings in the cell;
values above 1 mean market rents exceed the financing cost.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass

from .errors import NonRepayable, UnknownNeighborhood, ValidationError
from .model import (
    BUCKET_ORDER,
    Listing,
    MortgageTerms,
    Operation,
    SizeBucket,
    YieldCell,
    normalize_name,
)


def financed_principal(terms: MortgageTerms) -> float:
    return (1.0 + terms.transaction_cost_rate - terms.down_payment_fraction) * terms.price


def total_purchase_cost(terms: MortgageTerms) -> float:
    """Price plus proportional transaction costs, before financing."""
    return (1.0 + terms.transaction_cost_rate) * terms.price


def monthly_mortgage(terms: MortgageTerms) -> float:
    """Constant monthly payment that amortizes the principal over the term.

    At zero interest the annuity formula degenerates to principal/months.
    """
    principal = financed_principal(terms)
    r, n = terms.monthly_rate, terms.months
    if r == 0.0:
        return principal / n
    # expm1/log1p keep the denominator exact for tiny rates, where
    # (1 + r)^n - 1 would cancel away most of its digits.
    log_growth = n * math.log1p(r)
    return principal * r * math.exp(log_growth) / math.expm1(log_growth)


@dataclass(frozen=True)
class AmortizationRow:
    month: int
    opening_balance: float
    interest: float
    principal_repaid: float
    closing_balance: float


def amortization_schedule(terms: MortgageTerms, payment: float | None = None) -> list[AmortizationRow]:
    """Month-by-month loan evolution under a constant payment.

    Defaults to the analytic annuity payment, in which case the final
    closing balance lands within a cent of zero. A payment at or below
    the first month's interest never repays and is rejected.
    """
    principal = financed_principal(terms)
    if payment is None:
        payment = monthly_mortgage(terms)
    if payment <= principal * terms.monthly_rate:
        raise NonRepayable(f"payment {payment:.2f} does not exceed first-month interest")
    rows = []
    balance = principal
    for month in range(1, terms.months + 1):
        interest = balance * terms.monthly_rate
        closing = balance + interest - payment
        rows.append(AmortizationRow(month, balance, interest, payment - interest, closing))
        balance = closing
    return rows


def size_bucket_of(size: float) -> SizeBucket | None:
    """Bucket for a surface in m2, or None below the smallest bound."""
    for bucket in BUCKET_ORDER:
        if bucket.lo <= size < bucket.hi:
            return bucket
    return None


def compute_yield_index(listings: list[Listing], terms: MortgageTerms) -> list[YieldCell]:
    """Per-cell rent-to-mortgage index over a cleaned dataset.

    `terms.price` is ignored; each sale listing is financed at its own
    price. Cells seen on only one side of the market are emitted with an
    absent index rather than dropped, so coverage gaps stay visible.
    Listings smaller than every bucket are excluded. Output is sorted by
    normalized neighborhood, then bucket.
    """
    rents: dict[tuple[str, SizeBucket], list[float]] = {}
    mortgages: dict[tuple[str, SizeBucket], list[float]] = {}
    for listing in listings:
        bucket = size_bucket_of(listing.size)
        if bucket is None:
            continue
        cell = (normalize_name(listing.neighborhood), bucket)
        if listing.operation is Operation.RENT:
            rents.setdefault(cell, []).append(listing.price)
        else:
            payment = monthly_mortgage(terms.with_price(listing.price))
            mortgages.setdefault(cell, []).append(payment)

    bucket_rank = {b: i for i, b in enumerate(BUCKET_ORDER)}
    cells = []
    for key in sorted(set(rents) | set(mortgages), key=lambda k: (k[0], bucket_rank[k[1]])):
        name, bucket = key
        rent_samples = rents.get(key, [])
        mortgage_samples = mortgages.get(key, [])
        mean_rent = sum(rent_samples) / len(rent_samples) if rent_samples else None
        mean_mortgage = sum(mortgage_samples) / len(mortgage_samples) if mortgage_samples else None
        index = None
        if mean_rent is not None and mean_mortgage is not None:
            index = mean_rent / mean_mortgage
        cells.append(
            YieldCell(
                neighborhood=name,
                bucket=bucket,
                n_rent=len(rent_samples),
                n_sale=len(mortgage_samples),
                mean_rent=mean_rent,
                mean_mortgage=mean_mortgage,
                index=index,
            )
        )
    return cells


def neighborhood_average(cells: list[YieldCell]) -> dict[str, float]:
    """Unweighted mean of the present bucket indices per neighborhood.

    Neighborhoods with no computable bucket index are omitted.
    """
    values: dict[str, list[float]] = {}
    for cell in cells:
        if cell.index is not None:
            values.setdefault(cell.neighborhood, []).append(cell.index)
    return {name: sum(v) / len(v) for name, v in values.items()}


def export_index_csv(cells: list[YieldCell]) -> bytes:
    """Index cells as CSV; an absent index is an empty field."""
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(["neighborhood", "bucket", "index", "n_rent", "n_sale"])
    for cell in cells:
        writer.writerow(
            [
                cell.neighborhood,
                cell.bucket.label,
                "" if cell.index is None else f"{cell.index:.6f}",
                cell.n_rent,
                cell.n_sale,
            ]
        )
    return buffer.getvalue().encode("utf-8")


def _boundary_name(feature: dict) -> str | None:
    properties = feature.get("properties") or {}
    for key in ("neighborhood", "name"):
        if key in properties and properties[key]:
            return normalize_name(str(properties[key]))
    return None


def export_index_geojson(cells: list[YieldCell], boundaries: dict, strict: bool = True) -> bytes:
    """Boundary features annotated with per-bucket indices.

    Each feature gains an `index_<bucket>` property per bucket (null
    where the cell is absent) plus `index_avg`. Cells naming a
    neighborhood with no boundary raise UnknownNeighborhood when strict,
    otherwise they are listed under a top-level `unknown_neighborhoods`
    member.
    """
    if boundaries.get("type") != "FeatureCollection":
        raise ValidationError("boundaries must be a GeoJSON FeatureCollection")
    by_neighborhood: dict[str, dict[str, float]] = {}
    for cell in cells:
        if cell.index is not None:
            by_neighborhood.setdefault(cell.neighborhood, {})[cell.bucket.slug] = cell.index
    averages = neighborhood_average(cells)

    known = set()
    features_out = []
    for feature in boundaries.get("features", []):
        name = _boundary_name(feature)
        copied = json.loads(json.dumps(feature))
        properties = copied.setdefault("properties", {})
        indices = by_neighborhood.get(name, {}) if name else {}
        for bucket in BUCKET_ORDER:
            properties[f"index_{bucket.slug}"] = indices.get(bucket.slug)
        properties["index_avg"] = averages.get(name) if name else None
        features_out.append(copied)
        if name:
            known.add(name)

    cell_names = {cell.neighborhood for cell in cells}
    unknown = sorted(cell_names - known)
    if unknown and strict:
        raise UnknownNeighborhood(unknown)
    collection: dict = {"type": "FeatureCollection", "features": features_out}
    if unknown:
        collection["unknown_neighborhoods"] = unknown
    return json.dumps(collection, ensure_ascii=False).encode("utf-8")
