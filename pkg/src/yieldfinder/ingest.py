"""Acquisition and cleaning of raw listing payloads.

Payloads arrive as JSON bodies whose element list is a flat array of
listing objects. Cleaning is deliberately literal-minded: the vendor
double-encodes accented characters as `u00XX` (sometimes with the
backslash surviving), so both forms are folded to plain ASCII before any
structural parsing happens.
"""

from __future__ import annotations

import json
import math
import re
import time
from dataclasses import dataclass, field
from pathlib import Path
from urllib.parse import urlencode, urlsplit

import numpy as np
import requests

from .errors import (
    AuthError,
    EmptyDataset,
    EmptyElementList,
    FixtureMissing,
    InvalidBaseUrl,
    MalformedPayload,
    MissingRequiredField,
    NetworkError,
    NonNumericField,
    RateLimited,
    SchemaViolation,
    ValidationError,
)
from .model import Listing, Operation, PropertyType, Status


@dataclass(frozen=True)
class SearchQuery:
    """Geographic search parameters for one result page."""

    operation: Operation
    center_lat: float = 40.4167
    center_lon: float = -3.70325
    radius_km: float = 60.0
    property_kind: str | None = None
    page: int = 1
    page_size: int = 50

    def __post_init__(self):
        if not -90.0 <= self.center_lat <= 90.0:
            raise ValidationError(f"center latitude out of range: {self.center_lat}")
        if not -180.0 <= self.center_lon <= 180.0:
            raise ValidationError(f"center longitude out of range: {self.center_lon}")
        if not self.radius_km > 0:
            raise ValidationError(f"radius must be positive, got {self.radius_km}")
        if self.page < 1:
            raise ValidationError(f"page must be >= 1, got {self.page}")
        if self.page_size < 1:
            raise ValidationError(f"page size must be >= 1, got {self.page_size}")


def build_query_url(query: SearchQuery, base_url: str) -> str:
    """Vendor search URL for one page of results.

    Radius converts km to whole meters, rounding down. Parameter order is
    fixed so URLs are reproducible.
    """
    parts = urlsplit(base_url)
    if parts.scheme not in ("http", "https") or not parts.netloc:
        raise InvalidBaseUrl(f"not an absolute http(s) URL: {base_url!r}")
    params = [
        ("operation", query.operation.value),
        ("center", f"{query.center_lat:.5f},{query.center_lon:.5f}"),
        ("distance", int(math.floor(query.radius_km * 1000 + 1e-9))),
    ]
    if query.property_kind is not None:
        params.append(("propertyType", query.property_kind))
    params.extend([("numPage", query.page), ("maxItems", query.page_size)])
    joiner = "&" if parts.query else "?"
    return base_url + joiner + urlencode(params, safe=",")


@dataclass(frozen=True)
class RawPayload:
    """Undecoded response body for one fetched page."""

    body: bytes
    operation: Operation
    page: int

    def __post_init__(self):
        if not self.body:
            raise ValidationError("payload body is empty")


@dataclass(frozen=True)
class FixtureSource:
    """Serves checked-in payload files named `{operation}_p{page}.json`."""

    directory: Path


@dataclass
class LiveSource:
    """Fetches from the vendor API with bearer auth and polite pacing."""

    base_url: str
    token: str
    min_interval: float = 1.0
    max_retries: int = 3
    _last_request: float = field(default=0.0, init=False, repr=False)


def fetch_page(query: SearchQuery, source: FixtureSource | LiveSource) -> RawPayload:
    if isinstance(source, FixtureSource):
        path = Path(source.directory) / f"{query.operation.value}_p{query.page}.json"
        if not path.is_file():
            raise FixtureMissing(str(path))
        return RawPayload(body=path.read_bytes(), operation=query.operation, page=query.page)
    return _fetch_live(query, source)


def _fetch_live(query: SearchQuery, source: LiveSource) -> RawPayload:
    url = build_query_url(query, source.base_url)
    headers = {"Authorization": f"Bearer {source.token}"}
    for attempt in range(source.max_retries + 1):
        wait = source.min_interval - (time.monotonic() - source._last_request)
        if wait > 0:
            time.sleep(wait)
        source._last_request = time.monotonic()
        try:
            response = requests.get(url, headers=headers, timeout=30)
        except requests.RequestException as exc:
            raise NetworkError(f"request failed: {exc}") from exc
        if response.status_code in (401, 403):
            raise AuthError(f"vendor rejected credentials (HTTP {response.status_code})")
        if response.status_code == 429:
            if attempt < source.max_retries:
                time.sleep(2.0**attempt)
                continue
            raise RateLimited(f"still throttled after {source.max_retries} retries")
        if response.status_code != 200:
            raise NetworkError(f"HTTP {response.status_code} from {url}")
        return RawPayload(body=response.content, operation=query.operation, page=query.page)
    raise RateLimited("unreachable")


# Accented characters the vendor double-encodes, folded to plain ASCII.
_ACCENT_FOLD = {
    "á": "a", "é": "e", "í": "i", "ó": "o", "ú": "u", "ñ": "n", "ü": "u",
    "Á": "A", "É": "E", "Í": "I", "Ó": "O", "Ú": "U", "Ñ": "N", "Ü": "U",
}
_ESCAPE = re.compile(r"\\?u([0-9a-fA-F]{4})")


def _fold_escape(match: re.Match) -> str:
    char = chr(int(match.group(1), 16))
    return _ACCENT_FOLD.get(char, char)


def _strip_whitespace_outside_strings(text: str) -> str:
    out = []
    in_string = False
    escaped = False
    for char in text:
        if in_string:
            out.append(char)
            if escaped:
                escaped = False
            elif char == "\\":
                escaped = True
            elif char == '"':
                in_string = False
        elif char == '"':
            in_string = True
            out.append(char)
        elif char not in " \t\r\n":
            out.append(char)
    return "".join(out)


def clean_payload(payload: RawPayload) -> list[str]:
    """Element-list objects of a payload as balanced JSON substrings.

    Steps: fold `u00XX` escapes (backslash optional) to their character,
    with the Spanish accented set mapped to unaccented ASCII; drop
    whitespace outside quoted strings; split the elementList array on
    top-level object boundaries.
    """
    try:
        text = payload.body.decode("utf-8")
    except UnicodeDecodeError:
        text = payload.body.decode("latin-1")
    text = _ESCAPE.sub(_fold_escape, text)
    text = _strip_whitespace_outside_strings(text)

    marker = '"elementList":'
    start = _find_outside_strings(text, marker)
    if start < 0:
        raise EmptyElementList("payload has no elementList")
    cursor = start + len(marker)
    if cursor >= len(text) or text[cursor] != "[":
        raise MalformedPayload("elementList is not an array")

    records = []
    depth = 0
    in_string = False
    escaped = False
    item_start = -1
    for i in range(cursor, len(text)):
        char = text[i]
        if in_string:
            if escaped:
                escaped = False
            elif char == "\\":
                escaped = True
            elif char == '"':
                in_string = False
            continue
        if char == '"':
            in_string = True
        elif char in "[{":
            depth += 1
            if char == "{" and depth == 2:
                item_start = i
        elif char in "]}":
            depth -= 1
            if depth < 0:
                raise MalformedPayload("unbalanced brackets in elementList")
            if char == "}" and depth == 1:
                records.append(text[item_start : i + 1])
                item_start = -1
            elif char == "]" and depth == 0:
                if not records:
                    raise EmptyElementList("elementList is empty")
                return records
        elif depth == 1 and char not in ",":
            raise MalformedPayload(f"unexpected {char!r} between elementList items")
    raise MalformedPayload("elementList never closes")


def _find_outside_strings(text: str, needle: str) -> int:
    in_string = False
    escaped = False
    for i, char in enumerate(text):
        if in_string:
            if escaped:
                escaped = False
            elif char == "\\":
                escaped = True
            elif char == '"':
                in_string = False
            continue
        if text.startswith(needle, i):
            return i
        if char == '"':
            in_string = True
    return -1


def _as_float(raw: dict, field_name: str, key: str) -> float:
    value = raw[key]
    if isinstance(value, bool):
        raise NonNumericField(field_name, value)
    if isinstance(value, (int, float)):
        return float(value)
    try:
        return float(str(value))
    except ValueError:
        raise NonNumericField(field_name, value) from None


def _as_int(field_name: str, value: object) -> int:
    if isinstance(value, bool):
        raise NonNumericField(field_name, value)
    if isinstance(value, int):
        return value
    if isinstance(value, float) and value == int(value):
        return int(value)
    try:
        return int(str(value))
    except ValueError:
        raise NonNumericField(field_name, value) from None


def _as_bool(value: object) -> bool | None:
    if value is None:
        return None
    if isinstance(value, bool):
        return value
    if isinstance(value, (int, float)) and value in (0, 1):
        return bool(value)
    if isinstance(value, str):
        lowered = value.strip().casefold()
        if lowered in ("true", "1"):
            return True
        if lowered in ("false", "0"):
            return False
    return None


def _first_key(raw: dict, *keys: str) -> str | None:
    for key in keys:
        if key in raw and raw[key] is not None:
            return key
    return None


def parse_record(record: str) -> Listing:
    """One cleaned element-list object turned into a Listing.

    Accepts both the vendor's field names and this package's canonical
    ones, so serialized listings parse back unchanged.
    """
    try:
        raw = json.loads(record)
    except json.JSONDecodeError as exc:
        raise MalformedPayload(f"record is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise MalformedPayload("record is not a JSON object")

    id_key = _first_key(raw, "propertyCode", "id")
    if id_key is None:
        raise MissingRequiredField("id")
    if _first_key(raw, "operation") is None:
        raise MissingRequiredField("operation")
    for field_name in ("price", "size", "latitude", "longitude"):
        if _first_key(raw, field_name) is None:
            raise MissingRequiredField(field_name)

    floor_value = raw.get("floor")
    parking_value = raw.get("parking")
    if parking_value is None and isinstance(raw.get("parkingSpace"), dict):
        parking_value = raw["parkingSpace"].get("hasParkingSpace")

    price_by_area = None
    if raw.get("priceByArea") is not None:
        price_by_area = _as_float(raw, "priceByArea", "priceByArea")

    photos_key = _first_key(raw, "numPhotos", "photos")
    bathrooms_key = _first_key(raw, "bathrooms")
    rooms_key = _first_key(raw, "rooms")
    lift_key = _first_key(raw, "hasLift", "lift")

    return Listing(
        id=str(raw[id_key]),
        operation=Operation.parse(str(raw["operation"])),
        price=_as_float(raw, "price", "price"),
        size=_as_float(raw, "size", "size"),
        latitude=_as_float(raw, "latitude", "latitude"),
        longitude=_as_float(raw, "longitude", "longitude"),
        neighborhood=str(raw.get("neighborhood") or ""),
        photos=_as_int("photos", raw[photos_key]) if photos_key else 0,
        property_type=PropertyType.parse(raw.get("propertyType")),
        status=Status.parse(raw.get("status")),
        bathrooms=_as_int("bathrooms", raw[bathrooms_key]) if bathrooms_key else 0,
        rooms=_as_int("rooms", raw[rooms_key]) if rooms_key else 0,
        exterior=_as_bool(raw.get("exterior")),
        floor=_as_int("floor", floor_value) if floor_value is not None else None,
        lift=_as_bool(raw[lift_key]) if lift_key else None,
        parking=_as_bool(parking_value),
        new_development=_as_bool(raw.get("newDevelopment")),
        price_by_area=price_by_area,
    )


def dedupe(listings: list[Listing]) -> tuple[list[Listing], int]:
    """Drop duplicate (id, operation) pairs, keeping the last occurrence.

    Returns the surviving listings in last-occurrence order plus the
    number removed.
    """
    last_index = {listing.key: i for i, listing in enumerate(listings)}
    kept = [listing for i, listing in enumerate(listings) if last_index[listing.key] == i]
    return kept, len(listings) - len(kept)


# Canonical JSONL field order; frozen so stored datasets stay comparable.
_RECORD_FIELDS = (
    "id", "operation", "price", "size", "exterior", "floor", "lift",
    "parking", "newDevelopment", "photos", "propertyType", "status",
    "bathrooms", "rooms", "priceByArea", "latitude", "longitude",
    "neighborhood",
)


def listing_to_record(listing: Listing) -> dict:
    return {
        "id": listing.id,
        "operation": listing.operation.value,
        "price": listing.price,
        "size": listing.size,
        "exterior": listing.exterior,
        "floor": listing.floor,
        "lift": listing.lift,
        "parking": listing.parking,
        "newDevelopment": listing.new_development,
        "photos": listing.photos,
        "propertyType": listing.property_type.value,
        "status": listing.status.value,
        "bathrooms": listing.bathrooms,
        "rooms": listing.rooms,
        "priceByArea": listing.price_by_area,
        "latitude": listing.latitude,
        "longitude": listing.longitude,
        "neighborhood": listing.neighborhood,
    }


def record_to_listing(record: dict) -> Listing:
    for field_name in ("id", "operation", "price", "size", "latitude", "longitude"):
        if record.get(field_name) is None:
            raise MissingRequiredField(field_name)
    return Listing(
        id=str(record["id"]),
        operation=Operation.parse(str(record["operation"])),
        price=_as_float(record, "price", "price"),
        size=_as_float(record, "size", "size"),
        latitude=_as_float(record, "latitude", "latitude"),
        longitude=_as_float(record, "longitude", "longitude"),
        neighborhood=str(record.get("neighborhood") or ""),
        photos=_as_int("photos", record.get("photos", 0)),
        property_type=PropertyType.parse(record.get("propertyType")),
        status=Status.parse(record.get("status")),
        bathrooms=_as_int("bathrooms", record.get("bathrooms", 0)),
        rooms=_as_int("rooms", record.get("rooms", 0)),
        exterior=_as_bool(record.get("exterior")),
        floor=None if record.get("floor") is None else _as_int("floor", record["floor"]),
        lift=_as_bool(record.get("lift")),
        parking=_as_bool(record.get("parking")),
        new_development=_as_bool(record.get("newDevelopment")),
        price_by_area=None if record.get("priceByArea") is None else _as_float(record, "priceByArea", "priceByArea"),
    )


def store_dataset(listings: list[Listing], path: Path | str) -> None:
    """Write listings as JSONL with a fixed field order.

    Output is deterministic: the same listings always produce the same
    bytes.
    """
    lines = []
    for listing in listings:
        record = listing_to_record(listing)
        assert tuple(record) == _RECORD_FIELDS
        lines.append(json.dumps(record, ensure_ascii=False, separators=(",", ":")))
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")


def load_dataset(path: Path | str) -> list[Listing]:
    listings = []
    with open(path, encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            stripped = line.strip()
            if not stripped:
                continue
            try:
                listings.append(record_to_listing(json.loads(stripped)))
            except (json.JSONDecodeError, ValidationError, MissingRequiredField, NonNumericField) as exc:
                raise SchemaViolation(line_no, str(exc)) from exc
    return listings


@dataclass(frozen=True)
class ColumnStats:
    count: int
    mean: float
    std: float
    minimum: float
    maximum: float
    histogram: tuple[tuple[float, int], ...]

    def to_dict(self) -> dict:
        return {
            "count": self.count,
            "mean": self.mean,
            "std": self.std,
            "min": self.minimum,
            "max": self.maximum,
            "histogram": [{"lo": lo, "count": count} for lo, count in self.histogram],
        }


@dataclass(frozen=True)
class OperationStats:
    count: int
    price: ColumnStats
    size: ColumnStats

    def to_dict(self) -> dict:
        return {"count": self.count, "price": self.price.to_dict(), "size": self.size.to_dict()}


@dataclass(frozen=True)
class DatasetStats:
    total: int
    operations: dict[str, OperationStats]

    def to_dict(self) -> dict:
        return {
            "total": self.total,
            "operations": {name: stats.to_dict() for name, stats in self.operations.items()},
        }


def _column_stats(values: np.ndarray, bin_width: float) -> ColumnStats:
    mean = float(np.mean(values))
    std = float(np.sqrt(np.mean((values - mean) ** 2)))
    bins: dict[float, int] = {}
    for value in values:
        lo = math.floor(value / bin_width) * bin_width
        bins[lo] = bins.get(lo, 0) + 1
    return ColumnStats(
        count=len(values),
        mean=mean,
        std=std,
        minimum=float(values.min()),
        maximum=float(values.max()),
        histogram=tuple(sorted(bins.items())),
    )


def dataset_stats(listings: list[Listing], price_bin: float = 500.0, size_bin: float = 25.0) -> DatasetStats:
    """Count, mean, population std, extremes, and histograms per operation."""
    if not listings:
        raise EmptyDataset("no listings to summarize")
    if price_bin <= 0 or size_bin <= 0:
        raise ValidationError("histogram bin widths must be positive")
    operations = {}
    for operation in Operation:
        subset = [x for x in listings if x.operation is operation]
        if not subset:
            continue
        prices = np.array([x.price for x in subset], dtype=float)
        sizes = np.array([x.size for x in subset], dtype=float)
        operations[operation.value] = OperationStats(
            count=len(subset),
            price=_column_stats(prices, price_bin),
            size=_column_stats(sizes, size_bin),
        )
    return DatasetStats(total=len(listings), operations=operations)
