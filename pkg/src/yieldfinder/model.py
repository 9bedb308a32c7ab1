"""Core value types shared by ingest, finance, and the modeling layers.

All types here are immutable; anything invalid is rejected at
construction with :class:`~yieldfinder.errors.ValidationError`.
"""

from __future__ import annotations

import enum
import math
import re
import unicodedata
from dataclasses import dataclass, field, replace

from .errors import ValidationError

_WS = re.compile(r"\s+")


def normalize_name(name: str) -> str:
    """Canonical grouping key for a neighborhood name.

    Strips accents, casefolds, and collapses internal whitespace so that
    'El Cañaveral', 'el canaveral' and 'EL  CANAVERAL ' all group together.
    """
    decomposed = unicodedata.normalize("NFKD", name)
    stripped = "".join(c for c in decomposed if not unicodedata.combining(c))
    return _WS.sub(" ", stripped).strip().casefold()


class Operation(str, enum.Enum):
    RENT = "rent"
    SALE = "sale"

    @classmethod
    def parse(cls, raw: str) -> "Operation":
        key = raw.strip().casefold()
        for member in cls:
            if member.value == key:
                return member
        raise ValidationError(f"unknown operation: {raw!r}")


def _enum_key(raw: str) -> str:
    return re.sub(r"[^a-z0-9]", "", raw.casefold())


class PropertyType(str, enum.Enum):
    CHALET = "chalet"
    DUPLEX = "duplex"
    FLAT = "flat"
    PENTHOUSE = "penthouse"
    OTHER = "other"

    @classmethod
    def parse(cls, raw: object) -> "PropertyType":
        if raw is None:
            return cls.OTHER
        key = _enum_key(str(raw))
        for member in cls:
            if _enum_key(member.value) == key:
                return member
        return cls.OTHER


class Status(str, enum.Enum):
    GOOD = "good"
    NEW_DEVELOPMENT = "new_development"
    RENEW = "renew"
    UNKNOWN = "unknown"

    @classmethod
    def parse(cls, raw: object) -> "Status":
        if raw is None:
            return cls.UNKNOWN
        key = _enum_key(str(raw))
        for member in cls:
            if _enum_key(member.value) == key:
                return member
        return cls.UNKNOWN


class SizeBucket(enum.Enum):
    """Surface bands used by the yield index, in square meters.

    Bounds are half-open [lo, hi); listings under 30 m2 fall in no bucket.
    """

    FROM_30_TO_60 = (30.0, 60.0)
    FROM_60_TO_90 = (60.0, 90.0)
    FROM_90_TO_120 = (90.0, 120.0)
    FROM_120_TO_150 = (120.0, 150.0)
    FROM_150_UP = (150.0, math.inf)

    @property
    def lo(self) -> float:
        return self.value[0]

    @property
    def hi(self) -> float:
        return self.value[1]

    @property
    def label(self) -> str:
        if math.isinf(self.hi):
            return f"{self.lo:.0f}+"
        return f"{self.lo:.0f}-{self.hi:.0f}"

    @property
    def slug(self) -> str:
        """Identifier-safe form of the label, used in export column names."""
        if math.isinf(self.hi):
            return f"{self.lo:.0f}_up"
        return f"{self.lo:.0f}_{self.hi:.0f}"

    @classmethod
    def from_label(cls, label: str) -> "SizeBucket":
        for member in cls:
            if member.label == label or member.slug == label:
                return member
        raise ValidationError(f"unknown size bucket: {label!r}")


BUCKET_ORDER = tuple(SizeBucket)


@dataclass(frozen=True)
class Listing:
    """One cleaned listing record, either a rental or a sale."""

    id: str
    operation: Operation
    price: float
    size: float
    latitude: float
    longitude: float
    neighborhood: str = ""
    photos: int = 0
    property_type: PropertyType = PropertyType.OTHER
    status: Status = Status.UNKNOWN
    bathrooms: int = 0
    rooms: int = 0
    exterior: bool | None = None
    floor: int | None = None
    lift: bool | None = None
    parking: bool | None = None
    new_development: bool | None = None
    price_by_area: float | None = None

    def __post_init__(self):
        if not self.id:
            raise ValidationError("listing id must be non-empty")
        if not self.price > 0:
            raise ValidationError(f"price must be positive, got {self.price}")
        if not self.size > 0:
            raise ValidationError(f"size must be positive, got {self.size}")
        for name, value in (("photos", self.photos), ("bathrooms", self.bathrooms), ("rooms", self.rooms)):
            if value < 0:
                raise ValidationError(f"{name} must be >= 0, got {value}")
        if not -90.0 <= self.latitude <= 90.0:
            raise ValidationError(f"latitude out of range: {self.latitude}")
        if not -180.0 <= self.longitude <= 180.0:
            raise ValidationError(f"longitude out of range: {self.longitude}")
        if self.price_by_area is not None and not self.price_by_area > 0:
            raise ValidationError(f"price_by_area must be positive, got {self.price_by_area}")

    @property
    def key(self) -> tuple[str, str]:
        """Identity used for deduplication."""
        return (self.id, self.operation.value)

    def with_price_by_area(self, value: float) -> "Listing":
        return replace(self, price_by_area=value)


@dataclass(frozen=True)
class MortgageTerms:
    """Financing assumptions behind a monthly mortgage payment.

    `transaction_cost_rate` covers taxes and fees proportional to price;
    `monthly_rate` is the per-month interest rate (not annual).
    """

    price: float
    down_payment_fraction: float = 0.30
    transaction_cost_rate: float = 0.067
    monthly_rate: float = 0.0016
    months: int = 360

    def __post_init__(self):
        if not self.price > 0:
            raise ValidationError(f"price must be positive, got {self.price}")
        if not 0.0 <= self.down_payment_fraction < 1.0:
            raise ValidationError(f"down payment fraction must be in [0, 1), got {self.down_payment_fraction}")
        if not 0.0 <= self.transaction_cost_rate < 1.0:
            raise ValidationError(f"transaction cost rate must be in [0, 1), got {self.transaction_cost_rate}")
        if self.monthly_rate < 0.0:
            raise ValidationError(f"monthly rate must be >= 0, got {self.monthly_rate}")
        if self.months < 1:
            raise ValidationError(f"months must be >= 1, got {self.months}")

    @classmethod
    def defaults(cls) -> "MortgageTerms":
        """Default terms with a placeholder price of 1 euro."""
        return cls(price=1.0)

    def with_price(self, price: float) -> "MortgageTerms":
        return replace(self, price=price)


@dataclass(frozen=True)
class YieldCell:
    """Index value for one (neighborhood, size bucket) cell.

    `index` is present only when the cell has both rental and sale
    samples; it equals mean_rent / mean_mortgage.
    """

    neighborhood: str
    bucket: SizeBucket
    n_rent: int
    n_sale: int
    mean_rent: float | None
    mean_mortgage: float | None
    index: float | None

    def __post_init__(self):
        if self.n_rent < 0 or self.n_sale < 0:
            raise ValidationError("sample counts must be >= 0")
        if (self.mean_rent is None) != (self.n_rent == 0):
            raise ValidationError("mean_rent must be present exactly when n_rent > 0")
        if (self.mean_mortgage is None) != (self.n_sale == 0):
            raise ValidationError("mean_mortgage must be present exactly when n_sale > 0")
        if (self.index is None) != (self.mean_rent is None or self.mean_mortgage is None):
            raise ValidationError("index must be present exactly when both means are")


class ModelSpec(enum.IntEnum):
    """Nested feature sets for the rent models, smallest to largest."""

    SPEC1 = 1
    SPEC2 = 2
    SPEC3 = 3
    SPEC4 = 4


class KernelKind(str, enum.Enum):
    LINEAR = "linear"
    POLYNOMIAL = "polynomial"
    RADIAL = "radial"
    SIGMOID = "sigmoid"


@dataclass(frozen=True)
class KernelSpec:
    """Kernel family plus parameters; gamma of None means 1/n_features,
    resolved when the model is fit."""

    kind: KernelKind
    gamma: float | None = None
    degree: int = 3
    coef0: float = 0.0

    def __post_init__(self):
        if self.gamma is not None and self.kind is KernelKind.RADIAL and not self.gamma > 0:
            raise ValidationError(f"radial kernel needs gamma > 0, got {self.gamma}")
        if self.degree < 1:
            raise ValidationError(f"degree must be >= 1, got {self.degree}")

    @classmethod
    def linear(cls) -> "KernelSpec":
        return cls(KernelKind.LINEAR)

    @classmethod
    def polynomial(cls, degree: int = 3, gamma: float | None = None, coef0: float = 0.0) -> "KernelSpec":
        return cls(KernelKind.POLYNOMIAL, gamma=gamma, degree=degree, coef0=coef0)

    @classmethod
    def radial(cls, gamma: float | None = None) -> "KernelSpec":
        return cls(KernelKind.RADIAL, gamma=gamma)

    @classmethod
    def sigmoid(cls, gamma: float | None = None, coef0: float = 0.0) -> "KernelSpec":
        return cls(KernelKind.SIGMOID, gamma=gamma, coef0=coef0)

    def resolved(self, n_features: int) -> "KernelSpec":
        if self.gamma is not None or self.kind is KernelKind.LINEAR:
            return self
        return replace(self, gamma=1.0 / n_features)


@dataclass(frozen=True)
class SvrConfig:
    """Hyperparameters for the epsilon-insensitive support vector fit.

    epsilon of None resolves to 0.1 * std(y) at fit time; tolerance of
    None resolves to 1e-3 * max(1, std(y)). Resolved values are recorded
    on the returned model's config. cache_rows bounds the kernel row
    cache (rows of K kept in memory).
    """

    kernel: KernelSpec = field(default_factory=KernelSpec.linear)
    cost: float = 1.0
    epsilon: float | None = None
    tolerance: float | None = None
    max_iterations: int = 200_000
    cache_rows: int = 1024

    def __post_init__(self):
        if not self.cost > 0:
            raise ValidationError(f"cost must be positive, got {self.cost}")
        if self.epsilon is not None and self.epsilon < 0:
            raise ValidationError(f"epsilon must be >= 0, got {self.epsilon}")
        if self.tolerance is not None and not self.tolerance > 0:
            raise ValidationError(f"tolerance must be positive, got {self.tolerance}")
        if self.max_iterations < 1:
            raise ValidationError(f"max_iterations must be >= 1, got {self.max_iterations}")
        if self.cache_rows < 1:
            raise ValidationError(f"cache_rows must be >= 1, got {self.cache_rows}")


@dataclass(frozen=True)
class ForestConfig:
    """Bagged regression forest settings.

    mtry of None resolves to ceil(n_features / 3) at fit time. The seed
    fully determines the forest: tree i draws from an independent stream
    keyed by (seed, i), so growing the forest never reshuffles earlier
    trees.
    """

    n_trees: int = 100
    mtry: int | None = None
    min_leaf: int = 1
    bootstrap: bool = True
    seed: int = 0

    def __post_init__(self):
        if self.n_trees < 1:
            raise ValidationError(f"n_trees must be >= 1, got {self.n_trees}")
        if self.mtry is not None and self.mtry < 1:
            raise ValidationError(f"mtry must be >= 1, got {self.mtry}")
        if self.min_leaf < 1:
            raise ValidationError(f"min_leaf must be >= 1, got {self.min_leaf}")
