"""Rental yield index and rent-prediction models for residential listings."""

from .model import (
    ForestConfig,
    KernelKind,
    KernelSpec,
    Listing,
    ModelSpec,
    MortgageTerms,
    Operation,
    PropertyType,
    SizeBucket,
    Status,
    SvrConfig,
    YieldCell,
)

__version__ = "0.1.0"

__all__ = [
    "ForestConfig",
    "KernelKind",
    "KernelSpec",
    "Listing",
    "ModelSpec",
    "MortgageTerms",
    "Operation",
    "PropertyType",
    "SizeBucket",
    "Status",
    "SvrConfig",
    "YieldCell",
    "__version__",
]
