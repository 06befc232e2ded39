"""Faceted metadata catalog of simulation and observational datasets."""

from climalab.catalog.core import (
    Catalog,
    CatalogQuery,
    DatasetDescriptor,
    EmptyQuery,
    InvariantViolation,
    MissingFile,
    ParseError,
    load_catalog,
)

__all__ = [
    "Catalog",
    "CatalogQuery",
    "DatasetDescriptor",
    "EmptyQuery",
    "InvariantViolation",
    "MissingFile",
    "ParseError",
    "load_catalog",
]
