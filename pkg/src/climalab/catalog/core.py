"""Dataset catalog: JSONL loading, exact-facet querying, file resolution."""

from __future__ import annotations

import json
from dataclasses import dataclass, field, fields as dc_fields
from pathlib import Path
from typing import Optional

from climalab.errors import ClimalabError

FREQUENCIES = ("monthly", "annual")


class ParseError(ClimalabError):
    http_status = 422


class InvariantViolation(ClimalabError):
    http_status = 422


class EmptyQuery(ClimalabError):
    http_status = 400


class MissingFile(ClimalabError):
    http_status = 404


@dataclass(frozen=True)
class DatasetDescriptor:
    activity: str
    experiment: str
    source_model: str
    ensemble_member: str
    variable: str
    frequency: str
    time_range: tuple[int, int]
    units: str
    uri: str

    def __post_init__(self):
        object.__setattr__(self, "time_range", tuple(self.time_range))

    def check(self) -> Optional[str]:
        """Return a human-readable invariant failure, or None if valid."""
        start, end = self.time_range
        if start > end:
            return f"time_range start {start} exceeds end {end}"
        if self.frequency not in FREQUENCIES:
            return f"frequency {self.frequency!r} not in {FREQUENCIES}"
        for name in ("activity", "experiment", "source_model", "variable", "uri"):
            if not getattr(self, name):
                return f"empty required field {name!r}"
        return None

    def to_dict(self) -> dict:
        return {
            "activity": self.activity,
            "experiment": self.experiment,
            "source_model": self.source_model,
            "ensemble_member": self.ensemble_member,
            "variable": self.variable,
            "frequency": self.frequency,
            "time_range": list(self.time_range),
            "units": self.units,
            "uri": self.uri,
        }


_FACETS = (
    "activity",
    "experiment",
    "source_model",
    "ensemble_member",
    "variable",
    "frequency",
    "units",
    "uri",
)


@dataclass(frozen=True)
class CatalogQuery:
    activity: Optional[str] = None
    experiment: Optional[str] = None
    source_model: Optional[str] = None
    ensemble_member: Optional[str] = None
    variable: Optional[str] = None
    frequency: Optional[str] = None
    units: Optional[str] = None
    uri: Optional[str] = None
    limit: Optional[int] = None

    def __post_init__(self):
        if self.limit is not None and self.limit <= 0:
            raise ValueError("limit must be a positive integer")

    def set_facets(self) -> dict[str, str]:
        return {
            name: getattr(self, name)
            for name in _FACETS
            if getattr(self, name) is not None
        }


def _sort_key(d: DatasetDescriptor):
    # Primary order is (experiment, source_model, ensemble_member); the
    # remaining fields make the order total so output is reproducible.
    return (
        d.experiment,
        d.source_model,
        d.ensemble_member,
        d.variable,
        d.frequency,
        d.uri,
    )


class Catalog:
    """Read-only after construction; safe to share across threads."""

    def __init__(self, descriptors: list[DatasetDescriptor], data_root):
        self._descriptors = sorted(descriptors, key=_sort_key)
        self.data_root = Path(data_root).resolve()

    def __len__(self) -> int:
        return len(self._descriptors)

    def all(self) -> list[DatasetDescriptor]:
        return list(self._descriptors)

    def query_datasets(self, q: CatalogQuery) -> list[DatasetDescriptor]:
        facets = q.set_facets()
        if not facets:
            raise EmptyQuery("at least one facet must be set")
        hits = [
            d
            for d in self._descriptors
            if all(getattr(d, name) == value for name, value in facets.items())
        ]
        if q.limit is not None:
            hits = hits[: q.limit]
        return hits

    def resolve_descriptor(self, d: DatasetDescriptor) -> Path:
        candidate = (self.data_root / d.uri).resolve()
        try:
            candidate.relative_to(self.data_root)
        except ValueError:
            raise MissingFile(
                f"uri {d.uri!r} escapes the data root", uri=d.uri
            ) from None
        if not candidate.is_file():
            raise MissingFile(f"no data file at {candidate}", uri=d.uri)
        return candidate


def parse_row(doc: dict, row: int) -> DatasetDescriptor:
    known = {f.name for f in dc_fields(DatasetDescriptor)}
    missing = known - doc.keys()
    if missing:
        raise InvariantViolation(
            f"row {row}: missing fields {sorted(missing)}", row=row
        )
    try:
        d = DatasetDescriptor(**{k: doc[k] for k in known})
    except (TypeError, ValueError) as exc:
        raise InvariantViolation(f"row {row}: {exc}", row=row) from exc
    problem = d.check()
    if problem:
        raise InvariantViolation(f"row {row}: {problem}", row=row)
    return d


def load_catalog(path, data_root=None) -> Catalog:
    path = Path(path)
    if not path.is_file():
        raise ParseError(f"catalog file not found: {path}")
    descriptors = []
    with path.open(encoding="utf-8") as fh:
        for row, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                doc = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(f"row {row}: invalid JSON ({exc.msg})", row=row) from exc
            if not isinstance(doc, dict):
                raise ParseError(f"row {row}: expected an object", row=row)
            descriptors.append(parse_row(doc, row))
    if data_root is None:
        data_root = path.parent / "data"
    return Catalog(descriptors, data_root)
