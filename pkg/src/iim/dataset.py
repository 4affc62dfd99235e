"""Numeric relations with explicit missing-value masks.

A :class:`Relation` is an immutable ``n_total x m`` float table plus a boolean
mask (``True`` = missing). Masked cells hold ``NaN`` in ``values`` so the
array can be handed straight to estimators that treat ``NaN`` as missing.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence, TextIO

import numpy as np

from .exceptions import NoCompleteTuplesError, ParseError, SchemaError, StructureError

DEFAULT_MISSING_MARKERS = frozenset({"NA", "?"})


@dataclass(frozen=True, eq=False)
class Relation:
    column_names: tuple[str, ...]
    values: np.ndarray
    mask: np.ndarray
    # Original field text, kept so untouched cells can be echoed verbatim.
    tokens: tuple[tuple[str, ...], ...] | None = field(default=None, repr=False)

    def __post_init__(self):
        values = np.array(self.values, dtype=np.float64)
        mask = np.array(self.mask, dtype=bool)
        if values.ndim != 2 or values.shape != mask.shape:
            raise StructureError(
                f"values {values.shape} and mask {mask.shape} must be equal 2-D shapes"
            )
        n_total, m = values.shape
        if m < 2:
            raise SchemaError("a relation needs at least 2 attributes")
        if n_total < 1:
            raise StructureError("a relation needs at least 1 tuple")
        names = tuple(str(c) for c in self.column_names)
        _check_names(names, m)
        if not np.all(np.isfinite(values[~mask])):
            raise StructureError("unmasked cells must be finite")
        values[mask] = np.nan
        values.setflags(write=False)
        mask.setflags(write=False)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "mask", mask)
        object.__setattr__(self, "column_names", names)

    @classmethod
    def from_array(cls, X, column_names: Sequence[str] | None = None) -> "Relation":
        """Build a relation from an array where ``NaN`` marks missing cells."""
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2:
            raise StructureError("expected a 2-D array")
        if column_names is None:
            column_names = [f"A{j + 1}" for j in range(X.shape[1])]
        return cls(tuple(column_names), X, np.isnan(X))

    @property
    def shape(self) -> tuple[int, int]:
        return self.values.shape

    @property
    def n_total(self) -> int:
        return self.values.shape[0]

    @property
    def m(self) -> int:
        return self.values.shape[1]

    def with_values(self, values: np.ndarray, mask: np.ndarray) -> "Relation":
        """Copy of this relation with new cells; tokens are kept for echoing."""
        return Relation(self.column_names, values, mask, self.tokens)


@dataclass(frozen=True)
class MissingPattern:
    """Which attributes are missing in a group of tuples.

    ``complete_attributes`` is always the ordered complement of
    ``incomplete_attributes`` within the schema.
    """

    incomplete_attributes: tuple[int, ...]
    complete_attributes: tuple[int, ...]

    @classmethod
    def from_missing(cls, missing: Iterable[int], m: int) -> "MissingPattern":
        missing = tuple(sorted(set(int(a) for a in missing)))
        complete = tuple(a for a in range(m) if a not in missing)
        if not complete:
            raise SchemaError("a tuple must have at least one observed attribute")
        return cls(missing, complete)


def _check_names(names: Sequence[str], m: int) -> None:
    if len(names) != m:
        raise SchemaError(f"{len(names)} column names for {m} columns")
    if any(not n.strip() for n in names):
        raise SchemaError("column names must be non-empty")
    seen = set()
    for n in names:
        if n in seen:
            raise SchemaError(f"duplicate column name {n!r}")
        seen.add(n)


def load_relation(source: TextIO | str, missing_markers: Iterable[str] = DEFAULT_MISSING_MARKERS) -> Relation:
    """Parse a headed CSV stream into a :class:`Relation`.

    An empty field is always missing; ``missing_markers`` adds further tokens.
    ``source`` may be an open text stream or a string holding the CSV text.
    """
    if isinstance(source, str):
        source = io.StringIO(source)
    markers = {m.strip() for m in missing_markers}
    reader = csv.reader(source)
    try:
        header = next(reader)
    except StopIteration:
        raise StructureError("empty input: a header row is required") from None
    names = tuple(h.strip() for h in header)
    if len(names) < 2:
        raise SchemaError("a relation needs at least 2 attributes")
    _check_names(names, len(names))

    rows, mask_rows, token_rows = [], [], []
    for row_no, row in enumerate(reader, start=1):
        if not row:
            # blank line
            continue
        if len(row) != len(names):
            raise StructureError(
                f"row {row_no} has {len(row)} fields, header has {len(names)}"
            )
        vals, miss = [], []
        for col, tok in zip(names, row):
            t = tok.strip()
            if t == "" or t in markers:
                vals.append(math.nan)
                miss.append(True)
                continue
            try:
                v = float(t)
            except ValueError:
                raise ParseError(f"not a number: {tok!r}", row_no, col) from None
            if not math.isfinite(v):
                raise ParseError(f"non-finite value {tok!r}", row_no, col)
            vals.append(v)
            miss.append(False)
        rows.append(vals)
        mask_rows.append(miss)
        token_rows.append(tuple(tok.strip() for tok in row))
    if not rows:
        raise StructureError("no data rows")
    return Relation(names, np.array(rows), np.array(mask_rows), tuple(token_rows))


def read_relation(path, missing_markers: Iterable[str] = DEFAULT_MISSING_MARKERS) -> Relation:
    with open(path, newline="") as fh:
        return load_relation(fh, missing_markers)


def format_float(x: float) -> str:
    """Shortest round-trip text for a float (integral values lose no digits)."""
    return repr(float(x))


def write_relation(rel: Relation, sink: TextIO) -> None:
    """Write ``rel`` as CSV. Masked cells become empty fields.

    A cell whose value still equals its original token is echoed verbatim.
    """
    writer = csv.writer(sink, lineterminator="\n")
    writer.writerow(rel.column_names)
    tokens = rel.tokens
    for i in range(rel.n_total):
        out = []
        for j in range(rel.m):
            if rel.mask[i, j]:
                out.append("")
                continue
            v = rel.values[i, j]
            if tokens is not None:
                tok = tokens[i][j]
                try:
                    if float(tok) == v:
                        out.append(tok)
                        continue
                except ValueError:
                    pass
            out.append(format_float(v))
        writer.writerow(out)


def split_complete(rel: Relation) -> tuple[np.ndarray, list[int]]:
    """Return ``(r, incomplete)``: the complete rows in original order and the
    indices of rows with at least one masked cell.

    ``r`` is returned as a plain ``(n, m)`` array; row ``p`` of ``r`` is
    original row ``complete_rows(rel)[p]``.
    """
    has_missing = rel.mask.any(axis=1)
    r = rel.values[~has_missing]
    if r.shape[0] == 0:
        raise NoCompleteTuplesError()
    return np.array(r), [int(i) for i in np.flatnonzero(has_missing)]


def complete_rows(rel: Relation) -> np.ndarray:
    return np.flatnonzero(~rel.mask.any(axis=1))


def group_by_pattern(rel: Relation, incomplete_indices: Iterable[int]) -> dict[MissingPattern, list[int]]:
    """Group incomplete rows by their set of masked attributes.

    Patterns appear in order of their first row.
    """
    groups: dict[MissingPattern, list[int]] = {}
    for i in incomplete_indices:
        missing = np.flatnonzero(rel.mask[i])
        pattern = MissingPattern.from_missing(missing, rel.m)
        groups.setdefault(pattern, []).append(int(i))
    return groups
