"""CSV ingestion, column type inference, and the prompt table snippet.

Tables are immutable after load. Each cell keeps its raw text; a parsed,
typed view is derived per column and used for filter comparisons:

* quantitative -> finite float (unparseable cells become null)
* temporal     -> datetime.date for ISO dates, int for 4-digit years
* nominal      -> the raw text

The empty string is the null cell. Nulls are excluded from type voting and
make filter conditions false.

Type inference is deterministic. A column is temporal when at least 95% of
its non-null cells are ISO dates, or when at least 95% are 4-digit integers
in [1500, 2500] and the header contains a date word (year, date, time,
month, day). Otherwise it is quantitative when at least 95% of non-null
cells parse as finite numbers, else nominal. Temporal wins over
quantitative.
"""

from __future__ import annotations

import csv
import io
import math
import re
from dataclasses import dataclass
from datetime import date
from enum import Enum
from functools import cached_property
from pathlib import Path
from typing import BinaryIO, Iterable, Union

from .errors import (
    DuplicateColumnError,
    EmptyInputError,
    RaggedRowError,
    UnknownColumnError,
)

TYPE_VOTE_THRESHOLD = 0.95
YEAR_RANGE = (1500, 2500)
DATE_WORDS = ("year", "date", "time", "month", "day")

_ISO_DATE_RE = re.compile(r"^\d{4}-\d{2}-\d{2}$")
_YEAR_RE = re.compile(r"^\d{4}$")

CellValue = Union[float, int, date, str, None]


class ColumnType(str, Enum):
    NOMINAL = "nominal"
    QUANTITATIVE = "quantitative"
    TEMPORAL = "temporal"

    def __str__(self) -> str:  # pragma: no cover - cosmetic
        return self.value


@dataclass(frozen=True)
class Column:
    name: str
    type: ColumnType


def parse_number(text: str) -> float | None:
    """Parse a finite number, or None. Rejects nan/inf spellings."""
    try:
        value = float(text)
    except ValueError:
        return None
    return value if math.isfinite(value) else None


def parse_iso_date(text: str) -> date | None:
    """Parse a strict YYYY-MM-DD date, or None."""
    if not _ISO_DATE_RE.match(text.strip()):
        return None
    try:
        return date.fromisoformat(text.strip())
    except ValueError:
        return None


def parse_year(text: str) -> int | None:
    """Parse a 4-digit integer, or None. Range is checked by the caller."""
    if _YEAR_RE.match(text.strip()):
        return int(text.strip())
    return None


def _has_date_word(header: str) -> bool:
    lowered = header.lower()
    return any(word in lowered for word in DATE_WORDS)


def infer_column_type(header: str, values: Iterable[str]) -> ColumnType:
    """Infer the column type from a header and raw cell values.

    Total and deterministic: every input maps to exactly one type, and an
    empty or all-null column is nominal.
    """
    non_null = [v for v in values if v != ""]
    if not non_null:
        return ColumnType.NOMINAL
    n = len(non_null)

    iso_dates = sum(1 for v in non_null if parse_iso_date(v) is not None)
    if iso_dates / n >= TYPE_VOTE_THRESHOLD:
        return ColumnType.TEMPORAL

    if _has_date_word(header):
        lo, hi = YEAR_RANGE
        years = sum(
            1
            for v in non_null
            if (y := parse_year(v)) is not None and lo <= y <= hi
        )
        if years / n >= TYPE_VOTE_THRESHOLD:
            return ColumnType.TEMPORAL

    numbers = sum(1 for v in non_null if parse_number(v) is not None)
    if numbers / n >= TYPE_VOTE_THRESHOLD:
        return ColumnType.QUANTITATIVE

    return ColumnType.NOMINAL


def typed_cell(raw: str, column_type: ColumnType) -> CellValue:
    """Parsed view of a single cell. The empty string is null for any type."""
    if raw == "":
        return None
    if column_type is ColumnType.QUANTITATIVE:
        return parse_number(raw)
    if column_type is ColumnType.TEMPORAL:
        parsed = parse_iso_date(raw)
        if parsed is not None:
            return parsed
        return parse_year(raw)
    return raw


@dataclass(frozen=True)
class DataTable:
    """Immutable named table: typed columns plus a raw row store."""

    name: str
    columns: tuple[Column, ...]
    rows: tuple[tuple[str, ...], ...]

    @property
    def n_rows(self) -> int:
        return len(self.rows)

    @property
    def column_names(self) -> tuple[str, ...]:
        return tuple(c.name for c in self.columns)

    @cached_property
    def _index_by_name(self) -> dict[str, int]:
        return {c.name: i for i, c in enumerate(self.columns)}

    @cached_property
    def _index_by_folded_name(self) -> dict[str, list[int]]:
        folded: dict[str, list[int]] = {}
        for i, c in enumerate(self.columns):
            folded.setdefault(c.name.lower(), []).append(i)
        return folded

    def column_index(self, name: str) -> int:
        """Resolve a column reference, case-insensitively.

        Exact spelling wins; otherwise the match must be unambiguous.
        """
        index = self._index_by_name.get(name)
        if index is not None:
            return index
        candidates = self._index_by_folded_name.get(name.strip().lower(), [])
        if len(candidates) == 1:
            return candidates[0]
        if len(candidates) > 1:
            raise UnknownColumnError(f"ambiguous column reference: {name!r}")
        raise UnknownColumnError(f"unknown column: {name!r}")

    def resolve_column(self, name: str) -> Column:
        return self.columns[self.column_index(name)]

    @cached_property
    def _typed_columns(self) -> tuple[tuple[CellValue, ...], ...]:
        return tuple(
            tuple(typed_cell(row[i], col.type) for row in self.rows)
            for i, col in enumerate(self.columns)
        )

    def typed_column(self, name: str) -> tuple[CellValue, ...]:
        """Parsed values for a column, aligned with rows."""
        return self._typed_columns[self.column_index(name)]

    def raw_column(self, name: str) -> tuple[str, ...]:
        index = self.column_index(name)
        return tuple(row[index] for row in self.rows)

    def to_csv(self) -> str:
        """Serialize back to RFC-4180 CSV (header row first)."""
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(self.column_names)
        writer.writerows(self.rows)
        return buffer.getvalue()


def load_csv(source: Union[bytes, BinaryIO, str, io.StringIO], name: str) -> DataTable:
    """Load a UTF-8 CSV with a header row into an immutable DataTable.

    Blank records are skipped. Header names are whitespace-trimmed with case
    preserved; duplicates after trimming are rejected.
    """
    if isinstance(source, bytes):
        text = source.decode("utf-8")
    elif isinstance(source, str):
        text = source
    elif isinstance(source, io.StringIO):
        text = source.getvalue()
    else:
        text = source.read().decode("utf-8")

    records = [r for r in csv.reader(io.StringIO(text)) if r]
    if not records:
        raise EmptyInputError(f"{name}: no header row")

    header = [cell.strip() for cell in records[0]]
    seen: set[str] = set()
    for cell in header:
        if cell in seen:
            raise DuplicateColumnError(f"{name}: duplicate column {cell!r}")
        seen.add(cell)

    rows: list[tuple[str, ...]] = []
    for line_no, record in enumerate(records[1:], start=2):
        if len(record) != len(header):
            raise RaggedRowError(
                f"{name}: row {line_no} has {len(record)} cells, expected {len(header)}"
            )
        rows.append(tuple(record))

    columns = tuple(
        Column(header[i], infer_column_type(header[i], [row[i] for row in rows]))
        for i in range(len(header))
    )
    return DataTable(name=name, columns=columns, rows=tuple(rows))


def load_csv_path(path: str | Path) -> DataTable:
    """Load a CSV file, naming the table after the file stem."""
    path = Path(path)
    with path.open("rb") as fh:
        return load_csv(fh, name=path.stem)


def prompt_snippet(table: DataTable) -> str:
    """Model-facing table overview: typed column lines plus up to two rows.

    One line per column as ``<name> (<type>)``, followed by the first two
    data rows rendered as CSV lines.
    """
    lines = [f"{col.name} ({col.type.value})" for col in table.columns]
    for row in table.rows[:2]:
        buffer = io.StringIO()
        csv.writer(buffer, lineterminator="").writerow(row)
        lines.append(buffer.getvalue())
    return "\n".join(lines)
