"""Answer templates for the six inference steps, and the VisSpec they build.

Each step's answer is a single line of text in a fixed template:

    step 1  SelectColumns       ``Horsepower, Origin`` (1 to 3 names)
    step 2  FilterRows          filter text, or ``none``
    step 3  AddAggregations     ``average Horsepower, count Model`` or ``none``
    step 4  ChooseMark          one of ``bar pie line scatter``
    step 5  DetermineEncoding   ``x: Origin, y: average(Horsepower), color: none``
    step 6  AddSort             ``y desc`` / ``x asc`` / ``none``

Parsing is strict and canonicalizing: column names are matched against the
table case-insensitively and stored with the table's spelling, keywords are
lowercased, and ``serialize_step_answer(parse_step_answer(...))`` is the
canonical form of the input.

A full VisSpec flattens to the 8-token evaluation sequence
[mark][x field][x aggregation][y field][y aggregation][color][filter][sort].
"""

from __future__ import annotations

import enum
import re
from dataclasses import dataclass, field
from typing import Union

from .errors import (
    TemplateSyntaxError,
    TypeMismatchError,
    UnknownKeywordError,
)
from .filters import (
    FilterExpr,
    filter_token,
    parse_filter,
    serialize_filter,
    validate_filter,
)
from .tabular import Column, ColumnType, DataTable

AGGREGATIONS = ("count", "average", "sum", "max", "min")
MARKS = ("bar", "pie", "line", "scatter")
SORT_AXES = ("x", "y")
SORT_ORDERS = ("asc", "desc")


class StepIndex(enum.IntEnum):
    """The six sub-tasks, in their fixed order.

    Steps 1-3 are the data transformation, 4-6 the visualization
    transformation. Steps 2, 3, and 6 admit an explicit ``none`` answer.
    """

    SELECT_COLUMNS = 1
    FILTER_ROWS = 2
    ADD_AGGREGATIONS = 3
    CHOOSE_MARK = 4
    DETERMINE_ENCODING = 5
    ADD_SORT = 6

    @property
    def title(self) -> str:
        return _STEP_TITLES[self]


_STEP_TITLES = {
    StepIndex.SELECT_COLUMNS: "Select Columns",
    StepIndex.FILTER_ROWS: "Filter Rows",
    StepIndex.ADD_AGGREGATIONS: "Add Aggregations",
    StepIndex.CHOOSE_MARK: "Choose Mark",
    StepIndex.DETERMINE_ENCODING: "Determine Encoding",
    StepIndex.ADD_SORT: "Add Sort",
}

OPTIONAL_STEPS = frozenset(
    {StepIndex.FILTER_ROWS, StepIndex.ADD_AGGREGATIONS, StepIndex.ADD_SORT}
)


@dataclass(frozen=True)
class FieldRef:
    """A column, optionally wrapped in an aggregation: ``col`` or ``aggr(col)``."""

    column: str
    aggregation: str | None = None


@dataclass(frozen=True)
class ColumnsAnswer:
    columns: tuple[str, ...]


@dataclass(frozen=True)
class FilterAnswer:
    """Step-2 answer. Equality is by AST; the raw text is carried for display."""

    expr: FilterExpr | None
    text: str = field(default="", compare=False)


@dataclass(frozen=True)
class Aggregation:
    func: str
    column: str


@dataclass(frozen=True)
class AggregationsAnswer:
    """Step-3 answer; an empty tuple is the explicit ``none``."""

    aggregations: tuple[Aggregation, ...]


@dataclass(frozen=True)
class MarkAnswer:
    mark: str


@dataclass(frozen=True)
class EncodingAnswer:
    x: FieldRef
    y: FieldRef
    color: str | None


@dataclass(frozen=True)
class SortAnswer:
    """Step-6 answer; axis and order are both set or both None."""

    axis: str | None = None
    order: str | None = None

    @property
    def is_none(self) -> bool:
        return self.axis is None


StepAnswer = Union[
    ColumnsAnswer,
    FilterAnswer,
    AggregationsAnswer,
    MarkAnswer,
    EncodingAnswer,
    SortAnswer,
]


@dataclass(frozen=True)
class VisSpec:
    """The eight semantic slots of a chart, bound to one table's columns."""

    mark: str
    x: FieldRef
    y: FieldRef
    color: str | None = None
    filter: FilterExpr | None = None
    sort: tuple[str, str] | None = None


# --- parsing -----------------------------------------------------------------


def _parse_columns(text: str, table: DataTable) -> ColumnsAnswer:
    parts = [p.strip() for p in text.split(",")]
    if any(not p for p in parts):
        raise TemplateSyntaxError(f"empty column name in list: {text!r}")
    if not 1 <= len(parts) <= 3:
        raise TemplateSyntaxError(
            f"expected 1 to 3 columns, got {len(parts)}: {text!r}"
        )
    resolved = tuple(table.resolve_column(p).name for p in parts)
    if len(set(resolved)) != len(resolved):
        raise TemplateSyntaxError(f"duplicate column in list: {text!r}")
    return ColumnsAnswer(columns=resolved)


def _parse_aggregations(text: str, table: DataTable) -> AggregationsAnswer:
    if text.lower() == "none":
        return AggregationsAnswer(aggregations=())
    terms = []
    for part in text.split(","):
        tokens = part.split()
        if len(tokens) < 2:
            raise TemplateSyntaxError(f"aggregation term needs 'func column': {part!r}")
        func = tokens[0].lower()
        if func not in AGGREGATIONS:
            raise UnknownKeywordError(f"unknown aggregation function: {tokens[0]!r}")
        column = table.resolve_column(" ".join(tokens[1:])).name
        terms.append(Aggregation(func=func, column=column))
    return AggregationsAnswer(aggregations=tuple(terms))


def _parse_mark(text: str) -> MarkAnswer:
    if len(text.split()) != 1:
        raise TemplateSyntaxError(f"mark must be a single keyword: {text!r}")
    keyword = text.lower()
    if keyword not in MARKS:
        raise UnknownKeywordError(f"unknown mark: {text!r}")
    return MarkAnswer(mark=keyword)


def parse_fieldref(text: str, table: DataTable) -> FieldRef:
    """Parse ``col`` or ``aggr(col)`` with table-canonical column spelling."""
    stripped = text.strip()
    if stripped.endswith(")") and "(" in stripped:
        func_text, _, rest = stripped.partition("(")
        func = func_text.strip().lower()
        if func not in AGGREGATIONS:
            raise UnknownKeywordError(f"unknown aggregation function: {func_text!r}")
        inner = rest[:-1].strip()
        if not inner:
            raise TemplateSyntaxError(f"aggregation without a column: {text!r}")
        return FieldRef(column=table.resolve_column(inner).name, aggregation=func)
    if not stripped:
        raise TemplateSyntaxError("empty field reference")
    return FieldRef(column=table.resolve_column(stripped).name)


_CHANNEL_RE = re.compile(r"^\s*(x|y|color)\s*:\s*(.+?)\s*$", re.IGNORECASE)


def _parse_encoding(text: str, table: DataTable) -> EncodingAnswer:
    parts = text.split(",")
    if len(parts) != 3:
        raise TemplateSyntaxError(
            f"encoding needs exactly 'x: ..., y: ..., color: ...': {text!r}"
        )
    values: dict[str, str] = {}
    for part, expected in zip(parts, ("x", "y", "color")):
        match = _CHANNEL_RE.match(part)
        if not match or match.group(1).lower() != expected:
            raise TemplateSyntaxError(
                f"expected '{expected}: ...' in encoding, got {part!r}"
            )
        values[expected] = match.group(2)
    color_text = values["color"]
    color = (
        None
        if color_text.lower() == "none"
        else table.resolve_column(color_text).name
    )
    return EncodingAnswer(
        x=parse_fieldref(values["x"], table),
        y=parse_fieldref(values["y"], table),
        color=color,
    )


def _parse_sort(text: str) -> SortAnswer:
    if text.lower() == "none":
        return SortAnswer()
    tokens = text.split()
    if len(tokens) != 2:
        raise TemplateSyntaxError(f"sort must be '<axis> <order>' or 'none': {text!r}")
    axis, order = tokens[0].lower(), tokens[1].lower()
    if axis not in SORT_AXES:
        raise UnknownKeywordError(f"sort axis must be x or y: {tokens[0]!r}")
    if order not in SORT_ORDERS:
        raise UnknownKeywordError(f"sort order must be asc or desc: {tokens[1]!r}")
    return SortAnswer(axis=axis, order=order)


def parse_step_answer(step: StepIndex, text: str, table: DataTable) -> StepAnswer:
    """Parse one answer line for the given step against the table."""
    stripped = text.strip()
    if not stripped:
        raise TemplateSyntaxError(f"empty answer for step {int(step)}")
    if step is StepIndex.SELECT_COLUMNS:
        return _parse_columns(stripped, table)
    if step is StepIndex.FILTER_ROWS:
        return FilterAnswer(expr=parse_filter(stripped, table), text=stripped)
    if step is StepIndex.ADD_AGGREGATIONS:
        return _parse_aggregations(stripped, table)
    if step is StepIndex.CHOOSE_MARK:
        return _parse_mark(stripped)
    if step is StepIndex.DETERMINE_ENCODING:
        return _parse_encoding(stripped, table)
    return _parse_sort(stripped)


# --- serialization -----------------------------------------------------------


def render_fieldref(ref: FieldRef) -> str:
    if ref.aggregation is None:
        return ref.column
    return f"{ref.aggregation}({ref.column})"


def serialize_step_answer(answer: StepAnswer) -> str:
    """Canonical text form; parse(serialize(a), table) == a for valid answers."""
    if isinstance(answer, ColumnsAnswer):
        return ", ".join(answer.columns)
    if isinstance(answer, FilterAnswer):
        return serialize_filter(answer.expr)
    if isinstance(answer, AggregationsAnswer):
        if not answer.aggregations:
            return "none"
        return ", ".join(f"{a.func} {a.column}" for a in answer.aggregations)
    if isinstance(answer, MarkAnswer):
        return answer.mark
    if isinstance(answer, EncodingAnswer):
        color = answer.color if answer.color is not None else "none"
        return (
            f"x: {render_fieldref(answer.x)}, "
            f"y: {render_fieldref(answer.y)}, "
            f"color: {color}"
        )
    if isinstance(answer, SortAnswer):
        if answer.is_none:
            return "none"
        return f"{answer.axis} {answer.order}"
    raise TypeError(f"not a StepAnswer: {answer!r}")


# --- spec validation ---------------------------------------------------------


def validate_aggregation_target(func: str, column: Column) -> None:
    """count applies to any column; sum/average need numbers; min/max order."""
    if func == "count":
        return
    if func in ("sum", "average"):
        if column.type is not ColumnType.QUANTITATIVE:
            raise TypeMismatchError(
                f"{func} needs a quantitative column, {column.name!r} is "
                f"{column.type.value}"
            )
        return
    if column.type is ColumnType.NOMINAL:
        raise TypeMismatchError(
            f"{func} needs an orderable column, {column.name!r} is nominal"
        )


def _validate_fieldref(ref: FieldRef, table: DataTable) -> None:
    column = table.resolve_column(ref.column)
    if ref.aggregation is None:
        return
    if ref.aggregation not in AGGREGATIONS:
        raise UnknownKeywordError(
            f"unknown aggregation function: {ref.aggregation!r}"
        )
    validate_aggregation_target(ref.aggregation, column)


def validate_spec(spec: VisSpec, table: DataTable) -> None:
    """Raise the first violation of the spec's slots against the table."""
    if spec.mark not in MARKS:
        raise UnknownKeywordError(f"unknown mark: {spec.mark!r}")
    _validate_fieldref(spec.x, table)
    _validate_fieldref(spec.y, table)
    if spec.color is not None:
        table.resolve_column(spec.color)
    if spec.filter is not None:
        validate_filter(spec.filter, table)
    if spec.sort is not None:
        axis, order = spec.sort
        if axis not in SORT_AXES:
            raise UnknownKeywordError(f"sort axis must be x or y: {axis!r}")
        if order not in SORT_ORDERS:
            raise UnknownKeywordError(f"sort order must be asc or desc: {order!r}")


# --- evaluation sequence -----------------------------------------------------


def _word(name: str) -> str:
    """Lowercase a column name and join its words with underscores."""
    return "_".join(name.lower().split())


def to_eval_sequence(spec: VisSpec) -> tuple[str, ...]:
    """The 8-token form [mark][x][x aggr][y][y aggr][color][filter][sort].

    Every token is lowercase and whitespace-free: multi-word column names
    are joined with ``_``, the filter loses all spaces and quotes, and a
    sort renders as ``axis_order``.
    """
    return (
        spec.mark.lower(),
        _word(spec.x.column),
        spec.x.aggregation or "none",
        _word(spec.y.column),
        spec.y.aggregation or "none",
        _word(spec.color) if spec.color is not None else "none",
        filter_token(spec.filter),
        f"{spec.sort[0]}_{spec.sort[1]}" if spec.sort is not None else "none",
    )
