"""Chart-type resolution, Vega-Lite emission, and spec <-> steps conversion.

The seven chart types come from a 4-mark DSL: bar/line/scatter split on
whether a color channel is present (plain vs stacked/grouped), and pie
stands alone. Pie keeps the 8-slot layout by convention: x is the nominal
category, y the quantitative value; they compile to color and theta.

Sort compiles to an encoding-level sort. For axis marks the x channel
carries it: sorting by x orders its own values ("ascending"/"descending"),
sorting by y orders x by the y measure ("y"/"-y"). For pie the color
channel carries it, sorting by the y slot via an explicit field sort.
"""

from __future__ import annotations

import enum
import json
from datetime import date
from functools import lru_cache
from importlib import resources
from typing import Mapping

import jsonschema

from .dsl import (
    AggregationsAnswer,
    Aggregation,
    ColumnsAnswer,
    EncodingAnswer,
    FieldRef,
    FilterAnswer,
    MarkAnswer,
    SortAnswer,
    StepAnswer,
    StepIndex,
    VisSpec,
    serialize_step_answer,
    validate_spec,
)
from .errors import InvalidCombinationError
from .filters import And, Condition, FilterExpr, Or, serialize_filter
from .tabular import ColumnType, DataTable

VEGA_LITE_SCHEMA_URL = "https://vega.github.io/schema/vega-lite/v5.json"

_MARK_NAMES = {"bar": "bar", "line": "line", "scatter": "point", "pie": "arc"}
_VEGA_AGGREGATES = {
    "count": "count",
    "average": "mean",
    "sum": "sum",
    "max": "max",
    "min": "min",
}
_PREDICATE_KEYS = {"=": "equal", ">": "gt", "<": "lt", ">=": "gte", "<=": "lte"}


class ChartType(str, enum.Enum):
    BAR = "bar"
    STACKED_BAR = "stacked_bar"
    LINE = "line"
    GROUPED_LINE = "grouped_line"
    SCATTER = "scatter"
    GROUPED_SCATTER = "grouped_scatter"
    PIE = "pie"


_GROUPED = {"bar": ChartType.STACKED_BAR, "line": ChartType.GROUPED_LINE,
            "scatter": ChartType.GROUPED_SCATTER}
_PLAIN = {"bar": ChartType.BAR, "line": ChartType.LINE,
          "scatter": ChartType.SCATTER}


def effective_type(ref: FieldRef, table: DataTable) -> ColumnType:
    """Channel type after aggregation: count/sum/average always yield numbers,
    min/max keep the column's type."""
    if ref.aggregation in ("count", "sum", "average"):
        return ColumnType.QUANTITATIVE
    return table.resolve_column(ref.column).type


def resolve_chart_type(spec: VisSpec, table: DataTable | None = None) -> ChartType:
    """Map mark + color presence to one of the seven chart types.

    With a table bound, pie additionally requires a nominal x (the category)
    and a quantitative y (the value); pie never takes a color channel.
    """
    if spec.mark == "pie":
        if spec.color is not None:
            raise InvalidCombinationError("pie does not take a color channel")
        if table is not None:
            if effective_type(spec.x, table) is not ColumnType.NOMINAL:
                raise InvalidCombinationError(
                    f"pie needs a nominal category on x, got {spec.x.column!r}"
                )
            if effective_type(spec.y, table) is not ColumnType.QUANTITATIVE:
                raise InvalidCombinationError(
                    f"pie needs a quantitative value on y, got {spec.y.column!r}"
                )
        return ChartType.PIE
    if spec.mark not in _PLAIN:
        raise InvalidCombinationError(f"unknown mark: {spec.mark!r}")
    if spec.color is not None:
        return _GROUPED[spec.mark]
    return _PLAIN[spec.mark]


# --- Vega-Lite emission ------------------------------------------------------


def _json_literal(value: object) -> object:
    if isinstance(value, date):
        return value.isoformat()
    return value


def compile_predicate(expr: FilterExpr) -> dict:
    """Filter AST to a Vega-Lite predicate object."""
    if isinstance(expr, And):
        return {"and": [compile_predicate(expr.left), compile_predicate(expr.right)]}
    if isinstance(expr, Or):
        return {"or": [compile_predicate(expr.left), compile_predicate(expr.right)]}
    if isinstance(expr, Condition):
        if expr.op == "!=":
            return {"not": {"field": expr.column, "equal": _json_literal(expr.value)}}
        return {"field": expr.column, _PREDICATE_KEYS[expr.op]: _json_literal(expr.value)}
    raise TypeError(f"not a filter expression: {expr!r}")


def _cell_value(raw: str, column_type: ColumnType) -> object:
    # Temporal cells stay as raw strings: chart runtimes parse both
    # "2008" and "2008-01-31" into dates, while a bare int would not
    # survive as a year on the wire.
    if raw == "":
        return None
    if column_type is ColumnType.QUANTITATIVE:
        number = float(raw)
        return int(number) if number.is_integer() else number
    return raw


def _data_block(table: DataTable, data_ref: str | None) -> dict:
    if data_ref is not None:
        return {"url": data_ref}
    names = table.column_names
    types = [c.type for c in table.columns]
    values = [
        {name: _cell_value(cell, ctype) for name, ctype, cell in zip(names, types, row)}
        for row in table.rows
    ]
    return {"values": values}


def _channel(ref: FieldRef, table: DataTable) -> dict:
    channel: dict = {"field": ref.column, "type": effective_type(ref, table).value}
    if ref.aggregation is not None:
        channel["aggregate"] = _VEGA_AGGREGATES[ref.aggregation]
    return channel


def _axis_sort(sort: tuple[str, str]) -> str:
    axis, order = sort
    if axis == "x":
        return "ascending" if order == "asc" else "descending"
    return "y" if order == "asc" else "-y"


def _pie_sort(sort: tuple[str, str], y: FieldRef) -> object:
    axis, order = sort
    long_order = "ascending" if order == "asc" else "descending"
    if axis == "x":
        return long_order
    by_field: dict = {"field": y.column}
    if y.aggregation is not None:
        by_field["op"] = _VEGA_AGGREGATES[y.aggregation]
    by_field["order"] = long_order
    return by_field


def compile_vegalite(
    spec: VisSpec, table: DataTable, data_ref: str | None = None
) -> dict:
    """Emit a Vega-Lite v5 document for the spec over the table.

    Data is embedded inline unless data_ref names a URL to reference
    instead. Key order is fixed ($schema, data, transform, mark, encoding)
    so documents are stable for golden-file comparison.
    """
    validate_spec(spec, table)
    chart_type = resolve_chart_type(spec, table)

    doc: dict = {"$schema": VEGA_LITE_SCHEMA_URL, "data": _data_block(table, data_ref)}
    if spec.filter is not None:
        doc["transform"] = [{"filter": compile_predicate(spec.filter)}]
    doc["mark"] = _MARK_NAMES[spec.mark]

    if chart_type is ChartType.PIE:
        color = _channel(spec.x, table)
        if spec.sort is not None:
            color["sort"] = _pie_sort(spec.sort, spec.y)
        doc["encoding"] = {"theta": _channel(spec.y, table), "color": color}
        return doc

    x = _channel(spec.x, table)
    if spec.sort is not None:
        x["sort"] = _axis_sort(spec.sort)
    encoding = {"x": x, "y": _channel(spec.y, table)}
    if spec.color is not None:
        encoding["color"] = {"field": spec.color, "type": ColumnType.NOMINAL.value}
    doc["encoding"] = encoding
    return doc


@lru_cache(maxsize=1)
def _schema() -> dict:
    text = (
        resources.files("chartpipe")
        .joinpath("schemas/vegalite-v5-subset.schema.json")
        .read_text(encoding="utf-8")
    )
    return json.loads(text)


def validate_vegalite(doc: dict) -> None:
    """Check a document against the vendored schema subset; raises on failure."""
    jsonschema.validate(doc, _schema())


# --- spec <-> step answers ---------------------------------------------------


def extract_steps(spec: VisSpec) -> dict[StepIndex, StepAnswer]:
    """Decompose a full spec into the six step answers that would build it.

    Selected columns are the distinct encoding columns in x, y, color
    order; filter columns are not selected. Aggregations are the (func,
    column) pairs on the axes, x first, deduplicated.
    """
    columns: list[str] = []
    for name in (spec.x.column, spec.y.column, spec.color):
        if name is not None and name not in columns:
            columns.append(name)

    aggregations: list[Aggregation] = []
    for ref in (spec.x, spec.y):
        if ref.aggregation is not None:
            term = Aggregation(func=ref.aggregation, column=ref.column)
            if term not in aggregations:
                aggregations.append(term)

    return {
        StepIndex.SELECT_COLUMNS: ColumnsAnswer(columns=tuple(columns)),
        StepIndex.FILTER_ROWS: FilterAnswer(
            expr=spec.filter, text=serialize_filter(spec.filter)
        ),
        StepIndex.ADD_AGGREGATIONS: AggregationsAnswer(
            aggregations=tuple(aggregations)
        ),
        StepIndex.CHOOSE_MARK: MarkAnswer(mark=spec.mark),
        StepIndex.DETERMINE_ENCODING: EncodingAnswer(
            x=spec.x, y=spec.y, color=spec.color
        ),
        StepIndex.ADD_SORT: (
            SortAnswer(axis=spec.sort[0], order=spec.sort[1])
            if spec.sort is not None
            else SortAnswer()
        ),
    }


def assemble_spec(answers: Mapping[StepIndex, StepAnswer]) -> VisSpec:
    """Build the VisSpec a completed six-step chain describes."""
    mark_answer = answers[StepIndex.CHOOSE_MARK]
    encoding = answers[StepIndex.DETERMINE_ENCODING]
    filter_answer = answers[StepIndex.FILTER_ROWS]
    sort_answer = answers[StepIndex.ADD_SORT]
    assert isinstance(mark_answer, MarkAnswer)
    assert isinstance(encoding, EncodingAnswer)
    assert isinstance(filter_answer, FilterAnswer)
    assert isinstance(sort_answer, SortAnswer)
    return VisSpec(
        mark=mark_answer.mark,
        x=encoding.x,
        y=encoding.y,
        color=encoding.color,
        filter=filter_answer.expr,
        sort=(
            None
            if sort_answer.is_none
            else (sort_answer.axis, sort_answer.order)  # type: ignore[arg-type]
        ),
    )


def steps_transcript(answers: Mapping[StepIndex, StepAnswer]) -> dict[str, str]:
    """Serialized answers keyed by step number and title, for transcripts."""
    return {
        f"{int(step)} {step.title}": serialize_step_answer(answers[step])
        for step in sorted(answers)
    }
