"""Filter expression parsing, validation, and evaluation over a DataTable.

Grammar (no parentheses; ``and`` binds tighter than ``or``, both
left-associative)::

    filter     = "none" | or_expr
    or_expr    = and_expr { "or" and_expr }
    and_expr   = condition { "and" condition }
    condition  = column op literal
    op         = ">=" | "<=" | "!=" | "=" | ">" | "<"
    literal    = quoted string | number | ISO date (YYYY-MM-DD)

Column names are unquoted and may contain spaces; they are matched against
the table case-insensitively and stored with the table's spelling.

Comparison semantics (the brute-force oracle in the test suite is written
independently against this paragraph):

* A null cell (empty string) makes its condition false, for every operator.
* Ordering operators require an orderable column. On quantitative columns
  the literal must be a number and the comparison is numeric. On temporal
  columns the literal may be a number or an ISO date; a date cell compared
  against a number compares its year, and a year cell against a date
  literal compares against the literal's year. Ordering on a nominal
  column is a type mismatch.
* ``=`` and ``!=`` are allowed on every column type. When both sides are
  numeric (or temporal) the typed values are compared; otherwise the raw
  cell text is compared to the literal text, case-sensitively.
"""

from __future__ import annotations

from dataclasses import dataclass
from datetime import date
from typing import Union

from .errors import TemplateSyntaxError, TypeMismatchError, UnknownColumnError
from .tabular import ColumnType, DataTable, parse_iso_date, parse_number

PREDICATES = (">=", "<=", "!=", "=", ">", "<")
_ORDERING = {">", "<", ">=", "<="}

Literal = Union[int, float, str, date]


@dataclass(frozen=True)
class Condition:
    column: str
    op: str
    value: Literal


@dataclass(frozen=True)
class And:
    left: "FilterExpr"
    right: "FilterExpr"


@dataclass(frozen=True)
class Or:
    left: "FilterExpr"
    right: "FilterExpr"


FilterExpr = Union[Condition, And, Or]


# --- parsing -----------------------------------------------------------------


def _split_logical(text: str) -> list[str]:
    """Split into condition segments and 'and'/'or' connector tokens.

    Connectors are recognized as standalone lowercase-insensitive words
    outside quoted literals.
    """
    parts: list[str] = []
    current: list[str] = []
    quote: str | None = None
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if quote:
            current.append(ch)
            if ch == quote:
                quote = None
            i += 1
            continue
        if ch in "'\"":
            quote = ch
            current.append(ch)
            i += 1
            continue
        for word in ("and", "or"):
            end = i + len(word)
            before_ok = i == 0 or text[i - 1].isspace()
            after_ok = end >= n or text[end].isspace()
            if before_ok and after_ok and text[i:end].lower() == word:
                parts.append("".join(current))
                parts.append(word)
                current = []
                i = end
                break
        else:
            current.append(ch)
            i += 1
    if quote:
        raise TemplateSyntaxError(f"unterminated quoted literal in filter: {text!r}")
    parts.append("".join(current))
    return parts


def _parse_literal(text: str) -> Literal:
    token = text.strip()
    if not token:
        raise TemplateSyntaxError("missing literal in filter condition")
    if token[0] in "'\"":
        if len(token) < 2 or token[-1] != token[0]:
            raise TemplateSyntaxError(f"unterminated string literal: {token!r}")
        inner = token[1:-1]
        if token[0] in inner:
            raise TemplateSyntaxError(f"stray quote inside literal: {token!r}")
        return inner
    parsed_date = parse_iso_date(token)
    if parsed_date is not None:
        return parsed_date
    try:
        return int(token)
    except ValueError:
        pass
    number = parse_number(token)
    if number is not None:
        return number
    raise TemplateSyntaxError(
        f"literal must be quoted, numeric, or an ISO date: {token!r}"
    )


def _parse_condition(segment: str, table: DataTable) -> Condition:
    # Find the first predicate character outside quotes; column names keep
    # their spaces, so we cannot simply split on whitespace.
    quote: str | None = None
    op_index = -1
    for i, ch in enumerate(segment):
        if quote:
            if ch == quote:
                quote = None
            continue
        if ch in "'\"":
            quote = ch
            continue
        if ch in "<>!=":
            op_index = i
            break
    if op_index < 0:
        raise TemplateSyntaxError(f"no predicate in filter condition: {segment!r}")

    op = next(
        (p for p in PREDICATES if segment.startswith(p, op_index)),
        None,
    )
    if op is None:
        raise TemplateSyntaxError(f"unknown predicate in: {segment!r}")

    column_text = segment[:op_index].strip()
    if not column_text:
        raise TemplateSyntaxError(f"missing column before predicate: {segment!r}")
    column = table.resolve_column(column_text).name

    value = _parse_literal(segment[op_index + len(op) :])
    return Condition(column=column, op=op, value=value)


def parse_filter(text: str, table: DataTable) -> FilterExpr | None:
    """Parse filter text against a table; ``none`` yields None.

    The returned AST is validated: columns exist (canonical spelling is
    stored) and predicates are type-compatible.
    """
    stripped = text.strip()
    if not stripped:
        raise TemplateSyntaxError("empty filter text")
    if stripped.lower() == "none":
        return None

    parts = _split_logical(stripped)
    segments = parts[0::2]
    connectors = parts[1::2]
    if any(not s.strip() for s in segments):
        raise TemplateSyntaxError(f"dangling and/or in filter: {text!r}")

    conditions = [_parse_condition(s, table) for s in segments]

    # 'and' binds tighter than 'or': fold and-runs first, left-associative.
    or_operands: list[FilterExpr] = [conditions[0]]
    for connector, condition in zip(connectors, conditions[1:]):
        if connector == "and":
            or_operands[-1] = And(or_operands[-1], condition)
        else:
            or_operands.append(condition)
    expr: FilterExpr = or_operands[0]
    for operand in or_operands[1:]:
        expr = Or(expr, operand)

    validate_filter(expr, table)
    return expr


# --- validation --------------------------------------------------------------


def validate_filter(expr: FilterExpr, table: DataTable) -> None:
    """Raise the first violation: UnknownColumn, then TypeMismatch."""
    if isinstance(expr, (And, Or)):
        validate_filter(expr.left, table)
        validate_filter(expr.right, table)
        return
    column = table.resolve_column(expr.column)  # raises UnknownColumnError
    if expr.op not in PREDICATES:
        raise TemplateSyntaxError(f"unknown predicate: {expr.op!r}")
    if expr.op not in _ORDERING:
        return
    if column.type is ColumnType.NOMINAL:
        raise TypeMismatchError(
            f"ordering predicate {expr.op} on nominal column {column.name!r}"
        )
    if column.type is ColumnType.QUANTITATIVE:
        if not isinstance(expr.value, (int, float)) or isinstance(expr.value, bool):
            raise TypeMismatchError(
                f"quantitative column {column.name!r} needs a numeric literal"
            )
        return
    # temporal: number, date, or a string that reads as an ISO date
    if isinstance(expr.value, (int, float, date)) and not isinstance(expr.value, bool):
        return
    if isinstance(expr.value, str) and parse_iso_date(expr.value) is not None:
        return
    raise TypeMismatchError(
        f"temporal column {column.name!r} needs a numeric or date literal"
    )


# --- evaluation --------------------------------------------------------------


def _compare_ordered(cell: float | int | date, literal: Literal) -> tuple:
    """Comparable (cell, literal) pair for ordering operators."""
    if isinstance(literal, str):
        parsed = parse_iso_date(literal)
        if parsed is None:  # excluded by validation; defensive
            raise TypeMismatchError(f"unorderable literal: {literal!r}")
        literal = parsed
    if isinstance(cell, date) and not isinstance(literal, date):
        return (cell.year, literal)
    if isinstance(literal, date) and not isinstance(cell, date):
        return (cell, literal.year)
    return (cell, literal)


def _condition_holds(
    cell_raw: str,
    cell_typed: object,
    column_type: ColumnType,
    op: str,
    literal: Literal,
) -> bool:
    if cell_raw == "" or cell_typed is None:
        return False
    if op in _ORDERING:
        left, right = _compare_ordered(cell_typed, literal)  # type: ignore[arg-type]
        if op == ">":
            return left > right
        if op == "<":
            return left < right
        if op == ">=":
            return left >= right
        return left <= right

    # equality: typed when both sides are typed-comparable, raw text otherwise
    typed_literal: object = literal
    if column_type is ColumnType.TEMPORAL and isinstance(literal, str):
        typed_literal = parse_iso_date(literal)
    if (
        column_type in (ColumnType.QUANTITATIVE, ColumnType.TEMPORAL)
        and not isinstance(typed_literal, str)
        and typed_literal is not None
    ):
        left, right = _compare_ordered(cell_typed, typed_literal)  # type: ignore[arg-type]
        equal = left == right
    else:
        equal = cell_raw == str(literal)
    return equal if op == "=" else not equal


def eval_filter(expr: FilterExpr, table: DataTable) -> list[bool]:
    """Row mask for a validated expression; null cells fail their condition."""
    if isinstance(expr, And):
        left = eval_filter(expr.left, table)
        right = eval_filter(expr.right, table)
        return [a and b for a, b in zip(left, right)]
    if isinstance(expr, Or):
        left = eval_filter(expr.left, table)
        right = eval_filter(expr.right, table)
        return [a or b for a, b in zip(left, right)]

    column = table.resolve_column(expr.column)
    raw = table.raw_column(expr.column)
    typed = table.typed_column(expr.column)
    return [
        _condition_holds(r, t, column.type, expr.op, expr.value)
        for r, t in zip(raw, typed)
    ]


# --- serialization -----------------------------------------------------------


def _render_literal(value: Literal) -> str:
    if isinstance(value, date):
        return value.isoformat()
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return str(value)
    if "'" not in value:
        return f"'{value}'"
    if '"' not in value:
        return f'"{value}"'
    raise TemplateSyntaxError(f"literal mixes both quote characters: {value!r}")


def serialize_filter(expr: FilterExpr | None) -> str:
    """Canonical text form; parse(serialize(e)) reproduces the AST.

    Assumes a parser-shaped tree (or-of-ands); an Or nested under an And has
    no parenthesis-free rendering and is rejected.
    """
    if expr is None:
        return "none"
    if isinstance(expr, Or):
        return f"{serialize_filter(expr.left)} or {serialize_filter(expr.right)}"
    if isinstance(expr, And):
        if isinstance(expr.left, Or) or isinstance(expr.right, Or):
            raise TemplateSyntaxError("cannot serialize an 'or' nested under 'and'")
        return f"{serialize_filter(expr.left)} and {serialize_filter(expr.right)}"
    return f"{expr.column} {expr.op} {_render_literal(expr.value)}"


def filter_token(expr: FilterExpr | None) -> str:
    """Whitespace- and quote-free single token for the evaluation sequence.

    Column names are lowercased with spaces collapsed to underscores; all
    other whitespace and quoting disappears; conditions are glued with
    ``and``/``or``.
    """
    if expr is None:
        return "none"
    if isinstance(expr, (And, Or)):
        word = "and" if isinstance(expr, And) else "or"
        return f"{filter_token(expr.left)}{word}{filter_token(expr.right)}"
    column = "_".join(expr.column.lower().split())
    if isinstance(expr.value, date):
        literal = expr.value.isoformat()
    elif isinstance(expr.value, (int, float)):
        literal = str(expr.value)
    else:
        literal = "".join(expr.value.lower().split())
    return f"{column}{expr.op}{literal}"
