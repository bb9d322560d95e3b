"""Consistency and similarity metrics, dataset loading, and corpus stats.

Two specs are consistent when their eight slots agree after
canonicalization; scatter specs also match with x and y swapped, and
filters match up to the order of `and`/`or` operands (switch off with
strict_filter_order). Similarity metrics run over the 8-token sequence:
ROUGE-L as LCS/8 and BLEU with order-4 n-grams, uniform weights, add-one
smoothing on orders above 1, and no brevity penalty (lengths are equal).

Datasets are JSON Lines, one triplet per line:

    {"id": "m001", "table": "movies.csv", "utterance": "...",
     "truth": {"mark": "bar", "x": "Major Genre", "x_aggregation": "none",
               "y": "Worldwide Gross", "y_aggregation": "average",
               "color": "none", "filter": "Release Year >= 2000",
               "sort": "y desc"},
     "hardness": "medium"}

Table paths resolve relative to the dataset file.
"""

from __future__ import annotations

import json
import math
from collections import Counter
from dataclasses import dataclass
from datetime import date
from pathlib import Path
from typing import Mapping, Sequence

from .dsl import (
    FieldRef,
    MARKS,
    SortAnswer,
    StepIndex,
    VisSpec,
    parse_fieldref,
    parse_step_answer,
    to_eval_sequence,
    validate_spec,
)
from .errors import (
    AlignmentError,
    ChartPipeError,
    LengthMismatchError,
    UnknownKeywordError,
)
from .filters import And, Condition, FilterExpr, Or, parse_filter, serialize_filter
from .tabular import DataTable, load_csv_path

SEQUENCE_LENGTH = 8
BLEU_ORDER = 4

HARDNESS_LEVELS = ("easy", "medium", "hard", "extra_hard")

METRIC_CONFIG = {
    "rouge_l": "lcs / 8 (equal-length F measure)",
    "bleu_order": BLEU_ORDER,
    "bleu_weights": "uniform",
    "bleu_smoothing": "add-one on orders >= 2",
    "bleu_brevity_penalty": 1.0,
}


# --- consistency -------------------------------------------------------------


def _word(name: str) -> str:
    return "_".join(name.lower().split())


def _literal_key(value: object) -> tuple[str, str]:
    # Type-tagged so the string "5" and the number 5 do not collide;
    # numbers collapse int/float spellings of the same value.
    if isinstance(value, date):
        return ("d", value.isoformat())
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return ("n", repr(float(value)))
    return ("s", str(value))


def _condition_key(cond: Condition) -> tuple:
    return ("cond", _word(cond.column), cond.op, _literal_key(cond.value))


def _filter_key(expr: FilterExpr | None, strict: bool) -> tuple | None:
    if expr is None:
        return None
    if isinstance(expr, Condition):
        return _condition_key(expr)
    if strict:
        tag = "and" if isinstance(expr, And) else "or"
        return (tag, _filter_key(expr.left, True), _filter_key(expr.right, True))
    # Commutative form: flatten same-operator chains and sort the operands.
    tag = "and" if isinstance(expr, And) else "or"
    operands: list[tuple] = []
    stack: list[FilterExpr] = [expr]
    while stack:
        node = stack.pop()
        if type(node) is type(expr):
            stack.append(node.left)  # type: ignore[union-attr]
            stack.append(node.right)  # type: ignore[union-attr]
        else:
            operands.append(_filter_key(node, False))  # type: ignore[arg-type]
    return (tag, tuple(sorted(operands)))


def _slot_key(ref: FieldRef) -> tuple:
    # Plain fields carry "" rather than None so axis keys stay sortable.
    return (_word(ref.column), ref.aggregation or "")


def consistency_key(spec: VisSpec, strict_filter_order: bool = False) -> tuple:
    """Canonical hashable form; two specs are consistent iff keys are equal.

    Scatter axes are stored as an unordered pair, which keeps the x/y-swap
    equivalence transitive.
    """
    x, y = _slot_key(spec.x), _slot_key(spec.y)
    axes = tuple(sorted((x, y))) if spec.mark == "scatter" else (x, y)
    return (
        spec.mark.lower(),
        axes,
        _word(spec.color) if spec.color is not None else None,
        _filter_key(spec.filter, strict_filter_order),
        spec.sort,
    )


def consistent(a: VisSpec, b: VisSpec, strict_filter_order: bool = False) -> bool:
    return consistency_key(a, strict_filter_order) == consistency_key(
        b, strict_filter_order
    )


# --- similarity --------------------------------------------------------------


def _check_sequences(candidate: Sequence[str], reference: Sequence[str]) -> None:
    if len(candidate) != SEQUENCE_LENGTH or len(reference) != SEQUENCE_LENGTH:
        raise LengthMismatchError(
            f"sequences must have {SEQUENCE_LENGTH} tokens, got "
            f"{len(candidate)} and {len(reference)}"
        )


def lcs_length(a: Sequence[str], b: Sequence[str]) -> int:
    """Classic O(len(a)*len(b)) dynamic program."""
    previous = [0] * (len(b) + 1)
    for token_a in a:
        current = [0]
        for j, token_b in enumerate(b, start=1):
            if token_a == token_b:
                current.append(previous[j - 1] + 1)
            else:
                current.append(max(previous[j], current[j - 1]))
        previous = current
    return previous[len(b)]


def rouge_l(candidate: Sequence[str], reference: Sequence[str]) -> float:
    """LCS-based F measure; with equal lengths P = R = F = LCS/8."""
    _check_sequences(candidate, reference)
    return lcs_length(candidate, reference) / SEQUENCE_LENGTH


def _ngrams(tokens: Sequence[str], n: int) -> Counter:
    return Counter(tuple(tokens[i : i + n]) for i in range(len(tokens) - n + 1))


def bleu(candidate: Sequence[str], reference: Sequence[str]) -> float:
    """Order-4 BLEU, uniform weights, add-one smoothing on orders >= 2.

    Unigram precision is unsmoothed, so fully disjoint sequences score 0.
    Brevity penalty is 1 because the sequences have equal length.
    """
    _check_sequences(candidate, reference)
    log_sum = 0.0
    for n in range(1, BLEU_ORDER + 1):
        cand = _ngrams(candidate, n)
        ref = _ngrams(reference, n)
        overlap = sum(min(count, ref[gram]) for gram, count in cand.items())
        total = sum(cand.values())
        if n == 1:
            if overlap == 0:
                return 0.0
            precision = overlap / total
        else:
            precision = (overlap + 1) / (total + 1)
        log_sum += math.log(precision) / BLEU_ORDER
    return math.exp(log_sum)


# --- dataset loading ---------------------------------------------------------


@dataclass(frozen=True)
class EvalTriplet:
    id: str
    table: DataTable
    utterance: str
    truth: VisSpec
    hardness: str = "unknown"


TRUTH_SLOTS = (
    "mark",
    "x",
    "x_aggregation",
    "y",
    "y_aggregation",
    "color",
    "filter",
    "sort",
)


def spec_from_slots(slots: Mapping[str, str], table: DataTable) -> VisSpec:
    """Build and validate a VisSpec from its 8 textual slots."""
    missing = [key for key in TRUTH_SLOTS if key not in slots]
    if missing:
        raise ChartPipeError(f"truth record lacks slots: {missing}")

    def fieldref(column: str, aggregation: str) -> FieldRef:
        if aggregation.lower() == "none":
            return parse_fieldref(column, table)
        return parse_fieldref(f"{aggregation}({column})", table)

    mark = slots["mark"].strip().lower()
    if mark not in MARKS:
        raise UnknownKeywordError(f"unknown mark: {slots['mark']!r}")
    color_text = slots["color"].strip()
    sort_answer = parse_step_answer(StepIndex.ADD_SORT, slots["sort"], table)
    assert isinstance(sort_answer, SortAnswer)
    spec = VisSpec(
        mark=mark,
        x=fieldref(slots["x"], slots["x_aggregation"]),
        y=fieldref(slots["y"], slots["y_aggregation"]),
        color=(
            None
            if color_text.lower() == "none"
            else table.resolve_column(color_text).name
        ),
        filter=parse_filter(slots["filter"], table),
        sort=(
            None
            if sort_answer.is_none
            else (sort_answer.axis, sort_answer.order)  # type: ignore[arg-type]
        ),
    )
    validate_spec(spec, table)
    return spec


def slots_from_spec(spec: VisSpec) -> dict[str, str]:
    """Inverse of spec_from_slots, for writing datasets and predictions."""
    return {
        "mark": spec.mark,
        "x": spec.x.column,
        "x_aggregation": spec.x.aggregation or "none",
        "y": spec.y.column,
        "y_aggregation": spec.y.aggregation or "none",
        "color": spec.color if spec.color is not None else "none",
        "filter": serialize_filter(spec.filter),
        "sort": f"{spec.sort[0]} {spec.sort[1]}" if spec.sort else "none",
    }


def load_predictions(path: str | Path) -> dict[str, list[dict]]:
    """Read predictions JSONL: {"id": ..., "topk": [slot dicts, best first]}.

    Slot dicts stay unparsed here; evaluate_run decides their validity
    against each triplet's table.
    """
    predictions: dict[str, list[dict]] = {}
    source = Path(path)
    with source.open(encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
                entry_id = str(record["id"])
                topk = list(record["topk"])
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise ChartPipeError(
                    f"{source}:{line_no}: bad prediction record: {exc}"
                ) from exc
            if entry_id in predictions:
                raise AlignmentError(f"duplicate prediction id {entry_id!r}")
            predictions[entry_id] = topk
    return predictions


def load_triplets(path: str | Path) -> list[EvalTriplet]:
    """Read a JSONL dataset; table paths resolve against the file's folder."""
    dataset_path = Path(path)
    root = dataset_path.parent
    tables: dict[str, DataTable] = {}
    triplets: list[EvalTriplet] = []
    with dataset_path.open(encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ChartPipeError(
                    f"{dataset_path}:{line_no}: not valid JSON: {exc}"
                ) from exc
            try:
                table_ref = record["table"]
                if table_ref not in tables:
                    tables[table_ref] = load_csv_path(root / table_ref)
                table = tables[table_ref]
                triplets.append(
                    EvalTriplet(
                        id=str(record["id"]),
                        table=table,
                        utterance=record["utterance"],
                        truth=spec_from_slots(record["truth"], table),
                        hardness=record.get("hardness", "unknown"),
                    )
                )
            except (KeyError, TypeError) as exc:
                raise ChartPipeError(
                    f"{dataset_path}:{line_no}: bad triplet record: {exc!r}"
                ) from exc
    return triplets


# --- run evaluation ----------------------------------------------------------


@dataclass(frozen=True)
class ExampleScore:
    id: str
    valid: bool
    consistent_at_1: float
    consistent_at_3: float
    rouge_l_at_1: float
    bleu_at_1: float


@dataclass(frozen=True)
class EvalReport:
    config: dict
    examples: tuple[ExampleScore, ...]
    aggregates: dict[str, float]
    n_examples: int

    def as_dict(self) -> dict:
        return {
            "config": self.config,
            "n_examples": self.n_examples,
            "aggregates": self.aggregates,
            "examples": [vars(e) for e in self.examples],
        }


Prediction = Mapping[str, str] | VisSpec


def _coerce_prediction(entry: Prediction, table: DataTable) -> VisSpec | None:
    """A prediction that fails to parse or validate is invalid (None)."""
    try:
        if isinstance(entry, VisSpec):
            validate_spec(entry, table)
            return entry
        return spec_from_slots(entry, table)
    except ChartPipeError:
        return None


def evaluate_run(
    triplets: Sequence[EvalTriplet],
    predictions: Mapping[str, Sequence[Prediction]],
    strict_filter_order: bool = False,
) -> EvalReport:
    """Score predictions against their triplets, aligned by id.

    Per example: consistency of the top-1 and of any of the top-3, and
    ROUGE-L/BLEU of the top-1. An invalid top-1 zeroes every top-1 metric;
    invalid members of the top-3 simply cannot match.
    """
    missing = [t.id for t in triplets if t.id not in predictions]
    if missing:
        raise AlignmentError(f"predictions missing for ids: {missing[:5]}")
    known = {t.id for t in triplets}
    extra = [pid for pid in predictions if pid not in known]
    if extra:
        raise AlignmentError(f"predictions for unknown ids: {extra[:5]}")

    examples: list[ExampleScore] = []
    for triplet in triplets:
        top = [
            _coerce_prediction(entry, triplet.table)
            for entry in predictions[triplet.id][:3]
        ]
        top1 = top[0] if top else None
        if top1 is not None:
            truth_seq = to_eval_sequence(triplet.truth)
            top1_seq = to_eval_sequence(top1)
            at1 = float(consistent(triplet.truth, top1, strict_filter_order))
            rouge = rouge_l(top1_seq, truth_seq)
            bleu_score = bleu(top1_seq, truth_seq)
        else:
            at1, rouge, bleu_score = 0.0, 0.0, 0.0
        at3 = float(
            any(
                spec is not None
                and consistent(triplet.truth, spec, strict_filter_order)
                for spec in top
            )
        )
        examples.append(
            ExampleScore(
                id=triplet.id,
                valid=top1 is not None,
                consistent_at_1=at1,
                consistent_at_3=at3,
                rouge_l_at_1=rouge,
                bleu_at_1=bleu_score,
            )
        )

    n = len(examples)
    aggregates = {
        "consistent_at_1": sum(e.consistent_at_1 for e in examples) / n if n else 0.0,
        "consistent_at_3": sum(e.consistent_at_3 for e in examples) / n if n else 0.0,
        "rouge_l_at_1": sum(e.rouge_l_at_1 for e in examples) / n if n else 0.0,
        "bleu_at_1": sum(e.bleu_at_1 for e in examples) / n if n else 0.0,
        "valid_rate": sum(e.valid for e in examples) / n if n else 0.0,
    }
    config = dict(METRIC_CONFIG)
    config["strict_filter_order"] = strict_filter_order
    return EvalReport(
        config=config,
        examples=tuple(examples),
        aggregates=aggregates,
        n_examples=n,
    )


def format_report(report: EvalReport) -> str:
    """Aggregate table for terminals; one metric per row."""
    lines = [f"examples: {report.n_examples}"]
    width = max(len(name) for name in report.aggregates)
    for name, value in report.aggregates.items():
        lines.append(f"{name.ljust(width)}  {value:.4f}")
    return "\n".join(lines)


# --- dataset statistics ------------------------------------------------------

CHART_TYPE_KEYWORDS = ("bar", "pie", "line", "scatter", "scatterplot")
AGGREGATION_KEYWORDS = (
    "count",
    "number of",
    "how many",
    "average",
    "avg",
    "mean",
    "sum",
    "total",
    "max",
    "maximum",
    "min",
    "minimum",
)


@dataclass(frozen=True)
class StatsRecord:
    id: str
    column_ratio: float
    explicit_chart_type: bool
    explicit_aggregation: bool


@dataclass(frozen=True)
class StatsReport:
    records: tuple[StatsRecord, ...]
    aggregates: dict[str, float]
    n_examples: int

    def as_dict(self) -> dict:
        return {
            "n_examples": self.n_examples,
            "aggregates": self.aggregates,
            "records": [vars(r) for r in self.records],
        }


def _tokens(text: str) -> list[str]:
    out: list[str] = []
    current: list[str] = []
    for ch in text.lower():
        if ch.isalnum():
            current.append(ch)
        elif current:
            out.append("".join(current))
            current = []
    if current:
        out.append("".join(current))
    return out


def _contains_phrase(haystack: list[str], phrase: str) -> bool:
    needle = _tokens(phrase)
    if not needle:
        return False
    span = len(needle)
    return any(
        haystack[i : i + span] == needle for i in range(len(haystack) - span + 1)
    )


def required_columns(truth: VisSpec) -> list[str]:
    columns: list[str] = []
    for name in (truth.x.column, truth.y.column, truth.color):
        if name is not None and name not in columns:
            columns.append(name)
    return columns


def dataset_stats(
    triplets: Sequence[EvalTriplet],
    chart_keywords: Sequence[str] = CHART_TYPE_KEYWORDS,
    aggregation_keywords: Sequence[str] = AGGREGATION_KEYWORDS,
) -> StatsReport:
    """Explicitness statistics: how much does each utterance spell out?

    The column ratio counts required (encoded) columns mentioned verbatim
    in the utterance, token-wise and case-insensitive. The two flags
    report whether any chart-type or aggregation keyword occurs.
    """
    records = []
    for triplet in triplets:
        utterance_tokens = _tokens(triplet.utterance)
        required = required_columns(triplet.truth)
        mentioned = sum(
            _contains_phrase(utterance_tokens, column) for column in required
        )
        records.append(
            StatsRecord(
                id=triplet.id,
                column_ratio=mentioned / len(required) if required else 0.0,
                explicit_chart_type=any(
                    _contains_phrase(utterance_tokens, kw) for kw in chart_keywords
                ),
                explicit_aggregation=any(
                    _contains_phrase(utterance_tokens, kw)
                    for kw in aggregation_keywords
                ),
            )
        )
    n = len(records)
    aggregates = {
        "column_ratio": sum(r.column_ratio for r in records) / n if n else 0.0,
        "explicit_chart_type": (
            sum(r.explicit_chart_type for r in records) / n if n else 0.0
        ),
        "explicit_aggregation": (
            sum(r.explicit_aggregation for r in records) / n if n else 0.0
        ),
    }
    return StatsReport(records=tuple(records), aggregates=aggregates, n_examples=n)
