"""Builders shared across test modules: scripted-backend scripts from
ground truth, and a seeded generator of valid random specs."""

from __future__ import annotations

import random
from typing import Iterable, Sequence

from chartpipe.backend import ScoredText, ScriptKey
from chartpipe.compiler import extract_steps
from chartpipe.dsl import (
    FieldRef,
    SORT_AXES,
    SORT_ORDERS,
    StepIndex,
    VisSpec,
    serialize_step_answer,
    validate_spec,
)
from chartpipe.evaluation import EvalTriplet
from chartpipe.filters import parse_filter
from chartpipe.tabular import ColumnType, DataTable


class CountingBackend:
    """Wrap a backend and record every request it receives."""

    def __init__(self, inner) -> None:
        self.inner = inner
        self.requests: list = []

    def complete(self, request):
        self.requests.append(request)
        return self.inner.complete(request)


def ground_truth_script(
    triplets: Iterable[EvalTriplet], logprob: float = -0.1
) -> dict[ScriptKey, tuple[ScoredText, ...]]:
    """One candidate per step per triplet: the serialized truth answer."""
    script: dict[ScriptKey, tuple[ScoredText, ...]] = {}
    for triplet in triplets:
        for step, answer in extract_steps(triplet.truth).items():
            script[(step, triplet.utterance)] = (
                ScoredText(text=serialize_step_answer(answer), logprob=logprob),
            )
    return script


def script_of(utterance: str, by_step: dict) -> dict[ScriptKey, tuple[ScoredText, ...]]:
    """Script dict from {step number: [(text, logprob), ...]} for one utterance."""
    return {
        (StepIndex(i), utterance): tuple(ScoredText(t, lp) for t, lp in entries)
        for i, entries in by_step.items()
    }


def override_step(
    script: dict[ScriptKey, tuple[ScoredText, ...]],
    utterance: str,
    step: StepIndex,
    candidates: Sequence[tuple[str, float]],
) -> dict[ScriptKey, tuple[ScoredText, ...]]:
    """Copy of script with one (step, utterance) cell replaced."""
    updated = dict(script)
    updated[(step, utterance)] = tuple(
        ScoredText(text=text, logprob=logprob) for text, logprob in candidates
    )
    return updated


# --- random specs ------------------------------------------------------------


def _render_number(value: float) -> str:
    if value == int(value):
        return str(int(value))
    return f"{value:.2f}"


def random_condition_text(rng: random.Random, table: DataTable) -> str:
    column = rng.choice(table.columns)
    if column.type is ColumnType.NOMINAL:
        op = rng.choice(("=", "!="))
        values = [v for v in table.raw_column(column.name) if v and "'" not in v]
        value = rng.choice(values) if values else "missing"
        return f"{column.name} {op} '{value}'"
    op = rng.choice(("=", "!=", ">", "<", ">=", "<="))
    raws = [v for v in table.raw_column(column.name) if v]
    if column.type is ColumnType.TEMPORAL:
        return f"{column.name} {op} {rng.choice(raws)}"
    anchor = float(rng.choice(raws))
    literal = _render_number(anchor + rng.choice((-1.0, -0.5, 0.0, 0.5, 1.0)))
    return f"{column.name} {op} {literal}"


def random_filter_text(rng: random.Random, table: DataTable) -> str:
    parts = [random_condition_text(rng, table)]
    for _ in range(rng.randrange(0, 2)):
        parts.append(rng.choice(("and", "or")))
        parts.append(random_condition_text(rng, table))
    return " ".join(parts)


def _random_ref(rng: random.Random, table: DataTable) -> FieldRef:
    column = rng.choice(table.columns)
    options: list[str | None] = [None, None, "count"]
    if column.type is ColumnType.QUANTITATIVE:
        options += ["sum", "average", "min", "max"]
    elif column.type is ColumnType.TEMPORAL:
        options += ["min", "max"]
    return FieldRef(column=column.name, aggregation=rng.choice(options))


def _random_quantitative_ref(rng: random.Random, table: DataTable) -> FieldRef:
    choices: list[FieldRef] = []
    for column in table.columns:
        choices.append(FieldRef(column=column.name, aggregation="count"))
        if column.type is ColumnType.QUANTITATIVE:
            choices.append(FieldRef(column=column.name, aggregation=None))
            for func in ("sum", "average", "min", "max"):
                choices.append(FieldRef(column=column.name, aggregation=func))
    return rng.choice(choices)


def random_spec(rng: random.Random, table: DataTable) -> VisSpec:
    """A uniformly messy but always-valid spec over the table.

    Pie charts honor the nominal-x / quantitative-y rule; color only ever
    names a nominal column and never appears on pie.
    """
    nominal = [c for c in table.columns if c.type is ColumnType.NOMINAL]
    quantitative = [c for c in table.columns if c.type is ColumnType.QUANTITATIVE]
    marks = ["bar", "line", "scatter"]
    if nominal and quantitative:
        marks.append("pie")
    mark = rng.choice(marks)
    if mark == "pie":
        x = FieldRef(column=rng.choice(nominal).name)
        y = _random_quantitative_ref(rng, table)
        color = None
    else:
        x = _random_ref(rng, table)
        y = _random_ref(rng, table)
        color = rng.choice(nominal).name if nominal and rng.random() < 0.4 else None
    spec = VisSpec(
        mark=mark,
        x=x,
        y=y,
        color=color,
        filter=(
            parse_filter(random_filter_text(rng, table), table)
            if rng.random() < 0.5
            else None
        ),
        sort=(
            (rng.choice(SORT_AXES), rng.choice(SORT_ORDERS))
            if rng.random() < 0.5
            else None
        ),
    )
    validate_spec(spec, table)
    return spec
