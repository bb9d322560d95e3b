"""Six-step inference: prompting, pruning, beam combination, top-k results.

Each step asks the backend for beam_width candidates per surviving chain,
parses and validates them against the table and the chain so far, extends
the chains, and keeps the best beam_width by cumulative logprob. After
step 6 the chains compile; consistency-equal duplicates collapse keeping
the higher score, and the top k become ChartResults.

Candidates are pruned when they name columns missing from the table, carry
a filter that is ungrammatical or inapplicable to the data, or use
aggregation, mark, encoding-channel, or sort tokens outside the valid
space. A chain whose candidates are all pruned at an optional step (2, 3,
6) falls back to the explicit `none` answer, scored one nat below the best
rejected candidate, instead of dying.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

from .backend import CompletionBackend, CompletionRequest, ScoredText
from .backend import DEFAULT_MAX_NEW_TOKENS
from .compiler import assemble_spec, compile_vegalite, effective_type
from .dsl import (
    Aggregation,
    AggregationsAnswer,
    ColumnsAnswer,
    EncodingAnswer,
    FieldRef,
    MarkAnswer,
    OPTIONAL_STEPS,
    StepAnswer,
    StepIndex,
    VisSpec,
    parse_step_answer,
    serialize_step_answer,
    validate_aggregation_target,
)
from .errors import (
    ChartPipeError,
    InvalidCombinationError,
    InvalidEditedAnswerError,
    NoValidChartError,
)
from .evaluation import consistency_key
from .prompts import assemble_prompt
from .tabular import ColumnType, DataTable

NONE_FALLBACK_PENALTY = 1.0


@dataclass(frozen=True)
class GenerationConfig:
    """k results out of a beam_width-wide search; beam_width >= k advised."""

    k: int = 3
    beam_width: int = 4
    max_new_tokens: int = DEFAULT_MAX_NEW_TOKENS

    def __post_init__(self) -> None:
        if self.k < 1:
            raise ValueError("k must be at least 1")
        if self.beam_width < 1:
            raise ValueError("beam_width must be at least 1")


@dataclass(frozen=True)
class Chain:
    """A prefix of step answers and the summed logprob of its choices."""

    answers: dict[StepIndex, StepAnswer] = field(default_factory=dict)
    cumulative_logprob: float = 0.0

    def extended(self, step: StepIndex, answer: StepAnswer, logprob: float) -> "Chain":
        answers = dict(self.answers)
        answers[step] = answer
        return Chain(answers=answers, cumulative_logprob=self.cumulative_logprob + logprob)


@dataclass(frozen=True)
class ChartResult:
    rank: int
    spec: VisSpec
    vegalite: dict
    score: float
    answers: dict[StepIndex, StepAnswer]


# --- chain-level validation --------------------------------------------------


def _validate_fieldref_in_chain(
    ref: FieldRef,
    selected: tuple[str, ...],
    declared: tuple[Aggregation, ...],
    table: DataTable,
) -> None:
    if ref.column not in selected:
        raise InvalidCombinationError(
            f"encoding references unselected column {ref.column!r}"
        )
    if ref.aggregation is None:
        return
    validate_aggregation_target(ref.aggregation, table.resolve_column(ref.column))
    # count may appear on an axis without a step-3 declaration
    if ref.aggregation == "count":
        return
    if Aggregation(func=ref.aggregation, column=ref.column) not in declared:
        raise InvalidCombinationError(
            f"{ref.aggregation}({ref.column}) was not declared in step 3"
        )


def validate_answer_in_chain(
    step: StepIndex,
    answer: StepAnswer,
    prior: Mapping[StepIndex, StepAnswer],
    table: DataTable,
) -> None:
    """Cross-step checks beyond what parsing already enforced."""
    if step is StepIndex.ADD_AGGREGATIONS and isinstance(answer, AggregationsAnswer):
        columns_answer = prior.get(StepIndex.SELECT_COLUMNS)
        selected = (
            columns_answer.columns
            if isinstance(columns_answer, ColumnsAnswer)
            else ()
        )
        for term in answer.aggregations:
            if term.column not in selected:
                raise InvalidCombinationError(
                    f"aggregation targets unselected column {term.column!r}"
                )
            validate_aggregation_target(term.func, table.resolve_column(term.column))
        return

    if step is StepIndex.DETERMINE_ENCODING and isinstance(answer, EncodingAnswer):
        columns_answer = prior.get(StepIndex.SELECT_COLUMNS)
        selected = (
            columns_answer.columns
            if isinstance(columns_answer, ColumnsAnswer)
            else ()
        )
        aggregations_answer = prior.get(StepIndex.ADD_AGGREGATIONS)
        declared = (
            aggregations_answer.aggregations
            if isinstance(aggregations_answer, AggregationsAnswer)
            else ()
        )
        _validate_fieldref_in_chain(answer.x, selected, declared, table)
        _validate_fieldref_in_chain(answer.y, selected, declared, table)
        if answer.color is not None and answer.color not in selected:
            raise InvalidCombinationError(
                f"color references unselected column {answer.color!r}"
            )

        mark_answer = prior.get(StepIndex.CHOOSE_MARK)
        if isinstance(mark_answer, MarkAnswer) and mark_answer.mark == "pie":
            if answer.color is not None:
                raise InvalidCombinationError("pie does not take a color channel")
            if effective_type(answer.x, table) is not ColumnType.NOMINAL:
                raise InvalidCombinationError("pie needs a nominal category on x")
            if effective_type(answer.y, table) is not ColumnType.QUANTITATIVE:
                raise InvalidCombinationError("pie needs a quantitative value on y")


def prune_invalid(
    candidates: list[ScoredText],
    step: StepIndex,
    table: DataTable,
    prior: Mapping[StepIndex, StepAnswer],
) -> list[tuple[StepAnswer, float]]:
    """Parse and validate candidates, dropping the invalid; order preserved.

    Candidates that parse to the same answer collapse onto the first
    (best-scored) occurrence.
    """
    kept: list[tuple[StepAnswer, float]] = []
    for candidate in candidates:
        try:
            answer = parse_step_answer(step, candidate.text, table)
            validate_answer_in_chain(step, answer, prior, table)
        except ChartPipeError:
            continue
        if any(answer == existing for existing, _ in kept):
            continue
        kept.append((answer, candidate.logprob))
    return kept


# --- beam search -------------------------------------------------------------


def _extend_chain(
    chain: Chain,
    step: StepIndex,
    table: DataTable,
    utterance: str,
    config: GenerationConfig,
    backend: CompletionBackend,
) -> list[Chain]:
    prompt = assemble_prompt(table, utterance, chain.answers, step)
    request = CompletionRequest(
        prompt=prompt,
        n_candidates=config.beam_width,
        max_new_tokens=config.max_new_tokens,
    )
    candidates = backend.complete(request)
    kept = prune_invalid(candidates, step, table, chain.answers)
    if not kept and step in OPTIONAL_STEPS:
        best_rejected = max((c.logprob for c in candidates), default=0.0)
        none_answer = parse_step_answer(step, "none", table)
        kept = [(none_answer, best_rejected - NONE_FALLBACK_PENALTY)]
    return [chain.extended(step, answer, logprob) for answer, logprob in kept]


def _search(
    chains: list[Chain],
    steps: list[StepIndex],
    table: DataTable,
    utterance: str,
    config: GenerationConfig,
    backend: CompletionBackend,
) -> list[Chain]:
    for step in steps:
        extended: list[Chain] = []
        for chain in chains:
            extended.extend(
                _extend_chain(chain, step, table, utterance, config, backend)
            )
        if not extended:
            raise NoValidChartError(
                step=step,
                message=f"every candidate chain was pruned at step {int(step)} "
                f"({step.title})",
            )
        extended.sort(key=lambda c: c.cumulative_logprob, reverse=True)
        chains = extended[: config.beam_width]
    return chains


def _finalize(chains: list[Chain], table: DataTable, k: int) -> list[ChartResult]:
    results: list[ChartResult] = []
    seen: set = set()
    last_step = StepIndex.ADD_SORT
    for chain in chains:
        spec = assemble_spec(chain.answers)
        try:
            vegalite = compile_vegalite(spec, table)
            key = consistency_key(spec)
        except ChartPipeError:  # defensive; pruning should preclude this
            continue
        if key in seen:  # chains arrive sorted, so the first occurrence scores higher
            continue
        seen.add(key)
        results.append(
            ChartResult(
                rank=len(results) + 1,
                spec=spec,
                vegalite=vegalite,
                score=chain.cumulative_logprob,
                answers=dict(chain.answers),
            )
        )
        if len(results) == k:
            break
    if not results:
        raise NoValidChartError(
            step=last_step, message="no completed chain compiled to a chart"
        )
    return results


def generate_topk(
    table: DataTable,
    utterance: str,
    config: GenerationConfig,
    backend: CompletionBackend,
) -> list[ChartResult]:
    """Run the full six-step search and return the top k chart results."""
    if not utterance.strip():
        raise ValueError("utterance must be non-empty")
    chains = _search([Chain()], list(StepIndex), table, utterance, config, backend)
    return _finalize(chains, table, config.k)


def regenerate_from_step(
    table: DataTable,
    utterance: str,
    fixed: Mapping[StepIndex, StepAnswer],
    config: GenerationConfig,
    backend: CompletionBackend,
) -> list[ChartResult]:
    """Pin validated answers for steps 1..j and resume the search at j+1.

    Pinned steps contribute no logprob. The pinned prefix must be exactly
    steps 1..j; each answer is revalidated through its own serialized form,
    and any violation surfaces as InvalidEditedAnswer.
    """
    pinned_steps = sorted(fixed)
    expected = [StepIndex(i) for i in range(1, len(pinned_steps) + 1)]
    if pinned_steps != expected:
        raise InvalidEditedAnswerError(
            f"pinned steps must form a prefix 1..j, got {[int(s) for s in pinned_steps]}"
        )

    prefix: dict[StepIndex, StepAnswer] = {}
    for step in pinned_steps:
        try:
            answer = parse_step_answer(
                step, serialize_step_answer(fixed[step]), table
            )
            validate_answer_in_chain(step, answer, prefix, table)
        except ChartPipeError as exc:
            raise InvalidEditedAnswerError(
                f"step {int(step)} ({step.title}): {exc}"
            ) from exc
        prefix[step] = answer

    remaining = [StepIndex(i) for i in range(len(pinned_steps) + 1, 7)]
    chains = _search(
        [Chain(answers=prefix)], remaining, table, utterance, config, backend
    )
    return _finalize(chains, table, config.k)
