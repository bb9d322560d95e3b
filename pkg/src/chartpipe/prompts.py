"""Prompt assembly for the six inference steps.

Every backend sees the same deterministic layout: the step's task
instruction, the table snippet (column names and types plus the top two
rows), the utterance on a single "Utterance:" line, any prior answers
labeled by step, and a final "<step title>:" cue line. The scripted
backend recovers its (step, utterance) key from the utterance line and
the cue line, so layout changes must bump PROMPT_VERSION and keep
parse_prompt_key in step.
"""

from __future__ import annotations

from typing import Mapping

from .dsl import StepAnswer, StepIndex, serialize_step_answer
from .errors import ScriptMissError
from .tabular import DataTable, prompt_snippet

PROMPT_VERSION = "1"

STEP_INSTRUCTIONS: dict[StepIndex, str] = {
    StepIndex.SELECT_COLUMNS: (
        "Select the table columns needed to answer the utterance. "
        "Answer with 1 to 3 column names separated by commas."
    ),
    StepIndex.FILTER_ROWS: (
        "Decide whether rows must be filtered. Answer with conditions like "
        "\"column >= value\" joined by 'and'/'or', or with 'none'."
    ),
    StepIndex.ADD_AGGREGATIONS: (
        "Decide which aggregations to apply to the selected columns. Answer "
        "with comma-separated '<function> <column>' terms using count, "
        "average, sum, max, or min, or with 'none'."
    ),
    StepIndex.CHOOSE_MARK: (
        "Choose the chart mark. Answer with exactly one of: bar, pie, line, "
        "scatter."
    ),
    StepIndex.DETERMINE_ENCODING: (
        "Map fields to visual channels. Answer as 'x: <field>, y: <field>, "
        "color: <column or none>'; an aggregated field is written like "
        "'average(column)'."
    ),
    StepIndex.ADD_SORT: (
        "Decide whether an axis is sorted. Answer '<axis> <order>' with axis "
        "x or y and order asc or desc, or 'none'."
    ),
}

_TITLE_TO_STEP = {step.title: step for step in StepIndex}


def estimate_tokens(text: str) -> int:
    """Whitespace-split token estimate used for the prompt length limit."""
    return len(text.split())


def assemble_prompt(
    table: DataTable,
    utterance: str,
    prior: Mapping[StepIndex, StepAnswer],
    step: StepIndex,
) -> str:
    """Deterministic prompt for one step given the answers so far."""
    lines = [
        f"Task: {STEP_INSTRUCTIONS[step]}",
        "",
        f"Table: {table.name}",
        prompt_snippet(table),
        "",
        f"Utterance: {' '.join(utterance.split())}",
    ]
    if prior:
        lines.append("")
        lines.append("Answers so far:")
        for prior_step in sorted(prior):
            answer = serialize_step_answer(prior[prior_step])
            lines.append(f"{int(prior_step)} {prior_step.title}: {answer}")
    lines.append("")
    lines.append(f"{step.title}:")
    return "\n".join(lines)


def parse_prompt_key(prompt: str) -> tuple[StepIndex, str]:
    """Recover (step, utterance) from an assembled prompt.

    Raises ScriptMissError when the prompt does not follow the assembled
    layout; the scripted backend has no key to look up in that case.
    """
    utterance: str | None = None
    for line in prompt.splitlines():
        if line.startswith("Utterance: "):
            utterance = line[len("Utterance: ") :]
            break
    lines = prompt.rstrip("\n").splitlines()
    step: StepIndex | None = None
    if lines and lines[-1].endswith(":"):
        step = _TITLE_TO_STEP.get(lines[-1][:-1])
    if utterance is None or step is None:
        raise ScriptMissError(
            f"prompt does not follow the version {PROMPT_VERSION} layout"
        )
    return step, utterance
