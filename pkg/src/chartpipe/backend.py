"""Completion backends: the shared contract, a wire client, and a scripted
playback double.

A backend answers a CompletionRequest with candidates sorted by logprob
descending, every logprob finite and <= 0, never more than requested.
The wire client speaks a minimal generic JSON protocol; the scripted
backend replays fixture answers keyed on (step, utterance) and fails
loudly on a missing key instead of falling back.
"""

from __future__ import annotations

import json
import math
import os
from dataclasses import dataclass
from pathlib import Path
from typing import Iterable, Mapping, Protocol, Sequence

import httpx

from .dsl import StepIndex
from .errors import (
    BackendUnavailableError,
    MalformedResponseError,
    PromptTooLongError,
    ScriptMissError,
)
from .prompts import estimate_tokens, parse_prompt_key

DEFAULT_MAX_PROMPT_TOKENS = 580
DEFAULT_MAX_NEW_TOKENS = 64

URL_ENV_VAR = "CHARTPIPE_BACKEND_URL"
TOKEN_ENV_VAR = "CHARTPIPE_BACKEND_TOKEN"


@dataclass(frozen=True)
class CompletionRequest:
    prompt: str
    n_candidates: int
    max_new_tokens: int = DEFAULT_MAX_NEW_TOKENS


@dataclass(frozen=True)
class ScoredText:
    text: str
    logprob: float


class CompletionBackend(Protocol):
    def complete(self, request: CompletionRequest) -> list[ScoredText]: ...


def _check_request(request: CompletionRequest, max_prompt_tokens: int) -> None:
    if request.n_candidates < 1:
        raise ValueError("n_candidates must be at least 1")
    n_tokens = estimate_tokens(request.prompt)
    if n_tokens > max_prompt_tokens:
        raise PromptTooLongError(
            f"prompt is {n_tokens} tokens, limit is {max_prompt_tokens}"
        )


def _check_candidates(candidates: Iterable[ScoredText]) -> list[ScoredText]:
    """Sort descending and enforce finite, non-positive logprobs."""
    out = sorted(candidates, key=lambda c: c.logprob, reverse=True)
    for candidate in out:
        if not math.isfinite(candidate.logprob) or candidate.logprob > 0:
            raise MalformedResponseError(
                f"logprob must be finite and <= 0, got {candidate.logprob!r}"
            )
    return out


class HttpBackend:
    """Wire client: POST {"prompt", "n", "max_new_tokens"} to a completion URL.

    The response body must be {"candidates": [{"text", "logprob"}, ...]}.
    Network and non-200 failures surface as BackendUnavailable; a body that
    does not match the shape surfaces as MalformedResponse.
    """

    def __init__(
        self,
        url: str,
        token: str | None = None,
        timeout: float = 30.0,
        max_prompt_tokens: int = DEFAULT_MAX_PROMPT_TOKENS,
        client: httpx.Client | None = None,
    ) -> None:
        self._url = url
        self._token = token
        self._max_prompt_tokens = max_prompt_tokens
        self._client = client if client is not None else httpx.Client(timeout=timeout)

    @classmethod
    def from_env(cls, **kwargs) -> "HttpBackend":
        url = os.environ.get(URL_ENV_VAR)
        if not url:
            raise BackendUnavailableError(f"{URL_ENV_VAR} is not set")
        return cls(url=url, token=os.environ.get(TOKEN_ENV_VAR), **kwargs)

    def complete(self, request: CompletionRequest) -> list[ScoredText]:
        _check_request(request, self._max_prompt_tokens)
        headers = {}
        if self._token:
            headers["Authorization"] = f"Bearer {self._token}"
        body = {
            "prompt": request.prompt,
            "n": request.n_candidates,
            "max_new_tokens": request.max_new_tokens,
        }
        try:
            response = self._client.post(self._url, json=body, headers=headers)
        except httpx.HTTPError as exc:
            raise BackendUnavailableError(f"backend request failed: {exc}") from exc
        if response.status_code != 200:
            raise BackendUnavailableError(
                f"backend returned HTTP {response.status_code}"
            )
        return self._parse_body(response, request.n_candidates)

    @staticmethod
    def _parse_body(response: httpx.Response, n_candidates: int) -> list[ScoredText]:
        try:
            payload = response.json()
        except ValueError as exc:
            raise MalformedResponseError("backend response is not JSON") from exc
        candidates = payload.get("candidates") if isinstance(payload, dict) else None
        if not isinstance(candidates, list) or not candidates:
            raise MalformedResponseError("response lacks a non-empty candidates list")
        parsed = []
        for item in candidates:
            if (
                not isinstance(item, dict)
                or not isinstance(item.get("text"), str)
                or not isinstance(item.get("logprob"), (int, float))
                or isinstance(item.get("logprob"), bool)
            ):
                raise MalformedResponseError(f"bad candidate entry: {item!r}")
            parsed.append(ScoredText(text=item["text"], logprob=float(item["logprob"])))
        return _check_candidates(parsed)[:n_candidates]


ScriptKey = tuple[StepIndex, str]


class ScriptedBackend:
    """Deterministic playback keyed on (step, utterance) recovered from the
    prompt. A missing key is a hard ScriptMiss, never a silent fallback."""

    def __init__(
        self,
        script: Mapping[ScriptKey, Sequence[ScoredText]],
        max_prompt_tokens: int = DEFAULT_MAX_PROMPT_TOKENS,
    ) -> None:
        self._script = {
            key: tuple(_check_candidates(candidates))
            for key, candidates in script.items()
        }
        self._max_prompt_tokens = max_prompt_tokens

    def complete(self, request: CompletionRequest) -> list[ScoredText]:
        _check_request(request, self._max_prompt_tokens)
        step, utterance = parse_prompt_key(request.prompt)
        candidates = self._script.get((step, utterance))
        if candidates is None:
            raise ScriptMissError(
                f"no scripted answers for step {int(step)} and utterance "
                f"{utterance!r}"
            )
        return list(candidates[: request.n_candidates])


def load_script(source: str | Path | dict) -> dict[ScriptKey, tuple[ScoredText, ...]]:
    """Read a script from its JSON form.

    Layout: {"entries": [{"step": 1..6, "utterance": str,
    "candidates": [{"text": str, "logprob": float}, ...]}, ...]}.
    """
    if isinstance(source, (str, Path)):
        payload = json.loads(Path(source).read_text(encoding="utf-8"))
    else:
        payload = source
    entries = payload.get("entries") if isinstance(payload, dict) else None
    if not isinstance(entries, list):
        raise MalformedResponseError("script lacks an entries list")
    script: dict[ScriptKey, tuple[ScoredText, ...]] = {}
    for entry in entries:
        try:
            step = StepIndex(entry["step"])
            utterance = entry["utterance"]
            candidates = tuple(
                ScoredText(text=c["text"], logprob=float(c["logprob"]))
                for c in entry["candidates"]
            )
        except (KeyError, TypeError, ValueError) as exc:
            raise MalformedResponseError(f"bad script entry: {entry!r}") from exc
        script[(step, utterance)] = tuple(_check_candidates(candidates))
    return script


def dump_script(script: Mapping[ScriptKey, Sequence[ScoredText]]) -> dict:
    """Inverse of load_script, for writing fixture scripts to disk."""
    return {
        "entries": [
            {
                "step": int(step),
                "utterance": utterance,
                "candidates": [
                    {"text": c.text, "logprob": c.logprob} for c in candidates
                ],
            }
            for (step, utterance), candidates in script.items()
        ]
    }
