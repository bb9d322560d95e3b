"""HTTP service: table upload, sessions, generation, regenerate, config edits.

Sessions live in memory; pass persist_dir for JSON snapshots that survive a
restart. A session is single-writer (per-session lock); distinct sessions
run concurrently. PATCH edits a stored result's spec directly and
recompiles without ever touching the completion backend.
"""

from __future__ import annotations

import json
import logging
import threading
import uuid
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path
from typing import Sequence

from fastapi import Body, FastAPI, HTTPException, UploadFile
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel, Field

from .backend import CompletionBackend, HttpBackend
from .compiler import compile_vegalite, extract_steps, resolve_chart_type
from .dsl import (
    FieldRef,
    StepAnswer,
    StepIndex,
    VisSpec,
    parse_fieldref,
    parse_step_answer,
    serialize_step_answer,
    validate_spec,
)
from .errors import (
    BackendError,
    ChartPipeError,
    InvalidEditedAnswerError,
    NoValidChartError,
)
from .evaluation import slots_from_spec, spec_from_slots
from .filters import parse_filter
from .pipeline import (
    ChartResult,
    GenerationConfig,
    generate_topk,
    regenerate_from_step,
)
from .tabular import DataTable, load_csv

logger = logging.getLogger("chartpipe.service")

PATCH_KEYS = frozenset({"mark", "x", "y", "color", "aggregations", "sort", "filter"})

# Config mode accepts chart-runtime mark names alongside the DSL's.
_MARK_ALIASES = {"point": "scatter", "arc": "pie"}


@dataclass
class Session:
    id: str
    table_id: str
    created_at: str
    utterances: list[str] = field(default_factory=list)
    results: list[ChartResult] = field(default_factory=list)
    lock: threading.Lock = field(default_factory=threading.Lock, repr=False)


class CreateSessionBody(BaseModel):
    table_id: str


class GenerateBody(BaseModel):
    utterance: str
    k: int | None = None


class RegenerateBody(BaseModel):
    result_rank: int
    from_step: int
    answers: dict[str, str] = Field(default_factory=dict)


def _now() -> str:
    return datetime.now(timezone.utc).isoformat()


def _error_detail(exc: Exception) -> dict:
    return {"error": type(exc).__name__, "message": str(exc)}


def _apply_patch(spec: VisSpec, patch: dict, table: DataTable) -> VisSpec:
    unknown = set(patch) - PATCH_KEYS
    if unknown:
        raise ChartPipeError(f"unknown patch keys: {sorted(unknown)}")

    mark, x, y = spec.mark, spec.x, spec.y
    color, filter_expr, sort = spec.color, spec.filter, spec.sort

    if "mark" in patch:
        word = str(patch["mark"]).strip().lower()
        mark = _MARK_ALIASES.get(word, word)
    if "x" in patch:
        x = parse_fieldref(str(patch["x"]), table)
    if "y" in patch:
        y = parse_fieldref(str(patch["y"]), table)
    if "aggregations" in patch:
        aggregations = patch["aggregations"]
        if not isinstance(aggregations, dict) or set(aggregations) - {"x", "y"}:
            raise ChartPipeError(
                "aggregations patch must be an object with only x/y keys"
            )
        if "x" in aggregations:
            word = str(aggregations["x"]).strip().lower()
            x = FieldRef(x.column, None if word == "none" else word)
        if "y" in aggregations:
            word = str(aggregations["y"]).strip().lower()
            y = FieldRef(y.column, None if word == "none" else word)
    if "color" in patch:
        word = str(patch["color"]).strip()
        color = None if word.lower() == "none" else table.resolve_column(word).name
    if "filter" in patch:
        filter_expr = parse_filter(str(patch["filter"]), table)
    if "sort" in patch:
        answer = parse_step_answer(StepIndex.ADD_SORT, str(patch["sort"]), table)
        sort = None if answer.is_none else (answer.axis, answer.order)  # type: ignore[union-attr, arg-type]

    new_spec = VisSpec(mark=mark, x=x, y=y, color=color, filter=filter_expr, sort=sort)
    validate_spec(new_spec, table)
    resolve_chart_type(new_spec, table)
    return new_spec


def _result_payload(result: ChartResult) -> dict:
    return {
        "rank": result.rank,
        "score": result.score,
        "steps": [
            {
                "step": int(step),
                "title": step.title,
                "answer": serialize_step_answer(result.answers[step]),
            }
            for step in sorted(result.answers)
        ],
        "spec": slots_from_spec(result.spec),
        "vegalite": result.vegalite,
    }


def create_app(
    backend: CompletionBackend | None = None,
    persist_dir: str | Path | None = None,
    cors_origins: Sequence[str] = (),
    generation: GenerationConfig = GenerationConfig(),
) -> FastAPI:
    """Build the service; with backend=None the wire backend is created
    from the environment on first use."""
    app = FastAPI(title="chartpipe", version="0.1.0")
    if cors_origins:
        app.add_middleware(
            CORSMiddleware,
            allow_origins=list(cors_origins),
            allow_methods=["*"],
            allow_headers=["*"],
        )

    tables: dict[str, DataTable] = {}
    sessions: dict[str, Session] = {}
    registry_lock = threading.Lock()
    persist = Path(persist_dir) if persist_dir is not None else None
    backend_box: list[CompletionBackend | None] = [backend]

    def _backend() -> CompletionBackend:
        if backend_box[0] is None:
            backend_box[0] = HttpBackend.from_env()
        return backend_box[0]

    # --- persistence ---------------------------------------------------

    def _persist_table(table_id: str, table: DataTable) -> None:
        if persist is None:
            return
        folder = persist / "tables"
        folder.mkdir(parents=True, exist_ok=True)
        snapshot = {"name": table.name, "csv": table.to_csv()}
        (folder / f"{table_id}.json").write_text(
            json.dumps(snapshot), encoding="utf-8"
        )

    def _persist_session(session: Session) -> None:
        if persist is None:
            return
        folder = persist / "sessions"
        folder.mkdir(parents=True, exist_ok=True)
        snapshot = {
            "id": session.id,
            "table_id": session.table_id,
            "created_at": session.created_at,
            "utterances": session.utterances,
            "results": [
                {
                    "rank": r.rank,
                    "score": r.score,
                    "answers": {
                        str(int(step)): serialize_step_answer(answer)
                        for step, answer in r.answers.items()
                    },
                    "spec": slots_from_spec(r.spec),
                    "vegalite": r.vegalite,
                }
                for r in session.results
            ],
        }
        (folder / f"{session.id}.json").write_text(
            json.dumps(snapshot), encoding="utf-8"
        )

    def _restore() -> None:
        if persist is None:
            return
        for path in sorted((persist / "tables").glob("*.json")):
            try:
                snapshot = json.loads(path.read_text(encoding="utf-8"))
                tables[path.stem] = load_csv(
                    snapshot["csv"], name=snapshot["name"]
                )
            except (ChartPipeError, KeyError, ValueError) as exc:
                logger.warning("skipping table snapshot %s: %s", path, exc)
        for path in sorted((persist / "sessions").glob("*.json")):
            try:
                snapshot = json.loads(path.read_text(encoding="utf-8"))
                table = tables[snapshot["table_id"]]
                results = []
                for record in snapshot["results"]:
                    answers: dict[StepIndex, StepAnswer] = {
                        StepIndex(int(number)): parse_step_answer(
                            StepIndex(int(number)), text, table
                        )
                        for number, text in record["answers"].items()
                    }
                    results.append(
                        ChartResult(
                            rank=record["rank"],
                            spec=spec_from_slots(record["spec"], table),
                            vegalite=record["vegalite"],
                            score=record["score"],
                            answers=answers,
                        )
                    )
                sessions[snapshot["id"]] = Session(
                    id=snapshot["id"],
                    table_id=snapshot["table_id"],
                    created_at=snapshot["created_at"],
                    utterances=list(snapshot["utterances"]),
                    results=results,
                )
            except (ChartPipeError, KeyError, ValueError) as exc:
                logger.warning("skipping session snapshot %s: %s", path, exc)

    _restore()

    # --- helpers -------------------------------------------------------

    def _session_or_404(session_id: str) -> Session:
        session = sessions.get(session_id)
        if session is None:
            raise HTTPException(404, detail={"error": "unknown_session"})
        return session

    def _result_or_404(session: Session, rank: int) -> ChartResult:
        for result in session.results:
            if result.rank == rank:
                return result
        raise HTTPException(404, detail={"error": "unknown_result_rank"})

    def _results_response(session: Session) -> dict:
        return {
            "session_id": session.id,
            "table_id": session.table_id,
            "utterance": session.utterances[-1] if session.utterances else None,
            "results": [_result_payload(r) for r in session.results],
        }

    def _run_search(session: Session, runner) -> dict:
        try:
            results = runner()
        except InvalidEditedAnswerError as exc:
            raise HTTPException(409, detail=_error_detail(exc)) from exc
        except NoValidChartError as exc:
            raise HTTPException(
                422,
                detail={
                    "error": "no_valid_chart",
                    "step": int(exc.step),
                    "message": str(exc),
                },
            ) from exc
        except BackendError as exc:
            raise HTTPException(502, detail=_error_detail(exc)) from exc
        session.results = results
        _persist_session(session)
        return _results_response(session)

    # --- endpoints -----------------------------------------------------

    @app.get("/api/health")
    def health() -> dict:
        return {"status": "ok", "sessions": len(sessions), "tables": len(tables)}

    @app.post("/api/tables")
    async def upload_table(file: UploadFile) -> dict:
        raw = await file.read()
        name = Path(file.filename or "table").stem or "table"
        try:
            table = load_csv(raw, name=name)
        except ChartPipeError as exc:
            raise HTTPException(400, detail=_error_detail(exc)) from exc
        table_id = uuid.uuid4().hex[:12]
        with registry_lock:
            tables[table_id] = table
        _persist_table(table_id, table)
        return {
            "table_id": table_id,
            "name": table.name,
            "columns": [
                {"name": c.name, "type": c.type.value} for c in table.columns
            ],
            "n_rows": table.n_rows,
        }

    @app.post("/api/sessions")
    def create_session(body: CreateSessionBody) -> dict:
        if body.table_id not in tables:
            raise HTTPException(404, detail={"error": "unknown_table"})
        session = Session(
            id=uuid.uuid4().hex[:12], table_id=body.table_id, created_at=_now()
        )
        with registry_lock:
            sessions[session.id] = session
        _persist_session(session)
        return {
            "session_id": session.id,
            "table_id": session.table_id,
            "created_at": session.created_at,
        }

    @app.post("/api/sessions/{session_id}/generate")
    def generate(session_id: str, body: GenerateBody) -> dict:
        session = _session_or_404(session_id)
        table = tables[session.table_id]
        config = GenerationConfig(
            k=body.k if body.k is not None else generation.k,
            beam_width=generation.beam_width,
            max_new_tokens=generation.max_new_tokens,
        )
        with session.lock:
            session.utterances.append(body.utterance)
            return _run_search(
                session,
                lambda: generate_topk(table, body.utterance, config, _backend()),
            )

    @app.post("/api/sessions/{session_id}/regenerate")
    def regenerate(session_id: str, body: RegenerateBody) -> dict:
        session = _session_or_404(session_id)
        table = tables[session.table_id]
        with session.lock:
            base = _result_or_404(session, body.result_rank)
            if not 1 <= body.from_step <= 6:
                raise HTTPException(
                    409,
                    detail={
                        "error": "InvalidEditedAnswer",
                        "message": "from_step must be between 1 and 6",
                    },
                )
            fixed: dict[StepIndex, StepAnswer] = {}
            for number in range(1, body.from_step + 1):
                step = StepIndex(number)
                text = body.answers.get(
                    str(number), serialize_step_answer(base.answers[step])
                )
                try:
                    fixed[step] = parse_step_answer(step, text, table)
                except ChartPipeError as exc:
                    raise HTTPException(409, detail=_error_detail(exc)) from exc
            utterance = session.utterances[-1] if session.utterances else ""
            return _run_search(
                session,
                lambda: regenerate_from_step(
                    table, utterance, fixed, generation, _backend()
                ),
            )

    @app.patch("/api/sessions/{session_id}/results/{rank}")
    def update_config(session_id: str, rank: int, patch: dict = Body(...)) -> dict:
        session = _session_or_404(session_id)
        table = tables[session.table_id]
        with session.lock:
            base = _result_or_404(session, rank)
            try:
                new_spec = _apply_patch(base.spec, patch, table)
                vegalite = compile_vegalite(new_spec, table)
            except ChartPipeError as exc:
                raise HTTPException(409, detail=_error_detail(exc)) from exc
            updated = ChartResult(
                rank=base.rank,
                spec=new_spec,
                vegalite=vegalite,
                score=base.score,
                answers=extract_steps(new_spec),
            )
            session.results = [
                updated if r.rank == rank else r for r in session.results
            ]
            _persist_session(session)
            return _result_payload(updated)

    return app
