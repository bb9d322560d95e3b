"""Command line entry points: generate, eval, stats, serve.

Every flag has a config-file equivalent (same name, snake_case) and an
environment fallback (CHARTPIPE_<NAME>); an explicit flag wins over the
file, the file over the environment. Runtime failures print a machine-
readable {"error", "message"} line on stderr and exit 1; usage errors
exit 2 via argparse.
"""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path
from typing import Callable, Mapping

from .backend import CompletionBackend, HttpBackend, ScriptedBackend, load_script
from .compiler import compile_vegalite, steps_transcript
from .config import as_bool, as_int, load_config_file, resolve_setting
from .errors import ChartPipeError
from .evaluation import (
    dataset_stats,
    evaluate_run,
    format_report,
    load_predictions,
    load_triplets,
    slots_from_spec,
)
from .pipeline import GenerationConfig, generate_topk
from .tabular import load_csv_path


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="chartpipe",
        description="Turn natural-language questions over CSV tables into "
        "Vega-Lite charts.",
    )
    parser.add_argument("--config", help="key-value settings file")
    sub = parser.add_subparsers(dest="command", required=True)

    generate = sub.add_parser("generate", help="one-shot chart generation")
    generate.add_argument("--table", help="CSV file to chart")
    generate.add_argument("--utterance", help="natural-language request")
    generate.add_argument("--k", type=int, help="number of charts (default 3)")
    generate.add_argument("--beam-width", type=int, help="beam width (default 4)")
    generate.add_argument("--backend", choices=("http", "scripted"))
    generate.add_argument("--script", help="scripted-backend answers (JSON)")
    generate.add_argument("--backend-url", help="completion endpoint URL")
    generate.add_argument("--out", help="output directory (default .)")
    generate.add_argument(
        "--data-ref", help="reference table data by URL instead of inlining"
    )

    eval_cmd = sub.add_parser("eval", help="score predictions against a dataset")
    eval_cmd.add_argument("--dataset", help="triplets JSONL")
    eval_cmd.add_argument("--predictions", help="predictions JSONL")
    eval_cmd.add_argument("--report", help="write the full report JSON here")
    eval_cmd.add_argument(
        "--strict-filter-order",
        action="store_const",
        const=True,
        help="treat and/or operand order as significant",
    )

    stats = sub.add_parser("stats", help="dataset explicitness statistics")
    stats.add_argument("--dataset", help="triplets JSONL")
    stats.add_argument("--report", help="write the full statistics JSON here")

    serve = sub.add_parser("serve", help="run the HTTP service")
    serve.add_argument("--host")
    serve.add_argument("--port", type=int)
    serve.add_argument("--persist-dir", help="session snapshot directory")
    serve.add_argument("--cors-origin", help="allowed browser origin")
    serve.add_argument("--backend", choices=("http", "scripted"))
    serve.add_argument("--script", help="scripted-backend answers (JSON)")
    serve.add_argument("--backend-url", help="completion endpoint URL")
    serve.add_argument("--k", type=int)
    serve.add_argument("--beam-width", type=int)

    return parser


class _Settings:
    """Flag > config file > environment, with casts and required checks."""

    def __init__(
        self,
        args: argparse.Namespace,
        file_values: Mapping[str, str],
        parser: argparse.ArgumentParser,
    ) -> None:
        self._args = args
        self._file = file_values
        self._parser = parser

    def get(self, key: str, cast: Callable | None = None, default=None):
        flag = getattr(self._args, key, None)
        value = resolve_setting(key, flag, self._file)
        if value is None:
            return default
        return cast(value, key) if cast else value

    def require(self, key: str):
        value = self.get(key)
        if value is None:
            self._parser.error(f"missing --{key.replace('_', '-')}")
        return value


def _make_backend(settings: _Settings) -> CompletionBackend:
    script = settings.get("script")
    kind = settings.get("backend", default="scripted" if script else "http")
    if kind == "scripted":
        return ScriptedBackend(load_script(settings.require("script")))
    url = settings.get("backend_url")
    if url:
        return HttpBackend(url=url)
    return HttpBackend.from_env()


def _generation_config(settings: _Settings) -> GenerationConfig:
    return GenerationConfig(
        k=settings.get("k", cast=as_int, default=3),
        beam_width=settings.get("beam_width", cast=as_int, default=4),
    )


def _cmd_generate(settings: _Settings) -> int:
    table_path = settings.require("table")
    utterance = settings.require("utterance")
    table = load_csv_path(table_path)
    backend = _make_backend(settings)
    config = _generation_config(settings)
    data_ref = settings.get("data_ref")

    results = generate_topk(table, utterance, config, backend)

    out_dir = Path(settings.get("out", default="."))
    out_dir.mkdir(parents=True, exist_ok=True)
    for result in results:
        vegalite = result.vegalite
        if data_ref:
            vegalite = compile_vegalite(result.spec, table, data_ref=data_ref)
        path = out_dir / f"rank{result.rank}.vl.json"
        path.write_text(json.dumps(vegalite, indent=2) + "\n", encoding="utf-8")
    transcript = {
        "table": str(table_path),
        "utterance": utterance,
        "results": [
            {
                "rank": r.rank,
                "score": r.score,
                "steps": steps_transcript(r.answers),
                "spec": slots_from_spec(r.spec),
            }
            for r in results
        ],
    }
    (out_dir / "steps.json").write_text(
        json.dumps(transcript, indent=2) + "\n", encoding="utf-8"
    )
    print(f"wrote {len(results)} chart(s) and steps.json to {out_dir}")
    return 0


def _cmd_eval(settings: _Settings) -> int:
    triplets = load_triplets(settings.require("dataset"))
    predictions = load_predictions(settings.require("predictions"))
    strict = settings.get("strict_filter_order", cast=as_bool, default=False)
    report = evaluate_run(triplets, predictions, strict_filter_order=strict)
    report_path = settings.get("report")
    if report_path:
        Path(report_path).write_text(
            json.dumps(report.as_dict(), indent=2) + "\n", encoding="utf-8"
        )
    print(format_report(report))
    return 0


def _cmd_stats(settings: _Settings) -> int:
    triplets = load_triplets(settings.require("dataset"))
    report = dataset_stats(triplets)
    report_path = settings.get("report")
    if report_path:
        Path(report_path).write_text(
            json.dumps(report.as_dict(), indent=2) + "\n", encoding="utf-8"
        )
    lines = [f"examples: {report.n_examples}"]
    width = max(len(name) for name in report.aggregates)
    for name, value in report.aggregates.items():
        lines.append(f"{name.ljust(width)}  {value:.4f}")
    print("\n".join(lines))
    return 0


def _cmd_serve(settings: _Settings) -> int:
    import uvicorn

    from .service import create_app

    script = settings.get("script")
    backend: CompletionBackend | None = None
    if settings.get("backend") == "scripted" or script:
        backend = ScriptedBackend(load_script(settings.require("script")))
    elif settings.get("backend_url"):
        backend = HttpBackend(url=settings.get("backend_url"))

    cors_origin = settings.get("cors_origin")
    app = create_app(
        backend=backend,
        persist_dir=settings.get("persist_dir"),
        cors_origins=[cors_origin] if cors_origin else (),
        generation=_generation_config(settings),
    )
    uvicorn.run(
        app,
        host=settings.get("host", default="127.0.0.1"),
        port=settings.get("port", cast=as_int, default=8000),
    )
    return 0


_COMMANDS = {
    "generate": _cmd_generate,
    "eval": _cmd_eval,
    "stats": _cmd_stats,
    "serve": _cmd_serve,
}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        file_values = load_config_file(args.config) if args.config else {}
        settings = _Settings(args, file_values, parser)
        return _COMMANDS[args.command](settings)
    except (ChartPipeError, OSError, json.JSONDecodeError) as exc:
        print(
            json.dumps({"error": type(exc).__name__, "message": str(exc)}),
            file=sys.stderr,
        )
        return 1


if __name__ == "__main__":
    sys.exit(main())
