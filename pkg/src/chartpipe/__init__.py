"""chartpipe: natural-language questions over CSV tables, answered as charts.

The pipeline decomposes a request into six template-constrained inference
steps (select columns, filter rows, add aggregations, choose mark,
determine encoding, add sort), beam-searches candidate answers from a
pluggable completion backend, and compiles the winners to Vega-Lite.
"""

from .backend import (
    CompletionRequest,
    HttpBackend,
    ScoredText,
    ScriptedBackend,
    load_script,
)
from .compiler import (
    ChartType,
    assemble_spec,
    compile_vegalite,
    extract_steps,
    resolve_chart_type,
    validate_vegalite,
)
from .dsl import (
    FieldRef,
    StepIndex,
    VisSpec,
    parse_step_answer,
    serialize_step_answer,
    to_eval_sequence,
    validate_spec,
)
from .errors import ChartPipeError
from .evaluation import (
    EvalReport,
    EvalTriplet,
    bleu,
    consistency_key,
    consistent,
    dataset_stats,
    evaluate_run,
    load_triplets,
    rouge_l,
)
from .filters import eval_filter, parse_filter, serialize_filter
from .pipeline import (
    ChartResult,
    GenerationConfig,
    generate_topk,
    regenerate_from_step,
)
from .tabular import ColumnType, DataTable, load_csv, load_csv_path

__version__ = "0.1.0"

__all__ = [
    "ChartPipeError",
    "ChartResult",
    "ChartType",
    "ColumnType",
    "CompletionRequest",
    "DataTable",
    "EvalReport",
    "EvalTriplet",
    "FieldRef",
    "GenerationConfig",
    "HttpBackend",
    "ScoredText",
    "ScriptedBackend",
    "StepIndex",
    "VisSpec",
    "assemble_spec",
    "bleu",
    "compile_vegalite",
    "consistency_key",
    "consistent",
    "dataset_stats",
    "eval_filter",
    "evaluate_run",
    "extract_steps",
    "generate_topk",
    "load_csv",
    "load_csv_path",
    "load_script",
    "load_triplets",
    "parse_filter",
    "parse_step_answer",
    "regenerate_from_step",
    "resolve_chart_type",
    "rouge_l",
    "serialize_filter",
    "serialize_step_answer",
    "to_eval_sequence",
    "validate_spec",
    "validate_vegalite",
    "__version__",
]
