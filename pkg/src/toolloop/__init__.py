"""Runtime for delimiter-based tool-augmented text generation.

A generator emits canonical sequence text; the driver intercepts tool calls
at the ``|result`` delimiter, dispatches them to a tool registry, splices the
results back, and the self-play pipeline grows a tool-use training set from
the trajectories whose outputs match their targets.
"""

from .datasets import (
    SyntheticArithmeticSpec,
    TaskExample,
    TaskSetFile,
    ToolUseRecord,
    build_corpus_from_contexts,
    generate_synthetic,
    load_corpus,
    load_task_set,
    load_tool_use_set,
    save_corpus,
    save_task_set,
    save_tool_use_set,
)
from .evaluation import EvalConfig, EvalReport, emit_report, evaluate
from .generators import (
    ExternalGenerator,
    GenerateRequest,
    GenerateResponse,
    Generator,
    SamplingMode,
    SamplingSpec,
    ScriptedGenerator,
    StopReason,
    TrainableGenerator,
    conformance_check,
)
from .protocol import (
    DriveFailure,
    DriveResult,
    Segment,
    SegmentKind,
    StopEvent,
    StopKind,
    ToolAugmentedSequence,
    drive_generation,
    make_task_input,
    parse_sequence,
    render_sequence,
)
from .selfplay import (
    MatchSpec,
    RoundReport,
    SelfPlayConfig,
    audit_tool_use_set,
    match,
    normalize_answer,
    run_pipeline,
    run_round,
)
from .tools import (
    Bm25Index,
    Bm25Params,
    Bm25SearchTool,
    FormulaTool,
    FunctionTool,
    ToolRegistry,
    WebSearchTool,
    build_index,
    check_validity,
)

__version__ = "0.1.0"
