"""Evaluation harness: beam-decoded inference over a task set, accuracy under
a match spec, failure taxonomy, and CSV emission for round-vs-accuracy curves.

Baseline mode (tool_enabled=False) drives generation against an empty tool
registry, so any attempted tool call fails and counts against the model;
this is the non-augmented comparison point.
"""

from __future__ import annotations

import csv
import io
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from .datasets import TaskSetFile
from .errors import ConfigError
from .generators.base import Generator, SamplingMode, SamplingSpec
from .protocol import DEFAULT_BUDGET, DriveFailure, drive_generation
from .selfplay import MatchSpec, match
from .tools.base import ToolRegistry

WRONG_OUTPUT = "WrongOutput"
UNKNOWN_TOOL = "UnknownTool"
TOOL_ERROR = "ToolError"
BUDGET_EXHAUSTED = "BudgetExhausted"
GENERATOR_ERROR = "GeneratorError"

_FAILURE_BUCKETS = {
    DriveFailure.UNKNOWN_TOOL: UNKNOWN_TOOL,
    DriveFailure.TOOL_ERROR: TOOL_ERROR,
    DriveFailure.BUDGET_EXHAUSTED: BUDGET_EXHAUSTED,
    DriveFailure.GENERATOR_ERROR: GENERATOR_ERROR,
    DriveFailure.HOP_LIMIT_EXCEEDED: GENERATOR_ERROR,
}


@dataclass(frozen=True)
class EvalConfig:
    beams: int = 4
    match: MatchSpec = field(default_factory=MatchSpec)
    max_examples: int | None = None
    tool_enabled: bool = True
    task_label: str = "question"
    budget: int = DEFAULT_BUDGET
    max_hops: int = 1
    jobs: int = 1

    def __post_init__(self):
        if self.beams < 1:
            raise ConfigError("beams must be >= 1")


@dataclass
class ExampleVerdict:
    id: str
    accepted: bool
    bucket: str  # "Accepted" or a failure taxonomy bucket
    output: str
    target: str

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "accepted": self.accepted,
            "bucket": self.bucket,
            "output": self.output,
            "target": self.target,
        }


@dataclass
class EvalReport:
    accuracy: float
    n: int
    accepted: int
    verdicts: list[ExampleVerdict]
    failures: dict[str, int]

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "n": self.n,
            "accepted": self.accepted,
            "failures": self.failures,
        }


def evaluate(
    gen: Generator,
    registry: ToolRegistry,
    task_set: TaskSetFile,
    cfg: EvalConfig = EvalConfig(),
) -> EvalReport:
    examples = task_set.records
    if not examples:
        raise ConfigError("task set is empty")
    if cfg.max_examples is not None:
        examples = examples[: cfg.max_examples]
    if cfg.tool_enabled:
        effective_registry = registry
    else:
        effective_registry = ToolRegistry()  # empty: every tool call fails
    mode = SamplingMode.BEAM if gen.supports_beam else SamplingMode.GREEDY
    sampling = SamplingSpec(mode=mode, beam_width=cfg.beams)

    def judge(example) -> ExampleVerdict:
        result = drive_generation(
            gen,
            effective_registry,
            example.input,
            sampling=sampling,
            task_label=cfg.task_label,
            budget=cfg.budget,
            max_hops=cfg.max_hops,
        )
        output = result.sequence.task_output.body if result.sequence.task_output else ""
        if result.sequence.complete and result.failure is None:
            if match(output, example.target, cfg.match):
                return ExampleVerdict(example.id, True, "Accepted", output, example.target)
            bucket = TOOL_ERROR if result.tool_errors else WRONG_OUTPUT
            return ExampleVerdict(example.id, False, bucket, output, example.target)
        bucket = _FAILURE_BUCKETS.get(result.failure, GENERATOR_ERROR)
        return ExampleVerdict(example.id, False, bucket, output, example.target)

    if cfg.jobs > 1:
        with ThreadPoolExecutor(max_workers=cfg.jobs) as pool:
            verdicts = list(pool.map(judge, examples))
    else:
        verdicts = [judge(example) for example in examples]

    accepted = sum(1 for v in verdicts if v.accepted)
    failures: dict[str, int] = {}
    for verdict in verdicts:
        if not verdict.accepted:
            failures[verdict.bucket] = failures.get(verdict.bucket, 0) + 1
    return EvalReport(
        accuracy=accepted / len(verdicts),
        n=len(verdicts),
        accepted=accepted,
        verdicts=verdicts,
        failures=failures,
    )


def save_eval_report(path: str | Path, report: EvalReport) -> None:
    """Per-example verdicts as JSONL, preceded by a one-line aggregate."""
    lines = [json.dumps(report.to_dict(), ensure_ascii=False)]
    lines += [json.dumps(v.to_dict(), ensure_ascii=False) for v in report.verdicts]
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


CSV_COLUMNS = ("round", "accuracy", "n", "acceptance_rate")


def emit_report(
    reports: list[tuple[int, EvalReport]],
    acceptance_rates: dict[int, float] | None = None,
) -> tuple[str, str]:
    """Render (CSV text, human summary) for a rounds-vs-accuracy curve.

    Rows are sorted by round; acceptance_rates maps a round to the self-play
    acceptance rate of that round (0.0 when not applicable, e.g. round 0).
    """
    rates = acceptance_rates or {}
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(CSV_COLUMNS)
    summary_lines = []
    for round_index, report in sorted(reports, key=lambda pair: pair[0]):
        rate = rates.get(round_index, 0.0)
        writer.writerow([round_index, repr(report.accuracy), report.n, repr(rate)])
        summary_lines.append(
            f"round {round_index}: accuracy {report.accuracy:.4f}"
            f" ({report.accepted}/{report.n}), acceptance {rate:.4f}"
        )
    return buffer.getvalue(), "\n".join(summary_lines) + ("\n" if summary_lines else "")


def parse_report_csv(text: str) -> list[dict]:
    rows = []
    reader = csv.DictReader(io.StringIO(text))
    for row in reader:
        rows.append(
            {
                "round": int(row["round"]),
                "accuracy": float(row["accuracy"]),
                "n": int(row["n"]),
                "acceptance_rate": float(row["acceptance_rate"]),
            }
        )
    return rows
