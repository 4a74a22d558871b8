"""Iterative self-play: refit the generator on the tool-use set, sample
tool-use trajectories for every task, keep the ones whose output matches the
target, and grow the set for the next round.

The match predicate is configurable: numeric tolerance for math-style
targets, normalized exact match for text answers. Accepted records store the
generated output (not the gold target). All sampling seeds are derived from
(base seed, round, example id, draw index), so runs are bit-reproducible and
crash-resumable from the last persisted round.
"""

from __future__ import annotations

import json
import re
import string
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from .datasets import (
    SELF_PLAY,
    TaskExample,
    TaskSetFile,
    ToolUseRecord,
    load_tool_use_set,
    save_tool_use_set,
)
from .errors import ConfigError, PersistenceError, ToolFailure, UnknownTool
from .generators.base import Generator, SamplingSpec, derive_seed
from .protocol import DEFAULT_BUDGET, DriveResult, drive_generation
from .tools.base import ToolRegistry

NUMERIC = "numeric"
TEXT = "text"

_ARTICLES = ("a", "an", "the")
_PUNCT_TABLE = str.maketrans("", "", string.punctuation)
_WS_RE = re.compile(r"\s+")


@dataclass(frozen=True)
class MatchSpec:
    """Acceptance predicate comparing a generated output to the target."""

    kind: str = NUMERIC
    abs_tol: float = 1e-2
    rel_tol: float = 0.005

    def __post_init__(self):
        if self.kind not in (NUMERIC, TEXT):
            raise ConfigError(f"match kind must be {NUMERIC!r} or {TEXT!r}")
        if self.abs_tol < 0 or self.rel_tol < 0:
            raise ConfigError("tolerances must be >= 0")


def normalize_answer(text: str) -> str:
    """Lowercase, drop punctuation, collapse whitespace, strip leading
    articles."""
    words = _WS_RE.sub(" ", text.lower().translate(_PUNCT_TABLE)).strip().split(" ")
    while words and words[0] in _ARTICLES:
        words = words[1:]
    return " ".join(words)


def match(candidate: str, target: str, spec: MatchSpec) -> bool:
    if spec.kind == NUMERIC:
        try:
            a = float(candidate.strip())
            b = float(target.strip())
        except ValueError:
            return False
        return abs(a - b) <= max(spec.abs_tol, spec.rel_tol * abs(b))
    return normalize_answer(candidate) == normalize_answer(target)


@dataclass(frozen=True)
class SelfPlayConfig:
    rounds: int = 3
    samples_per_example: int = 600
    match_threshold: MatchSpec = field(default_factory=MatchSpec)
    sampling: SamplingSpec = field(default_factory=SamplingSpec)
    max_accepts_per_example: int = 4
    dedup: bool = True
    task_label: str = "question"
    budget: int = DEFAULT_BUDGET
    max_hops: int = 1
    jobs: int = 1

    def __post_init__(self):
        if self.rounds < 1:
            raise ConfigError("rounds must be >= 1")
        if self.samples_per_example < 1:
            raise ConfigError("samples_per_example must be >= 1")
        if self.max_accepts_per_example < 1:
            raise ConfigError("max_accepts_per_example must be >= 1")
        if self.jobs < 1:
            raise ConfigError("jobs must be >= 1")


@dataclass
class RoundReport:
    round: int
    examples: int
    samples_drawn: int
    matched: int
    added: int
    dataset_size: int
    acceptance_rate: float
    per_example: dict[str, int]
    failures: dict[str, int]

    def to_dict(self) -> dict:
        return {
            "round": self.round,
            "examples": self.examples,
            "samples_drawn": self.samples_drawn,
            "matched": self.matched,
            "added": self.added,
            "dataset_size": self.dataset_size,
            "acceptance_rate": self.acceptance_rate,
            "per_example": self.per_example,
            "failures": self.failures,
        }

    @classmethod
    def from_dict(cls, obj: dict) -> "RoundReport":
        return cls(**obj)


def _record_key(record: ToolUseRecord) -> tuple:
    return (record.input, record.tool_label, record.tool_input, record.tool_output, record.output)


def _sample_example(
    gen: Generator,
    registry: ToolRegistry,
    example: TaskExample,
    cfg: SelfPlayConfig,
    round_index: int,
) -> tuple[list[ToolUseRecord], int, dict[str, int]]:
    accepted: list[ToolUseRecord] = []
    failures: dict[str, int] = {}
    drawn = 0
    for n in range(cfg.samples_per_example):
        drawn += 1
        seed = derive_seed("selfplay", cfg.sampling.seed, round_index, example.id, n)
        result: DriveResult = drive_generation(
            gen,
            registry,
            example.input,
            sampling=cfg.sampling.with_seed(seed),
            task_label=cfg.task_label,
            budget=cfg.budget,
            max_hops=cfg.max_hops,
        )
        if result.ok and len(result.sequence.hops) == 1:
            output = result.sequence.task_output.body
            if match(output, example.target, cfg.match_threshold):
                call, tool_result = result.sequence.hops[0]
                accepted.append(
                    ToolUseRecord(
                        id=example.id,
                        input=example.input,
                        tool_label=call.label,
                        tool_input=call.body,
                        tool_output=tool_result.body,
                        output=output,
                        round=round_index,
                        provenance=SELF_PLAY,
                    )
                )
                if len(accepted) >= cfg.max_accepts_per_example:
                    break
                continue
            failures["wrong_output"] = failures.get("wrong_output", 0) + 1
        else:
            bucket = result.failure.value if result.failure else "wrong_output"
            failures[bucket] = failures.get(bucket, 0) + 1
    return accepted, drawn, failures


def run_round(
    gen: Generator,
    registry: ToolRegistry,
    task_set: TaskSetFile,
    tool_use_set: list[ToolUseRecord],
    cfg: SelfPlayConfig,
    round_index: int = 1,
) -> tuple[list[ToolUseRecord], RoundReport]:
    """One self-play round: update on the current set, sample every example,
    filter against targets, return the grown set and a report."""
    if not tool_use_set:
        raise ConfigError("tool-use set is empty; a bootstrap set is required")
    if gen.supports_update:
        gen.update(tool_use_set)

    examples = task_set.records

    def work(example: TaskExample):
        return _sample_example(gen, registry, example, cfg, round_index)

    if cfg.jobs > 1:
        with ThreadPoolExecutor(max_workers=cfg.jobs) as pool:
            outcomes = list(pool.map(work, examples))
    else:
        outcomes = [work(example) for example in examples]

    new_set = list(tool_use_set)
    seen = {_record_key(r) for r in new_set} if cfg.dedup else None
    matched = 0
    drawn = 0
    added = 0
    per_example: dict[str, int] = {}
    failures: dict[str, int] = {}
    for example, (accepted, sample_count, example_failures) in zip(examples, outcomes):
        drawn += sample_count
        matched += len(accepted)
        per_example[example.id] = len(accepted)
        for bucket, count in example_failures.items():
            failures[bucket] = failures.get(bucket, 0) + count
        for record in accepted:
            if seen is not None:
                key = _record_key(record)
                if key in seen:
                    continue
                seen.add(key)
            new_set.append(record)
            added += 1

    report = RoundReport(
        round=round_index,
        examples=len(examples),
        samples_drawn=drawn,
        matched=matched,
        added=added,
        dataset_size=len(new_set),
        acceptance_rate=matched / drawn if drawn else 0.0,
        per_example=per_example,
        failures=failures,
    )
    return new_set, report


def _round_paths(out_dir: Path, round_index: int) -> tuple[Path, Path]:
    return (
        out_dir / f"d_round_{round_index}.jsonl",
        out_dir / f"report_round_{round_index}.json",
    )


def run_pipeline(
    gen: Generator,
    registry: ToolRegistry,
    task_set: TaskSetFile,
    bootstrap: list[ToolUseRecord],
    cfg: SelfPlayConfig,
    out_dir: str | Path,
    resume: bool = True,
) -> tuple[list[ToolUseRecord], list[RoundReport]]:
    """Chain cfg.rounds rounds, persisting the tool-use set and report after
    each; a rerun resumes from the last fully persisted round."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    tool_use_set = list(bootstrap)
    reports: list[RoundReport] = []
    start = 1
    if resume:
        for round_index in range(1, cfg.rounds + 1):
            d_path, report_path = _round_paths(out, round_index)
            if not (d_path.exists() and report_path.exists()):
                break
            try:
                tool_use_set = load_tool_use_set(d_path)
                reports.append(RoundReport.from_dict(json.loads(report_path.read_text(encoding="utf-8"))))
            except Exception as exc:
                raise PersistenceError(f"cannot resume from round {round_index}: {exc}") from exc
            start = round_index + 1

    for round_index in range(start, cfg.rounds + 1):
        tool_use_set, report = run_round(gen, registry, task_set, tool_use_set, cfg, round_index)
        d_path, report_path = _round_paths(out, round_index)
        save_tool_use_set(d_path, tool_use_set)
        report_path.write_text(json.dumps(report.to_dict(), ensure_ascii=False) + "\n", encoding="utf-8")
        reports.append(report)

    (out / "reports.jsonl").write_text(
        "".join(json.dumps(r.to_dict(), ensure_ascii=False) + "\n" for r in reports),
        encoding="utf-8",
    )
    (out / "summary.txt").write_text(_summary(reports), encoding="utf-8")
    return tool_use_set, reports


def _summary(reports: list[RoundReport]) -> str:
    lines = ["round  examples  drawn  matched  added  dataset  acceptance"]
    for r in reports:
        lines.append(
            f"{r.round:>5}  {r.examples:>8}  {r.samples_drawn:>5}  {r.matched:>7}"
            f"  {r.added:>5}  {r.dataset_size:>7}  {r.acceptance_rate:>10.4f}"
        )
    return "\n".join(lines) + "\n"


@dataclass
class AuditReport:
    checked: int
    match_failures: list[str]
    replay_failures: list[str]

    @property
    def ok(self) -> bool:
        return not self.match_failures and not self.replay_failures


def audit_tool_use_set(
    records: list[ToolUseRecord],
    task_set: TaskSetFile,
    registry: ToolRegistry,
    spec: MatchSpec,
) -> AuditReport:
    """Re-verify every self-play record: its output still matches its task
    target, and replaying deterministic tools reproduces its tool output."""
    targets = {example.id: example.target for example in task_set.records}
    match_failures: list[str] = []
    replay_failures: list[str] = []
    checked = 0
    for record in records:
        if record.provenance != SELF_PLAY:
            continue
        checked += 1
        target = targets.get(record.id)
        if target is None or not match(record.output, target, spec):
            match_failures.append(record.id)
        try:
            tool = registry.resolve(record.tool_label)
        except UnknownTool:
            replay_failures.append(record.id)
            continue
        if not tool.descriptor.deterministic:
            continue
        try:
            replayed = registry.invoke(record.tool_label, record.tool_input)
        except ToolFailure as exc:
            replayed = f"ERROR: {exc}"
        if replayed != record.tool_output:
            replay_failures.append(record.id)
    return AuditReport(checked, match_failures, replay_failures)
