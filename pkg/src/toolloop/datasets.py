"""Task sets, tool-use sets, corpora: record types, JSONL persistence,
corpus building, and the synthetic arithmetic benchmark.

JSONL schemas (UTF-8, one object per line, stable field order on write):

  task set:     {"id", "input", "target", "context"?, "formula"?}
  tool-use set: {"id", "input", "tool_label", "tool_input", "tool_output",
                 "output", "round", "provenance"}
  corpus:       {"doc_id", "text"}
"""

from __future__ import annotations

import hashlib
import json
import random
from dataclasses import dataclass, field
from pathlib import Path

from .errors import ConfigError, MissingContext, SchemaError
from . import protocol
from .tools.formula import eval_formula, parse_formula, render_value

TASK_KINDS = ("qa", "math", "synthetic")

BOOTSTRAP = "bootstrap"
SELF_PLAY = "selfplay"


@dataclass(frozen=True)
class TaskExample:
    id: str
    input: str
    target: str
    context: str | None = None  # QA oracle context
    formula: str | None = None  # math gold formula


@dataclass(frozen=True)
class ToolUseRecord:
    """One accepted tool-use trajectory: task input, tool call, tool result,
    task output."""

    id: str
    input: str
    tool_label: str
    tool_input: str
    tool_output: str
    output: str
    round: int = 0
    provenance: str = BOOTSTRAP


@dataclass
class TaskSetFile:
    records: list[TaskExample]
    task_kind: str
    flagged: list[tuple[int, str, str]] = field(default_factory=list)  # (line, id, reason)

    def __post_init__(self):
        if self.task_kind not in TASK_KINDS:
            raise ConfigError(f"task_kind must be one of {TASK_KINDS}, got {self.task_kind!r}")


def record_to_sequence(record: ToolUseRecord) -> protocol.ToolAugmentedSequence:
    return protocol.ToolAugmentedSequence(
        task_input=protocol.make_task_input(record.input),
        hops=(
            (
                protocol.Segment(protocol.SegmentKind.TOOL_CALL, record.tool_label, record.tool_input),
                protocol.Segment(protocol.SegmentKind.TOOL_RESULT, protocol.RESULT_LABEL, record.tool_output),
            ),
        ),
        task_output=protocol.Segment(protocol.SegmentKind.TASK_OUTPUT, protocol.OUTPUT_LABEL, record.output),
    )


# --- JSONL primitives ---


def _read_jsonl(path: str | Path) -> list[tuple[int, dict]]:
    rows: list[tuple[int, dict]] = []
    text = Path(path).read_text(encoding="utf-8")
    for line_no, line in enumerate(text.splitlines(), 1):
        if not line.strip():
            continue
        try:
            obj = json.loads(line)
        except json.JSONDecodeError as exc:
            raise SchemaError(f"invalid JSON: {exc.msg}", line_no) from exc
        if not isinstance(obj, dict):
            raise SchemaError("line is not a JSON object", line_no)
        rows.append((line_no, obj))
    return rows


def _write_jsonl(path: str | Path, objects: list[dict]) -> None:
    lines = [json.dumps(obj, ensure_ascii=False) for obj in objects]
    Path(path).write_text("\n".join(lines) + ("\n" if lines else ""), encoding="utf-8")


def _require_str(obj: dict, key: str, line_no: int, allow_empty: bool = False) -> str:
    value = obj.get(key)
    if not isinstance(value, str) or (not allow_empty and value == ""):
        raise SchemaError(f"missing or empty field {key!r}", line_no, key)
    return value


# --- task sets ---


def load_task_set(path: str | Path, task_kind: str) -> TaskSetFile:
    records: list[TaskExample] = []
    flagged: list[tuple[int, str, str]] = []
    seen_ids: set[str] = set()
    for line_no, obj in _read_jsonl(path):
        rid = _require_str(obj, "id", line_no)
        if rid in seen_ids:
            raise SchemaError(f"duplicate id {rid!r}", line_no, "id")
        seen_ids.add(rid)
        record = TaskExample(
            id=rid,
            input=_require_str(obj, "input", line_no),
            target=_require_str(obj, "target", line_no),
            context=obj.get("context"),
            formula=obj.get("formula"),
        )
        if record.context is not None and not isinstance(record.context, str):
            raise SchemaError("context must be a string", line_no, "context")
        if record.formula is not None:
            if not isinstance(record.formula, str):
                raise SchemaError("formula must be a string", line_no, "formula")
            if task_kind in ("math", "synthetic"):
                try:
                    parse_formula(record.formula)
                except Exception as exc:  # flagged, not fatal
                    flagged.append((line_no, rid, str(exc)))
        records.append(record)
    return TaskSetFile(records, task_kind, flagged)


def save_task_set(path: str | Path, task_set: TaskSetFile) -> None:
    rows = []
    for r in task_set.records:
        obj: dict = {"id": r.id, "input": r.input, "target": r.target}
        if r.context is not None:
            obj["context"] = r.context
        if r.formula is not None:
            obj["formula"] = r.formula
        rows.append(obj)
    _write_jsonl(path, rows)


# --- tool-use sets ---


def load_tool_use_set(path: str | Path) -> list[ToolUseRecord]:
    records: list[ToolUseRecord] = []
    for line_no, obj in _read_jsonl(path):
        record = ToolUseRecord(
            id=_require_str(obj, "id", line_no),
            input=_require_str(obj, "input", line_no),
            tool_label=_require_str(obj, "tool_label", line_no),
            tool_input=_require_str(obj, "tool_input", line_no),
            tool_output=_require_str(obj, "tool_output", line_no, allow_empty=True),
            output=_require_str(obj, "output", line_no, allow_empty=True),
            round=int(obj.get("round", 0)),
            provenance=str(obj.get("provenance", BOOTSTRAP)),
        )
        if record.provenance not in (BOOTSTRAP, SELF_PLAY):
            raise SchemaError(f"bad provenance {record.provenance!r}", line_no, "provenance")
        try:
            protocol.render_sequence(record_to_sequence(record))
        except Exception as exc:
            raise SchemaError(f"record does not render as a sequence: {exc}", line_no) from exc
        records.append(record)
    return records


def save_tool_use_set(path: str | Path, records: list[ToolUseRecord]) -> None:
    _write_jsonl(
        path,
        [
            {
                "id": r.id,
                "input": r.input,
                "tool_label": r.tool_label,
                "tool_input": r.tool_input,
                "tool_output": r.tool_output,
                "output": r.output,
                "round": r.round,
                "provenance": r.provenance,
            }
            for r in records
        ],
    )


# --- corpora ---


def load_corpus(path: str | Path) -> list[tuple[str, str]]:
    corpus: list[tuple[str, str]] = []
    for line_no, obj in _read_jsonl(path):
        corpus.append((_require_str(obj, "doc_id", line_no), _require_str(obj, "text", line_no)))
    return corpus


def save_corpus(path: str | Path, corpus: list[tuple[str, str]]) -> None:
    _write_jsonl(path, [{"doc_id": doc_id, "text": text} for doc_id, text in corpus])


def build_corpus_from_contexts(task_set: TaskSetFile) -> list[tuple[str, str]]:
    """One document per unique context; doc ids derived from content hashes.

    Raises MissingContext listing the ids of records without a context.
    """
    missing = [r.id for r in task_set.records if not r.context]
    if missing or not task_set.records:
        raise MissingContext(missing)
    corpus: list[tuple[str, str]] = []
    seen: set[str] = set()
    for record in task_set.records:
        assert record.context is not None
        if record.context in seen:
            continue
        seen.add(record.context)
        digest = hashlib.sha256(record.context.encode("utf-8")).hexdigest()[:16]
        corpus.append((f"ctx-{digest}", record.context))
    return corpus


# --- synthetic arithmetic benchmark ---


@dataclass(frozen=True)
class SyntheticArithmeticSpec:
    example_count: int = 500
    operand_min: int = 2
    operand_max: int = 999
    operators: tuple[str, ...] = ("add", "subtract", "multiply", "divide")
    seed: int = 7
    bootstrap_count: int = 20


@dataclass(frozen=True)
class _Shape:
    name: str
    operators: tuple[str, ...]
    slots: int
    formula: str  # format string over operand names a, b, c
    phrasings: tuple[str, ...]  # easy -> hard; later phrasings drift away from the first


# Phrasings within a shape form a lexical chain: the first is what bootstrap
# demonstrations use, each later one shares vocabulary mainly with its
# predecessor. Numbers always appear in formula-argument order so a template
# learned from one phrasing instantiates correctly on its siblings.
_SHAPES: tuple[_Shape, ...] = (
    _Shape(
        "add2",
        ("add",),
        2,
        "Add({a}, {b})",
        (
            "Mara has {a} red marbles and {b} blue marbles. How many marbles does she have altogether?",
            "A jar holds {a} red beads and {b} blue beads. How many beads are in the jar altogether?",
            "The craft bin started with {a} beads and another {b} beads were dropped in. How many beads are in the bin now?",
        ),
    ),
    _Shape(
        "sub2",
        ("subtract",),
        2,
        "Subtract({a}, {b})",
        (
            "A baker made {a} rolls and sold {b} of them. How many rolls are left?",
            "The pantry stored {a} jars and {b} of them were handed out. How many jars are left?",
            "Out of {a} tickets printed for the fair, {b} were handed out at the gate. How many tickets remain?",
        ),
    ),
    _Shape(
        "mul2",
        ("multiply",),
        2,
        "Multiply({a}, {b})",
        (
            "Each of the {a} shelves holds {b} books. How many books are there in all?",
            "Each of the {a} crates packs {b} bottles. How many bottles are there in all?",
            "A warehouse stacked {a} crates, every crate packing {b} bottles. How many bottles did the warehouse stack?",
        ),
    ),
    _Shape(
        "div2",
        ("divide",),
        2,
        "Divide({a}, {b})",
        (
            "A rope {a} meters long is cut into {b} equal pieces. How long is each piece?",
            "A ribbon {a} centimeters long is snipped into {b} equal strips. How long is each strip?",
            "The tailor divides {a} centimeters of cloth evenly across {b} strips. What length does each strip get?",
        ),
    ),
    _Shape(
        "add3",
        ("add",),
        3,
        "Add({a}, Add({b}, {c}))",
        (
            "Noa collected {a} shells on Monday, {b} on Tuesday and {c} on Wednesday. How many shells did Noa collect in total?",
            "A stall sold {a} cones on Monday, {b} on Tuesday and {c} on Wednesday. How many cones were sold in total?",
            "Over three market days the stall moved {a}, then {b}, then {c} cones. What is the combined number of cones sold?",
        ),
    ),
    _Shape(
        "avg3",
        ("divide", "add"),
        3,
        "Divide(Add({a}, Add({b}, {c})), 3)",
        (
            "Lia scored {a}, {b} and {c} points in three rounds. What was her average score per round?",
            "A gauge read {a}, {b} and {c} millimeters in three checks. What was the average reading per check?",
            "Three checks of the gauge came back {a}, {b} and {c} millimeters. What reading should be reported as the average?",
        ),
    ),
    _Shape(
        "sumsub",
        ("subtract", "add"),
        3,
        "Subtract(Add({a}, {b}), {c})",
        (
            "A library owned {a} novels, bought {b} more, then loaned out {c}. How many novels does it hold now?",
            "A depot owned {a} barrels, bought {b} more, then shipped out {c}. How many barrels does it hold now?",
            "The depot counted {a} barrels, took in {b} new ones, and sent {c} away to stores. How many barrels stayed behind?",
        ),
    ),
    _Shape(
        "muladd",
        ("add", "multiply"),
        3,
        "Add(Multiply({a}, {b}), {c})",
        (
            "A florist tied {a} bouquets with {b} tulips each and kept {c} loose tulips. How many tulips did the florist use in all?",
            "A vendor filled {a} trays with {b} eggs each and kept {c} spare eggs. How many eggs did the vendor handle in all?",
            "A cart rolled out with {a} egg trays, {b} eggs to a tray, and {c} spares. How many eggs in all did the cart carry?",
        ),
    ),
)


def generate_synthetic(spec: SyntheticArithmeticSpec) -> tuple[TaskSetFile, list[ToolUseRecord]]:
    """Seeded word-problem benchmark with known gold formulas.

    The first ``bootstrap_count`` examples cycle through each shape's first
    phrasing and are also returned as complete bootstrap tool-use records;
    the rest sample uniformly over every (shape, phrasing) pair. Targets are
    the solver's own rendering of the gold formula, so the gold trajectory
    always passes a numeric match filter.
    """
    if spec.example_count < 1:
        raise ConfigError("example_count must be >= 1")
    if spec.bootstrap_count > spec.example_count:
        raise ConfigError("bootstrap_count cannot exceed example_count")
    if spec.operand_min < 1 or spec.operand_max < spec.operand_min:
        raise ConfigError("bad operand range")
    shapes = [s for s in _SHAPES if all(op in spec.operators for op in s.operators)]
    if not shapes:
        raise ConfigError(f"no shapes left for operators {spec.operators}")

    rng = random.Random(spec.seed)
    templates = [(shape, i) for shape in shapes for i in range(len(shape.phrasings))]
    examples: list[TaskExample] = []
    bootstrap: list[ToolUseRecord] = []

    for index in range(spec.example_count):
        if index < spec.bootstrap_count:
            shape, phrasing_index = shapes[index % len(shapes)], 0
        else:
            shape, phrasing_index = templates[rng.randrange(len(templates))]
        operands = {
            name: rng.randint(spec.operand_min, spec.operand_max)
            for name in ("a", "b", "c")[: shape.slots]
        }
        text = shape.phrasings[phrasing_index].format(**operands)
        formula = shape.formula.format(**operands)
        target = render_value(eval_formula(parse_formula(formula)))
        example = TaskExample(
            id=f"syn-{index:04d}", input=text, target=target, formula=formula
        )
        examples.append(example)
        if index < spec.bootstrap_count:
            bootstrap.append(
                ToolUseRecord(
                    id=example.id,
                    input=text,
                    tool_label="formula",
                    tool_input=formula,
                    tool_output=target,
                    output=target,
                    round=0,
                    provenance=BOOTSTRAP,
                )
            )
    return TaskSetFile(examples, "synthetic"), bootstrap
