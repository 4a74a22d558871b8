"""Delimiter-based sequence text: grammar, parse/render, interception driver.

Canonical sequence text is a flat UTF-8 string of segments, each introduced
by a delimiter: an unescaped ``|`` at a token boundary (start of text or
right after a space), followed by a label of lowercase letters, digits,
hyphen or underscore, and a single space. Segments are separated by exactly
one space. Literal bars inside segment bodies are escaped as ``\\|``.

A well-formed sequence is: one task-input segment (any label), zero or more
(tool-call, result) hops, and optionally a final output segment. The label
``result`` is reserved for tool output and ``output`` for the task answer;
every other label in non-initial position names a tool.

drive_generation() runs the interception loop: generation is requested with
``|result`` as a stop marker; when it fires, the pending tool call is
dispatched to the registry and its output is spliced into the text, so the
generator never sees a result body it produced itself.
"""

from __future__ import annotations

import re
from dataclasses import dataclass, replace
from enum import Enum

from .errors import (
    DanglingToolCall,
    EmptyInput,
    HopLimitExceeded,
    InvariantViolation,
    MalformedDelimiter,
    ToolFailure,
    ToolLoopError,
    UnknownTool,
)
from .generators.base import GenerateRequest, Generator, SamplingSpec, StopReason

LABEL_RE = re.compile(r"[a-z0-9_-]+")
RESULT_LABEL = "result"
OUTPUT_LABEL = "output"
RESULT_MARKER = "|" + RESULT_LABEL
DEFAULT_TASK_LABEL = "question"
DEFAULT_BUDGET = 2048


class SegmentKind(Enum):
    TASK_INPUT = "task_input"
    TOOL_CALL = "tool_call"
    TOOL_RESULT = "tool_result"
    TASK_OUTPUT = "task_output"


@dataclass(frozen=True)
class Segment:
    kind: SegmentKind
    label: str
    body: str

    def validate(self) -> None:
        if not self.label or LABEL_RE.fullmatch(self.label) is None:
            raise InvariantViolation(f"invalid label: {self.label!r}")
        if (self.kind is SegmentKind.TOOL_RESULT) != (self.label == RESULT_LABEL):
            raise InvariantViolation("label 'result' is reserved for tool results")
        if (self.kind is SegmentKind.TASK_OUTPUT) != (self.label == OUTPUT_LABEL):
            raise InvariantViolation("label 'output' is reserved for task output")


@dataclass(frozen=True)
class ToolAugmentedSequence:
    """Structured form of one canonical sequence text."""

    task_input: Segment
    hops: tuple[tuple[Segment, Segment], ...] = ()
    task_output: Segment | None = None

    @property
    def complete(self) -> bool:
        return self.task_output is not None

    def validate(self) -> None:
        self.task_input.validate()
        if self.task_input.kind is not SegmentKind.TASK_INPUT:
            raise InvariantViolation("first segment must be the task input")
        for call, result in self.hops:
            call.validate()
            result.validate()
            if call.kind is not SegmentKind.TOOL_CALL:
                raise InvariantViolation("hop must start with a tool call")
            if result.kind is not SegmentKind.TOOL_RESULT:
                raise InvariantViolation("tool call must be followed by a result")
        if self.task_output is not None:
            self.task_output.validate()
            if self.task_output.kind is not SegmentKind.TASK_OUTPUT:
                raise InvariantViolation("trailing segment must be the task output")


class StopKind(Enum):
    TOOL_CALL_BOUNDARY = "tool_call_boundary"
    OUTPUT_COMPLETE = "output_complete"
    END_OF_TEXT = "end_of_text"
    BUDGET_EXHAUSTED = "budget_exhausted"


@dataclass(frozen=True)
class StopEvent:
    reason: StopKind
    position: int


def escape_body(body: str) -> str:
    return body.replace("|", "\\|")


def unescape_body(text: str) -> str:
    return text.replace("\\|", "|")


@dataclass(frozen=True)
class RawSegment:
    label: str
    body: str  # unescaped
    start: int  # offset of the delimiter bar in the source text


def split_segments(text: str) -> list[RawSegment]:
    """Split sequence text into raw labelled segments.

    Raises EmptyInput / MalformedDelimiter; imposes no structure beyond the
    delimiter grammar, so callers can handle prefixes that end mid-sequence.
    """
    if text == "":
        raise EmptyInput("empty sequence text")
    bars: list[int] = []
    pos = text.find("|")
    while pos >= 0:
        if pos > 0 and text[pos - 1] == "\\":
            pass  # escaped literal bar
        elif pos == 0 or text[pos - 1] == " ":
            bars.append(pos)
        else:
            raise MalformedDelimiter("unescaped bar inside a token", pos)
        pos = text.find("|", pos + 1)
    if not bars or bars[0] != 0:
        raise MalformedDelimiter("sequence text must begin with a delimiter", 0)

    segments: list[RawSegment] = []
    for i, start in enumerate(bars):
        match = LABEL_RE.match(text, start + 1)
        if match is None:
            raise MalformedDelimiter("bar not followed by a valid label", start)
        label_end = match.end()
        if label_end < len(text) and text[label_end] != " ":
            raise MalformedDelimiter("delimiter label must be followed by a space", start)
        body_start = min(label_end + 1, len(text))
        if i + 1 < len(bars):
            # the single space before the next delimiter is the separator
            body_end = bars[i + 1] - 1
            if body_end < body_start:
                raise MalformedDelimiter("missing separator before delimiter", bars[i + 1])
            body = text[body_start:body_end]
        else:
            body = text[body_start:]
        segments.append(RawSegment(match.group(), unescape_body(body), start))
    return segments


def _classify(raw: RawSegment, first: bool) -> Segment:
    if first:
        if raw.label in (RESULT_LABEL, OUTPUT_LABEL):
            raise MalformedDelimiter(f"sequence cannot begin with '|{raw.label}'", raw.start)
        return Segment(SegmentKind.TASK_INPUT, raw.label, raw.body)
    if raw.label == RESULT_LABEL:
        return Segment(SegmentKind.TOOL_RESULT, raw.label, raw.body)
    if raw.label == OUTPUT_LABEL:
        return Segment(SegmentKind.TASK_OUTPUT, raw.label, raw.body)
    return Segment(SegmentKind.TOOL_CALL, raw.label, raw.body)


def parse_sequence(text: str, max_hops: int = 1) -> ToolAugmentedSequence:
    """Parse canonical sequence text into its structured form.

    Total over arbitrary input: returns a value or raises a ToolLoopError
    subclass, never anything else.
    """
    raws = split_segments(text)
    task_input = _classify(raws[0], first=True)
    hops: list[tuple[Segment, Segment]] = []
    task_output: Segment | None = None
    pending_call: Segment | None = None
    for raw in raws[1:]:
        if task_output is not None:
            raise MalformedDelimiter("segment after the output segment", raw.start)
        seg = _classify(raw, first=False)
        if seg.kind is SegmentKind.TOOL_CALL:
            if pending_call is not None:
                raise DanglingToolCall(f"tool call '|{pending_call.label}' has no result")
            pending_call = seg
        elif seg.kind is SegmentKind.TOOL_RESULT:
            if pending_call is None:
                raise MalformedDelimiter("'|result' without a preceding tool call", raw.start)
            hops.append((pending_call, seg))
            pending_call = None
        else:
            if pending_call is not None:
                raise DanglingToolCall(f"tool call '|{pending_call.label}' has no result")
            task_output = seg
    if pending_call is not None:
        raise DanglingToolCall(f"tool call '|{pending_call.label}' has no result")
    if len(hops) > max_hops:
        raise HopLimitExceeded(f"{len(hops)} hops exceed limit {max_hops}")
    return ToolAugmentedSequence(task_input, tuple(hops), task_output)


def render_segment(seg: Segment) -> str:
    seg.validate()
    return f"|{seg.label} {escape_body(seg.body)}"


def render_sequence(seq: ToolAugmentedSequence) -> str:
    """Inverse of parse_sequence for valid sequences (single-space separators,
    bodies escaped)."""
    seq.validate()
    parts = [render_segment(seq.task_input)]
    for call, result in seq.hops:
        parts.append(render_segment(call))
        parts.append(render_segment(result))
    if seq.task_output is not None:
        parts.append(render_segment(seq.task_output))
    return " ".join(parts)


def make_task_input(body: str, label: str = DEFAULT_TASK_LABEL) -> Segment:
    return Segment(SegmentKind.TASK_INPUT, label, body)


class DriveFailure(Enum):
    UNKNOWN_TOOL = "unknown_tool"
    TOOL_ERROR = "tool_error"
    BUDGET_EXHAUSTED = "budget_exhausted"
    GENERATOR_ERROR = "generator_error"
    HOP_LIMIT_EXCEEDED = "hop_limit_exceeded"


@dataclass
class DriveResult:
    """Outcome of one interception-loop run.

    ``sequence`` holds whatever structure was completed; ``text`` is the
    canonical text assembled so far (always equal to render(sequence) plus
    any pending call). ``tool_errors`` lists spliced tool failures; those do
    not abort the run but flag it for downstream filtering.
    """

    sequence: ToolAugmentedSequence
    text: str
    failure: DriveFailure | None = None
    failure_detail: str = ""
    tool_errors: tuple[str, ...] = ()
    events: tuple[StopEvent, ...] = ()

    @property
    def ok(self) -> bool:
        return self.failure is None and self.sequence.complete


def _leg_segments(leg_text: str) -> list[RawSegment]:
    if leg_text == "":
        return []
    return split_segments(leg_text)


def drive_generation(
    gen: Generator,
    registry,
    task_input: str,
    *,
    sampling: SamplingSpec | None = None,
    task_label: str = DEFAULT_TASK_LABEL,
    budget: int = DEFAULT_BUDGET,
    max_hops: int = 1,
) -> DriveResult:
    """Generate a complete tool-augmented sequence for one task input.

    The registry must expose ``resolve(label)`` (raising UnknownTool) and
    ``invoke(label, input) -> text``. Each generation leg runs with
    ``|result`` as a stop marker and at most ``budget`` characters; tool
    results are spliced verbatim, and the text the generator emitted after
    the marker is discarded. Tool failures are spliced as ``ERROR: <msg>``
    results and flagged, keeping the loop total.
    """
    sampling = sampling or SamplingSpec()
    input_seg = make_task_input(task_input, task_label)
    seq = ToolAugmentedSequence(input_seg)
    acc = render_segment(input_seg) + " "
    events: list[StopEvent] = []
    tool_errors: list[str] = []

    def done(failure: DriveFailure | None, detail: str = "") -> DriveResult:
        return DriveResult(
            sequence=seq,
            text=acc,
            failure=failure,
            failure_detail=detail,
            tool_errors=tuple(tool_errors),
            events=tuple(events),
        )

    for _leg in range(max_hops + 1):
        request = GenerateRequest(
            prefix=acc,
            stop_markers=(RESULT_MARKER,),
            max_chars=budget,
            sampling=sampling,
        )
        try:
            response = gen.generate(request)
        except ToolLoopError as exc:
            return done(DriveFailure.GENERATOR_ERROR, str(exc))
        text = response.text
        # defense in depth: never trust a generator to honor its stop markers
        cut = text.find(RESULT_MARKER)
        if cut >= 0:
            text = text[: cut + len(RESULT_MARKER)]

        if text.endswith(RESULT_MARKER):
            marker_pos = len(acc) + len(text) - len(RESULT_MARKER)
            head = text[: -len(RESULT_MARKER)]
            if head.endswith(" "):
                head = head[:-1]
            try:
                raws = _leg_segments(head)
            except ToolLoopError as exc:
                return done(DriveFailure.GENERATOR_ERROR, f"malformed continuation: {exc}")
            if len(raws) != 1 or raws[0].label in (RESULT_LABEL, OUTPUT_LABEL):
                return done(
                    DriveFailure.GENERATOR_ERROR,
                    "expected exactly one tool-call segment before '|result'",
                )
            call = Segment(SegmentKind.TOOL_CALL, raws[0].label, raws[0].body)
            events.append(StopEvent(StopKind.TOOL_CALL_BOUNDARY, marker_pos))
            if len(seq.hops) >= max_hops:
                return done(DriveFailure.HOP_LIMIT_EXCEEDED, f"hop limit {max_hops} reached")
            try:
                registry.resolve(call.label)
            except UnknownTool as exc:
                return done(DriveFailure.UNKNOWN_TOOL, str(exc))
            try:
                result_body = registry.invoke(call.label, call.body)
            except ToolFailure as exc:
                result_body = f"ERROR: {exc}"
                tool_errors.append(str(exc))
            result = Segment(SegmentKind.TOOL_RESULT, RESULT_LABEL, result_body)
            seq = replace(seq, hops=seq.hops + ((call, result),))
            acc += render_segment(call) + " " + render_segment(result) + " "
            continue

        if response.stop_reason is StopReason.MAX_CHARS:
            events.append(StopEvent(StopKind.BUDGET_EXHAUSTED, len(acc) + len(text)))
            return done(DriveFailure.BUDGET_EXHAUSTED, "no output segment within budget")

        # end of text: the leg must be exactly the output segment
        try:
            raws = _leg_segments(text)
        except EmptyInput:
            raws = []
        except ToolLoopError as exc:
            return done(DriveFailure.GENERATOR_ERROR, f"malformed continuation: {exc}")
        if len(raws) != 1 or raws[0].label != OUTPUT_LABEL:
            events.append(StopEvent(StopKind.END_OF_TEXT, len(acc) + len(text)))
            return done(DriveFailure.BUDGET_EXHAUSTED, "generation ended without an output segment")
        seq = replace(seq, task_output=Segment(SegmentKind.TASK_OUTPUT, OUTPUT_LABEL, raws[0].body))
        acc += text
        events.append(StopEvent(StopKind.OUTPUT_COMPLETE, len(acc)))
        return done(None)

    return done(DriveFailure.HOP_LIMIT_EXCEEDED, f"hop limit {max_hops} reached")
