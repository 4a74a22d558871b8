"""Interception loop: splicing, isolation, failure handling."""

from toolloop import (
    GenerateResponse,
    Generator,
    ScriptedGenerator,
    StopKind,
    StopReason,
    ToolRegistry,
    drive_generation,
)
from toolloop.errors import ToolFailure
from toolloop.protocol import DriveFailure
from toolloop.tools import FunctionTool

from conftest import WEATHER_QUESTION, WEATHER_SEQUENCE


def test_weather_golden(weather_generator, weather_registry):
    result = drive_generation(weather_generator, weather_registry, WEATHER_QUESTION)
    assert result.ok
    assert result.text == WEATHER_SEQUENCE
    assert [e.reason for e in result.events] == [StopKind.TOOL_CALL_BOUNDARY, StopKind.OUTPUT_COMPLETE]
    assert all(e.position <= len(result.text) for e in result.events)


def test_direct_output():
    gen = ScriptedGenerator.from_steps(["|output 42"])
    result = drive_generation(gen, ToolRegistry(), "q")
    assert result.ok
    assert result.sequence.hops == ()
    assert result.sequence.task_output.body == "42"


def test_unknown_tool_not_invoked():
    registry = ToolRegistry()
    gen = ScriptedGenerator.from_steps(["|frobnicate x |result"])
    result = drive_generation(gen, registry, "q")
    assert result.failure is DriveFailure.UNKNOWN_TOOL
    assert "frobnicate" in result.failure_detail
    assert registry.invocations == 0
    assert not result.ok


def test_tool_error_is_spliced_and_flagged():
    def boom(_q):
        raise ToolFailure("index unavailable")

    registry = ToolRegistry([FunctionTool("search", boom)])
    gen = ScriptedGenerator.from_steps(["|search q |result", "|output whatever"])
    result = drive_generation(gen, registry, "q")
    assert result.ok  # completed, but flagged
    assert result.tool_errors == ("index unavailable",)
    assert result.sequence.hops[0][1].body == "ERROR: index unavailable"


def test_tool_result_is_registry_output_never_generator_text(weather_registry):
    # the generator tries to hallucinate the result body; it must be discarded
    gen = ScriptedGenerator.from_steps(
        ["|weather lookup region=NYC |result WRONG GUESS", "|output today's high will be 20C"]
    )
    result = drive_generation(gen, weather_registry, WEATHER_QUESTION)
    assert result.ok
    assert result.sequence.hops[0][1].body == weather_registry.invoke("weather", "lookup region=NYC")
    assert "WRONG GUESS" not in result.text


def test_replay_soundness(weather_registry, weather_generator):
    result = drive_generation(weather_generator, weather_registry, WEATHER_QUESTION)
    for call, tool_result in result.sequence.hops:
        assert weather_registry.invoke(call.label, call.body) == tool_result.body


def test_budget_exhausted():
    gen = ScriptedGenerator(lambda _p: "rambling text with no structure " * 50)
    result = drive_generation(gen, ToolRegistry(), "q", budget=64)
    assert result.failure is DriveFailure.BUDGET_EXHAUSTED
    assert any(e.reason is StopKind.BUDGET_EXHAUSTED for e in result.events)


def test_end_of_text_without_output():
    gen = ScriptedGenerator.from_steps([""])
    result = drive_generation(gen, ToolRegistry(), "q")
    assert result.failure is DriveFailure.BUDGET_EXHAUSTED
    assert not result.ok


def test_hop_limit(weather_registry):
    gen = ScriptedGenerator(lambda _p: "|weather lookup region=NYC |result")
    result = drive_generation(gen, weather_registry, WEATHER_QUESTION, max_hops=1)
    assert result.failure is DriveFailure.HOP_LIMIT_EXCEEDED


def test_multi_hop_when_allowed():
    registry = ToolRegistry([FunctionTool("echo", lambda q: q.upper())])
    gen = ScriptedGenerator.from_steps(
        ["|echo one |result", "|echo two |result", "|output ONE TWO"]
    )
    result = drive_generation(gen, registry, "q", max_hops=2)
    assert result.ok
    assert [hop[1].body for hop in result.sequence.hops] == ["ONE", "TWO"]


def test_generator_exception_is_reported():
    gen = ScriptedGenerator(lambda _p: 1 / 0)
    result = drive_generation(gen, ToolRegistry(), "q")
    assert result.failure is DriveFailure.GENERATOR_ERROR


def test_malformed_continuation():
    gen = ScriptedGenerator.from_steps(["not a delimiter |result"])
    result = drive_generation(gen, ToolRegistry(), "q")
    assert result.failure is DriveFailure.GENERATOR_ERROR
    assert "malformed" in result.failure_detail


class OverrunningGenerator(Generator):
    """Deliberately ignores stop markers: emits a fake result body inline."""

    kind = "broken"

    def generate(self, request):
        return GenerateResponse(
            "|weather lookup region=NYC |result FAKE |output fake high", StopReason.END_OF_TEXT
        )


def test_driver_defends_against_stop_marker_overrun(weather_registry):
    result = drive_generation(OverrunningGenerator(), weather_registry, WEATHER_QUESTION)
    # the driver truncates at the marker itself, so FAKE never survives
    assert "FAKE" not in result.text
    assert result.sequence.hops[0][1].body.startswith("precipitation chance")
