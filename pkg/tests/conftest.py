import pytest

from toolloop import ScriptedGenerator, ToolRegistry
from toolloop.tools import FunctionTool

WEATHER_REPORT = "precipitation chance: 10, high temp: 20c, low-temp: 12c"
WEATHER_QUESTION = "how hot will it get in NYC today?"
WEATHER_ANSWER = "today's high will be 20C"
WEATHER_SEQUENCE = (
    "|question how hot will it get in NYC today? "
    "|weather lookup region=NYC "
    "|result precipitation chance: 10, high temp: 20c, low-temp: 12c "
    "|output today's high will be 20C"
)

BREWING_QUESTION = "when are hops added in brewing process?"
BREWING_CONTEXT = "The boiling process is where chemical reactions take place...including"
BREWING_ANSWER = "The boiling process."
BREWING_SEQUENCE = (
    "|question when are hops added in brewing process? "
    "|search brewing process "
    "|result The boiling process is where chemical reactions take place...including "
    "|output The boiling process."
)


@pytest.fixture
def weather_registry():
    return ToolRegistry([FunctionTool("weather", lambda _q: WEATHER_REPORT)])


@pytest.fixture
def weather_generator():
    return ScriptedGenerator.from_steps(
        ["|weather lookup region=NYC |result", "|output today's high will be 20C"]
    )


def gold_oracle(task_set, label="formula", tool_input_fn=None):
    """Scripted policy that always emits the gold tool call for the task in
    the prefix and copies the tool result into the output."""
    from toolloop.protocol import split_segments

    gold = {e.input: (tool_input_fn or (lambda ex: ex.formula))(e) for e in task_set.records}

    def script(prefix):
        raws = split_segments(prefix[:-1] if prefix.endswith(" ") else prefix)
        if any(raw.label == "result" for raw in raws):
            return f"|output {raws[-1].body}"
        return f"|{label} {gold[raws[0].body]} |result"

    return ScriptedGenerator(script)
