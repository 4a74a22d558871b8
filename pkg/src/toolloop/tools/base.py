"""Tool abstraction and registry.

A tool is a named text-to-text function. The registry is what the
interception driver dispatches to; it truncates every result to the tool's
declared maximum and counts invocations (used to prove baseline runs never
touch a tool).
"""

from __future__ import annotations

from dataclasses import dataclass

from ..errors import InvariantViolation, UnknownTool
from ..protocol import LABEL_RE, OUTPUT_LABEL, RESULT_LABEL


@dataclass(frozen=True)
class ToolDescriptor:
    label: str
    deterministic: bool = True
    concurrency_safe: bool = True
    max_result_chars: int = 1000

    def __post_init__(self):
        if LABEL_RE.fullmatch(self.label) is None or self.label in (RESULT_LABEL, OUTPUT_LABEL):
            raise InvariantViolation(f"invalid tool label: {self.label!r}")
        if self.max_result_chars <= 0:
            raise InvariantViolation("max_result_chars must be > 0")


class Tool:
    """Base class; subclasses set ``descriptor`` and implement run()."""

    descriptor: ToolDescriptor

    def run(self, input_text: str) -> str:
        raise NotImplementedError


class FunctionTool(Tool):
    """Wrap a plain callable as a tool (handy for stubs and adapters)."""

    def __init__(self, label: str, fn, *, deterministic: bool = True, max_result_chars: int = 1000):
        self.descriptor = ToolDescriptor(
            label, deterministic=deterministic, max_result_chars=max_result_chars
        )
        self._fn = fn

    def run(self, input_text: str) -> str:
        return self._fn(input_text)


class ToolRegistry:
    def __init__(self, tools: list[Tool] | None = None):
        self._tools: dict[str, Tool] = {}
        self.invocations = 0
        for tool in tools or []:
            self.register(tool)

    def register(self, tool: Tool) -> None:
        label = tool.descriptor.label
        if label in self._tools:
            raise InvariantViolation(f"tool label already registered: {label!r}")
        self._tools[label] = tool

    def labels(self) -> list[str]:
        return sorted(self._tools)

    def resolve(self, label: str) -> Tool:
        try:
            return self._tools[label]
        except KeyError:
            raise UnknownTool(f"no tool registered for label {label!r}") from None

    def invoke(self, label: str, input_text: str) -> str:
        tool = self.resolve(label)
        self.invocations += 1
        result = tool.run(input_text)
        return result[: tool.descriptor.max_result_chars]

    def describe(self) -> list[dict]:
        return [
            {
                "label": t.descriptor.label,
                "deterministic": t.descriptor.deterministic,
                "max_result_chars": t.descriptor.max_result_chars,
            }
            for _, t in sorted(self._tools.items())
        ]
