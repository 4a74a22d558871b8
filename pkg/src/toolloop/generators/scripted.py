"""Scripted generators for tests, demos, and oracle policies.

A script is any callable prefix -> continuation text; stop-marker and
length truncation are applied on top, so scripts can be written without
caring about the response invariants.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Callable, Sequence

from ..errors import GeneratorError
from .base import GenerateRequest, GenerateResponse, Generator, truncate_at_stops


class ScriptedGenerator(Generator):
    kind = "scripted"
    supports_update = False
    supports_beam = True  # mode is ignored; scripts are mode-agnostic

    def __init__(self, script: Callable[[str], str]):
        self._script = script

    @classmethod
    def from_steps(cls, steps: Sequence[str]) -> "ScriptedGenerator":
        """Emit the given continuations in order, one per generate() call,
        then empty text."""
        queue = list(steps)

        def step(_prefix: str) -> str:
            return queue.pop(0) if queue else ""

        return cls(step)

    @classmethod
    def from_table(cls, table: dict[str, str]) -> "ScriptedGenerator":
        """Exact prefix -> continuation lookup; unknown prefixes end the text."""
        return cls(lambda prefix: table.get(prefix, ""))

    @classmethod
    def from_jsonl(cls, path: str | Path) -> "ScriptedGenerator":
        """Load a prefix table from JSONL lines {"prefix": ..., "text": ...}."""
        table: dict[str, str] = {}
        for line_no, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
            if not line.strip():
                continue
            try:
                record = json.loads(line)
                table[record["prefix"]] = record["text"]
            except (json.JSONDecodeError, KeyError, TypeError) as exc:
                raise GeneratorError(f"bad script line {line_no}: {exc}") from exc
        return cls.from_table(table)

    def generate(self, request: GenerateRequest) -> GenerateResponse:
        try:
            text = self._script(request.prefix)
        except Exception as exc:  # scripts are user code
            raise GeneratorError(f"script failed: {exc}") from exc
        return truncate_at_stops(text, request.stop_markers, request.max_chars)
