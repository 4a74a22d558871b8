"""Black-box conformance suite for generator implementations.

Probes any Generator through its public interface and verifies the contract
the runtime relies on: stop markers end the text, max_chars caps it, decoding
is deterministic where determinism is claimed (greedy/beam and fixed-seed
random), and update() bumps the version. Failures are report entries, never
exceptions.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from types import SimpleNamespace

from ..errors import ToolLoopError
from .base import GenerateRequest, Generator, SamplingMode, SamplingSpec, StopReason

PROBE_PREFIXES = (
    "|question what is two plus two? ",
    "|question when are hops added in brewing process? ",
    "|question a car travels 60 miles in 2 hours, how fast is it going? ",
)
_STOP = ("|result",)


@dataclass
class ConformanceCheck:
    name: str
    passed: bool
    detail: str = ""


@dataclass
class ConformanceReport:
    checks: list[ConformanceCheck] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failed_names(self) -> list[str]:
        return [c.name for c in self.checks if not c.passed]

    def summary(self) -> str:
        lines = [
            f"[{'PASS' if c.passed else 'FAIL'}] {c.name}" + (f": {c.detail}" if c.detail else "")
            for c in self.checks
        ]
        return "\n".join(lines)


def _probe_records():
    return [
        SimpleNamespace(
            id="probe-0",
            input="what is two plus two?",
            tool_label="formula",
            tool_input="Add(2, 2)",
            tool_output="4",
            output="4",
            round=0,
            provenance="bootstrap",
        )
    ]


def conformance_check(gen: Generator) -> ConformanceReport:
    report = ConformanceReport()

    def run(name: str, fn) -> None:
        try:
            detail = fn() or ""
            report.checks.append(ConformanceCheck(name, True, detail))
        except AssertionError as exc:
            report.checks.append(ConformanceCheck(name, False, str(exc)))
        except ToolLoopError as exc:
            report.checks.append(ConformanceCheck(name, False, f"{type(exc).__name__}: {exc}"))

    greedy = SamplingSpec(mode=SamplingMode.GREEDY, seed=0)

    def stop_markers():
        for prefix in PROBE_PREFIXES:
            response = gen.generate(GenerateRequest(prefix, _STOP, 2048, greedy))
            for marker in _STOP:
                body = response.text[: -len(marker)] if response.text.endswith(marker) else response.text
                assert marker not in body, f"stop marker {marker!r} inside generated text"
            if response.stop_reason is StopReason.MARKER:
                assert response.text.endswith(response.marker or ""), "marker stop without marker suffix"

    run("stop_marker_honored", stop_markers)

    def max_chars_zero():
        response = gen.generate(GenerateRequest(PROBE_PREFIXES[0], _STOP, 0, greedy))
        assert response.text == "", f"expected empty text, got {response.text!r}"
        assert response.stop_reason is StopReason.MAX_CHARS, f"expected max_chars stop, got {response.stop_reason}"

    run("max_chars_zero", max_chars_zero)

    def max_chars_cap():
        for limit in (1, 5, 17):
            response = gen.generate(GenerateRequest(PROBE_PREFIXES[0], _STOP, limit, greedy))
            assert len(response.text) <= limit, f"{len(response.text)} chars exceed max_chars={limit}"

    run("max_chars_cap", max_chars_cap)

    def greedy_determinism():
        request = GenerateRequest(PROBE_PREFIXES[1], _STOP, 2048, greedy)
        first = gen.generate(request)
        second = gen.generate(request)
        assert first == second, "greedy decoding not deterministic"

    run("greedy_determinism", greedy_determinism)

    def seeded_random_determinism():
        spec = SamplingSpec(mode=SamplingMode.RANDOM, temperature=1.0, top_k=40, seed=1234)
        request = GenerateRequest(PROBE_PREFIXES[2], _STOP, 2048, spec)
        first = gen.generate(request)
        second = gen.generate(request)
        assert first == second, "fixed-seed random decoding not deterministic"

    run("seeded_random_determinism", seeded_random_determinism)

    if gen.supports_beam:

        def beam_mode():
            spec = SamplingSpec(mode=SamplingMode.BEAM, beam_width=4)
            request = GenerateRequest(PROBE_PREFIXES[0], _STOP, 2048, spec)
            first = gen.generate(request)
            second = gen.generate(request)
            assert first == second, "beam decoding not deterministic"

        run("beam_mode", beam_mode)

    if gen.supports_update:

        def update_versioning():
            records = _probe_records()
            first = gen.update(records)
            second = gen.update(records)
            assert second.version > first.version, (
                f"version did not increase: {first.version} -> {second.version}"
            )

        run("update_versioning", update_versioning)

    return report
