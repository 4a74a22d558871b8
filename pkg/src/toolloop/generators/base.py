"""Generator abstraction: sampling controls, request/response types, base class.

A generator produces text continuations of a canonical sequence prefix. The
runtime only ever talks to this interface, so scripted stubs, the built-in
trainable generator, and external processes are interchangeable.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Sequence

from ..errors import CapabilityUnsupported, ConfigError


class SamplingMode(Enum):
    RANDOM = "random"
    GREEDY = "greedy"
    BEAM = "beam"


@dataclass(frozen=True)
class SamplingSpec:
    """Decoding controls. Defaults: random sampling at temperature 1.0 with
    top-k 40 for exploration, beam width 4 for single-output decoding."""

    mode: SamplingMode = SamplingMode.RANDOM
    temperature: float = 1.0
    top_k: int = 40
    beam_width: int = 4
    seed: int = 0

    def __post_init__(self):
        if self.mode is SamplingMode.RANDOM and self.temperature <= 0:
            raise ConfigError("temperature must be > 0 for random sampling")
        if self.top_k < 1:
            raise ConfigError("top_k must be >= 1")
        if self.beam_width < 1:
            raise ConfigError("beam_width must be >= 1")

    def with_seed(self, seed: int) -> "SamplingSpec":
        return replace(self, seed=seed)


class StopReason(Enum):
    MARKER = "marker"
    MAX_CHARS = "max_chars"
    END_OF_TEXT = "end_of_text"


@dataclass(frozen=True)
class GenerateRequest:
    prefix: str
    stop_markers: tuple[str, ...] = ()
    max_chars: int = 2048
    sampling: SamplingSpec = field(default_factory=SamplingSpec)


@dataclass(frozen=True)
class GenerateResponse:
    text: str
    stop_reason: StopReason
    marker: str | None = None  # which stop marker fired, when stop_reason is MARKER


@dataclass(frozen=True)
class UpdateReport:
    examples_seen: int
    version: int


def truncate_at_stops(text: str, stop_markers: Sequence[str], max_chars: int) -> GenerateResponse:
    """Apply stop-marker and length truncation to raw generator output.

    The first stop marker occurrence ends the text (marker kept as the final
    characters); otherwise the text is cut at max_chars. Shared by all
    built-in generators so the response invariants hold uniformly.
    """
    if max_chars <= 0:
        return GenerateResponse("", StopReason.MAX_CHARS)
    best: tuple[int, str] | None = None
    for marker in stop_markers:
        pos = text.find(marker)
        if pos >= 0 and (best is None or pos < best[0]):
            best = (pos, marker)
    if best is not None:
        pos, marker = best
        end = pos + len(marker)
        if end <= max_chars:
            return GenerateResponse(text[:end], StopReason.MARKER, marker)
    if len(text) > max_chars:
        return GenerateResponse(text[:max_chars], StopReason.MAX_CHARS)
    return GenerateResponse(text, StopReason.END_OF_TEXT)


def derive_seed(*parts: object) -> int:
    """Stable 63-bit seed from arbitrary parts (process-independent)."""
    blob = "\x1f".join(str(p) for p in parts).encode("utf-8")
    return int.from_bytes(hashlib.sha256(blob).digest()[:8], "big") >> 1


class Generator:
    """Base class for text generators.

    Subclasses set the capability flags and implement generate(); update() is
    optional and must raise CapabilityUnsupported when not supported.
    """

    kind = "abstract"
    supports_update = False
    supports_beam = False
    concurrent_requests = 1

    def generate(self, request: GenerateRequest) -> GenerateResponse:
        raise NotImplementedError

    def update(self, dataset: Sequence) -> UpdateReport:
        raise CapabilityUnsupported(f"{self.kind} generator does not support update")
