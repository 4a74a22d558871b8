"""Client for external generators speaking the newline-delimited JSON protocol.

One JSON object per line over a subprocess's stdin/stdout or a TCP
connection. Handshake:

    -> {"op": "hello"}
    <- {"op": "hello", "supports_update": bool, "supports_beam": bool, "concurrent": int}

Generate:

    -> {"op": "generate", "prefix": str, "stop": [str, ...], "max_chars": int,
        "mode": "random"|"greedy"|"beam", "temperature": float, "top_k": int,
        "beam_width": int, "seed": int}
    <- {"op": "result", "text": str, "stop_reason": "marker"|"max_chars"|"end_of_text"}

Update:

    -> {"op": "update", "dataset_path": str}
    <- {"op": "updated", "version": int}

Any request may be answered with {"op": "error", "message": str}.
"""

from __future__ import annotations

import json
import shlex
import socket
import subprocess
from pathlib import Path
from typing import Sequence

from ..errors import CapabilityUnsupported, EmptyDataset, GeneratorError
from .base import (
    GenerateRequest,
    GenerateResponse,
    Generator,
    StopReason,
    UpdateReport,
)

_STOP_REASONS = {
    "marker": StopReason.MARKER,
    "max_chars": StopReason.MAX_CHARS,
    "end_of_text": StopReason.END_OF_TEXT,
}


class _LineChannel:
    """Blocking line-oriented JSON transport."""

    def send(self, obj: dict) -> None:
        raise NotImplementedError

    def recv(self) -> dict:
        raise NotImplementedError

    def close(self) -> None:
        pass


class _SubprocessChannel(_LineChannel):
    def __init__(self, command: str):
        self.proc = subprocess.Popen(
            shlex.split(command),
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            text=True,
            bufsize=1,
        )

    def send(self, obj: dict) -> None:
        assert self.proc.stdin is not None
        try:
            self.proc.stdin.write(json.dumps(obj, ensure_ascii=False) + "\n")
            self.proc.stdin.flush()
        except (BrokenPipeError, ValueError) as exc:
            raise GeneratorError(f"external generator pipe closed: {exc}") from exc

    def recv(self) -> dict:
        assert self.proc.stdout is not None
        line = self.proc.stdout.readline()
        if line == "":
            raise GeneratorError("external generator closed its output")
        try:
            return json.loads(line)
        except json.JSONDecodeError as exc:
            raise GeneratorError(f"bad reply line from external generator: {line!r}") from exc

    def close(self) -> None:
        if self.proc.stdin:
            self.proc.stdin.close()
        self.proc.wait(timeout=10)


class _TcpChannel(_LineChannel):
    def __init__(self, host: str, port: int):
        self.sock = socket.create_connection((host, port))
        self.reader = self.sock.makefile("r", encoding="utf-8")
        self.writer = self.sock.makefile("w", encoding="utf-8")

    def send(self, obj: dict) -> None:
        self.writer.write(json.dumps(obj, ensure_ascii=False) + "\n")
        self.writer.flush()

    def recv(self) -> dict:
        line = self.reader.readline()
        if line == "":
            raise GeneratorError("external generator closed the connection")
        try:
            return json.loads(line)
        except json.JSONDecodeError as exc:
            raise GeneratorError(f"bad reply line from external generator: {line!r}") from exc

    def close(self) -> None:
        self.reader.close()
        self.writer.close()
        self.sock.close()


class ExternalGenerator(Generator):
    """Proxy for a generator process attached over the wire protocol."""

    kind = "external"

    def __init__(self, channel: _LineChannel):
        self._channel = channel
        self._handshake()

    @classmethod
    def spawn(cls, command: str) -> "ExternalGenerator":
        return cls(_SubprocessChannel(command))

    @classmethod
    def connect(cls, host: str, port: int) -> "ExternalGenerator":
        return cls(_TcpChannel(host, port))

    def _handshake(self) -> None:
        self._channel.send({"op": "hello"})
        reply = self._channel.recv()
        if reply.get("op") != "hello":
            raise GeneratorError(f"bad handshake reply: {reply!r}")
        self.supports_update = bool(reply.get("supports_update", False))
        self.supports_beam = bool(reply.get("supports_beam", False))
        self.concurrent_requests = int(reply.get("concurrent", 1))

    def _roundtrip(self, message: dict) -> dict:
        self._channel.send(message)
        reply = self._channel.recv()
        if reply.get("op") == "error":
            message_text = str(reply.get("message", "unknown error"))
            if "unsupported" in message_text.lower():
                raise CapabilityUnsupported(message_text)
            raise GeneratorError(message_text)
        return reply

    def generate(self, request: GenerateRequest) -> GenerateResponse:
        spec = request.sampling
        reply = self._roundtrip(
            {
                "op": "generate",
                "prefix": request.prefix,
                "stop": list(request.stop_markers),
                "max_chars": request.max_chars,
                "mode": spec.mode.value,
                "temperature": spec.temperature,
                "top_k": spec.top_k,
                "beam_width": spec.beam_width,
                "seed": spec.seed,
            }
        )
        if reply.get("op") != "result":
            raise GeneratorError(f"expected a result reply, got {reply!r}")
        text = str(reply.get("text", ""))
        stop_reason = _STOP_REASONS.get(str(reply.get("stop_reason", "")))
        if stop_reason is None:
            raise GeneratorError(f"bad stop_reason in reply: {reply.get('stop_reason')!r}")
        marker = None
        if stop_reason is StopReason.MARKER:
            for candidate in request.stop_markers:
                if text.endswith(candidate):
                    marker = candidate
                    break
        return GenerateResponse(text, stop_reason, marker)

    def update_from_path(self, dataset_path: str | Path) -> UpdateReport:
        if not self.supports_update:
            raise CapabilityUnsupported("external generator does not support update")
        reply = self._roundtrip({"op": "update", "dataset_path": str(dataset_path)})
        if reply.get("op") != "updated":
            raise GeneratorError(f"expected an updated reply, got {reply!r}")
        version = int(reply["version"])
        return UpdateReport(examples_seen=-1, version=version)

    def update(self, dataset: Sequence) -> UpdateReport:
        """Serialize the records to a temp JSONL file and send its path."""
        if not self.supports_update:
            raise CapabilityUnsupported("external generator does not support update")
        records = list(dataset)
        if not records:
            raise EmptyDataset("update requires at least one record")
        import tempfile

        from ..datasets import save_tool_use_set

        with tempfile.NamedTemporaryFile(
            "w", suffix=".jsonl", prefix="toolloop-update-", delete=False
        ) as handle:
            path = handle.name
        save_tool_use_set(path, records)
        report = self.update_from_path(path)
        return UpdateReport(examples_seen=len(records), version=report.version)

    def close(self) -> None:
        self._channel.close()

    def __enter__(self) -> "ExternalGenerator":
        return self

    def __exit__(self, *exc_info) -> None:
        self.close()
