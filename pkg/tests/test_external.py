"""Wire-protocol client against in-test servers (subprocess and TCP)."""

import json
import socket
import socketserver
import sys
import threading

import pytest

from toolloop import ExternalGenerator, GenerateRequest, SamplingMode, SamplingSpec, StopReason
from toolloop.errors import CapabilityUnsupported, GeneratorError

GREEDY = SamplingSpec(mode=SamplingMode.GREEDY)


def fake_reply(request: dict) -> dict:
    op = request.get("op")
    if op == "hello":
        return {"op": "hello", "supports_update": True, "supports_beam": False, "concurrent": 1}
    if op == "generate":
        if request["prefix"].startswith("|question boom"):
            return {"op": "error", "message": "synthetic failure"}
        if request["mode"] == "beam":
            return {"op": "error", "message": "beam unsupported"}
        return {"op": "result", "text": "|echo hi |result", "stop_reason": "marker"}
    if op == "update":
        return {"op": "updated", "version": 1}
    return {"op": "error", "message": f"unknown op {op!r}"}


class _Handler(socketserver.StreamRequestHandler):
    def handle(self):
        for raw in self.rfile:
            request = json.loads(raw.decode("utf-8"))
            reply = fake_reply(request)
            self.wfile.write((json.dumps(reply) + "\n").encode("utf-8"))
            self.wfile.flush()


@pytest.fixture
def tcp_server():
    server = socketserver.ThreadingTCPServer(("127.0.0.1", 0), _Handler)
    thread = threading.Thread(target=server.serve_forever, daemon=True)
    thread.start()
    yield server.server_address
    server.shutdown()
    server.server_close()


class TestTcpChannel:
    def test_handshake_and_generate(self, tcp_server):
        host, port = tcp_server
        with ExternalGenerator.connect(host, port) as gen:
            assert gen.supports_update is True
            assert gen.supports_beam is False
            response = gen.generate(GenerateRequest("|question x ", ("|result",), 2048, GREEDY))
            assert response.text == "|echo hi |result"
            assert response.stop_reason is StopReason.MARKER
            assert response.marker == "|result"

    def test_error_reply_raises(self, tcp_server):
        host, port = tcp_server
        with ExternalGenerator.connect(host, port) as gen:
            with pytest.raises(GeneratorError):
                gen.generate(GenerateRequest("|question boom ", ("|result",), 2048, GREEDY))
            with pytest.raises(CapabilityUnsupported):
                gen.generate(
                    GenerateRequest(
                        "|question x ", ("|result",), 2048, SamplingSpec(mode=SamplingMode.BEAM)
                    )
                )

    def test_update_from_path(self, tcp_server):
        host, port = tcp_server
        with ExternalGenerator.connect(host, port) as gen:
            report = gen.update_from_path("/tmp/whatever.jsonl")
            assert report.version == 1


SUBPROCESS_SERVER = r"""
import json, sys
for line in sys.stdin:
    req = json.loads(line)
    if req.get("op") == "hello":
        reply = {"op": "hello", "supports_update": False, "supports_beam": True, "concurrent": 2}
    elif req.get("op") == "generate":
        reply = {"op": "result", "text": "|output done", "stop_reason": "end_of_text"}
    else:
        reply = {"op": "error", "message": "nope"}
    sys.stdout.write(json.dumps(reply) + "\n")
    sys.stdout.flush()
"""


class TestSubprocessChannel:
    def test_spawn_and_capabilities(self, tmp_path):
        script = tmp_path / "server.py"
        script.write_text(SUBPROCESS_SERVER, encoding="utf-8")
        with ExternalGenerator.spawn(f"{sys.executable} {script}") as gen:
            assert gen.supports_update is False
            assert gen.supports_beam is True
            assert gen.concurrent_requests == 2
            response = gen.generate(GenerateRequest("|question x ", ("|result",), 2048, GREEDY))
            assert response.text == "|output done"
            assert response.stop_reason is StopReason.END_OF_TEXT
            with pytest.raises(CapabilityUnsupported):
                gen.update([object()])

    def test_dead_process_is_generator_error(self, tmp_path):
        script = tmp_path / "dies.py"
        script.write_text("import sys; sys.exit(0)\n", encoding="utf-8")
        with pytest.raises(GeneratorError):
            ExternalGenerator.spawn(f"{sys.executable} {script}")
