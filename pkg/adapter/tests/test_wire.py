"""Wire-protocol behavior through a real subprocess."""

import json
import subprocess
import sys

import pytest

ADAPTER_CMD = [sys.executable, "-m", "lmadapter", "--epochs", "40"]


class WireClient:
    def __init__(self, extra_args=()):
        self.proc = subprocess.Popen(
            ADAPTER_CMD[:3] + list(extra_args) + ADAPTER_CMD[3:],
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            text=True,
            bufsize=1,
        )

    def ask(self, message):
        self.proc.stdin.write(json.dumps(message) + "\n")
        self.proc.stdin.flush()
        return json.loads(self.proc.stdout.readline())

    def close(self):
        self.proc.stdin.close()
        self.proc.wait(timeout=20)


@pytest.fixture
def client():
    wire = WireClient()
    yield wire
    wire.close()


def write_dataset(path):
    record = {
        "id": "r0",
        "input": "ping?",
        "tool_label": "kb",
        "tool_input": "lookup ping",
        "tool_output": "PONG",
        "output": "pong",
        "round": 0,
        "provenance": "bootstrap",
    }
    path.write_text(json.dumps(record) + "\n", encoding="utf-8")


class TestWire:
    def test_handshake(self, client):
        reply = client.ask({"op": "hello"})
        assert reply == {"op": "hello", "supports_update": True, "supports_beam": False, "concurrent": 1}

    def test_generate_max_chars_zero(self, client):
        client.ask({"op": "hello"})
        reply = client.ask(
            {"op": "generate", "prefix": "|question x ", "stop": ["|result"], "max_chars": 0,
             "mode": "greedy", "temperature": 1.0, "top_k": 40, "beam_width": 4, "seed": 0}
        )
        assert reply == {"op": "result", "text": "", "stop_reason": "max_chars"}

    def test_update_then_generate(self, client, tmp_path):
        dataset = tmp_path / "d.jsonl"
        write_dataset(dataset)
        client.ask({"op": "hello"})
        first = client.ask({"op": "update", "dataset_path": str(dataset)})
        assert first["op"] == "updated" and first["version"] == 1
        second = client.ask({"op": "update", "dataset_path": str(dataset)})
        assert second["version"] == 2

    def test_bad_request_does_not_kill_loop(self, client):
        assert client.ask({"op": "frobnicate"})["op"] == "error"
        assert client.ask({"op": "update", "dataset_path": "/does/not/exist"})["op"] == "error"
        assert client.ask({"op": "hello"})["op"] == "hello"  # still alive

    def test_no_update_mode(self, tmp_path):
        wire = WireClient(extra_args=["--no-update"])
        try:
            hello = wire.ask({"op": "hello"})
            assert hello["supports_update"] is False
            dataset = tmp_path / "d.jsonl"
            write_dataset(dataset)
            reply = wire.ask({"op": "update", "dataset_path": str(dataset)})
            assert reply["op"] == "error"
            assert "unsupported" in reply["message"]
        finally:
            wire.close()

    def test_empty_dataset_is_error(self, client, tmp_path):
        dataset = tmp_path / "empty.jsonl"
        dataset.write_text("", encoding="utf-8")
        reply = client.ask({"op": "update", "dataset_path": str(dataset)})
        assert reply["op"] == "error"
