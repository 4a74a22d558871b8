"""Newline-delimited JSON serving loop over stdin/stdout.

Protocol (one object per line):

    {"op": "hello"}                          -> {"op": "hello", "supports_update": b,
                                                 "supports_beam": b, "concurrent": n}
    {"op": "generate", "prefix": s, "stop": [s], "max_chars": n, "mode": m,
     "temperature": f, "top_k": n, "beam_width": n, "seed": n}
                                             -> {"op": "result", "text": s, "stop_reason": s}
    {"op": "update", "dataset_path": p}      -> {"op": "updated", "version": n}

Bad requests get {"op": "error", "message": s}; the loop never dies on one.
Dataset files are JSONL tool-use records: {"id", "input", "tool_label",
"tool_input", "tool_output", "output", "round", "provenance"}.
"""

from __future__ import annotations

import argparse
import json
import sys

from .config import NO_UPDATE, AdapterConfig
from .model import ByteLM


def load_dataset(path: str) -> list[dict]:
    records = []
    with open(path, encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, 1):
            if not line.strip():
                continue
            record = json.loads(line)
            for key in ("input", "tool_label", "tool_input", "tool_output", "output"):
                if not isinstance(record.get(key), str):
                    raise ValueError(f"line {line_no}: missing field {key!r}")
            records.append(record)
    if not records:
        raise ValueError("empty dataset")
    return records


class AdapterServer:
    def __init__(self, config: AdapterConfig):
        self.config = config
        self.model = ByteLM(config)
        if config.model_path:
            try:
                self.model.load(config.model_path)
            except FileNotFoundError:
                pass  # fresh model; first finetune will create the checkpoint

    def handle(self, request: dict) -> dict:
        op = request.get("op")
        if op == "hello":
            return {
                "op": "hello",
                "supports_update": self.config.supports_update,
                "supports_beam": False,
                "concurrent": 1,
            }
        if op == "generate":
            result = self.model.generate(
                prefix=str(request.get("prefix", "")),
                stop_markers=[str(m) for m in request.get("stop", [])],
                max_chars=int(request.get("max_chars", 2048)),
                mode=str(request.get("mode", "greedy")),
                temperature=float(request.get("temperature", 1.0)),
                top_k=int(request.get("top_k", 40)),
                seed=int(request.get("seed", 0)),
            )
            return {"op": "result", "text": result.text, "stop_reason": result.stop_reason}
        if op == "update":
            if not self.config.supports_update:
                return {"op": "error", "message": "update unsupported by this adapter"}
            records = load_dataset(str(request.get("dataset_path", "")))
            version = self.model.finetune(records)
            if self.config.model_path:
                self.model.save(self.config.model_path)
            return {"op": "updated", "version": version}
        return {"op": "error", "message": f"unknown op: {op!r}"}

    def serve(self, stdin=None, stdout=None) -> None:
        stdin = stdin or sys.stdin
        stdout = stdout or sys.stdout
        for line in stdin:
            if not line.strip():
                continue
            try:
                request = json.loads(line)
                reply = self.handle(request)
            except Exception as exc:  # a bad request must not kill the loop
                reply = {"op": "error", "message": f"{type(exc).__name__}: {exc}"}
            stdout.write(json.dumps(reply, ensure_ascii=False) + "\n")
            stdout.flush()


def parse_args(argv=None) -> AdapterConfig:
    parser = argparse.ArgumentParser(prog="lmadapter", description=__doc__.split("\n")[0])
    parser.add_argument("--model", default="", help="checkpoint path to load/save")
    parser.add_argument("--no-update", action="store_true", help="serve inference only")
    parser.add_argument("--epochs", type=int, default=150)
    parser.add_argument("--lr", type=float, default=5e-3)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--max-context", type=int, default=512)
    parser.add_argument("--hidden", type=int, default=256)
    args = parser.parse_args(argv)
    return AdapterConfig(
        model_path=args.model,
        update_strategy=NO_UPDATE if args.no_update else "finetune",
        epochs=args.epochs,
        learning_rate=args.lr,
        seed=args.seed,
        max_context=args.max_context,
        hidden_size=args.hidden,
    )


def main(argv=None) -> int:
    AdapterServer(parse_args(argv)).serve()
    return 0


if __name__ == "__main__":
    sys.exit(main())
