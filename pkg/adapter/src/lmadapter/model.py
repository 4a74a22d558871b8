"""Byte-level recurrent language model with finetuning on tool-use records.

Small enough to train on CPU in seconds, real enough to exercise the whole
serving path: autoregressive byte decoding, stop-marker enforcement by string
truncation (delimiters may split across tokens, so truncation is the only
tokenizer-safe guarantee), and gradient finetuning on the two sub-sequences
of every record: task input -> tool call, and full tool hop -> task output.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass

import torch
from torch import nn

from .config import AdapterConfig

BOS = 256
EOS = 257
VOCAB = 258


def escape_bars(text: str) -> str:
    return text.replace("|", "\\|")


def record_pairs(record: dict) -> list[tuple[str, str]]:
    """Training pairs from one tool-use record (JSONL schema fields)."""
    x = escape_bars(record["input"])
    t = escape_bars(record["tool_input"])
    r = escape_bars(record["tool_output"])
    y = escape_bars(record["output"])
    label = record["tool_label"]
    tool_prefix = f"|question {x} "
    tool_target = f"|{label} {t} |result"
    out_prefix = f"|question {x} |{label} {t} |result {r} "
    out_target = f"|output {y}"
    return [(tool_prefix, tool_target), (out_prefix, out_target)]


def _derived_seed(base: int, prefix: str) -> int:
    blob = f"{base}\x1f{prefix}".encode("utf-8")
    return int.from_bytes(hashlib.sha256(blob).digest()[:8], "big") >> 1


@dataclass
class GenerationResult:
    text: str
    stop_reason: str  # "marker" | "max_chars" | "end_of_text"


class ByteLM(nn.Module):
    def __init__(self, config: AdapterConfig):
        super().__init__()
        self.config = config
        torch.manual_seed(config.seed)
        self.embed = nn.Embedding(VOCAB, config.embed_size)
        self.rnn = nn.GRU(config.embed_size, config.hidden_size, batch_first=True)
        self.head = nn.Linear(config.hidden_size, VOCAB)
        self.version = 0
        self.to(config.device)

    # --- decoding ---

    @torch.no_grad()
    def _warm(self, prefix_bytes: bytes) -> tuple[torch.Tensor, torch.Tensor]:
        ids = [BOS] + list(prefix_bytes[-self.config.max_context :])
        tokens = torch.tensor([ids], dtype=torch.long, device=self.config.device)
        output, hidden = self.rnn(self.embed(tokens))
        logits = self.head(output[:, -1])
        return logits, hidden

    @torch.no_grad()
    def _step(self, token: int, hidden: torch.Tensor) -> tuple[torch.Tensor, torch.Tensor]:
        tokens = torch.tensor([[token]], dtype=torch.long, device=self.config.device)
        output, hidden = self.rnn(self.embed(tokens), hidden)
        return self.head(output[:, -1]), hidden

    def generate(
        self,
        prefix: str,
        stop_markers: list[str],
        max_chars: int,
        mode: str = "greedy",
        temperature: float = 1.0,
        top_k: int = 40,
        seed: int = 0,
    ) -> GenerationResult:
        if max_chars <= 0:
            return GenerationResult("", "max_chars")
        self.eval()
        rng = torch.Generator(device="cpu")
        rng.manual_seed(_derived_seed(seed, prefix))
        marker_bytes = [m.encode("utf-8") for m in stop_markers]
        logits, hidden = self._warm(prefix.encode("utf-8"))
        buffer = bytearray()
        hard_cap = min(4 * max_chars, self.config.max_new_bytes)
        ended = False
        while len(buffer) < hard_cap:
            if mode == "random":
                scaled = logits[0] / max(temperature, 1e-6)
                k = min(max(top_k, 1), VOCAB)
                top_values, top_indices = torch.topk(scaled, k)
                probs = torch.softmax(top_values, dim=-1)
                pick = int(top_indices[torch.multinomial(probs, 1, generator=rng)])
            else:  # greedy and (delegated) beam both decode greedily here
                pick = int(torch.argmax(logits[0]))
            if pick == EOS:
                ended = True
                break
            if pick == BOS:
                continue_token = int(torch.argsort(logits[0], descending=True)[1])
                pick = continue_token if continue_token != EOS else EOS
                if pick == EOS:
                    ended = True
                    break
            buffer.append(pick)
            if any(bytes(buffer).endswith(m) for m in marker_bytes):
                break
            logits, hidden = self._step(pick, hidden)

        text = bytes(buffer).decode("utf-8", errors="replace")
        # stop markers are enforced by truncation regardless of how decoding ended
        cut = None
        for marker in stop_markers:
            pos = text.find(marker)
            if pos >= 0 and (cut is None or pos + len(marker) < cut[0] + len(cut[1])):
                cut = (pos, marker)
        if cut is not None and cut[0] + len(cut[1]) <= max_chars:
            return GenerationResult(text[: cut[0] + len(cut[1])], "marker")
        if len(text) > max_chars:
            return GenerationResult(text[:max_chars], "max_chars")
        if ended:
            return GenerationResult(text, "end_of_text")
        return GenerationResult(text, "max_chars" if len(text) >= max_chars else "end_of_text")

    # --- training ---

    def finetune(self, records: list[dict], epochs: int | None = None, lr: float | None = None) -> int:
        if not records:
            raise ValueError("empty dataset")
        pairs = []
        for record in records:
            pairs.extend(record_pairs(record))
        encoded = []
        for prefix, target in pairs:
            prefix_ids = [BOS] + list(prefix.encode("utf-8")[-self.config.max_context :])
            target_ids = list(target.encode("utf-8")) + [EOS]
            encoded.append((prefix_ids, target_ids))

        device = self.config.device
        batch = len(encoded)
        width = max(len(p) + len(t) for p, t in encoded) - 1
        inputs = torch.full((batch, width), BOS, dtype=torch.long, device=device)
        wanted = torch.full((batch, width), -100, dtype=torch.long, device=device)
        for row, (prefix_ids, target_ids) in enumerate(encoded):
            ids = prefix_ids + target_ids
            inputs[row, : len(ids) - 1] = torch.tensor(ids[:-1], dtype=torch.long)
            # loss only on the target region; trailing pad never feeds back
            wanted[row, len(prefix_ids) - 1 : len(ids) - 1] = torch.tensor(
                target_ids, dtype=torch.long
            )

        self.train()
        optimizer = torch.optim.Adam(self.parameters(), lr=lr or self.config.learning_rate)
        for _epoch in range(epochs or self.config.epochs):
            optimizer.zero_grad()
            output, _ = self.rnn(self.embed(inputs))
            logits = self.head(output)
            loss = nn.functional.cross_entropy(
                logits.reshape(-1, VOCAB), wanted.reshape(-1), ignore_index=-100
            )
            loss.backward()
            optimizer.step()
            if loss.item() < 5e-3:
                break
        self.version += 1
        return self.version

    # --- persistence ---

    def save(self, path: str) -> None:
        torch.save({"state": self.state_dict(), "version": self.version}, path)

    def load(self, path: str) -> None:
        payload = torch.load(path, map_location=self.config.device, weights_only=True)
        self.load_state_dict(payload["state"])
        self.version = int(payload.get("version", 0))
