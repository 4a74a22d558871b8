"""Built-in trainable generator: a two-stage retrieval policy over templates.

This is the desk-scale stand-in for a finetuned seq2seq model. It learns the
two sub-behaviors separately from tool-use records:

  * task input            -> tool call (label + tool input)
  * task input + tool hop -> task output

Inputs are abstracted into number-slot templates (every number token in the
task input becomes a positional slot, and tool inputs / outputs reuse those
slots), so one accepted example generalizes to every instance of the same
phrasing. Retrieval is exact-match on the templated key with a character
4-gram, add-one-smoothed backoff scorer for unseen keys; the chosen template
is instantiated with the query's own numbers. Temperature and top-k act on
the candidate score distribution exactly as they would on logits: scores are
divided by the temperature and a softmax is taken over the top-k candidates.

update() refits from scratch on the given dataset (the round loop always
passes the full tool-use set), so generator behavior is a pure function of
(dataset, version-independent scoring constants), which keeps whole runs
reproducible and resumable.
"""

from __future__ import annotations

import math
import random
import re
from collections import Counter
from typing import Sequence

from ..errors import EmptyDataset, GeneratorError
from .. import protocol
from .base import (
    GenerateRequest,
    GenerateResponse,
    Generator,
    SamplingMode,
    UpdateReport,
    derive_seed,
    truncate_at_stops,
)

_NUM_RE = re.compile(r"\d+(?:\.\d+)?")

# Per-gram average log-likelihood differences between keys are O(0.01..1)
# nats; this scale sharpens the backoff softmax so the nearest stored
# phrasing dominates while a small tail of probability still reaches
# structurally different templates (that tail is what exploration uses).
BACKOFF_SHARPNESS = 100.0

_GRAM_ORDER = 4
_R_SLOT = "\x00r\x00"


def _slot(i: int) -> str:
    return f"\x00{i}\x00"


def _grams(text: str) -> list[str]:
    if len(text) < _GRAM_ORDER:
        return [text] if text else []
    return [text[i : i + _GRAM_ORDER] for i in range(len(text) - _GRAM_ORDER + 1)]


def extract_numbers(text: str) -> tuple[str, list[str]]:
    """Replace each number token with a positional slot; return (template,
    numbers in order of appearance)."""
    nums: list[str] = []

    def repl(match: re.Match) -> str:
        nums.append(match.group())
        return _slot(len(nums) - 1)

    return _NUM_RE.sub(repl, text), nums


def _slot_values(text: str, nums: list[str]) -> str:
    """Replace number tokens that match one of ``nums`` (by string, then by
    value) with that number's slot; unknown numbers stay literal."""
    values = []
    for num in nums:
        try:
            values.append(float(num))
        except ValueError:
            values.append(None)

    def repl(match: re.Match) -> str:
        token = match.group()
        if token in nums:
            return _slot(nums.index(token))
        try:
            value = float(token)
        except ValueError:
            return token
        for i, v in enumerate(values):
            if v is not None and v == value:
                return _slot(i)
        return token

    return _NUM_RE.sub(repl, text)


def _instantiate(template: str, nums: list[str], result: str | None) -> str | None:
    """Fill slots with the query's numbers (and tool result); None when the
    template needs a slot the query does not have."""
    out = template
    if _R_SLOT in out:
        if result is None:
            return None
        out = out.replace(_R_SLOT, result)
    for i in range(len(nums)):
        out = out.replace(_slot(i), nums[i])
    if "\x00" in out:
        return None
    return out


class _Store:
    """One retrieval table: templated key -> Counter of candidate templates."""

    def __init__(self):
        self.candidates: dict[str, Counter] = {}
        self.profiles: dict[str, Counter] = {}
        self.totals: dict[str, int] = {}

    def add(self, key: str, candidate: str) -> None:
        self.candidates.setdefault(key, Counter())[candidate] += 1

    def finalize(self) -> None:
        vocab: set[str] = set()
        for key in self.candidates:
            profile = Counter(_grams(key))
            self.profiles[key] = profile
            self.totals[key] = sum(profile.values())
            vocab.update(profile)
        self.vocab_size = len(vocab) + 1

    def similarity(self, query: str, key: str) -> float:
        grams = _grams(query)
        if not grams:
            return 0.0
        profile = self.profiles[key]
        total = self.totals[key]
        denom = total + self.vocab_size
        loglik = sum(math.log((profile.get(g, 0) + 1) / denom) for g in grams)
        return loglik / len(grams) * BACKOFF_SHARPNESS


class TrainableGenerator(Generator):
    kind = "trainable"
    supports_update = True
    supports_beam = True

    def __init__(self):
        self.version = 0
        self._tool_store = _Store()
        self._output_store = _Store()
        # verbatim record tables: exact inputs dominate template inference
        self._tool_exact: dict[str, Counter] = {}
        self._output_exact: dict[tuple[str, str, str, str], Counter] = {}
        self._pool_cache: dict[str, list[tuple[float, str]]] = {}

    # --- training ---

    def update(self, dataset: Sequence) -> UpdateReport:
        """Refit both retrieval tables from the full dataset.

        Records need fields input / tool_label / tool_input / tool_output /
        output (the tool-use record schema).
        """
        records = list(dataset)
        if not records:
            raise EmptyDataset("update requires at least one record")
        self._tool_store = _Store()
        self._output_store = _Store()
        self._tool_exact = {}
        self._output_exact = {}
        self._pool_cache = {}
        for record in records:
            exact_call = f"{record.tool_label}\x1f{record.tool_input}"
            self._tool_exact.setdefault(record.input, Counter())[exact_call] += 1
            exact_out_key = (record.input, record.tool_label, record.tool_input, record.tool_output)
            self._output_exact.setdefault(exact_out_key, Counter())[record.output] += 1

            x_tpl, nums = extract_numbers(record.input)
            t_tpl = _slot_values(record.tool_input, nums)
            call_tpl = f"{record.tool_label}\x1f{t_tpl}"
            self._tool_store.add(x_tpl, call_tpl)
            out_key = f"{x_tpl}\x1f{record.tool_label}\x1f{t_tpl}"
            if record.output == record.tool_output:
                y_tpl = _R_SLOT
            else:
                y_tpl = _slot_values(record.output, nums)
            self._output_store.add(out_key, y_tpl)
        self._tool_store.finalize()
        self._output_store.finalize()
        self.version += 1
        return UpdateReport(examples_seen=len(records), version=self.version)

    # --- decoding ---

    def generate(self, request: GenerateRequest) -> GenerateResponse:
        pool = self._pool_cache.get(request.prefix)
        if pool is None:
            pool = self._candidate_pool(request.prefix)
            if len(self._pool_cache) > 100_000:
                self._pool_cache.clear()
            self._pool_cache[request.prefix] = pool
        text = self._select(pool, request)
        return truncate_at_stops(text, request.stop_markers, request.max_chars)

    def _candidate_pool(self, prefix: str) -> list[tuple[float, str]]:
        """Scored continuation candidates for a canonical prefix, sorted by
        descending score then text."""
        clean = prefix[:-1] if prefix.endswith(" ") else prefix
        try:
            raws = protocol.split_segments(clean)
        except Exception as exc:
            raise GeneratorError(f"cannot interpret prefix: {exc}") from exc

        x_tpl, nums = extract_numbers(raws[0].body)
        has_result = any(raw.label == protocol.RESULT_LABEL for raw in raws)
        merged: dict[str, float] = {}

        if not has_result:
            exact = self._tool_exact.get(raws[0].body)
            if exact is not None:
                for exact_call, count in exact.items():
                    label, _, t = exact_call.partition("\x1f")
                    emission = f"|{label} {protocol.escape_body(t)} |result"
                    merged[emission] = math.log(count)
                return sorted(
                    ((score, text) for text, score in merged.items()), key=lambda p: (-p[0], p[1])
                )
            for key, sim in self._match(self._tool_store, x_tpl):
                for call_tpl, count in self._tool_store.candidates[key].items():
                    label, _, t_tpl = call_tpl.partition("\x1f")
                    t = _instantiate(t_tpl, nums, None)
                    if t is None:
                        continue
                    emission = f"|{label} {protocol.escape_body(t)} |result"
                    score = sim + math.log(count)
                    if score > merged.get(emission, -math.inf):
                        merged[emission] = score
        else:
            calls = [r for r in raws[1:] if r.label not in (protocol.RESULT_LABEL, protocol.OUTPUT_LABEL)]
            results = [r for r in raws[1:] if r.label == protocol.RESULT_LABEL]
            if not calls:
                raise GeneratorError("prefix has a result segment but no tool call")
            call, result = calls[-1], results[-1]
            exact = self._output_exact.get((raws[0].body, call.label, call.body, result.body))
            if exact is not None:
                for y, count in exact.items():
                    emission = f"|{protocol.OUTPUT_LABEL} {protocol.escape_body(y)}"
                    merged[emission] = math.log(count)
                return sorted(
                    ((score, text) for text, score in merged.items()), key=lambda p: (-p[0], p[1])
                )
            t_tpl = _slot_values(call.body, nums)
            query_key = f"{x_tpl}\x1f{call.label}\x1f{t_tpl}"
            for key, sim in self._match(self._output_store, query_key):
                for y_tpl, count in self._output_store.candidates[key].items():
                    y = _instantiate(y_tpl, nums, result.body)
                    if y is None:
                        continue
                    emission = f"|{protocol.OUTPUT_LABEL} {protocol.escape_body(y)}"
                    score = sim + math.log(count)
                    if score > merged.get(emission, -math.inf):
                        merged[emission] = score

        return sorted(((score, text) for text, score in merged.items()), key=lambda p: (-p[0], p[1]))

    def _match(self, store: _Store, query: str) -> list[tuple[str, float]]:
        if query in store.candidates:
            return [(query, 0.0)]
        return [(key, store.similarity(query, key)) for key in store.candidates]

    def _select(self, pool: list[tuple[float, str]], request: GenerateRequest) -> str:
        if not pool:
            return ""
        spec = request.sampling
        if spec.mode is SamplingMode.GREEDY:
            return pool[0][1]
        if spec.mode is SamplingMode.BEAM:
            # candidate scores are already length-normalized (per-gram sims,
            # log counts), so single-step beam reduces to the top candidate
            return pool[: spec.beam_width][0][1]
        top = pool[: spec.top_k]
        best = top[0][0]
        weights = [math.exp((score - best) / spec.temperature) for score, _ in top]
        rng = random.Random(derive_seed("trainable", spec.seed, request.prefix))
        return rng.choices([text for _, text in top], weights=weights, k=1)[0]
