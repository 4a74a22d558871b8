"""Okapi BM25 over an in-memory inverted index.

Tokenization is deliberately simple and fixed: lowercase, runs of ASCII
alphanumerics. Scoring uses k1/b term saturation and length normalization
with idf = ln((N - df + 0.5) / (df + 0.5) + 1), so scores are always
non-negative. The index is immutable once built and safe to share.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path

from ..errors import DuplicateDocId, EmptyCorpus, EmptyQuery, PersistenceError, ToolFailure
from .base import Tool, ToolDescriptor

_TOKEN_RE = re.compile(r"[0-9a-z]+")

INDEX_FORMAT_VERSION = 1


def tokenize(text: str) -> list[str]:
    return _TOKEN_RE.findall(text.lower())


@dataclass(frozen=True)
class Bm25Params:
    k1: float = 1.2
    b: float = 0.75


class Bm25Index:
    """Immutable inverted index with BM25 scoring state."""

    def __init__(self, corpus: list[tuple[str, str]], params: Bm25Params = Bm25Params()):
        if not corpus:
            raise EmptyCorpus("cannot index an empty corpus")
        seen: set[str] = set()
        for doc_id, _ in corpus:
            if doc_id in seen:
                raise DuplicateDocId(f"duplicate doc_id: {doc_id!r}")
            seen.add(doc_id)
        self.documents: tuple[tuple[str, str], ...] = tuple(corpus)
        self.params = params
        self.doc_count = len(corpus)
        self._text_by_id = dict(corpus)
        self.postings: dict[str, list[tuple[str, int]]] = {}
        self.doc_lengths: dict[str, int] = {}
        for doc_id, text in corpus:
            tokens = tokenize(text)
            self.doc_lengths[doc_id] = len(tokens)
            counts: dict[str, int] = {}
            for token in tokens:
                counts[token] = counts.get(token, 0) + 1
            for term in sorted(counts):
                self.postings.setdefault(term, []).append((doc_id, counts[term]))
        self.avg_doc_length = sum(self.doc_lengths.values()) / self.doc_count

    def idf(self, term: str) -> float:
        import math

        df = len(self.postings.get(term, ()))
        return math.log((self.doc_count - df + 0.5) / (df + 0.5) + 1.0)

    def search(self, query: str, k: int = 10) -> list[tuple[str, float]]:
        """Top-k documents by BM25 score; non-increasing scores, ties broken
        by ascending doc_id, zero-score documents omitted."""
        if k < 1:
            raise EmptyQuery("k must be >= 1")
        terms = tokenize(query)
        if not terms:
            raise EmptyQuery("query has no tokens")
        k1, b = self.params.k1, self.params.b
        scores: dict[str, float] = {}
        for term in terms:  # repeated query terms contribute repeatedly
            postings = self.postings.get(term)
            if not postings:
                continue
            idf = self.idf(term)
            for doc_id, tf in postings:
                norm = k1 * (1 - b + b * self.doc_lengths[doc_id] / self.avg_doc_length)
                scores[doc_id] = scores.get(doc_id, 0.0) + idf * tf * (k1 + 1) / (tf + norm)
        ranked = sorted(
            ((doc_id, score) for doc_id, score in scores.items() if score > 0),
            key=lambda pair: (-pair[1], pair[0]),
        )
        return ranked[:k]

    def text(self, doc_id: str) -> str:
        return self._text_by_id[doc_id]

    def save(self, path: str | Path) -> None:
        payload = {
            "format_version": INDEX_FORMAT_VERSION,
            "k1": self.params.k1,
            "b": self.params.b,
            "documents": [[doc_id, text] for doc_id, text in self.documents],
        }
        Path(path).write_text(json.dumps(payload, ensure_ascii=False), encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "Bm25Index":
        try:
            payload = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise PersistenceError(f"cannot read index file {path}: {exc}") from exc
        if payload.get("format_version") != INDEX_FORMAT_VERSION:
            raise PersistenceError(f"unsupported index format: {payload.get('format_version')!r}")
        params = Bm25Params(k1=payload["k1"], b=payload["b"])
        corpus = [(doc_id, text) for doc_id, text in payload["documents"]]
        return cls(corpus, params)


def build_index(corpus: list[tuple[str, str]], params: Bm25Params = Bm25Params()) -> Bm25Index:
    return Bm25Index(corpus, params)


class Bm25SearchTool(Tool):
    """Retrieval tool: returns the text of the best-matching document(s)."""

    def __init__(
        self,
        index: Bm25Index,
        label: str = "search",
        k: int = 1,
        max_result_chars: int = 1000,
    ):
        self.descriptor = ToolDescriptor(label, max_result_chars=max_result_chars)
        self.index = index
        self.k = k

    def run(self, input_text: str) -> str:
        try:
            hits = self.index.search(input_text, self.k)
        except EmptyQuery as exc:
            raise ToolFailure(str(exc)) from exc
        if not hits:
            raise ToolFailure("no matching documents")
        return "\n\n".join(self.index.text(doc_id) for doc_id, _ in hits)
