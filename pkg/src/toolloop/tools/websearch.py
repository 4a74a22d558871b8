"""External web-search tool adapter.

Swaps the local retrieval index for a public search endpoint: the tool
issues an HTTP GET with the query and returns the top snippet. Endpoint and
credentials come from configuration (typically environment variables), never
from code. Non-deterministic, so it is excluded from replay-based checks.
"""

from __future__ import annotations

import os

import requests

from ..errors import ConfigError, ToolFailure, ToolTimeout
from .base import Tool, ToolDescriptor

ENDPOINT_ENV = "TOOLLOOP_SEARCH_ENDPOINT"
API_KEY_ENV = "TOOLLOOP_SEARCH_API_KEY"


class WebSearchTool(Tool):
    def __init__(
        self,
        endpoint: str,
        api_key: str | None = None,
        label: str = "search",
        timeout_s: float = 10.0,
        max_result_chars: int = 1000,
    ):
        if not endpoint:
            raise ConfigError("web search endpoint must not be empty")
        self.descriptor = ToolDescriptor(
            label, deterministic=False, max_result_chars=max_result_chars
        )
        self.endpoint = endpoint
        self.api_key = api_key
        self.timeout_s = timeout_s

    @classmethod
    def from_env(cls, label: str = "search", **kwargs) -> "WebSearchTool":
        endpoint = os.environ.get(ENDPOINT_ENV, "")
        if not endpoint:
            raise ConfigError(f"set {ENDPOINT_ENV} to use the web search tool")
        return cls(endpoint, api_key=os.environ.get(API_KEY_ENV), label=label, **kwargs)

    def run(self, input_text: str) -> str:
        headers = {}
        if self.api_key:
            headers["Authorization"] = f"Bearer {self.api_key}"
        try:
            response = requests.get(
                self.endpoint,
                params={"q": input_text},
                headers=headers,
                timeout=self.timeout_s,
            )
        except requests.Timeout as exc:
            raise ToolTimeout(f"search timed out after {self.timeout_s}s") from exc
        except requests.RequestException as exc:
            raise ToolFailure(f"search request failed: {exc}") from exc
        if response.status_code != 200:
            raise ToolFailure(f"search endpoint returned HTTP {response.status_code}")
        try:
            payload = response.json()
        except ValueError as exc:
            raise ToolFailure("search endpoint returned non-JSON payload") from exc
        snippet = _top_snippet(payload)
        if snippet is None:
            raise ToolFailure("no snippet in search response")
        return snippet


def _top_snippet(payload) -> str | None:
    if isinstance(payload, dict):
        for key in ("snippet", "text"):
            value = payload.get(key)
            if isinstance(value, str):
                return value
        results = payload.get("results")
        if isinstance(results, list) and results:
            return _top_snippet(results[0])
    return None
