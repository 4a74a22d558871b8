"""Run manifests: everything needed to re-execute a command bit-identically.

A manifest records the exact argv, seeds, config snapshot, tool registry
description, and content hashes of every input dataset. Replaying a manifest
first checks those hashes, so a rerun either reproduces the original outputs
or refuses loudly.
"""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field
from datetime import datetime, timezone
from pathlib import Path

from .errors import PersistenceError

MANIFEST_VERSION = 1


def sha256_file(path: str | Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as handle:
        for chunk in iter(lambda: handle.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


@dataclass
class RunManifest:
    command: str
    argv: list[str]
    seed: int | None = None
    config: dict = field(default_factory=dict)
    tools: list[dict] = field(default_factory=list)
    dataset_hashes: dict[str, str] = field(default_factory=dict)
    artifacts: list[str] = field(default_factory=list)
    created_at: str = ""

    def save(self, path: str | Path) -> None:
        payload = {
            "manifest_version": MANIFEST_VERSION,
            "command": self.command,
            "argv": self.argv,
            "seed": self.seed,
            "config": self.config,
            "tools": self.tools,
            "dataset_hashes": self.dataset_hashes,
            "artifacts": self.artifacts,
            "created_at": self.created_at or datetime.now(timezone.utc).isoformat(),
        }
        Path(path).write_text(json.dumps(payload, ensure_ascii=False, indent=2) + "\n", encoding="utf-8")

    @classmethod
    def load(cls, path: str | Path) -> "RunManifest":
        try:
            payload = json.loads(Path(path).read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError) as exc:
            raise PersistenceError(f"cannot read manifest {path}: {exc}") from exc
        if payload.get("manifest_version") != MANIFEST_VERSION:
            raise PersistenceError(f"unsupported manifest version: {payload.get('manifest_version')!r}")
        return cls(
            command=payload["command"],
            argv=list(payload["argv"]),
            seed=payload.get("seed"),
            config=payload.get("config", {}),
            tools=payload.get("tools", []),
            dataset_hashes=payload.get("dataset_hashes", {}),
            artifacts=payload.get("artifacts", []),
            created_at=payload.get("created_at", ""),
        )

    def verify_inputs(self) -> list[str]:
        """Return the input paths whose content no longer matches."""
        stale = []
        for path, expected in self.dataset_hashes.items():
            try:
                if sha256_file(path) != expected:
                    stale.append(path)
            except OSError:
                stale.append(path)
        return stale
