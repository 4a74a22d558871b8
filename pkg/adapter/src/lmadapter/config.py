"""Adapter configuration."""

from __future__ import annotations

from dataclasses import dataclass

NO_UPDATE = "none"
FINETUNE = "finetune"


@dataclass(frozen=True)
class AdapterConfig:
    model_path: str = ""  # optional checkpoint to load/save
    device: str = "cpu"
    max_context: int = 512  # prefix bytes kept (tail) when conditioning
    update_strategy: str = FINETUNE
    epochs: int = 150
    learning_rate: float = 5e-3
    seed: int = 0
    embed_size: int = 64
    hidden_size: int = 256
    max_new_bytes: int = 4096

    @property
    def supports_update(self) -> bool:
        return self.update_strategy == FINETUNE
