"""Run configuration and the flat key/value config file format."""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from typing import Optional

from .encode import EventEncoderHandle
from .errors import ConfigurationError
from .losses import DEFAULT_MU
from .model import ModelDims
from .temporal import DEFAULT_TIME_SCALE


@dataclass
class RunConfig:
    """Everything a training or evaluation run needs."""

    arity: int = 2
    top_k: int = 3
    seq_k: Optional[int] = None  # defaults to top_k
    n_max: int = 8
    embed_dim: int = 64
    fc_hidden: int = 192
    lstm_hidden: int = 32
    mu: float = DEFAULT_MU
    lr: float = 1e-3
    batch_size: int = 8
    epochs: int = 5
    seed: int = 0
    encoder_seed: int = 0
    budget: int = 30
    time_scale: float = DEFAULT_TIME_SCALE
    no_multilevel_attention: bool = False
    no_event_classifier: bool = False
    no_order_classifier: bool = False
    train_path: Optional[str] = None
    val_path: Optional[str] = None
    test_path: Optional[str] = None
    out_dir: Optional[str] = None

    def __post_init__(self) -> None:
        if self.top_k < 1:
            raise ConfigurationError("top_k must be >= 1")
        if not 0.0 <= self.mu <= 1.0:
            raise ConfigurationError(f"mu must lie in [0, 1], got {self.mu}")
        if self.batch_size < 1 or self.epochs < 0:
            raise ConfigurationError("batch_size must be >= 1 and epochs >= 0")

    def dims(self) -> ModelDims:
        return ModelDims(
            embed_dim=self.embed_dim,
            fc_hidden=self.fc_hidden,
            lstm_hidden=self.lstm_hidden,
            n_max=self.n_max,
            top_k=self.top_k,
            seq_k=self.seq_k if self.seq_k is not None else self.top_k,
            arity=self.arity,
            use_attention=not self.no_multilevel_attention,
            use_event_head=not self.no_event_classifier,
            use_order_head=not self.no_order_classifier,
        )

    def handle(self) -> EventEncoderHandle:
        return EventEncoderHandle(backend="toy", dim=self.embed_dim, seed=self.encoder_seed)

    @classmethod
    def from_file(cls, path: str, **overrides) -> "RunConfig":
        """Parse a flat ``key = value`` config file; # starts a comment."""
        values: dict = {}
        fields = {f.name: f for f in dataclasses.fields(cls)}
        with open(path, "r", encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, 1):
                line = line.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise ConfigurationError(f"{path}:{lineno}: expected key = value")
                key, raw = (part.strip() for part in line.split("=", 1))
                if key not in fields:
                    raise ConfigurationError(f"{path}:{lineno}: unknown key {key!r}")
                values[key] = _coerce(key, raw)
        values.update(overrides)
        return cls(**values)


def _coerce(key: str, raw: str):
    if raw.lower() in ("none", ""):
        return None
    if key in ("mu", "lr", "time_scale"):
        return float(raw)
    if key.startswith("no_"):
        if raw.lower() in ("true", "1", "yes"):
            return True
        if raw.lower() in ("false", "0", "no"):
            return False
        raise ConfigurationError(f"boolean key {key!r} got {raw!r}")
    if key in ("train_path", "val_path", "test_path", "out_dir"):
        return raw
    try:
        return int(raw)
    except ValueError:
        raise ConfigurationError(f"key {key!r} expects an integer, got {raw!r}") from None
