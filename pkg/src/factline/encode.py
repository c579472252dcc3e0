"""Turn events into numeric encodings: token rows, pooled+positional date vector, CLS.

Two embedding backends exist. The "toy" backend derives a unit vector for
every token from a seeded hash, except year tokens, whose rows encode the
day offset of the year's start so that temporal similarity is learnable.
The "sidecar" backend reads precomputed rows from a binary file keyed by
(event id, token index), for plugging in an external language model.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from datetime import date
from typing import Optional

import numpy as np

from .core import Event
from .errors import ConfigurationError, MissingEmbedding, ValidationError
from .temporal import (
    DEFAULT_TIME_SCALE,
    TimelinePosition,
    day_index,
    positional_encoding,
    temporal_token_mask,
)
from .text import stable_seed

#: Days per unit when a year token is embedded on its own (one unit per year).
DATE_TOKEN_SCALE = 365.25

_YEAR_MIN, _YEAR_MAX = 1000, 2200


@dataclass(frozen=True)
class EventEncoderHandle:
    """Identifies an embedding backend; same handle + same event = same encoding."""

    backend: str = "toy"
    dim: int = 64
    seed: int = 0
    sidecar_path: Optional[str] = None

    def __post_init__(self) -> None:
        if self.backend not in ("toy", "sidecar"):
            raise ConfigurationError(f"unknown encoder backend {self.backend!r}")
        if self.dim < 2:
            raise ConfigurationError(f"encoder dim must be >= 2, got {self.dim}")
        if self.backend == "sidecar" and not self.sidecar_path:
            raise ConfigurationError("sidecar backend needs a sidecar_path")


@dataclass(frozen=True)
class EventEncoding:
    """Per-event representation: CLS vector, token rows, optional date vector."""

    cls: np.ndarray
    tokens: np.ndarray  # [d, dim]
    date: Optional[np.ndarray]
    dim: int

    def __post_init__(self) -> None:
        if self.tokens.ndim != 2 or self.tokens.shape[0] < 1:
            raise ValidationError(f"token matrix has shape {self.tokens.shape}")
        if self.tokens.shape[1] != self.dim or self.cls.shape != (self.dim,):
            raise ValidationError("encoding dimensions are inconsistent")
        if not np.all(np.isfinite(self.tokens)) or not np.all(np.isfinite(self.cls)):
            raise ValidationError("non-finite values in encoding")
        if np.max(np.abs(self.cls - self.tokens.mean(axis=0))) > 1e-6:
            raise ValidationError("cls is not the mean of the token rows")


def _hash_unit_vector(token: str, dim: int, seed: int) -> np.ndarray:
    rng = np.random.default_rng(stable_seed("tok", seed, token))
    v = rng.standard_normal(dim)
    return v / np.linalg.norm(v)


def _year_of_token(token: str) -> Optional[int]:
    if len(token) == 4 and token.isdigit():
        y = int(token)
        if _YEAR_MIN <= y <= _YEAR_MAX:
            return y
    return None


def _year_token_vector(year: int, dim: int) -> np.ndarray:
    # Smooth embedding of the year's first day: nearby years -> nearby rows.
    pos = day_index(date(year, 1, 1)) / DATE_TOKEN_SCALE
    denom = 10000.0 ** (2.0 * np.arange((dim + 1) // 2) / dim)
    v = np.empty(dim, dtype=np.float64)
    v[0::2] = np.sin(pos / denom)[: len(v[0::2])]
    v[1::2] = np.cos(pos / denom)[: len(v[1::2])]
    return v / np.linalg.norm(v)


# --------------------------------------------------------------------------
# Sidecar embedding files
# --------------------------------------------------------------------------

_SIDECAR_VERSION = 1


def write_sidecar(path: str, rows: dict[tuple[str, int], np.ndarray], dim: int) -> None:
    """Write a sidecar embedding file; rows maps (event id, token index) -> vector."""
    items = sorted(rows.items())
    with open(path, "wb") as fh:
        fh.write(struct.pack("<BII", _SIDECAR_VERSION, dim, len(items)))
        index_size = sum(2 + len(k[0].encode()) + 4 + 8 for k, _ in items)
        offset = 9 + index_size
        for (event_id, token_index), vec in items:
            raw = event_id.encode("utf-8")
            fh.write(struct.pack("<H", len(raw)))
            fh.write(raw)
            fh.write(struct.pack("<Iq", token_index, offset))
            offset += 4 * dim
        for (_, _), vec in items:
            if vec.shape != (dim,):
                raise ValidationError(f"sidecar row has shape {vec.shape}, want ({dim},)")
            fh.write(np.asarray(vec, dtype="<f4").tobytes())


class SidecarEmbeddings:
    """Reader for sidecar embedding files."""

    def __init__(self, path: str):
        with open(path, "rb") as fh:
            blob = fh.read()
        version, dim, count = struct.unpack_from("<BII", blob, 0)
        if version != _SIDECAR_VERSION:
            raise ValidationError(f"unsupported sidecar version {version}")
        self.dim = dim
        self._rows: dict[tuple[str, int], np.ndarray] = {}
        pos = 9
        for _ in range(count):
            (name_len,) = struct.unpack_from("<H", blob, pos)
            pos += 2
            event_id = blob[pos : pos + name_len].decode("utf-8")
            pos += name_len
            token_index, offset = struct.unpack_from("<Iq", blob, pos)
            pos += 12
            row = np.frombuffer(blob, dtype="<f4", count=dim, offset=offset)
            self._rows[(event_id, token_index)] = row.astype(np.float64)

    def get(self, event_id: str, token_index: int) -> np.ndarray:
        try:
            return self._rows[(event_id, token_index)]
        except KeyError:
            raise MissingEmbedding(
                f"no embedding for event {event_id!r} token {token_index}"
            ) from None


_sidecar_cache: dict[str, SidecarEmbeddings] = {}


def _sidecar(path: str) -> SidecarEmbeddings:
    if path not in _sidecar_cache:
        _sidecar_cache[path] = SidecarEmbeddings(path)
    return _sidecar_cache[path]


# --------------------------------------------------------------------------
# Embedding and encoding
# --------------------------------------------------------------------------

def embed_tokens(event: Event, handle: EventEncoderHandle) -> np.ndarray:
    """One unit row per surface token of the event."""
    tokens = event.tokens
    if not tokens:
        raise ValidationError(f"event {event.id!r} has no tokens")
    if handle.backend == "sidecar":
        side = _sidecar(handle.sidecar_path)
        return np.vstack([side.get(event.id, i) for i in range(len(tokens))])
    rows = np.empty((len(tokens), handle.dim), dtype=np.float64)
    for i, tok in enumerate(tokens):
        year = _year_of_token(tok)
        if year is not None:
            rows[i] = _year_token_vector(year, handle.dim)
        else:
            rows[i] = _hash_unit_vector(tok, handle.dim, handle.seed)
    return rows


def encode_event(
    event: Event,
    handle: EventEncoderHandle,
    reference_day: int = 0,
    time_scale: float = DEFAULT_TIME_SCALE,
) -> EventEncoding:
    """Full event encoding relative to the earliest reference day.

    The date vector is the mean of the rows of the tokens consumed by the
    temporal expression, plus the positional encoding of the start-day offset.
    Undated events have no date vector.
    """
    rows = embed_tokens(event, handle)
    cls = rows.mean(axis=0)
    date_vec = None
    if event.time is not None:
        if reference_day > event.time.start_day:
            raise ValidationError(
                f"reference day {reference_day} is after event start "
                f"{event.time.start_day}"
            )
        offset = TimelinePosition(event.time.start_day - reference_day)
        pe = positional_encoding(offset, handle.dim, time_scale)
        mask = temporal_token_mask(event.tokens, event.raw_text)
        if any(mask):
            pooled = rows[np.asarray(mask)].mean(axis=0)
        else:
            # Structured events may carry a span without any dated text.
            pooled = np.zeros(handle.dim)
        date_vec = pooled + pe
    return EventEncoding(cls=cls, tokens=rows, date=date_vec, dim=handle.dim)


def cls_vector(event: Event, handle: EventEncoderHandle) -> np.ndarray:
    """CLS vector only (mean of token rows); used for evidence pre-scoring."""
    return embed_tokens(event, handle).mean(axis=0)
