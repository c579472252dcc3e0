"""Tokenization and determinism helpers."""

from __future__ import annotations

import hashlib
import re

_TOKEN_RE = re.compile(r"[^\s,;.!?()\"]+")

# Function words ignored when matching claim events against timeline events.
STOPWORDS = frozenset(
    """a an the of in on at to for from until and then before after thereafter
    is was were are be been became become becoming he she they it its his her
    their whilst while finally with as by""".split()
)


def tokenize(text: str) -> list[str]:
    """Split text into word tokens, dropping surrounding punctuation."""
    return [t.strip("'-") for t in _TOKEN_RE.findall(text) if t.strip("'-")]


def stable_seed(*parts) -> int:
    """Platform-independent 64-bit seed derived from the given parts."""
    digest = hashlib.blake2b(
        "\x1f".join(str(p) for p in parts).encode("utf-8"), digest_size=8
    ).digest()
    return int.from_bytes(digest, "little")


def content_tokens(text: str) -> set[str]:
    """Lowercased non-stopword, non-numeric tokens used for event matching."""
    out = set()
    for tok in tokenize(text):
        low = tok.lower()
        if low in STOPWORDS or low.isdigit():
            continue
        out.add(low)
    return out
