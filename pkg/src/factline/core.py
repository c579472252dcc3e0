"""Domain types shared by the whole library, plus label/distribution helpers.

All types here are immutable value objects and safe to share across threads.
The JSONL field names used by ``*_to_json`` / ``*_from_json`` are the wire
schema: lower_snake_case, times as ISO-8601 dates with a granularity tag.
"""

from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from typing import IO, Iterable, Optional, Union

from .errors import ValidationError
from .temporal import TimeSpan
from .text import tokenize

__all__ = [
    "Label3",
    "Label2",
    "ProbDist",
    "Event",
    "GoldLabels",
    "Claim",
    "Provenance",
    "EvidencePool",
    "VerificationResult",
    "label_from_dist",
    "label_for_arity",
]


class Label3(enum.Enum):
    """Three-way verdict. Serialization order SUP < REF < NEI."""

    SUP = 0
    REF = 1
    NEI = 2


class Label2(enum.Enum):
    """Two-way verdict, used for chronological order and 2-class claims."""

    SUP = 0
    REF = 1


Label = Union[Label3, Label2]


def label_for_arity(index: int, arity: int) -> Label:
    """Label of the given index under a 2- or 3-class label set."""
    if arity == 2:
        return Label2(index)
    if arity == 3:
        return Label3(index)
    raise ValidationError(f"label arity must be 2 or 3, got {arity}")


@dataclass(frozen=True)
class ProbDist:
    """A probability distribution over 2 or 3 verdict labels."""

    probs: tuple[float, ...]
    arity: int

    def __post_init__(self) -> None:
        if self.arity not in (2, 3):
            raise ValidationError(f"arity must be 2 or 3, got {self.arity}")
        if len(self.probs) != self.arity:
            raise ValidationError(
                f"{len(self.probs)} probabilities for arity {self.arity}"
            )
        if any(p < -1e-9 for p in self.probs):
            raise ValidationError(f"negative probability in {self.probs}")
        if abs(sum(self.probs) - 1.0) > 1e-6:
            raise ValidationError(f"probabilities sum to {sum(self.probs)}, not 1")

    @classmethod
    def of(cls, values: Iterable[float]) -> "ProbDist":
        vals = tuple(float(v) for v in values)
        return cls(vals, len(vals))

    def __getitem__(self, i: int) -> float:
        return self.probs[i]


def label_from_dist(d: ProbDist, tolerance: float = 1e-4) -> Label:
    """Label with the highest probability; ties break to the lowest index."""
    total = sum(d.probs)
    if abs(total - 1.0) > tolerance:
        raise ValidationError(f"distribution sums to {total}")
    best = max(range(d.arity), key=lambda i: (d.probs[i], -i))
    return label_for_arity(best, d.arity)


@dataclass(frozen=True)
class Event:
    """One predicate-argument unit with an optional temporal span."""

    id: str
    source: str  # "claim" or "evidence"
    source_index: int
    predicate_tokens: tuple[str, ...]
    argument_tokens: tuple[str, ...]
    time: Optional[TimeSpan]
    raw_text: str
    low_confidence: bool = False

    def __post_init__(self) -> None:
        if not self.predicate_tokens:
            raise ValidationError("event has no predicate tokens")
        if not self.raw_text:
            raise ValidationError("event has empty raw_text")
        if self.source_index < 0:
            raise ValidationError("negative source_index")
        if self.source not in ("claim", "evidence"):
            raise ValidationError(f"unknown event source {self.source!r}")

    @property
    def tokens(self) -> list[str]:
        """Surface tokens of the event text (what the encoder embeds)."""
        return tokenize(self.raw_text)


@dataclass(frozen=True)
class GoldLabels:
    event_labels: tuple[Label, ...]
    order_label: Label2
    claim_label: Label


@dataclass(frozen=True)
class Claim:
    id: str
    text: str
    events: tuple[Event, ...]
    gold: Optional[GoldLabels] = None

    def __post_init__(self) -> None:
        if not self.events:
            raise ValidationError(f"claim {self.id!r} has no events")
        if self.gold is not None and len(self.gold.event_labels) != len(self.events):
            raise ValidationError(
                f"claim {self.id!r}: {len(self.gold.event_labels)} event labels "
                f"for {len(self.events)} events"
            )


@dataclass(frozen=True)
class Provenance:
    doc_id: str
    sent_id: int


@dataclass(frozen=True)
class EvidencePool:
    events: tuple[Event, ...]
    provenance: tuple[Provenance, ...]

    def __post_init__(self) -> None:
        if len(self.events) != len(self.provenance):
            raise ValidationError("provenance list does not align with events")
        ids = [ev.id for ev in self.events]
        if len(set(ids)) != len(ids):
            raise ValidationError("duplicate event ids in evidence pool")


@dataclass(frozen=True)
class VerificationResult:
    """Full output of the verification pipeline for one claim."""

    event_dists: tuple[ProbDist, ...]
    event_labels: tuple[Label, ...]
    order_dist: ProbDist
    order_label: Label2
    claim_dist: ProbDist
    claim_label: Label
    evidence_order: tuple[int, ...]
    relevance: tuple[float, ...]
    flags: tuple[str, ...] = ()

    def __post_init__(self) -> None:
        if len(self.event_dists) != len(self.event_labels):
            raise ValidationError("event distributions do not align with labels")
        if sorted(self.evidence_order) != sorted(set(self.evidence_order)):
            raise ValidationError("evidence_order is not a permutation")


# --------------------------------------------------------------------------
# JSONL record schemas
# --------------------------------------------------------------------------

def _label_to_json(label: Label) -> str:
    return label.name


def _label_from_json(name: str, arity: int) -> Label:
    try:
        return Label2[name] if arity == 2 else Label3[name]
    except KeyError:
        raise ValidationError(f"unknown label {name!r}") from None


def event_to_json(ev: Event) -> dict:
    obj = {
        "id": ev.id,
        "source": ev.source,
        "source_index": ev.source_index,
        "predicate_tokens": list(ev.predicate_tokens),
        "argument_tokens": list(ev.argument_tokens),
        "time": ev.time.to_json() if ev.time is not None else None,
        "raw_text": ev.raw_text,
    }
    if ev.low_confidence:
        obj["low_confidence"] = True
    return obj


def event_from_json(obj: dict) -> Event:
    return Event(
        id=obj["id"],
        source=obj["source"],
        source_index=obj["source_index"],
        predicate_tokens=tuple(obj["predicate_tokens"]),
        argument_tokens=tuple(obj["argument_tokens"]),
        time=TimeSpan.from_json(obj["time"]) if obj.get("time") else None,
        raw_text=obj["raw_text"],
        low_confidence=bool(obj.get("low_confidence", False)),
    )


def claim_to_json(claim: Claim, arity: int = 3) -> dict:
    obj: dict = {
        "id": claim.id,
        "text": claim.text,
        "events": [event_to_json(ev) for ev in claim.events],
    }
    if claim.gold is not None:
        obj["gold"] = {
            "event_labels": [_label_to_json(l) for l in claim.gold.event_labels],
            "order_label": _label_to_json(claim.gold.order_label),
            "claim_label": _label_to_json(claim.gold.claim_label),
        }
    return obj


def claim_from_json(obj: dict, arity: int = 3) -> Claim:
    gold = None
    if obj.get("gold"):
        g = obj["gold"]
        gold = GoldLabels(
            event_labels=tuple(
                _label_from_json(name, arity) for name in g["event_labels"]
            ),
            order_label=Label2[g["order_label"]],
            claim_label=_label_from_json(g["claim_label"], arity),
        )
    return Claim(
        id=obj["id"],
        text=obj["text"],
        events=tuple(event_from_json(e) for e in obj["events"]),
        gold=gold,
    )


def pool_to_json(pool: EvidencePool) -> dict:
    return {
        "events": [event_to_json(ev) for ev in pool.events],
        "provenance": [
            {"doc_id": p.doc_id, "sent_id": p.sent_id} for p in pool.provenance
        ],
    }


def pool_from_json(obj: dict) -> EvidencePool:
    return EvidencePool(
        events=tuple(event_from_json(e) for e in obj["events"]),
        provenance=tuple(
            Provenance(p["doc_id"], p["sent_id"]) for p in obj["provenance"]
        ),
    )


def write_jsonl(records: Iterable[dict], fh: IO[str]) -> None:
    for rec in records:
        fh.write(json.dumps(rec, ensure_ascii=False, sort_keys=True))
        fh.write("\n")


def read_jsonl(fh: IO[str]) -> list[dict]:
    return [json.loads(line) for line in fh if line.strip()]
