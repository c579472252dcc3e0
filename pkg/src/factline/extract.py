"""Rule-based event extraction and encoder-similarity pre-scoring of evidence.

Sentences are split into clauses at a fixed set of ordering connectives; each
clause becomes one event whose predicate is found by a closed verb lexicon
plus a morphological fallback. This is deliberately simple and deterministic:
the same sentence always yields byte-identical events.
"""

from __future__ import annotations

import re
from typing import Sequence

import numpy as np

from .core import Event, EvidencePool
from .encode import EventEncoderHandle, cls_vector
from .errors import ConfigurationError, ValidationError
from .temporal import parse_temporal_expression
from .text import tokenize

# Clause connectives, tried in this order ("and then" before bare "then").
CONNECTIVE_PATTERN = re.compile(
    r"\band\s+then\b|\bthereafter\b|\bbefore\b|\bafter\b|,\s*then\b|;", re.I
)

COPULAS = frozenset(
    "is was are were am be been being".split()
)

VERB_LEXICON = COPULAS | frozenset(
    """became become becomes becoming join joins joined joining play plays
    played playing move moves moved moving serve serves served serving work
    works worked working win wins won winning begin begins began beginning
    start starts started starting attack attacks attacked attacking return
    returns returned returning study studies studied studying graduate
    graduates graduated hold holds held lead leads led sign signs signed
    leave leaves left belong belongs belonged belonging represent represents
    represented live lives lived reside resides resided compete competes
    competed coach coaches coached retire retires retired teach teaches
    taught pursue pursues pursued captain captained receive receives
    received earn earns earned hired employed affiliated based""".split()
)

_DETERMINERS = frozenset(("a", "an", "the"))


def _find_predicate(tokens: list[str]) -> tuple[int, int] | None:
    """(start, end) token range of the predicate, or None if no verb found."""
    lower = [t.lower() for t in tokens]
    verb_at = None
    for i, tok in enumerate(lower):
        if tok in VERB_LEXICON:
            verb_at = i
            break
    if verb_at is None:
        for i, tok in enumerate(lower):
            if len(tok) > 4 and (tok.endswith("ing") or tok.endswith("ed")):
                verb_at = i
                break
    if verb_at is None:
        return None
    end = verb_at + 1
    # Copula plus determiner plus nominal reads as one light predicate
    # ("was a member").
    if lower[verb_at] in COPULAS and verb_at + 2 < len(tokens) and lower[verb_at + 1] in _DETERMINERS:
        end = verb_at + 3
    return verb_at, end


def extract_events(
    sentence: str, source: str = "claim", id_prefix: str = "ev"
) -> list[Event]:
    """Split a sentence into clause-level events, in surface order.

    A clause with no recognizable verb still yields an event (predicate =
    first token) flagged low_confidence, so extraction is total.
    """
    if not sentence or not sentence.strip():
        raise ValidationError("cannot extract events from an empty sentence")
    clauses = [c.strip() for c in CONNECTIVE_PATTERN.split(sentence)]
    clauses = [c for c in clauses if c and tokenize(c)]
    if not clauses:
        raise ValidationError(f"no clause content in {sentence!r}")
    events = []
    for idx, clause in enumerate(clauses):
        tokens = tokenize(clause)
        found = _find_predicate(tokens)
        if found is None:
            predicate = (tokens[0],)
            arguments = tuple(tokens[1:])
            low_confidence = True
        else:
            start, end = found
            predicate = tuple(tokens[start:end])
            arguments = tuple(tokens[:start] + tokens[end:])
            low_confidence = False
        events.append(
            Event(
                id=f"{id_prefix}{idx}",
                source=source,
                source_index=idx,
                predicate_tokens=predicate,
                argument_tokens=arguments,
                time=parse_temporal_expression(clause),
                raw_text=clause,
                low_confidence=low_confidence,
            )
        )
    return events


def score_evidence(
    claim_events: Sequence[Event],
    pool: EvidencePool,
    encoder: EventEncoderHandle,
    budget: int = 30,
) -> EvidencePool:
    """Keep the `budget` evidence events most similar to any claim event.

    Similarity is the cosine of CLS vectors, maximized over claim events.
    Ties break on (doc id, sentence id, source index) so the result is
    deterministic; provenance rides along.
    """
    if budget < 1:
        raise ConfigurationError(f"budget must be >= 1, got {budget}")
    if not pool.events:
        return pool
    claim_cls = np.vstack([cls_vector(ev, encoder) for ev in claim_events])
    claim_cls = claim_cls / np.maximum(
        np.linalg.norm(claim_cls, axis=1, keepdims=True), 1e-12
    )
    scored = []
    for i, ev in enumerate(pool.events):
        vec = cls_vector(ev, encoder)
        norm = np.linalg.norm(vec)
        score = 0.0 if norm < 1e-12 else float(np.max(claim_cls @ (vec / norm)))
        prov = pool.provenance[i]
        scored.append((-score, prov.doc_id, prov.sent_id, ev.source_index, i))
    scored.sort()
    keep = [entry[4] for entry in scored[:budget]]
    return EvidencePool(
        events=tuple(pool.events[i] for i in keep),
        provenance=tuple(pool.provenance[i] for i in keep),
    )
