"""Score claim events against evidence events with the three-level attention.

Run with: python demos/02_attention_scores.py
"""

import sys

import numpy as np

from factline import (
    AttentionProjection,
    EventEncoderHandle,
    encode_event,
    extract_events,
    multi_level_scores,
    top_k,
)
from factline.attention import dump_attention_csv
from factline.temporal import earliest_reference

handle = EventEncoderHandle(dim=64, seed=0)

claim_text = (
    "Odile Brandt plays for the Riverton Rovers from 1990 until 1994 and then "
    "Odile Brandt works at the Calder Institute starting in 1996"
)
evidence_texts = [
    "Odile Brandt is a member of the Riverton Rovers from 1990 until 1994",
    "Odile Brandt works at the Calder Institute starting in 1996",
    "Odile Brandt lives in the city of Greyfen from 1988 until 2001",
    "The Calder Institute opened a new wing in 1996",
]

claim_events = extract_events(claim_text, source="claim", id_prefix="c")
evidence_events = [
    extract_events(text, source="evidence", id_prefix=f"e{i}-")[0]
    for i, text in enumerate(evidence_texts)
]

reference = earliest_reference(claim_events, evidence_events)
claim_encs = [encode_event(ev, handle, reference) for ev in claim_events]
ev_encs = [encode_event(ev, handle, reference) for ev in evidence_events]

# an untrained identity projection already gives interpretable cosines
proj = AttentionProjection.identity(64)
scores = multi_level_scores(claim_encs, ev_encs, proj)

print("attention scores (rows = claim events, cols = evidence events)")
with np.printoptions(precision=3, suppress=True):
    print("token level:\n", scores.alpha)
    print("event level:\n", scores.beta)
    print("time  level (0 where a date is missing):\n", scores.gamma)
    print("averaged:\n", scores.omega)
    print("relevance per evidence event:", scores.relevance)

for i, ev in enumerate(claim_events):
    picks = top_k(scores, i, k=2)
    print(f"\ntop evidence for claim event {i} ({ev.raw_text!r}):")
    for j in picks:
        print(f"  omega={scores.omega[i, j]:+.3f}  {evidence_texts[j]}")

print("\nper-pair dump (CSV):")
dump_attention_csv(scores, sys.stdout)
