"""Walk through the front of the pipeline: temporal parsing and event extraction.

Run with: python demos/01_parse_and_extract.py
"""

from factline import extract_events, parse_temporal_expression

PHRASES = [
    "in 1953",
    "in March 2023",
    "from 1975 until 1986",
    "from 2002 to 2006",
    "on 22 October 2010",
    "starting in 2015",
    "and then",  # order-only cue: no explicit date
]

print("== temporal expression normalization ==")
for phrase in PHRASES:
    span = parse_temporal_expression(phrase)
    if span is None:
        print(f"{phrase!r:28} -> (no explicit date)")
    else:
        print(
            f"{phrase!r:28} -> {span.start_date} .. {span.end_date} "
            f"[{span.granularity}]"
        )

print()
print("== clause-level event extraction ==")
claim = (
    "Mira Solen was a member of the Riverton Rovers from 1975 until 1986 "
    "before joining the Kestrel Harbour, thereafter becoming part of the "
    "Avaria national squad"
)
print(f"claim: {claim}\n")
for event in extract_events(claim):
    when = "" if event.time is None else f"  @ {event.time.start_date}..{event.time.end_date}"
    print(f"  event {event.source_index}: predicate={' '.join(event.predicate_tokens)!r}")
    print(f"    text: {event.raw_text}{when}")
