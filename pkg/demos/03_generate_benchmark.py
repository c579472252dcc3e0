"""Build a small synthetic benchmark and inspect one record of each kind.

Run with: python demos/03_generate_benchmark.py
"""

import json

from factline.core import claim_from_json
from factline.datagen import balanced_plan, generate_dataset, synthesize_fact_corpus

facts = synthesize_fact_corpus(n_subjects=40, seed=3)
print(f"fact corpus: {len(facts)} facts over 40 subjects")
print("sample fact:", json.dumps(facts[0].to_json(), indent=2))

report = generate_dataset(
    facts,
    {"train": balanced_plan(96), "test": balanced_plan(24)},
    seed=9,
)
for split, records in report.records.items():
    print(f"\n{split}: {len(records)} claims")

print("\nstatistics table (rows x split/label columns):")
for row in report.stats_rows():
    print("  " + ",".join(str(v) for v in row))

by_kind = {}
for rec in report.records["train"]:
    by_kind.setdefault(rec["meta"]["corruption"], rec)

for kind, rec in by_kind.items():
    claim = claim_from_json(rec["claim"], arity=2)
    print(f"\n--- {kind} ---")
    print("claim:", claim.text)
    print("gold event labels:", [l.name for l in claim.gold.event_labels])
    print("gold order label: ", claim.gold.order_label.name)
    print("gold claim label: ", claim.gold.claim_label.name)
