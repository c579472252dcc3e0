"""Train a small model on synthetic claims and verify a held-out claim.

Run with: python demos/04_train_and_verify.py   (about ninety seconds on one core)
"""

import sys

from factline.cli import render_verification
from factline.core import claim_from_json, pool_from_json
from factline.datagen import balanced_plan, generate_dataset, synthesize_fact_corpus
from factline.harness import DatasetExample, RunConfig, encode_examples, evaluate, train
from factline.model import verify_claim

config = RunConfig(seed=7, epochs=5, embed_dim=64, lstm_hidden=32, top_k=3)

facts = synthesize_fact_corpus(120, seed=5)
report = generate_dataset(
    facts, {"train": balanced_plan(960), "test": balanced_plan(96)}, seed=17
)


def examples(split):
    return [
        DatasetExample(
            claim=claim_from_json(r["claim"], arity=2),
            pool=pool_from_json(r["evidence"]),
            meta=r["meta"],
        )
        for r in report.records[split]
    ]


handle = config.handle()
train_enc = encode_examples(examples("train"), handle, config.budget, config.time_scale)
test_enc = encode_examples(examples("test"), handle, config.budget, config.time_scale)

print(f"training on {len(train_enc)} claims ...")
result = train(config, train_examples=train_enc)
print(f"  {len(result.history)} steps, final loss {result.history[-1]['total']:.4f}")

metrics = evaluate(result.params, test_enc)
print(f"\ntest macro F1 = {metrics.macro_f1:.4f}, micro F1 = {metrics.micro_f1:.4f}")
print(f"consistency violation rate = {metrics.consistency_violation_rate:.4f}")
print("per-bucket macro F1:")
for axis, rows in metrics.buckets.items():
    cells = ", ".join(f"{k}={v['macro_f1']:.3f}" for k, v in rows.items())
    print(f"  {axis}: {cells}")

sample = examples("test")[0]
verdict = verify_claim(sample.claim, sample.pool, result.params, handle)
print("\n=== verification rendering for one held-out claim ===")
render_verification(sample.claim, sample.pool, verdict, sys.stdout)
gold = sample.claim.gold
print(f"(gold label: {gold.claim_label.name}, gold order: {gold.order_label.name})")
