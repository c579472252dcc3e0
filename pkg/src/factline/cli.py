"""Command-line interface: generate, train, evaluate, sweep, ablate, verify."""

from __future__ import annotations

import argparse
import dataclasses
import json
import sys
from typing import IO, Optional

from .core import (
    Claim,
    EvidencePool,
    Provenance,
    VerificationResult,
    claim_from_json,
    event_from_json,
)
from .datagen import (
    balanced_plan,
    generate_dataset,
    load_facts_jsonl,
    load_facts_tsv,
    synthesize_fact_corpus,
)
from .errors import ConfigurationError, FactlineError
from .extract import extract_events
from .harness import RunConfig, ablate, evaluate, load_dataset, encode_examples, sweep, train
from .model import load_checkpoint, verify_claim
from .temporal import chronological_sort


def _build_config(args: argparse.Namespace) -> RunConfig:
    overrides = {}
    for key in (
        "seed",
        "mu",
        "train_path",
        "val_path",
        "test_path",
        "out_dir",
        "epochs",
        "arity",
    ):
        value = getattr(args, key, None)
        if value is not None:
            overrides[key] = value
    if getattr(args, "k", None) is not None:
        overrides["top_k"] = args.k
        overrides["seq_k"] = args.k
    if getattr(args, "ablation", None):
        flag = f"no_{args.ablation}" if not args.ablation.startswith("no_") else args.ablation
        valid = ("no_multilevel_attention", "no_event_classifier", "no_order_classifier")
        if flag not in valid:
            raise ConfigurationError(f"unknown ablation {args.ablation!r}; choose from {valid}")
        overrides[flag] = True
    if args.config:
        return RunConfig.from_file(args.config, **overrides)
    return RunConfig(**overrides)


def _cmd_generate(args: argparse.Namespace) -> int:
    if args.facts:
        opener = load_facts_tsv if args.facts.endswith(".tsv") else load_facts_jsonl
        with open(args.facts, "r", encoding="utf-8") as fh:
            facts = opener(fh)
    else:
        facts = synthesize_fact_corpus(args.subjects, args.seed or 0)
    plans = {}
    for split, count in (("train", args.train), ("val", args.val), ("test", args.test)):
        if count:
            plans[split] = balanced_plan(count)
    if not plans:
        raise ConfigurationError("nothing to generate: pass --train/--val/--test counts")
    ref_modes = tuple(args.ref_modes.split(","))
    report = generate_dataset(
        facts, plans, args.seed or 0, out_dir=args.out, ref_modes=ref_modes
    )
    for split, records in sorted(report.records.items()):
        print(f"{split}: {len(records)} claims")
    if report.shortfall:
        print(f"shortfall: {sum(report.shortfall.values())} claims could not be generated")
    return 0


def _cmd_train(args: argparse.Namespace) -> int:
    config = _build_config(args)
    if config.train_path is None:
        raise ConfigurationError("training needs --train-path or a config file")
    result = train(config)
    last = result.history[-1] if result.history else {}
    print(
        f"trained {len(result.history)} steps"
        + (f", final loss {last.get('total'):.4f}" if last else "")
        + (f", diverged" if result.diverged else "")
    )
    if result.checkpoint_path:
        print(f"checkpoint: {result.checkpoint_path}")
    return 0


def _cmd_evaluate(args: argparse.Namespace) -> int:
    config = _build_config(args)
    params = load_checkpoint(args.checkpoint)
    data = encode_examples(
        load_dataset(args.data, params.dims.arity),
        config.handle(),
        config.budget,
        config.time_scale,
    )
    report = evaluate(params, data)
    report.render(sys.stdout)
    if args.out_dir:
        import os

        os.makedirs(args.out_dir, exist_ok=True)
        with open(os.path.join(args.out_dir, "metrics.json"), "w", encoding="utf-8") as fh:
            json.dump(report.to_json(), fh, indent=2, sort_keys=True)
    return 0


def _cmd_sweep(args: argparse.Namespace) -> int:
    config = _build_config(args)
    values = [
        float(v) if args.parameter == "mu" else int(v)
        for v in args.values.split(",")
    ]
    rows = sweep(config, args.parameter, values)
    print("value,macro_f1,micro_f1,consistency_violation_rate")
    for row in rows:
        print(
            f"{row['value']},{row['macro_f1']:.4f},{row['micro_f1']:.4f},"
            f"{row['consistency_violation_rate']}"
        )
    return 0


def _cmd_ablate(args: argparse.Namespace) -> int:
    config = _build_config(args)
    reports = ablate(config)
    full = reports["full"].macro_f1
    print("variant,macro_f1,micro_f1,delta_vs_full")
    for name, report in reports.items():
        print(
            f"{name},{report.macro_f1:.4f},{report.micro_f1:.4f},"
            f"{report.macro_f1 - full:+.4f}"
        )
    if args.out_dir:
        import os

        os.makedirs(args.out_dir, exist_ok=True)
        payload = {name: r.to_json() for name, r in reports.items()}
        with open(os.path.join(args.out_dir, "ablation.json"), "w", encoding="utf-8") as fh:
            json.dump(payload, fh, indent=2, sort_keys=True)
    return 0


def _load_verify_claim(args: argparse.Namespace) -> Claim:
    if args.claim_events:
        with open(args.claim_events, "r", encoding="utf-8") as fh:
            events = tuple(event_from_json(json.loads(line)) for line in fh if line.strip())
        text = " and then ".join(ev.raw_text for ev in events)
        return Claim(id="cli-claim", text=text, events=events)
    if not args.claim:
        raise ConfigurationError("pass --claim TEXT or --claim-events FILE")
    events = tuple(extract_events(args.claim, source="claim", id_prefix="cli-c"))
    return Claim(id="cli-claim", text=args.claim, events=events)


def _load_verify_pool(args: argparse.Namespace) -> EvidencePool:
    if not args.evidence:
        return EvidencePool(events=(), provenance=())
    events = []
    provenance = []
    with open(args.evidence, "r", encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            rec = json.loads(line)
            if "raw_text" in rec:  # structured Event records
                ev = event_from_json(rec)
                events.append(ev)
                provenance.append(Provenance("structured", len(events) - 1))
            else:  # {doc_id, sent_id, text} documents
                for ev in extract_events(
                    rec["text"],
                    source="evidence",
                    id_prefix=f"{rec['doc_id']}-{rec['sent_id']}-",
                ):
                    events.append(
                        dataclasses.replace(ev, source_index=rec["sent_id"])
                    )
                    provenance.append(Provenance(rec["doc_id"], rec["sent_id"]))
    return EvidencePool(events=tuple(events), provenance=tuple(provenance))


def render_verification(
    claim: Claim, pool: EvidencePool, result: VerificationResult, fh: IO[str]
) -> None:
    """Case-study style table: events, chronological evidence, verdicts."""
    fh.write(f"Claim: {claim.text}\n")
    fh.write("Claim events:\n")
    for i, (ev, label) in enumerate(zip(claim.events, result.event_labels), 1):
        fh.write(f"  c{i}: {ev.raw_text}  [{label.name}]\n")
    fh.write(f"Chronological order: {result.order_label.name}\n")
    fh.write("Evidence events in chronological order:\n")
    if not pool.events:
        fh.write("  (no evidence)\n")
    for rank, idx in enumerate(chronological_sort(pool.events), 1):
        fh.write(f"  {rank}. {pool.events[idx].raw_text}\n")
    fh.write(f"Final claim label: {result.claim_label.name}\n")
    if result.flags:
        fh.write(f"Flags: {', '.join(result.flags)}\n")


def _cmd_verify(args: argparse.Namespace) -> int:
    config = _build_config(args)
    params = load_checkpoint(args.checkpoint)
    claim = _load_verify_claim(args)
    pool = _load_verify_pool(args)
    result = verify_claim(
        claim, pool, params, config.handle(), config.budget, config.time_scale
    )
    render_verification(claim, pool, result, sys.stdout)
    return 0


def _add_common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="flat key = value config file")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--mu", type=float, default=None)
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--ablation", default=None, help="multilevel_attention|event_classifier|order_classifier")
    p.add_argument("--out", dest="out_dir", default=None, help="output directory")
    p.add_argument("--train-path", dest="train_path", default=None)
    p.add_argument("--val-path", dest="val_path", default=None)
    p.add_argument("--test-path", dest="test_path", default=None)
    p.add_argument("--epochs", type=int, default=None)
    p.add_argument("--arity", type=int, default=None)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="factline",
        description="Timeline-based temporal claim verification toolkit.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="build a synthetic benchmark")
    g.add_argument("--facts", help="fact corpus (.jsonl or .tsv); synthesized if omitted")
    g.add_argument("--subjects", type=int, default=120)
    g.add_argument("--train", type=int, default=0)
    g.add_argument("--val", type=int, default=0)
    g.add_argument("--test", type=int, default=0)
    g.add_argument("--ref-modes", default="order_perturb,fact_corrupt")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.set_defaults(func=_cmd_generate)

    t = sub.add_parser("train", help="train a model")
    _add_common(t)
    t.set_defaults(func=_cmd_train)

    e = sub.add_parser("evaluate", help="evaluate a checkpoint")
    _add_common(e)
    e.add_argument("--checkpoint", required=True)
    e.add_argument("--data", required=True)
    e.set_defaults(func=_cmd_evaluate)

    s = sub.add_parser("sweep", help="sensitivity sweep over mu or k")
    _add_common(s)
    s.add_argument("--parameter", choices=("mu", "k"), required=True)
    s.add_argument("--values", required=True, help="comma-separated values")
    s.set_defaults(func=_cmd_sweep)

    a = sub.add_parser("ablate", help="run the module ablations")
    _add_common(a)
    a.set_defaults(func=_cmd_ablate)

    v = sub.add_parser("verify", help="verify one claim against evidence")
    _add_common(v)
    v.add_argument("--checkpoint", required=True)
    v.add_argument("--claim", help="claim text (extractor path)")
    v.add_argument("--claim-events", help="JSONL of structured claim events")
    v.add_argument("--evidence", help="JSONL of documents or structured events")
    v.set_defaults(func=_cmd_verify)

    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except FactlineError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
