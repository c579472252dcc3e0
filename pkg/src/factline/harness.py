"""Training loop, evaluation, parameter sweeps, and ablation runs.

Everything is seeded: shuffling, initialization, and the toy embedder all
derive from RunConfig.seed, so identical configs produce identical
checkpoints and identical metric reports.
"""

from __future__ import annotations

import dataclasses
import json
import os
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from . import autodiff as ad
from .core import Claim, EvidencePool, claim_from_json, pool_from_json
from .encode import EventEncoderHandle, EventEncoding
from .errors import ConfigurationError, ValidationError
from .extract import score_evidence
from .harness_config import RunConfig
from .losses import AdamState, claim_loss_graph, hard_rule_label, optimize_step
from .metrics import MetricsReport, bucket_scores, confusion_matrix, f1_from_confusion
from .model import (
    ModelParams,
    encode_claim_and_pool,
    forward_claim,
    save_checkpoint,
)
from .text import stable_seed

__all__ = [
    "RunConfig",
    "DatasetExample",
    "EncodedExample",
    "load_dataset",
    "encode_examples",
    "TrainResult",
    "train",
    "evaluate",
    "sweep",
    "ablate",
]


@dataclass
class DatasetExample:
    claim: Claim
    pool: EvidencePool
    meta: dict


@dataclass
class EncodedExample:
    """A dataset example with frozen encodings, ready for many train steps."""

    claim_encs: list[EventEncoding]
    ev_encs: list[EventEncoding]
    ev_keys: list[tuple]
    gold_event_idx: list[int]
    gold_order_idx: int
    gold_claim_idx: int
    meta: dict


def load_dataset(path: str, arity: int) -> list[DatasetExample]:
    out = []
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            if not line.strip():
                continue
            rec = json.loads(line)
            out.append(
                DatasetExample(
                    claim=claim_from_json(rec["claim"], arity=arity),
                    pool=pool_from_json(rec["evidence"]),
                    meta=rec.get("meta", {}),
                )
            )
    if not out:
        raise ValidationError(f"dataset {path!r} is empty")
    return out


def encode_examples(
    examples: Sequence[DatasetExample],
    handle: EventEncoderHandle,
    budget: int,
    time_scale: float,
    require_gold: bool = True,
) -> list[EncodedExample]:
    encoded = []
    for ex in examples:
        gold = ex.claim.gold
        if gold is None:
            if require_gold:
                raise ValidationError(f"claim {ex.claim.id!r} has no gold labels")
            event_idx, order_idx, claim_idx = [], 0, 0
        else:
            event_idx = [l.value for l in gold.event_labels]
            order_idx = gold.order_label.value
            claim_idx = gold.claim_label.value
        pool = (
            score_evidence(ex.claim.events, ex.pool, handle, budget)
            if ex.pool.events
            else ex.pool
        )
        claim_encs, ev_encs, ev_keys = encode_claim_and_pool(
            ex.claim, pool, handle, time_scale
        )
        encoded.append(
            EncodedExample(
                claim_encs=claim_encs,
                ev_encs=ev_encs,
                ev_keys=ev_keys,
                gold_event_idx=event_idx,
                gold_order_idx=order_idx,
                gold_claim_idx=claim_idx,
                meta=ex.meta,
            )
        )
    return encoded


def _prepare(config: RunConfig, path: Optional[str]) -> Optional[list[EncodedExample]]:
    if path is None:
        return None
    return encode_examples(
        load_dataset(path, config.arity),
        config.handle(),
        config.budget,
        config.time_scale,
    )


@dataclass
class TrainResult:
    params: ModelParams
    history: list[dict] = field(default_factory=list)
    val_history: list[dict] = field(default_factory=list)
    best_epoch: int = -1
    diverged: bool = False
    checkpoint_path: Optional[str] = None
    log_path: Optional[str] = None


def train(
    config: RunConfig,
    train_examples: Optional[Sequence[EncodedExample]] = None,
    val_examples: Optional[Sequence[EncodedExample]] = None,
) -> TrainResult:
    """Seeded training; keeps the parameters that scored best on validation.

    A non-finite batch loss aborts the run and returns the last good
    parameters; non-finite gradients skip the step and are flagged in the
    log. Pre-encoded examples may be passed to skip dataset loading.
    """
    if train_examples is None:
        train_examples = _prepare(config, config.train_path)
    if train_examples is None:
        raise ConfigurationError("no training data configured")
    if val_examples is None:
        val_examples = _prepare(config, config.val_path)

    dims = config.dims()
    params = ModelParams.init(dims, config.seed)
    state = AdamState()
    rng = np.random.default_rng(stable_seed("train-shuffle", config.seed))
    result = TrainResult(params=params)

    log_fh = None
    if config.out_dir:
        os.makedirs(config.out_dir, exist_ok=True)
        result.log_path = os.path.join(config.out_dir, "train_log.jsonl")
        log_fh = open(result.log_path, "w", encoding="utf-8")

    best_params = None
    best_score = -1.0
    step = 0
    try:
        for epoch in range(config.epochs):
            order = rng.permutation(len(train_examples))
            for lo in range(0, len(order), config.batch_size):
                batch = [train_examples[i] for i in order[lo : lo + config.batch_size]]
                params.zero_grads()
                totals, crosses, softs = [], [], []
                for ex in batch:
                    fwd = forward_claim(ex.claim_encs, ex.ev_encs, ex.ev_keys, params)
                    total, l_cross, l_soft = claim_loss_graph(
                        fwd,
                        ex.gold_event_idx,
                        ex.gold_order_idx,
                        ex.gold_claim_idx,
                        config.mu,
                        dims.arity,
                    )
                    totals.append(total)
                    crosses.append(l_cross)
                    softs.append(l_soft)
                batch_total = totals[0]
                for t in totals[1:]:
                    batch_total = batch_total + t
                batch_total = batch_total * (1.0 / len(totals))
                loss_value = batch_total.item()
                if not np.isfinite(loss_value):
                    result.diverged = True
                    break
                batch_total.backward()
                grads = {name: t.grad for name, t in params.tensors.items()}
                applied = optimize_step(params.tensors, grads, state, lr=config.lr)
                step += 1
                line = {
                    "step": step,
                    "l_cross": float(np.mean(crosses)),
                    "l_soft": float(np.mean(softs)),
                    "total": loss_value,
                    "lr": config.lr,
                }
                if not applied:
                    line["skipped"] = "non_finite_gradient"
                result.history.append(line)
                if log_fh is not None:
                    log_fh.write(json.dumps(line, sort_keys=True) + "\n")
            if result.diverged:
                break
            if val_examples:
                report = evaluate(params, val_examples)
                result.val_history.append(
                    {"epoch": epoch, "macro_f1": report.macro_f1, "micro_f1": report.micro_f1}
                )
                if report.macro_f1 > best_score:
                    best_score = report.macro_f1
                    best_params = params.clone()
                    result.best_epoch = epoch
    finally:
        if log_fh is not None:
            log_fh.close()

    if best_params is not None:
        result.params = best_params
    else:
        result.params = params
    if config.out_dir:
        result.checkpoint_path = os.path.join(config.out_dir, "model.ckpt")
        save_checkpoint(result.params, result.checkpoint_path)
    return result


def predict_example(params: ModelParams, ex: EncodedExample) -> dict:
    """Argmax predictions (ties to the lowest index) for one example."""
    with ad.no_grad():
        fwd = forward_claim(ex.claim_encs, ex.ev_encs, ex.ev_keys, params)
    out = {"claim": int(np.argmax(fwd.claim_dist.data[0]))}
    out["claim_dist"] = fwd.claim_dist.data[0].tolist()
    if fwd.event_dists is not None:
        out["events"] = [int(i) for i in np.argmax(fwd.event_dists.data, axis=1)]
    if fwd.order_dist is not None:
        out["order"] = int(np.argmax(fwd.order_dist.data[0]))
    return out


def evaluate(
    params: ModelParams, examples: Sequence[EncodedExample]
) -> MetricsReport:
    """Claim-level macro/micro F1 with event/order confusions and buckets."""
    if not examples:
        raise ValidationError("cannot evaluate an empty dataset")
    arity = params.dims.arity
    claim_golds, claim_preds = [], []
    order_golds, order_preds = [], []
    event_golds, event_preds = [], []
    violations = []
    tags_events, tags_mode, tags_category = [], [], []
    for ex in examples:
        pred = predict_example(params, ex)
        claim_golds.append(ex.gold_claim_idx)
        claim_preds.append(pred["claim"])
        if "order" in pred:
            order_golds.append(ex.gold_order_idx)
            order_preds.append(pred["order"])
        if "events" in pred:
            event_golds.extend(ex.gold_event_idx)
            event_preds.extend(pred["events"])
        if "order" in pred and "events" in pred:
            implied = hard_rule_label(pred["events"], pred["order"], arity)
            violations.append(1 if implied != pred["claim"] else 0)
        meta = ex.meta or {}
        tags_events.append(meta.get("n_events", len(ex.claim_encs)))
        tags_mode.append(meta.get("expression_mode", "unknown"))
        tags_category.append(meta.get("category", "unknown"))

    claim_cm = confusion_matrix(claim_golds, claim_preds, arity)
    report = MetricsReport(
        n=len(examples),
        claim=f1_from_confusion(claim_cm),
        claim_confusion=claim_cm.tolist(),
    )
    if order_preds:
        order_cm = confusion_matrix(order_golds, order_preds, 2)
        report.order = f1_from_confusion(order_cm)
        report.order_confusion = order_cm.tolist()
    if event_preds:
        event_cm = confusion_matrix(event_golds, event_preds, arity)
        report.event = f1_from_confusion(event_cm)
        report.event_confusion = event_cm.tolist()
    if violations:
        report.consistency_violation_rate = float(np.mean(violations))
    report.buckets = {
        "n_events": bucket_scores(claim_golds, claim_preds, tags_events, arity),
        "expression_mode": bucket_scores(claim_golds, claim_preds, tags_mode, arity),
        "category": bucket_scores(claim_golds, claim_preds, tags_category, arity),
    }
    return report


def sweep(
    config: RunConfig,
    parameter: str,
    values: Sequence,
    train_examples: Optional[Sequence[EncodedExample]] = None,
    val_examples: Optional[Sequence[EncodedExample]] = None,
    test_examples: Optional[Sequence[EncodedExample]] = None,
) -> list[dict]:
    """Train/evaluate once per value of mu or k, under a shared seed."""
    if parameter not in ("mu", "k"):
        raise ConfigurationError(f"sweep parameter must be 'mu' or 'k', got {parameter!r}")
    if not values:
        raise ConfigurationError("sweep needs at least one value")
    if train_examples is None:
        train_examples = _prepare(config, config.train_path)
    if val_examples is None:
        val_examples = _prepare(config, config.val_path)
    if test_examples is None:
        test_examples = _prepare(config, config.test_path)
    if test_examples is None:
        raise ConfigurationError("sweep needs test data")
    rows = []
    for value in values:
        if parameter == "mu":
            cfg = dataclasses.replace(config, mu=float(value), out_dir=None)
        else:
            cfg = dataclasses.replace(
                config, top_k=int(value), seq_k=int(value), out_dir=None
            )
        run = train(cfg, train_examples=train_examples, val_examples=val_examples)
        report = evaluate(run.params, test_examples)
        rows.append(
            {
                "parameter": parameter,
                "value": value,
                "macro_f1": report.macro_f1,
                "micro_f1": report.micro_f1,
                "accuracy": report.claim["accuracy"],
                "consistency_violation_rate": report.consistency_violation_rate,
            }
        )
    if config.out_dir:
        os.makedirs(config.out_dir, exist_ok=True)
        path = os.path.join(config.out_dir, f"sweep_{parameter}.csv")
        with open(path, "w", encoding="utf-8") as fh:
            fh.write("parameter,value,macro_f1,micro_f1,accuracy,consistency_violation_rate\n")
            for row in rows:
                fh.write(
                    f"{row['parameter']},{row['value']},{row['macro_f1']:.6f},"
                    f"{row['micro_f1']:.6f},{row['accuracy']:.6f},"
                    f"{row['consistency_violation_rate']}\n"
                )
    return rows


ABLATION_FLAGS = (
    "no_multilevel_attention",
    "no_event_classifier",
    "no_order_classifier",
)


def ablate(
    config: RunConfig,
    train_examples: Optional[Sequence[EncodedExample]] = None,
    val_examples: Optional[Sequence[EncodedExample]] = None,
    test_examples: Optional[Sequence[EncodedExample]] = None,
) -> dict[str, MetricsReport]:
    """Full model plus the three single-module ablations, identical seeds."""
    if train_examples is None:
        train_examples = _prepare(config, config.train_path)
    if val_examples is None:
        val_examples = _prepare(config, config.val_path)
    if test_examples is None:
        test_examples = _prepare(config, config.test_path)
    if test_examples is None:
        raise ConfigurationError("ablation needs test data")
    reports = {}
    for variant in ("full",) + ABLATION_FLAGS:
        overrides = {flag: (flag == variant) for flag in ABLATION_FLAGS}
        cfg = dataclasses.replace(config, out_dir=None, **overrides)
        run = train(cfg, train_examples=train_examples, val_examples=val_examples)
        reports[variant] = evaluate(run.params, test_examples)
    return reports
