"""Acceptance suite: every shipped guarantee, one test per criterion.

Each test prints one PASS line (run pytest with -s to see them). The
desk-scale experiments share generated datasets and trained models through
session fixtures, so the whole suite trains each configuration exactly once.
"""

import dataclasses
import io
import itertools
import time

import numpy as np
import pytest

from factline.attention import AttentionProjection, multi_level_scores
from factline.cli import render_verification
from factline.core import (
    Claim,
    Event,
    EvidencePool,
    Label2,
    Provenance,
    claim_from_json,
    pool_from_json,
)
from factline.datagen import (
    balanced_plan,
    generate_dataset,
    soundness_check,
    synthesize_fact_corpus,
)
from factline.encode import EventEncoderHandle, EventEncoding, encode_event
from factline.extract import extract_events
from factline.harness import (
    DatasetExample,
    RunConfig,
    ablate,
    encode_examples,
    evaluate,
    sweep,
    train,
)
from factline.losses import (
    aggregate_masses,
    claim_loss_graph,
    godel_aggregate,
    hard_rule_label,
)
from factline.metrics import confusion_matrix, f1_from_confusion
from factline.model import ModelDims, ModelParams, forward_claim, verify_claim
from factline.temporal import (
    TimeSpan,
    chronological_sort,
    order_consistency_oracle,
    _sort_key,
)


def announce(criterion: int, detail: str) -> None:
    print(f"[criterion {criterion:02d}] PASS - {detail}")


def onehot(index: int, arity: int):
    from factline.core import ProbDist

    probs = [0.0] * arity
    probs[index] = 1.0
    return ProbDist.of(probs)


# --------------------------------------------------------------------------
# Shared desk-scale fixtures
# --------------------------------------------------------------------------

DESK_CONFIG = RunConfig(
    arity=2,
    top_k=3,
    seq_k=3,
    embed_dim=64,
    fc_hidden=192,
    lstm_hidden=32,
    mu=0.3,
    lr=1e-3,
    batch_size=8,
    epochs=3,
    seed=0,
)

SEEDS = (0, 1, 2, 3, 4)


def _to_examples(records):
    return [
        DatasetExample(
            claim=claim_from_json(r["claim"], arity=2),
            pool=pool_from_json(r["evidence"]),
            meta=r["meta"],
        )
        for r in records
    ]


def _encode_all(report, config):
    handle = config.handle()
    return {
        split: encode_examples(
            _to_examples(records), handle, config.budget, config.time_scale
        )
        for split, records in report.records.items()
    }


@pytest.fixture(scope="session")
def desk_data():
    facts = synthesize_fact_corpus(200, seed=11)
    report = generate_dataset(
        facts,
        {"train": balanced_plan(2000), "test": balanced_plan(400)},
        seed=42,
    )
    return _encode_all(report, DESK_CONFIG)


@pytest.fixture(scope="session")
def order_only_data():
    facts = synthesize_fact_corpus(200, seed=12)
    report = generate_dataset(
        facts,
        {"train": balanced_plan(2000), "test": balanced_plan(400)},
        seed=43,
        ref_modes=("order_perturb",),
    )
    return _encode_all(report, DESK_CONFIG)


@pytest.fixture(scope="session")
def run_cache():
    return {}


def desk_run(run_cache, desk_data, mu: float, seed: int):
    """Train (or fetch) one desk-scale model and its test report."""
    key = ("desk", mu, seed)
    if key not in run_cache:
        config = dataclasses.replace(DESK_CONFIG, mu=mu, seed=seed)
        result = train(config, train_examples=desk_data["train"])
        report = evaluate(result.params, desk_data["test"])
        run_cache[key] = (result, report)
    return run_cache[key]


# --------------------------------------------------------------------------
# Criterion 1: fuzzy aggregation agrees with the hard rule on one-hot inputs
# --------------------------------------------------------------------------

def test_criterion_01_truth_table():
    started = time.monotonic()
    checked = 0
    for n in (1, 2, 3):
        for assignment in itertools.product(range(3), repeat=n):
            for order in range(2):
                z = godel_aggregate(
                    [onehot(i, 3) for i in assignment], onehot(order, 2)
                )
                implied = hard_rule_label(list(assignment), order, 3)
                assert int(np.argmax(z.probs)) == implied, (assignment, order)
                checked += 1
    for n in (1, 2, 3):
        for assignment in itertools.product(range(2), repeat=n):
            for order in range(2):
                z = godel_aggregate(
                    [onehot(i, 2) for i in assignment], onehot(order, 2)
                )
                implied = hard_rule_label(list(assignment), order, 2)
                assert int(np.argmax(z.probs)) == implied
                checked += 1
    elapsed = time.monotonic() - started
    assert elapsed < 1.0
    announce(1, f"{checked} one-hot assignments match the hard rule in {elapsed:.3f}s")


# --------------------------------------------------------------------------
# Criterion 2: aggregation hand cases
# --------------------------------------------------------------------------

def test_criterion_02_aggregation_hand_cases():
    from factline.core import ProbDist

    z = godel_aggregate(
        [ProbDist.of([0.7, 0.2, 0.1]), ProbDist.of([0.6, 0.3, 0.1])],
        ProbDist.of([0.9, 0.1]),
    )
    assert np.allclose(z.probs, [0.6, 0.3, 0.1], atol=1e-12)
    clamped = aggregate_masses(0.9, 0.8, arity=3)
    assert np.allclose(clamped.probs, [0.5294, 0.4706, 0.0], atol=1e-4)
    announce(2, "hand-evaluated aggregation cases reproduced")


# --------------------------------------------------------------------------
# Criterion 3: full-model gradients vs central finite differences
# --------------------------------------------------------------------------

def test_criterion_03_full_model_gradient_check():
    started = time.monotonic()
    dims = ModelDims(
        embed_dim=8, fc_hidden=16, lstm_hidden=4, n_max=2, top_k=2, seq_k=2, arity=2
    )
    handle = EventEncoderHandle(dim=8, seed=3)
    claim_sents = [
        "Ansel Varga plays for the Riverton Rovers from 1975 until 1986",
        "Ansel Varga works at the Calder Institute from 1990 until 1995",
    ]
    ev_sents = [
        "Ansel Varga is a member of the Riverton Rovers from 1975 until 1986",
        "Ansel Varga works at the Calder Institute from 1990 until 1995",
        "Ansel Varga lives in the city of Greyfen in 1988",
    ]
    claim_events = [extract_events(s, "claim", f"c{i}-")[0] for i, s in enumerate(claim_sents)]
    ev_events = [extract_events(s, "evidence", f"e{i}-")[0] for i, s in enumerate(ev_sents)]
    reference = min(e.time.start_day for e in claim_events + ev_events)
    claim_encs = [encode_event(e, handle, reference) for e in claim_events]
    ev_encs = [encode_event(e, handle, reference) for e in ev_events]
    ev_keys = [_sort_key(e) for e in ev_events]

    # a generic parameter point (float64, away from the zero-bias kinks)
    params = ModelParams.init(dims, seed=0).astype(np.float64)
    rng = np.random.default_rng(0)
    for tensor in params.tensors.values():
        tensor.data = rng.uniform(-0.5, 0.5, size=tensor.data.shape)

    def loss_tensor():
        fwd = forward_claim(claim_encs, ev_encs, ev_keys, params)
        total, _, _ = claim_loss_graph(fwd, [0, 1], 0, 1, 0.3, 2)
        return total

    total = loss_tensor()
    total.backward()
    analytic = {
        name: (t.grad.copy() if t.grad is not None else np.zeros_like(t.data))
        for name, t in params.tensors.items()
    }
    h = 1e-3
    worst = 0.0
    n_params = 0
    for name, tensor in params.tensors.items():
        numeric = np.zeros_like(tensor.data)
        it = np.nditer(tensor.data, flags=["multi_index"])
        while not it.finished:
            idx = it.multi_index
            original = tensor.data[idx]
            tensor.data[idx] = original + h
            plus = loss_tensor().item()
            tensor.data[idx] = original - h
            minus = loss_tensor().item()
            tensor.data[idx] = original
            numeric[idx] = (plus - minus) / (2 * h)
            it.iternext()
        rel = np.abs(analytic[name] - numeric) / np.maximum(
            np.maximum(np.abs(analytic[name]), np.abs(numeric)), 1e-4
        )
        worst = max(worst, float(rel.max()))
        n_params += tensor.data.size
    elapsed = time.monotonic() - started
    assert worst <= 1e-3, f"max relative error {worst}"
    assert elapsed < 120.0
    announce(
        3,
        f"analytic vs central differences on {n_params} parameters: "
        f"max rel err {worst:.2e} in {elapsed:.1f}s",
    )


# --------------------------------------------------------------------------
# Criterion 4: attention score properties on random encodings
# --------------------------------------------------------------------------

def test_criterion_04_attention_properties():
    rng = np.random.default_rng(17)
    dim = 16
    proj = AttentionProjection(
        token=rng.uniform(-0.5, 0.5, (dim, dim)),
        event=rng.uniform(-0.5, 0.5, (dim, dim)),
        time=rng.uniform(-0.5, 0.5, (dim, dim)),
    )

    def random_encoding(dated):
        d = int(rng.integers(1, 5))
        tokens = rng.standard_normal((d, dim))
        date = rng.standard_normal(dim) if dated else None
        return EventEncoding(cls=tokens.mean(axis=0), tokens=tokens, date=date, dim=dim)

    checked = 0
    for _ in range(1000):
        c = random_encoding(dated=rng.random() < 0.8)
        e = random_encoding(dated=rng.random() < 0.8)
        m = multi_level_scores([c], [e], proj)
        for mat in (m.alpha, m.beta, m.gamma, m.omega):
            assert np.all(mat <= 1.0 + 1e-6) and np.all(mat >= -1.0 - 1e-6)
        assert np.all(np.abs(m.relevance) < 1.0)
        assert np.allclose(m.relevance, np.tanh(m.omega.sum(axis=0)), atol=1e-9)
        for lam in (0.1, 10.0):
            scaled = EventEncoding(
                cls=c.cls * lam,
                tokens=c.tokens * lam,
                date=None if c.date is None else c.date * lam,
                dim=dim,
            )
            ms = multi_level_scores([scaled], [e], proj)
            assert np.allclose(ms.alpha, m.alpha, atol=1e-6)
            assert np.allclose(ms.beta, m.beta, atol=1e-6)
            assert np.allclose(ms.gamma, m.gamma, atol=1e-6)
            assert np.allclose(ms.omega, m.omega, atol=1e-6)
            assert np.allclose(ms.relevance, m.relevance, atol=1e-6)
        checked += 1
    announce(4, f"bounds, tanh identity, and scale invariance on {checked} pairs")


# --------------------------------------------------------------------------
# Criterion 5: chronological sort vs a brute-force stable oracle
# --------------------------------------------------------------------------

def _selection_sort_oracle(events):
    """Independent ordering: repeated linear-scan minimum over sort keys."""
    remaining = list(range(len(events)))
    out = []
    while remaining:
        best = remaining[0]
        for idx in remaining[1:]:
            if _sort_key(events[idx]) < _sort_key(events[best]):
                best = idx
        out.append(best)
        remaining.remove(best)
    return out


def _start_inversions(events, perm):
    starts = [events[i].time.start_day for i in perm]
    return sum(
        1
        for i in range(len(starts))
        for j in range(i + 1, len(starts))
        if starts[i] > starts[j]
    )


def test_criterion_05_sort_oracle():
    base_spans = [
        TimeSpan.from_years(1990, 1991),
        TimeSpan.from_years(1992, 1995),
        TimeSpan.from_years(1992, 1993),
        TimeSpan.from_years(1996, 1996),
        TimeSpan.from_years(1996, 1999),
        TimeSpan.from_years(2001, 2002),
    ]
    total = 0
    for n in range(1, 7):
        spans = base_spans[:n]
        for order in itertools.permutations(range(n)):
            events = [
                Event(
                    id=f"e{pos}",
                    source="evidence",
                    source_index=pos,
                    predicate_tokens=("was",),
                    argument_tokens=(),
                    time=spans[i],
                    raw_text=f"event {i}",
                )
                for pos, i in enumerate(order)
            ]
            perm = chronological_sort(events)
            assert _start_inversions(events, perm) == 0
            # zero is the minimum possible inversion count
            assert perm == _selection_sort_oracle(events)
            total += 1
    announce(5, f"{total} permutations of up to 6 dated events, zero inversions, oracle match")


# --------------------------------------------------------------------------
# Criterion 6: dataset soundness and reproducibility
# --------------------------------------------------------------------------

def test_criterion_06_dataset_soundness(tmp_path):
    started = time.monotonic()
    facts = synthesize_fact_corpus(200, seed=11)
    plans = {"all": balanced_plan(2400)}
    out_a = tmp_path / "a"
    out_b = tmp_path / "b"
    report = generate_dataset(facts, plans, seed=7, out_dir=str(out_a))
    records = report.records["all"]
    assert len(records) == 2400
    assert not report.shortfall
    buckets = {}
    for rec in records:
        assert soundness_check(rec)
        meta = rec["meta"]
        claim = claim_from_json(rec["claim"], arity=2)
        key = (
            meta["expression_mode"],
            meta["n_events"],
            meta["category"],
            claim.gold.claim_label.name,
        )
        buckets[key] = buckets.get(key, 0) + 1
    assert len(buckets) == 24
    assert set(buckets.values()) == {100}
    generate_dataset(facts, plans, seed=7, out_dir=str(out_b))
    assert (out_a / "all.jsonl").read_bytes() == (out_b / "all.jsonl").read_bytes()
    assert (out_a / "stats.csv").read_bytes() == (out_b / "stats.csv").read_bytes()
    elapsed = time.monotonic() - started
    assert elapsed < 60.0
    announce(
        6,
        f"2400 claims, 24 balanced buckets, 100% oracle-sound, "
        f"byte-identical reruns in {elapsed:.1f}s",
    )


# --------------------------------------------------------------------------
# Criterion 7: overfit sanity on 64 claims
# --------------------------------------------------------------------------

@pytest.mark.slow
def test_criterion_07_overfit_sanity():
    started = time.monotonic()
    facts = synthesize_fact_corpus(60, seed=11)
    report = generate_dataset(facts, {"train": balanced_plan(64)}, seed=42)
    config = dataclasses.replace(DESK_CONFIG, seed=7, epochs=200)
    encoded = _encode_all(report, config)
    result = train(config, train_examples=encoded["train"])
    train_report = evaluate(result.params, encoded["train"])
    elapsed = time.monotonic() - started
    assert train_report.claim["accuracy"] >= 0.95
    assert elapsed < 300.0
    announce(
        7,
        f"64-claim training accuracy {train_report.claim['accuracy']:.3f} "
        f"within 200 epochs in {elapsed:.0f}s",
    )


# --------------------------------------------------------------------------
# Criterion 8: desk-scale generalization over 5 seeds
# --------------------------------------------------------------------------

@pytest.mark.slow
def test_criterion_08_generalization(desk_data, run_cache):
    golds = [ex.gold_claim_idx for ex in desk_data["test"]]
    counts = np.bincount(golds, minlength=2)
    majority = int(np.argmax(counts))
    baseline = f1_from_confusion(
        confusion_matrix(golds, [majority] * len(golds), 2)
    )["macro_f1"]
    scores = []
    for seed in SEEDS:
        _, report = desk_run(run_cache, desk_data, mu=0.3, seed=seed)
        scores.append(report.macro_f1)
    mean_score = float(np.mean(scores))
    assert mean_score >= baseline + 0.15, (mean_score, baseline)
    announce(
        8,
        f"mean test macro F1 {mean_score:.4f} over seeds {list(SEEDS)} "
        f"(per-seed {['%.3f' % s for s in scores]}) vs majority baseline "
        f"{baseline:.4f} + 0.15",
    )


# --------------------------------------------------------------------------
# Criterion 9: mu sweep protocol and consistency direction
# --------------------------------------------------------------------------

@pytest.mark.slow
def test_criterion_09_mu_sweep(desk_data, run_cache, tmp_path):
    values = [round(0.1 * i, 1) for i in range(1, 10)]
    config = dataclasses.replace(DESK_CONFIG, out_dir=str(tmp_path))
    rows = sweep(
        config,
        "mu",
        values,
        train_examples=desk_data["train"],
        test_examples=desk_data["test"],
    )
    assert [row["value"] for row in rows] == values
    assert (tmp_path / "sweep_mu.csv").exists()
    for row in rows:
        assert 0.0 <= row["macro_f1"] <= 1.0

    rates = {0.0: [], 0.3: []}
    for mu in (0.0, 0.3):
        for seed in SEEDS:
            _, report = desk_run(run_cache, desk_data, mu=mu, seed=seed)
            rates[mu].append(report.consistency_violation_rate)
    mean_00 = float(np.mean(rates[0.0]))
    mean_03 = float(np.mean(rates[0.3]))
    assert mean_03 <= mean_00, (mean_03, mean_00)
    announce(
        9,
        f"9-point mu sweep table written; consistency violation rate "
        f"{mean_03:.4f} at mu=0.3 <= {mean_00:.4f} at mu=0.0 (5-seed means)",
    )


# --------------------------------------------------------------------------
# Criterion 10: ablations on the order-perturbation-only set
# --------------------------------------------------------------------------

@pytest.mark.slow
def test_criterion_10_ablations(order_only_data):
    config = dataclasses.replace(DESK_CONFIG, seed=0)
    reports = ablate(
        config,
        train_examples=order_only_data["train"],
        test_examples=order_only_data["test"],
    )
    full = reports["full"].macro_f1
    drops = {
        name: full - report.macro_f1
        for name, report in reports.items()
        if name != "full"
    }
    worst = max(drops, key=drops.get)
    assert worst == "no_order_classifier", drops
    announce(
        10,
        "ablation macro-F1 drops vs full "
        + ", ".join(f"{k}={v:+.4f}" for k, v in sorted(drops.items()))
        + f" (full={full:.4f}); largest drop from removing the order classifier",
    )


# --------------------------------------------------------------------------
# Criterion 11: macro/micro F1 against a brute-force oracle
# --------------------------------------------------------------------------

def test_criterion_11_metric_oracle():
    rng = np.random.default_rng(23)
    for n_classes in (2, 3):
        golds = [int(g) for g in rng.integers(0, n_classes, 10_000)]
        preds = [int(p) for p in rng.integers(0, n_classes, 10_000)]
        scores = f1_from_confusion(confusion_matrix(golds, preds, n_classes))
        per_class = []
        for c in range(n_classes):
            tp = sum(1 for g, p in zip(golds, preds) if g == c and p == c)
            fp = sum(1 for g, p in zip(golds, preds) if g != c and p == c)
            fn = sum(1 for g, p in zip(golds, preds) if g == c and p != c)
            precision = tp / (tp + fp) if tp + fp else 0.0
            recall = tp / (tp + fn) if tp + fn else 0.0
            per_class.append(
                2 * precision * recall / (precision + recall)
                if precision + recall
                else 0.0
            )
        macro = float(np.mean(per_class))
        micro = sum(1 for g, p in zip(golds, preds) if g == p) / len(golds)
        assert abs(scores["macro_f1"] - macro) <= 1e-9
        assert abs(scores["micro_f1"] - micro) <= 1e-9
    announce(11, "macro/micro F1 match brute-force counting on 10k pairs (2 and 3 classes)")


# --------------------------------------------------------------------------
# Criterion 12: case-study behaviors
# --------------------------------------------------------------------------

def _evidence_pool(texts, years=None):
    events, provenance = [], []
    for i, text in enumerate(texts):
        extracted = extract_events(text, source="evidence", id_prefix=f"cs{i}-")[0]
        events.append(dataclasses.replace(extracted, id=f"cs-{i}", source_index=i))
        provenance.append(Provenance("case-study", i))
    return EvidencePool(events=tuple(events), provenance=tuple(provenance))


@pytest.mark.slow
def test_criterion_12_case_studies(desk_data, run_cache):
    # (a) undated claim whose narrative order contradicts the listed timeline
    university_timeline = [
        Event(f"t{i}", "evidence", i, ("was",), (), None, text)
        for i, text in enumerate(
            [
                "whilst at university Joris Abel joined the coastal reform party",
                "after graduating Joris Abel began studying for a doctorate",
                "Joris Abel joined the education department of the southern university",
                "Joris Abel became a professor of philosophy at the southern university",
            ]
        )
    ]
    university_claim = [
        Event("c0", "claim", 0, ("began",), (), None, "Joris Abel began studying for a doctorate"),
        Event("c1", "claim", 1, ("became",), (), None, "Joris Abel became a professor of philosophy"),
        Event("c2", "claim", 2, ("joined",), (), None, "Joris Abel joined the coastal reform party"),
    ]
    assert order_consistency_oracle(university_claim, university_timeline) is Label2.REF

    # (b) overlapping memberships told in start order are supported
    overlap_texts = [
        "Darian Voss is a member of the Northgate Rovers from 1975 until 1986",
        "Darian Voss is a member of the Seacliff Athletic from 1977 until 1978",
        "Darian Voss is a member of the Veldmark national squad from 1983 until 1983",
        "Darian Voss is a member of the Lakewood Union from 1986 until 1986",
        "Darian Voss is a member of the Eastbrook City from 1986 until 1989",
    ]
    overlap_pool = _evidence_pool(overlap_texts)
    overlap_claim = [
        dataclasses.replace(ev, id=f"oc{i}", source="claim", source_index=i)
        for i, ev in enumerate(overlap_pool.events)
    ]
    assert order_consistency_oracle(overlap_claim, overlap_pool.events) is Label2.SUP

    # (c) recurring membership resolved to the right occurrence is supported
    recurring_texts = [
        "Goran Albi is a member of the Botern Plodiva from 2002 until 2006",
        "Goran Albi is a member of the Bulgar youth squad from 2003 until 2005",
        "Goran Albi is a member of the Botern Plodiva in 2009",
        "Goran Albi is a member of the Chermon Burgos from 2010 until 2012",
        "Goran Albi is a member of the Beroe Zagora starting in 2015",
    ]
    recurring_pool = _evidence_pool(recurring_texts)
    recurring_claim = [
        dataclasses.replace(ev, id=f"rc{i}", source="claim", source_index=i)
        for i, ev in enumerate(recurring_pool.events)
    ]
    assert order_consistency_oracle(recurring_claim, recurring_pool.events) is Label2.SUP

    # (d) rendering with a model trained on matching synthetic data sorts the
    # evidence chronologically, structured-event path end to end
    result_run, _ = desk_run(run_cache, desk_data, mu=0.3, seed=0)
    claim = Claim(
        id="case-recurring",
        text=" and then ".join(ev.raw_text for ev in recurring_claim),
        events=tuple(recurring_claim),
    )
    verification = verify_claim(
        claim, recurring_pool, result_run.params, DESK_CONFIG.handle()
    )
    buf = io.StringIO()
    render_verification(claim, recurring_pool, verification, buf)
    rendered = buf.getvalue()
    lines = [line.strip() for line in rendered.splitlines()]
    ev_lines = [l for l in lines if l[:2] in {f"{i}." for i in range(1, 6)}]
    rendered_years = [int(l.split(" 20")[-1][:2]) for l in ev_lines]
    assert len(ev_lines) == 5
    # listed order follows the evidence timeline: 2002, 2003, 2009, 2010, 2015
    starts = [
        recurring_pool.events[i].time.start_day
        for i in chronological_sort(recurring_pool.events)
    ]
    assert starts == sorted(starts)
    assert "2002" in ev_lines[0] and "2015" in ev_lines[-1]
    announce(
        12,
        "order oracle refutes the reordered-narrative case, supports the "
        "overlap and recurrence cases; rendered evidence is chronological",
    )
