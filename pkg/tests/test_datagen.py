"""Synthetic benchmark generation: timelines, sampling, corruption, soundness."""

import io
import itertools

import numpy as np
import pytest

from factline.core import Label2, claim_from_json, pool_from_json
from factline.datagen import (
    BucketSpec,
    FactTuple,
    GenSpec,
    balanced_plan,
    build_timeline,
    corrupt_fact,
    generate_dataset,
    load_facts_jsonl,
    load_facts_tsv,
    load_vocabulary,
    perturb_order,
    sample_claim,
    save_facts_jsonl,
    soundness_check,
    synthesize_claim,
    synthesize_fact_corpus,
    verbalize,
)
from factline.errors import (
    CategoryUnsatisfiable,
    CorruptionImpossible,
    PerturbationImpossible,
    ValidationError,
)
from factline.extract import extract_events
from factline.temporal import TimeSpan, parse_temporal_expression

VOCAB = load_vocabulary()


def fact(subject, relation, obj, y1, y2=None):
    return FactTuple(subject, relation, obj, TimeSpan.from_years(y1, y2 or y1))


class TestTimeline:
    def test_grouping_and_order(self):
        facts = [
            fact("A", "club_member", "Riverton Rovers", 2010, 2012),
            fact("A", "club_member", "Halvard Union", 2002, 2006),
            fact("B", "employer", "Calder Institute", 1999),
            fact("A", "national_squad", "Avaria national squad", 2003, 2005),
        ]
        tl = build_timeline(facts)
        assert set(tl) == {"A", "B"}
        starts = [f.span.start_day for f in tl["A"]]
        assert starts == sorted(starts)

    def test_tie_break_exhaustive_two_facts(self):
        a = fact("S", "club_member", "Riverton Rovers", 2000, 2001)
        b = fact("S", "club_member", "Brockwell City", 2000, 2004)
        for order in ((a, b), (b, a)):
            tl = build_timeline(list(order))["S"]
            # same start: earlier end first; ends equal would fall to relation
            assert tl[0] is a and tl[1] is b

    def test_same_span_relation_tie(self):
        a = fact("S", "club_member", "Riverton Rovers", 2000, 2001)
        b = fact("S", "employer", "Calder Institute", 2000, 2001)
        for order in ((a, b), (b, a)):
            tl = build_timeline(list(order))["S"]
            assert tl[0] is a  # "club_member" < "employer"


class TestCorpus:
    def test_every_subject_supports_both_categories(self):
        facts = synthesize_fact_corpus(12, seed=0)
        timelines = build_timeline(facts)
        assert len(timelines) == 12
        for tl in timelines.values():
            assert len(tl) >= 7
            pairs = list(itertools.combinations(tl, 2))
            assert any(
                x.key == y.key and not x.span.overlaps(y.span) for x, y in pairs
            )
            assert any(x.span.overlaps(y.span) for x, y in pairs)

    def test_deterministic(self):
        assert synthesize_fact_corpus(5, seed=3) == synthesize_fact_corpus(5, seed=3)

    def test_jsonl_round_trip(self):
        facts = synthesize_fact_corpus(2, seed=1)
        buf = io.StringIO()
        save_facts_jsonl(facts, buf)
        buf.seek(0)
        assert load_facts_jsonl(buf) == facts

    def test_tsv_parsing(self):
        row = "Ada Lutz\tclub_member\tRiverton Rovers\t2000-01-01\t2003-12-31\tyear\n"
        facts = load_facts_tsv(io.StringIO(row))
        assert facts[0].subject == "Ada Lutz"
        assert facts[0].span.granularity == "year"


def spec_for(**kw):
    base = dict(
        n_events=3,
        expression_mode="explicit",
        overlapping=False,
        recurring=True,
        target_label=Label2.SUP,
        corruption="none",
        seed=0,
    )
    base.update(kw)
    return GenSpec(**base)


class TestGenSpec:
    def test_label_corruption_consistency(self):
        with pytest.raises(ValidationError):
            spec_for(target_label=Label2.REF, corruption="none")
        with pytest.raises(ValidationError):
            spec_for(target_label=Label2.SUP, corruption="order_perturb")


class TestSampleClaim:
    timeline = build_timeline(synthesize_fact_corpus(4, seed=5))

    def any_timeline(self):
        return next(iter(self.timeline.values()))

    def test_recurring_sample(self):
        tl = self.any_timeline()
        sample = sample_claim(tl, spec_for(recurring=True, seed=11))
        assert sample.recurring
        assert len(sample.facts) == 3
        pairs = itertools.combinations(sample.facts, 2)
        assert any(a.key == b.key and not a.span.overlaps(b.span) for a, b in pairs)

    def test_overlapping_sample(self):
        tl = self.any_timeline()
        sample = sample_claim(
            tl, spec_for(recurring=False, overlapping=True, seed=12)
        )
        assert sample.overlapping

    def test_timeline_order_preserved(self):
        tl = self.any_timeline()
        sample = sample_claim(tl, spec_for(seed=13, n_events=5))
        starts = [f.span.start_day for f in sample.facts]
        assert starts == sorted(starts)

    def test_too_short_timeline(self):
        tl = self.any_timeline()[:2]
        with pytest.raises(CategoryUnsatisfiable):
            sample_claim(tl, spec_for(seed=1))

    def test_category_unsatisfiable(self):
        tl = [
            fact("S", "club_member", "Riverton Rovers", 2000, 2001),
            fact("S", "club_member", "Brockwell City", 2003, 2004),
            fact("S", "employer", "Calder Institute", 2006, 2007),
        ]
        with pytest.raises(CategoryUnsatisfiable):
            sample_claim(tl, spec_for(recurring=True))


class TestPerturbOrder:
    def test_three_events_always_violating(self):
        events = [
            fact("S", "club_member", "Riverton Rovers", 2002, 2002),
            fact("S", "club_member", "Brockwell City", 2003, 2003),
            fact("S", "employer", "Calder Institute", 2009, 2009),
        ]
        for seed in range(12):
            permuted = perturb_order(events, seed)
            starts = [f.span.start_day for f in permuted]
            assert starts != sorted(starts)  # at least one inversion

    def test_two_events_swap(self):
        events = [
            fact("S", "club_member", "Riverton Rovers", 2002),
            fact("S", "employer", "Calder Institute", 2009),
        ]
        permuted = perturb_order(events, 0)
        assert [f.object for f in permuted] == ["Calder Institute", "Riverton Rovers"]

    def test_equal_starts_impossible(self):
        events = [
            fact("S", "club_member", "Riverton Rovers", 2002, 2003),
            fact("S", "employer", "Calder Institute", 2002, 2005),
        ]
        with pytest.raises(PerturbationImpossible):
            perturb_order(events, 0)

    def test_candidate_starts_respected(self):
        # recurring twin: without injectivity the [A, A, B] order would be
        # satisfiable; with candidates the violating permutations are found
        events = [
            fact("S", "club_member", "Riverton Rovers", 2000, 2001),
            fact("S", "employer", "Calder Institute", 2005, 2006),
            fact("S", "club_member", "Riverton Rovers", 2009, 2010),
        ]
        y0 = events[0].span.start_day
        y1 = events[1].span.start_day
        y2 = events[2].span.start_day
        cands = [[(y0, 0), (y2, 2)], [(y1, 1)], [(y0, 0), (y2, 2)]]
        permuted = perturb_order(events, 3, candidate_starts=cands)
        assert len(permuted) == 3


class TestCorruptFact:
    def test_object_swap(self):
        original = fact("S", "club_member", "Riverton Rovers", 2000, 2003)
        swapped = corrupt_fact(original, VOCAB, seed=0, mode="object")
        assert swapped.object != "Riverton Rovers"
        assert swapped.object in VOCAB.objects_for("club_member")
        assert swapped.span == original.span

    def test_date_shift_at_least_two_years(self):
        original = fact("S", "club_member", "Riverton Rovers", 2000, 2003)
        shifted = corrupt_fact(original, VOCAB, seed=1, mode="date")
        delta = abs(shifted.span.start_date.year - 2000)
        assert delta >= 2
        assert shifted.object == original.object

    def test_no_alternative_object(self):
        lone_vocab = load_vocabulary()
        lone_vocab.relations["club_member"]["objects"] = ["Riverton Rovers"]
        original = fact("S", "club_member", "Riverton Rovers", 2000, 2003)
        with pytest.raises(CorruptionImpossible):
            corrupt_fact(original, lone_vocab, seed=0, mode="object")


class TestVerbalize:
    def test_explicit_range(self):
        f = fact("Georg Ansel", "club_member", "Riverton Rovers", 2002, 2006)
        text = verbalize(f, "explicit", VOCAB)
        assert text == "Georg Ansel is a member of the Riverton Rovers from 2002 until 2006"

    def test_implicit_drops_dates(self):
        f = fact("Georg Ansel", "club_member", "Riverton Rovers", 2002, 2006)
        assert (
            verbalize(f, "implicit", VOCAB)
            == "Georg Ansel is a member of the Riverton Rovers"
        )

    def test_point_span(self):
        f = fact("Georg Ansel", "club_member", "Riverton Rovers", 2009)
        assert verbalize(f, "explicit", VOCAB).endswith(" in 2009")

    def test_open_span(self):
        f = FactTuple(
            "Georg Ansel",
            "club_member",
            "Riverton Rovers",
            TimeSpan.open_from_year(2015),
        )
        assert verbalize(f, "explicit", VOCAB).endswith(" starting in 2015")

    def test_unknown_relation_generic_template(self):
        f = fact("Georg Ansel", "mystery_relation", "Foggy Notion", 1999)
        assert "is linked to the Foggy Notion" in verbalize(f, "explicit", VOCAB)

    def test_round_trip_parse(self):
        for f in synthesize_fact_corpus(3, seed=7):
            text = verbalize(f, "explicit", VOCAB)
            span = parse_temporal_expression(text)
            assert span == f.span, text

    def test_paraphrase_pool(self):
        f = fact("Georg Ansel", "club_member", "Riverton Rovers", 2002, 2006)
        seen = set()
        for seed in range(30):
            rng = np.random.default_rng(seed)
            seen.add(verbalize(f, "implicit", VOCAB, rng))
        assert len(seen) == 3


class TestSynthesizeClaim:
    def test_three_sentences(self):
        assert synthesize_claim(["S one", "S two", "S three"]) == (
            "S one and then S two and then S three"
        )

    def test_two_sentences(self):
        assert synthesize_claim(["A runs", "B sleeps"]) == "A runs and then B sleeps"

    def test_minimum_length(self):
        with pytest.raises(ValidationError):
            synthesize_claim(["only one"])

    def test_extractor_round_trip(self):
        rng = np.random.default_rng(0)
        facts = synthesize_fact_corpus(6, seed=2)
        timelines = build_timeline(facts)
        for tl in timelines.values():
            for mode in ("explicit", "implicit"):
                sentences = [verbalize(f, mode, VOCAB, rng) for f in tl[:4]]
                text = synthesize_claim(sentences)
                events = extract_events(text)
                assert len(events) == 4


class TestGenerateDataset:
    def test_counts_and_soundness(self, tmp_path):
        facts = synthesize_fact_corpus(24, seed=4)
        plans = {"train": balanced_plan(48)}
        report = generate_dataset(facts, plans, seed=9, out_dir=str(tmp_path))
        records = report.records["train"]
        assert len(records) == 48
        assert not report.shortfall
        for rec in records:
            assert soundness_check(rec)
        stats = (tmp_path / "stats.csv").read_text().splitlines()
        assert stats[0].startswith("bucket,train_sup,train_ref")
        assert len(stats) == 1 + 6 + 2  # header + mode*events rows + category rows

    def test_byte_identical_reruns(self, tmp_path):
        facts = synthesize_fact_corpus(16, seed=4)
        plans = {"train": balanced_plan(24)}
        out_a = tmp_path / "a"
        out_b = tmp_path / "b"
        generate_dataset(facts, plans, seed=10, out_dir=str(out_a))
        generate_dataset(facts, plans, seed=10, out_dir=str(out_b))
        assert (out_a / "train.jsonl").read_bytes() == (out_b / "train.jsonl").read_bytes()

    def test_seed_changes_output(self, tmp_path):
        facts = synthesize_fact_corpus(16, seed=4)
        plans = {"train": balanced_plan(12)}
        a = generate_dataset(facts, plans, seed=1)
        b = generate_dataset(facts, plans, seed=2)
        assert a.records["train"] != b.records["train"]

    def test_gold_structure(self):
        facts = synthesize_fact_corpus(16, seed=4)
        report = generate_dataset(facts, {"train": balanced_plan(24)}, seed=3)
        for rec in report.records["train"]:
            claim = claim_from_json(rec["claim"], arity=2)
            pool = pool_from_json(rec["evidence"])
            assert claim.gold is not None
            assert len(claim.gold.event_labels) == len(claim.events)
            assert len(pool.events) >= len(claim.events)
            meta = rec["meta"]
            assert meta["n_events"] == len(claim.events)
            if meta["expression_mode"] == "explicit":
                assert all(ev.time is not None for ev in claim.events)
            else:
                assert all(ev.time is None for ev in claim.events)
            ref_claims = claim.gold.claim_label is Label2.REF
            assert ref_claims == (meta["corruption"] != "none")

    def test_ref_mode_restriction(self):
        facts = synthesize_fact_corpus(16, seed=4)
        report = generate_dataset(
            facts, {"train": balanced_plan(24)}, seed=3, ref_modes=("order_perturb",)
        )
        for rec in report.records["train"]:
            assert rec["meta"]["corruption"] in ("none", "order_perturb")

    def test_bucket_purity_recomputable(self):
        facts = synthesize_fact_corpus(20, seed=8)
        report = generate_dataset(facts, {"train": balanced_plan(24)}, seed=6)
        for rec in report.records["train"]:
            meta = rec["meta"]
            starts = meta["fact_starts"]
            ends = meta["fact_ends"]
            keys = [tuple(k) for k in meta["fact_keys"]]
            spans = list(zip(starts, ends))
            pairs = list(itertools.combinations(range(len(keys)), 2))
            has_recurring = any(
                keys[i] == keys[j]
                and (spans[i][1] < spans[j][0] or spans[j][1] < spans[i][0])
                for i, j in pairs
            )
            has_overlap = any(
                max(spans[i][0], spans[j][0]) <= min(spans[i][1], spans[j][1])
                for i, j in pairs
            )
            assert meta["recurring"] == has_recurring
            assert meta["overlapping"] == has_overlap
            if meta["category"] == "recurring":
                assert has_recurring
            else:
                assert has_overlap

    def test_insufficient_corpus_reports_shortfall(self):
        # a corpus with no recurring pairs cannot fill recurring buckets
        facts = [
            fact("Solo Subject", "club_member", "Riverton Rovers", 2000, 2001),
            fact("Solo Subject", "club_member", "Brockwell City", 2000, 2003),
            fact("Solo Subject", "employer", "Calder Institute", 2005, 2006),
        ]
        plan = [BucketSpec("explicit", 3, "recurring", Label2.SUP, 2)]
        report = generate_dataset(facts, {"train": plan}, seed=0)
        assert report.records["train"] == []
        assert sum(report.shortfall.values()) == 2
