"""Synthetic benchmark generator for timeline-based claim verification.

Structured facts <subject, relation, object, time_start, time_end> are
organized into per-subject timelines; claims sample N facts in timeline
order, verbalize them from templates (dates kept for the explicit mode,
dropped for the implicit mode), and join them with "and then". Refuted
claims come from two mechanisms: shuffling the sentence order until no
alignment with the timeline is consistent, or corrupting one fact so it
contradicts the timeline. Every emitted example is re-checked against the
order oracle before it is written.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from importlib import resources
from itertools import permutations, product
from typing import IO, Iterable, Optional, Sequence

import numpy as np

from .core import (
    Claim,
    Event,
    EvidencePool,
    GoldLabels,
    Label2,
    Provenance,
    claim_from_json,
    claim_to_json,
    pool_from_json,
    pool_to_json,
    write_jsonl,
)
from .errors import (
    CategoryUnsatisfiable,
    ConfigurationError,
    CorruptionImpossible,
    PerturbationImpossible,
    ValidationError,
)
from .extract import extract_events
from .temporal import (
    DEFAULT_HORIZON,
    TimeSpan,
    exists_monotone_assignment,
    order_consistency_oracle,
)
from .text import stable_seed

EXPRESSION_MODES = ("explicit", "implicit")
CATEGORIES = ("overlapping", "recurring")
EVENT_COUNTS = (3, 4, 5)
CORRUPTION_MODES = ("none", "order_perturb", "fact_corrupt")
CLAIM_CONNECTIVE = " and then "


# --------------------------------------------------------------------------
# Facts and vocabulary
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class FactTuple:
    subject: str
    relation: str
    object: str
    span: TimeSpan

    def __post_init__(self) -> None:
        if not self.subject or not self.relation or not self.object:
            raise ValidationError("fact fields must be non-empty")

    @property
    def key(self) -> tuple[str, str]:
        return (self.relation, self.object)

    def to_json(self) -> dict:
        span = self.span.to_json()
        return {
            "subject": self.subject,
            "relation": self.relation,
            "object": self.object,
            "time_start": span["start"],
            "time_end": span["end"],
            "granularity": span["granularity"],
        }

    @classmethod
    def from_json(cls, obj: dict) -> "FactTuple":
        return cls(
            subject=obj["subject"],
            relation=obj["relation"],
            object=obj["object"],
            span=TimeSpan.from_json(
                {
                    "start": obj["time_start"],
                    "end": obj["time_end"],
                    "granularity": obj.get("granularity", "day"),
                }
            ),
        )


class Vocabulary:
    """Relation phrase templates and object inventories."""

    def __init__(self, data: dict):
        self.given_names: list[str] = list(data["given_names"])
        self.family_names: list[str] = list(data["family_names"])
        self.relations: dict[str, dict] = dict(data["relations"])

    def subjects(self, count: int) -> list[str]:
        combos = [
            f"{g} {f}" for f in self.family_names for g in self.given_names
        ]
        if count > len(combos):
            raise ConfigurationError(
                f"vocabulary supports at most {len(combos)} subjects"
            )
        return combos[:count]

    def objects_for(self, relation: str) -> list[str]:
        if relation not in self.relations:
            return []
        return list(self.relations[relation]["objects"])

    def evidence_template(self, relation: str) -> str:
        entry = self.relations.get(relation)
        if entry is None:
            return "{subject} is linked to the {object}"
        return entry["evidence_template"]

    def claim_templates(self, relation: str) -> list[str]:
        entry = self.relations.get(relation)
        if entry is None:
            return ["{subject} is linked to the {object}"]
        return list(entry["claim_templates"])


def load_vocabulary(path: Optional[str] = None) -> Vocabulary:
    if path is not None:
        with open(path, "r", encoding="utf-8") as fh:
            return Vocabulary(json.load(fh))
    raw = resources.files("factline.data").joinpath("vocabulary.json").read_text()
    return Vocabulary(json.loads(raw))


def save_facts_jsonl(facts: Iterable[FactTuple], fh: IO[str]) -> None:
    write_jsonl((f.to_json() for f in facts), fh)


def load_facts_jsonl(fh: IO[str]) -> list[FactTuple]:
    return [FactTuple.from_json(json.loads(line)) for line in fh if line.strip()]


def load_facts_tsv(fh: IO[str]) -> list[FactTuple]:
    facts = []
    for line in fh:
        line = line.rstrip("\n")
        if not line or line.startswith("#"):
            continue
        parts = line.split("\t")
        if len(parts) not in (5, 6):
            raise ValidationError(f"bad fact row: {line!r}")
        subject, relation, obj, start, end = parts[:5]
        granularity = parts[5] if len(parts) == 6 else "day"
        facts.append(
            FactTuple(
                subject,
                relation,
                obj,
                TimeSpan.from_json(
                    {"start": start, "end": end, "granularity": granularity}
                ),
            )
        )
    return facts


def synthesize_fact_corpus(
    n_subjects: int, seed: int, vocabulary: Optional[Vocabulary] = None
) -> list[FactTuple]:
    """Deterministic synthetic fact corpus.

    Every subject's timeline contains a recurring pair (same club twice,
    disjoint spans) and an overlapping pair (a national squad stint inside a
    club span), so any category can be sampled from any subject.
    """
    vocab = vocabulary or load_vocabulary()
    facts: list[FactTuple] = []
    for subject in vocab.subjects(n_subjects):
        rng = np.random.default_rng(stable_seed("corpus", seed, subject))
        base = 1962 + int(rng.integers(0, 25))
        clubs = [str(c) for c in rng.choice(vocab.objects_for("club_member"), size=3, replace=False)]
        squad = str(rng.choice(vocab.objects_for("national_squad")))
        employer = str(rng.choice(vocab.objects_for("employer")))
        party = str(rng.choice(vocab.objects_for("party_member")))
        city = str(rng.choice(vocab.objects_for("residence")))
        spans = [
            ("club_member", clubs[0], base, base + 3),
            ("national_squad", squad, base + 1, base + 1),
            ("club_member", clubs[1], base + 5, base + 7),
            ("club_member", clubs[0], base + 9, base + 10),
            ("club_member", clubs[2], base + 12, base + 14),
            ("employer", employer, base + 16, base + 19),
            ("party_member", party, base + 21, base + 23),
        ]
        if rng.random() < 0.5:
            spans.append(("residence", city, base + 25, base + 27))
        for relation, obj, y1, y2 in spans:
            facts.append(
                FactTuple(subject, relation, obj, TimeSpan.from_years(y1, y2))
            )
    return facts


# --------------------------------------------------------------------------
# Timeline construction and sampling
# --------------------------------------------------------------------------

def build_timeline(facts: Iterable[FactTuple]) -> dict[str, list[FactTuple]]:
    """Group facts by subject and order each group chronologically."""
    grouped: dict[str, list[FactTuple]] = {}
    for fact in facts:
        grouped.setdefault(fact.subject, []).append(fact)
    for subject, group in grouped.items():
        group.sort(
            key=lambda f: (f.span.start_day, f.span.end_day, f.relation, f.object)
        )
    return grouped


@dataclass(frozen=True)
class GenSpec:
    """Recipe for one synthetic claim."""

    n_events: int
    expression_mode: str
    overlapping: bool
    recurring: bool
    target_label: Label2
    corruption: str
    seed: int

    def __post_init__(self) -> None:
        if self.n_events not in EVENT_COUNTS:
            raise ConfigurationError(f"n_events must be one of {EVENT_COUNTS}")
        if self.expression_mode not in EXPRESSION_MODES:
            raise ConfigurationError(f"unknown expression mode {self.expression_mode!r}")
        if self.corruption not in CORRUPTION_MODES:
            raise ConfigurationError(f"unknown corruption mode {self.corruption!r}")
        if self.target_label is Label2.REF and self.corruption == "none":
            raise ValidationError("refuted claims need a corruption mode")
        if self.target_label is Label2.SUP and self.corruption != "none":
            raise ValidationError("supported claims must not be corrupted")


def _has_recurring(facts: Sequence[FactTuple]) -> bool:
    return any(
        a.key == b.key and not a.span.overlaps(b.span)
        for i, a in enumerate(facts)
        for b in facts[i + 1 :]
    )


def _has_overlapping(facts: Sequence[FactTuple]) -> bool:
    return any(
        a.span.overlaps(b.span) for i, a in enumerate(facts) for b in facts[i + 1 :]
    )


@dataclass(frozen=True)
class SampledClaim:
    facts: tuple[FactTuple, ...]  # in timeline order
    timeline_indices: tuple[int, ...]
    overlapping: bool
    recurring: bool


def sample_claim(timeline: Sequence[FactTuple], spec: GenSpec) -> SampledClaim:
    """Pick n facts in timeline order satisfying the requested category."""
    n = spec.n_events
    if len(timeline) < n:
        raise CategoryUnsatisfiable(
            f"timeline has {len(timeline)} facts, need {n}"
        )
    rng = np.random.default_rng(stable_seed("sample", spec.seed))
    recurring_pairs = [
        (i, j)
        for i in range(len(timeline))
        for j in range(i + 1, len(timeline))
        if timeline[i].key == timeline[j].key
        and not timeline[i].span.overlaps(timeline[j].span)
    ]
    overlap_pairs = [
        (i, j)
        for i in range(len(timeline))
        for j in range(i + 1, len(timeline))
        if timeline[i].span.overlaps(timeline[j].span)
    ]
    base: set[int] = set()
    if spec.recurring:
        if not recurring_pairs:
            raise CategoryUnsatisfiable("no recurring pair in timeline")
        base |= set(recurring_pairs[int(rng.integers(len(recurring_pairs)))])
    if spec.overlapping:
        if not overlap_pairs:
            raise CategoryUnsatisfiable("no overlapping pair in timeline")
        base |= set(overlap_pairs[int(rng.integers(len(overlap_pairs)))])
    if len(base) > n:
        raise CategoryUnsatisfiable("category pairs exceed the event budget")
    remaining = [i for i in range(len(timeline)) if i not in base]

    chosen: Optional[list[int]] = None
    for _ in range(40):
        extra = rng.choice(len(remaining), size=n - len(base), replace=False)
        indices = sorted(base | {remaining[int(e)] for e in extra})
        facts = [timeline[i] for i in indices]
        pure = True
        if not spec.overlapping and _has_overlapping(facts):
            pure = False
        if not spec.recurring and _has_recurring(facts):
            pure = False
        chosen = indices
        if pure:
            break
    assert chosen is not None
    facts = tuple(timeline[i] for i in chosen)
    got_overlap = _has_overlapping(facts)
    got_recurring = _has_recurring(facts)
    if spec.overlapping and not got_overlap:
        raise CategoryUnsatisfiable("sample lost its overlapping pair")
    if spec.recurring and not got_recurring:
        raise CategoryUnsatisfiable("sample lost its recurring pair")
    return SampledClaim(
        facts=facts,
        timeline_indices=tuple(chosen),
        overlapping=got_overlap,
        recurring=got_recurring,
    )


# --------------------------------------------------------------------------
# Corruption
# --------------------------------------------------------------------------

def perturb_order(
    events: Sequence[FactTuple],
    seed: int,
    candidate_starts: Optional[Sequence[Sequence[tuple]]] = None,
) -> list[FactTuple]:
    """Permute events so that no timeline alignment is order-consistent.

    candidate_starts[i] lists (start_day, identity) pairs an oracle could
    match event i against (defaults to the event's own start). Permutations
    are tried in seeded random order; the first violating one wins.
    """
    n = len(events)
    starts = [f.span.start_day for f in events]
    if len(set(starts)) < 2:
        raise PerturbationImpossible("all events share one start day")
    if candidate_starts is None:
        candidate_starts = [[(s, i)] for i, s in enumerate(starts)]
    rng = np.random.default_rng(stable_seed("perturb", seed))
    perms = [p for p in permutations(range(n)) if p != tuple(range(n))]
    order = rng.permutation(len(perms))
    for pi in order:
        perm = perms[int(pi)]
        if not exists_monotone_assignment([candidate_starts[i] for i in perm]):
            return [events[i] for i in perm]
    raise PerturbationImpossible("every permutation aligns with the timeline")


def corrupt_fact(
    event: FactTuple,
    vocabulary: Vocabulary,
    seed: int,
    mode: str = "object",
) -> FactTuple:
    """Replace the object, or shift the span by at least two years."""
    rng = np.random.default_rng(stable_seed("corrupt", seed))
    if mode == "object":
        options = [o for o in vocabulary.objects_for(event.relation) if o != event.object]
        if not options:
            raise CorruptionImpossible(
                f"no alternative object for relation {event.relation!r}"
            )
        return replace(event, object=str(options[int(rng.integers(len(options)))]))
    if mode == "date":
        shift = int(rng.integers(2, 6)) * (1 if rng.random() < 0.5 else -1)
        y1 = event.span.start_date.year + shift
        y2 = event.span.end_date.year + shift
        if y1 < 1 or y2 > 2199:
            shift = -shift
            y1 = event.span.start_date.year + shift
            y2 = event.span.end_date.year + shift
        if event.span.granularity == "year":
            span = TimeSpan.from_years(y1, y2)
        else:
            delta = shift * 365
            span = TimeSpan(
                event.span.start_day + delta,
                event.span.end_day + delta,
                event.span.granularity,
            )
        return replace(event, span=span)
    raise ConfigurationError(f"unknown corruption mode {mode!r}")


# --------------------------------------------------------------------------
# Verbalization
# --------------------------------------------------------------------------

def _date_phrase(span: TimeSpan) -> str:
    y1 = span.start_date.year
    y2 = span.end_date.year
    if span.end_day >= DEFAULT_HORIZON:
        return f" starting in {y1}"
    if span.granularity == "year":
        if y1 == y2:
            return f" in {y1}"
        return f" from {y1} until {y2}"
    if span.granularity == "month":
        return f" in {span.start_date.strftime('%B')} {y1}"
    return f" on {span.start_date.day} {span.start_date.strftime('%B')} {y1}"


def verbalize(
    fact: FactTuple,
    mode: str,
    vocabulary: Vocabulary,
    rng: Optional[np.random.Generator] = None,
) -> str:
    """Render a fact as one sentence; explicit mode keeps the dates.

    Without an rng the canonical (evidence) template is used; with one, a
    claim paraphrase is drawn from the relation's template pool.
    """
    if mode not in EXPRESSION_MODES:
        raise ConfigurationError(f"unknown expression mode {mode!r}")
    if rng is None:
        template = vocabulary.evidence_template(fact.relation)
    else:
        options = vocabulary.claim_templates(fact.relation)
        template = options[int(rng.integers(len(options)))]
    sentence = template.format(subject=fact.subject, object=fact.object)
    if mode == "explicit":
        sentence += _date_phrase(fact.span)
    return sentence


def synthesize_claim(sentences: Sequence[str], connective: str = CLAIM_CONNECTIVE) -> str:
    """Join sentences into one ordered claim."""
    if len(sentences) < 2:
        raise ValidationError("claim synthesis needs at least two sentences")
    return connective.join(sentences)


# --------------------------------------------------------------------------
# Dataset generation
# --------------------------------------------------------------------------

@dataclass(frozen=True)
class BucketSpec:
    expression_mode: str
    n_events: int
    category: str
    label: Label2
    count: int


def balanced_plan(total: int) -> list[BucketSpec]:
    """Spread a split's total evenly over the 24 bucket combinations."""
    combos = list(product(EXPRESSION_MODES, EVENT_COUNTS, CATEGORIES, (Label2.SUP, Label2.REF)))
    base, extra = divmod(total, len(combos))
    plan = []
    for idx, (mode, n, cat, label) in enumerate(combos):
        count = base + (1 if idx < extra else 0)
        if count:
            plan.append(BucketSpec(mode, n, cat, label, count))
    return plan


def _candidate_starts(
    sample_facts: Sequence[FactTuple],
    timeline: Sequence[FactTuple],
    explicit: bool,
) -> list[list[tuple]]:
    """Per sampled fact, the (start, timeline index) pairs an oracle may match."""
    out = []
    for fact in sample_facts:
        cands = []
        for idx, tl in enumerate(timeline):
            if tl.key != fact.key:
                continue
            if explicit and (
                tl.span.start_day != fact.span.start_day
                or tl.span.end_day != fact.span.end_day
            ):
                continue
            cands.append((tl.span.start_day, idx))
        out.append(cands)
    return out


def _generate_example(
    subject: str,
    timeline: Sequence[FactTuple],
    spec: GenSpec,
    vocab: Vocabulary,
    claim_id: str,
) -> dict:
    sample = sample_claim(timeline, spec)
    facts = list(sample.facts)
    original = list(sample.facts)
    rng = np.random.default_rng(stable_seed("example", spec.seed))
    order_label = Label2.SUP
    corrupted: list[int] = []

    if spec.corruption == "order_perturb":
        cands = _candidate_starts(facts, timeline, spec.expression_mode == "explicit")
        pairs = list(zip(facts, cands))
        perm_input = [f for f, _ in pairs]
        permuted = perturb_order(
            perm_input,
            stable_seed("perm", spec.seed),
            candidate_starts=[c for _, c in pairs],
        )
        index_of = {id(f): i for i, f in enumerate(perm_input)}
        order = [index_of[id(f)] for f in permuted]
        facts = [facts[i] for i in order]
        original = [original[i] for i in order]
        order_label = Label2.REF
    elif spec.corruption == "fact_corrupt":
        target = int(rng.integers(len(facts)))
        mode = "date" if spec.expression_mode == "explicit" and rng.random() < 0.5 else "object"
        used_keys = {f.key for f in timeline}
        used_spans = {
            (f.key, f.span.start_day, f.span.end_day) for f in timeline
        }
        bad = None
        for attempt in range(12):
            cand = corrupt_fact(
                facts[target], vocab, stable_seed("corr", spec.seed, attempt), mode
            )
            if mode == "object" and cand.key not in used_keys:
                bad = cand
                break
            if mode == "date" and (
                cand.key,
                cand.span.start_day,
                cand.span.end_day,
            ) not in used_spans:
                bad = cand
                break
        if bad is None:
            raise CorruptionImpossible("could not find a contradicting variant")
        facts[target] = bad
        corrupted = [target]

    sentences = [verbalize(f, spec.expression_mode, vocab, rng) for f in facts]
    claim_text = synthesize_claim(sentences)
    claim_events = extract_events(claim_text, source="claim", id_prefix=f"{claim_id}-e")
    if len(claim_events) != len(facts):
        raise ValidationError(
            f"claim {claim_id}: extracted {len(claim_events)} events "
            f"for {len(facts)} facts"
        )

    slug = subject.lower().replace(" ", "_")
    ev_events = []
    for i, fact in enumerate(timeline):
        sentence = verbalize(fact, "explicit", vocab)
        event = extract_events(sentence, source="evidence", id_prefix=f"{slug}-s{i}-")[0]
        ev_events.append(replace(event, id=f"{slug}-s{i}", source_index=i))
    pool = EvidencePool(
        events=tuple(ev_events),
        provenance=tuple(Provenance(slug, i) for i in range(len(ev_events))),
    )

    event_labels = tuple(
        Label2.REF if i in corrupted else Label2.SUP for i in range(len(facts))
    )
    claim_label = (
        Label2.REF
        if (order_label is Label2.REF or corrupted)
        else Label2.SUP
    )
    claim = Claim(
        id=claim_id,
        text=claim_text,
        events=tuple(claim_events),
        gold=GoldLabels(event_labels, order_label, claim_label),
    )
    meta = {
        "id": claim_id,
        "subject": subject,
        "n_events": len(facts),
        "expression_mode": spec.expression_mode,
        "category": "recurring" if spec.recurring else "overlapping",
        "overlapping": sample.overlapping,
        "recurring": sample.recurring,
        "corruption": spec.corruption,
        "corrupted_events": corrupted,
        "fact_starts": [f.span.start_day for f in original],
        "fact_ends": [f.span.end_day for f in original],
        "fact_keys": [[f.relation, f.object] for f in original],
    }
    return {"claim": claim_to_json(claim), "evidence": pool_to_json(pool), "meta": meta}


def soundness_check(record: dict) -> bool:
    """Gold labels must be derivable from the record itself.

    Supported claims: no corrupted event and the order oracle agrees.
    Refuted claims: a corrupted event exists or the oracle itself refutes.
    """
    claim = claim_from_json(record["claim"], arity=2)
    pool = pool_from_json(record["evidence"])
    meta = record["meta"]
    corrupted = list(meta.get("corrupted_events", []))
    gold = claim.gold
    if gold is None:
        return False
    if gold.claim_label is Label2.SUP:
        if corrupted:
            return False
        return (
            order_consistency_oracle(claim.events, pool.events) is Label2.SUP
            and gold.order_label is Label2.SUP
        )
    if corrupted:
        return all(
            gold.event_labels[i] is Label2.REF for i in corrupted
        )
    return order_consistency_oracle(claim.events, pool.events) is Label2.REF


@dataclass
class GenerationReport:
    counts: dict = field(default_factory=dict)
    shortfall: dict = field(default_factory=dict)
    records: dict = field(default_factory=dict)  # split -> list of record dicts

    def stats_rows(self) -> list[list]:
        """Rows mirroring the benchmark's statistics table layout."""
        splits = sorted(self.records)
        header = ["bucket"]
        for split in splits:
            header += [f"{split}_sup", f"{split}_ref"]
        rows = [header]
        for mode in EXPRESSION_MODES:
            for n in EVENT_COUNTS:
                row = [f"{mode}_{n}_events"]
                for split in splits:
                    for label in ("SUP", "REF"):
                        row.append(self.counts.get((split, mode, n, label), 0))
                rows.append(row)
        for cat in CATEGORIES:
            row = [f"{cat}_events"]
            for split in splits:
                for label in ("SUP", "REF"):
                    row.append(self.counts.get((split, cat, label), 0))
            rows.append(row)
        return rows

    def write_stats_csv(self, fh: IO[str]) -> None:
        for row in self.stats_rows():
            fh.write(",".join(str(v) for v in row))
            fh.write("\n")


def generate_dataset(
    facts: Sequence[FactTuple],
    plans: dict[str, list[BucketSpec]],
    seed: int,
    out_dir: Optional[str] = None,
    ref_modes: Sequence[str] = ("order_perturb", "fact_corrupt"),
    vocabulary: Optional[Vocabulary] = None,
) -> GenerationReport:
    """Emit one JSONL file per split plus a stats table.

    Subjects are cycled deterministically; a subject whose timeline cannot
    satisfy a bucket is skipped. If no subject fits, the bucket is left
    short and reported rather than failing the whole run.
    """
    vocab = vocabulary or load_vocabulary()
    timelines = build_timeline(facts)
    subjects = sorted(timelines)
    if not subjects:
        raise ValidationError("fact corpus is empty")
    report = GenerationReport()
    for split in sorted(plans):
        records = []
        for b_idx, bucket in enumerate(plans[split]):
            made = 0
            for i in range(bucket.count):
                rec_seed = stable_seed(
                    seed, split, bucket.expression_mode, bucket.n_events,
                    bucket.category, bucket.label.name, i,
                )
                corruption = "none"
                if bucket.label is Label2.REF:
                    corruption = ref_modes[i % len(ref_modes)]
                spec = GenSpec(
                    n_events=bucket.n_events,
                    expression_mode=bucket.expression_mode,
                    overlapping=bucket.category == "overlapping",
                    recurring=bucket.category == "recurring",
                    target_label=bucket.label,
                    corruption=corruption,
                    seed=rec_seed,
                )
                rng = np.random.default_rng(stable_seed("subject-pick", rec_seed))
                start = int(rng.integers(len(subjects)))
                record = None
                for probe in range(len(subjects)):
                    subject = subjects[(start + probe) % len(subjects)]
                    claim_id = f"{split}-{b_idx:02d}-{i:05d}"
                    try:
                        record = _generate_example(
                            subject, timelines[subject], spec, vocab, claim_id
                        )
                        break
                    except (CategoryUnsatisfiable, PerturbationImpossible, CorruptionImpossible):
                        continue
                if record is None:
                    key = (split, bucket.expression_mode, bucket.n_events,
                           bucket.category, bucket.label.name)
                    report.shortfall[key] = report.shortfall.get(key, 0) + 1
                    continue
                if not soundness_check(record):
                    raise ValidationError(
                        f"generated record {record['meta']['id']} fails its own gold check"
                    )
                records.append(record)
                made += 1
                meta = record["meta"]
                label = bucket.label.name
                k1 = (split, meta["expression_mode"], meta["n_events"], label)
                report.counts[k1] = report.counts.get(k1, 0) + 1
                k2 = (split, bucket.category, label)
                report.counts[k2] = report.counts.get(k2, 0) + 1
        report.records[split] = records
        if out_dir is not None:
            import os

            os.makedirs(out_dir, exist_ok=True)
            with open(os.path.join(out_dir, f"{split}.jsonl"), "w", encoding="utf-8") as fh:
                write_jsonl(records, fh)
    if out_dir is not None:
        import os

        with open(os.path.join(out_dir, "stats.csv"), "w", encoding="utf-8") as fh:
            report.write_stats_csv(fh)
    return report
