"""Temporal expression normalization, timeline ordering, and date positional encodings.

Dates live on a single integer axis: the proleptic Gregorian day index, with
day 0 = 0001-01-01. Year- and month-granularity expressions are widened to
full spans (Jan 1..Dec 31, first..last day of month) so that events of mixed
granularity can be ordered and compared on one axis.
"""

from __future__ import annotations

import calendar
import re
from dataclasses import dataclass
from datetime import date
from typing import TYPE_CHECKING, Iterable, Optional, Sequence

import numpy as np

from .errors import ConfigurationError, NoTemporalAnchor, OracleError, ValidationError
from .text import content_tokens

if TYPE_CHECKING:
    from .core import Event, Label2

GRANULARITIES = ("day", "month", "year")


def day_index(d: date) -> int:
    """Day index of a calendar date (0001-01-01 -> 0)."""
    return d.toordinal() - 1


def from_day_index(i: int) -> date:
    return date.fromordinal(i + 1)


#: End day used for open-ended spans such as "starting in 2015".
DEFAULT_HORIZON = day_index(date(2100, 12, 31))

#: Largest supported distance (in days) between an event and the reference date.
OFFSET_CAP_DAYS = 36_500

#: Days per positional-encoding unit; 30.0 makes one unit roughly one month.
DEFAULT_TIME_SCALE = 30.0


@dataclass(frozen=True, order=True)
class TimeSpan:
    """A normalized temporal interval on the day-index axis."""

    start_day: int
    end_day: int
    granularity: str = "day"

    def __post_init__(self) -> None:
        if self.start_day > self.end_day:
            raise ValidationError(f"span start {self.start_day} after end {self.end_day}")
        if self.granularity not in GRANULARITIES:
            raise ValidationError(f"unknown granularity {self.granularity!r}")

    @classmethod
    def from_years(cls, start_year: int, end_year: int) -> "TimeSpan":
        return cls(
            day_index(date(start_year, 1, 1)),
            day_index(date(end_year, 12, 31)),
            "year",
        )

    @classmethod
    def from_month(cls, year: int, month: int) -> "TimeSpan":
        last = calendar.monthrange(year, month)[1]
        return cls(day_index(date(year, month, 1)), day_index(date(year, month, last)), "month")

    @classmethod
    def from_date(cls, d: date) -> "TimeSpan":
        i = day_index(d)
        return cls(i, i, "day")

    @classmethod
    def open_from_year(cls, start_year: int, horizon: int = DEFAULT_HORIZON) -> "TimeSpan":
        return cls(day_index(date(start_year, 1, 1)), horizon, "year")

    @property
    def start_date(self) -> date:
        return from_day_index(self.start_day)

    @property
    def end_date(self) -> date:
        return from_day_index(self.end_day)

    def overlaps(self, other: "TimeSpan") -> bool:
        return max(self.start_day, other.start_day) <= min(self.end_day, other.end_day)

    def to_json(self) -> dict:
        return {
            "start": self.start_date.isoformat(),
            "end": self.end_date.isoformat(),
            "granularity": self.granularity,
        }

    @classmethod
    def from_json(cls, obj: dict) -> "TimeSpan":
        return cls(
            day_index(date.fromisoformat(obj["start"])),
            day_index(date.fromisoformat(obj["end"])),
            obj.get("granularity", "day"),
        )


@dataclass(frozen=True)
class TimelinePosition:
    """Distance in days between an event start and the earliest reference date."""

    offset_days: int

    def __post_init__(self) -> None:
        if not 0 <= self.offset_days <= OFFSET_CAP_DAYS:
            raise ValidationError(
                f"offset {self.offset_days} outside [0, {OFFSET_CAP_DAYS}]"
            )


_MONTHS = {
    name.lower(): i
    for i, name in enumerate(calendar.month_name)
    if name
}
_MONTH_ALT = "|".join(_MONTHS)

# Ordered by priority: ranges first so "from X until Y" never half-matches.
_PATTERNS = (
    ("range", re.compile(r"\bfrom\s+(\d{3,4})\s+(?:to|until)\s+(\d{3,4})\b", re.I)),
    ("on_day", re.compile(rf"\bon\s+(\d{{1,2}})\s+({_MONTH_ALT})\s+(\d{{3,4}})\b", re.I)),
    ("starting", re.compile(r"\bstarting\s+(?:in|from)\s+(\d{3,4})\b", re.I)),
    ("month_year", re.compile(rf"\b(?:in\s+)?({_MONTH_ALT})\s+(\d{{3,4}})\b", re.I)),
    ("from_open", re.compile(r"\bfrom\s+(\d{3,4})\b(?!\s+(?:to|until)\b)", re.I)),
    ("in_year", re.compile(r"\bin\s+(\d{3,4})\b", re.I)),
)


def _span_from_match(kind: str, m: re.Match, horizon: int) -> Optional[TimeSpan]:
    try:
        if kind == "range":
            y1, y2 = int(m.group(1)), int(m.group(2))
            if y2 < y1:
                return None
            return TimeSpan.from_years(y1, y2)
        if kind == "on_day":
            d, month, y = int(m.group(1)), _MONTHS[m.group(2).lower()], int(m.group(3))
            return TimeSpan.from_date(date(y, month, d))
        if kind == "starting":
            return TimeSpan.open_from_year(int(m.group(1)), horizon)
        if kind == "month_year":
            return TimeSpan.from_month(int(m.group(2)), _MONTHS[m.group(1).lower()])
        if kind == "from_open":
            return TimeSpan.open_from_year(int(m.group(1)), horizon)
        if kind == "in_year":
            y = int(m.group(1))
            return TimeSpan.from_years(y, y)
    except ValueError:
        return None
    return None


def find_temporal_expression(
    text: str, horizon: int = DEFAULT_HORIZON
) -> Optional[tuple[TimeSpan, re.Match]]:
    """First recognized temporal expression and its regex match, or None."""
    for kind, pattern in _PATTERNS:
        for m in pattern.finditer(text):
            span = _span_from_match(kind, m, horizon)
            if span is not None:
                return span, m
    return None


def parse_temporal_expression(text: str, horizon: int = DEFAULT_HORIZON) -> Optional[TimeSpan]:
    """Normalize an explicit temporal expression; None for order-only cues.

    Recognizes "in 1953", "March 2023", "from 2002 to 2006",
    "from 1975 until 1986", "on 22 October 2010", "starting in 2015" and the
    open-ended "from 2015" (end mapped to the horizon). Never raises.
    """
    found = find_temporal_expression(text, horizon)
    return found[0] if found else None


def temporal_token_mask(tokens: Sequence[str], raw_text: str) -> list[bool]:
    """Mark the tokens consumed by the first temporal expression in raw_text."""
    found = find_temporal_expression(raw_text)
    if found is None:
        return [False] * len(tokens)
    from .text import tokenize

    phrase = tokenize(found[1].group(0))
    mask = [False] * len(tokens)
    # Locate the phrase as a contiguous token run (case-insensitive).
    low = [t.lower() for t in tokens]
    target = [t.lower() for t in phrase]
    for i in range(len(low) - len(target) + 1):
        if low[i : i + len(target)] == target:
            for j in range(i, i + len(target)):
                mask[j] = True
            break
    return mask


def earliest_reference(
    claim_events: Iterable["Event"], evidence_events: Iterable["Event"]
) -> int:
    """Smallest start day over all dated claim and evidence events."""
    starts = [
        ev.time.start_day
        for ev in list(claim_events) + list(evidence_events)
        if ev.time is not None
    ]
    if not starts:
        raise NoTemporalAnchor("no event carries a date")
    return min(starts)


def positional_encoding(
    position: TimelinePosition, dim: int, time_scale: float = DEFAULT_TIME_SCALE
) -> np.ndarray:
    """Sinusoidal encoding of a timeline position.

    pe[2i] = sin(p / 10000^(2i/dim)), pe[2i+1] = cos(p / 10000^(2i/dim)) with
    p = offset_days / time_scale.
    """
    if dim <= 0 or dim % 2 != 0:
        raise ConfigurationError(f"encoding dim must be positive and even, got {dim}")
    p = position.offset_days / time_scale
    denom = 10000.0 ** (2.0 * np.arange(dim // 2) / dim)
    pe = np.empty(dim, dtype=np.float64)
    pe[0::2] = np.sin(p / denom)
    pe[1::2] = np.cos(p / denom)
    return pe


_UNDATED = (1 << 62)


def _sort_key(ev: "Event") -> tuple[int, int, int]:
    if ev.time is None:
        return (_UNDATED, _UNDATED, ev.source_index)
    return (ev.time.start_day, ev.time.end_day, ev.source_index)


def chronological_sort(events: Sequence["Event"]) -> list[int]:
    """Permutation putting events in timeline order.

    Dated events sort by (start, end); undated events keep their relative
    surface order after all dated ones. Deterministic for any input.
    """
    return sorted(range(len(events)), key=lambda i: _sort_key(events[i]))


def _timeline_keys(timeline: Sequence["Event"]) -> list[tuple[int, int]]:
    # Dated events compare by start day; undated ones by their position in the
    # given timeline (the caller asserts that listing order is chronological).
    return [
        (0, ev.time.start_day) if ev.time is not None else (1, pos)
        for pos, ev in enumerate(timeline)
    ]


def _match_candidates(claim_event: "Event", timeline: Sequence["Event"]) -> list[int]:
    want = content_tokens(claim_event.raw_text)
    scores: list[int] = []
    for ev in timeline:
        if claim_event.time is not None:
            dated_match = (
                ev.time is not None
                and ev.time.start_day == claim_event.time.start_day
                and ev.time.end_day == claim_event.time.end_day
            )
            if not dated_match:
                scores.append(0)
                continue
        scores.append(len(want & content_tokens(ev.raw_text)))
    best = max(scores, default=0)
    if best <= 0:
        return []
    return [i for i, s in enumerate(scores) if s == best]


def exists_monotone_assignment(candidates: Sequence[Sequence[tuple]]) -> bool:
    """Can each position pick a distinct candidate with non-decreasing keys?

    candidates[i] lists (key, identity) options for position i; identities
    must not repeat across positions. Exhaustive search; positions and
    candidate lists are tiny (claims have at most a handful of events).
    """
    ordered = [sorted(c) for c in candidates]

    def walk(pos: int, prev_key, used: frozenset) -> bool:
        if pos == len(ordered):
            return True
        for key, ident in ordered[pos]:
            if ident in used:
                continue
            if prev_key is not None and key < prev_key:
                continue
            if walk(pos + 1, key, used | {ident}):
                return True
        return False

    return walk(0, None, frozenset())


def order_consistency_oracle(
    claim_events: Sequence["Event"],
    timeline: Sequence["Event"],
    matching: Optional[Sequence[Sequence[int]]] = None,
) -> "Label2":
    """Judge whether the claim's surface order can be aligned with the timeline.

    Each claim event is matched to its candidate timeline facts (strongest
    content overlap; dated claim events additionally require an equal span).
    The order is supported if some assignment of distinct candidates yields
    non-decreasing timeline positions; start-day ties count as consistent,
    which covers overlapping events. Recurring facts give a claim event
    several candidates, and the claim is supported if any alignment works.
    """
    from .core import Label2

    keys = _timeline_keys(timeline)
    if matching is None:
        matching = [_match_candidates(ce, timeline) for ce in claim_events]
    candidates = []
    for ce, cands in zip(claim_events, matching):
        if not cands:
            raise OracleError(f"claim event {ce.id!r} matches no timeline fact")
        candidates.append([(keys[j], j) for j in cands])
    return Label2.SUP if exists_monotone_assignment(candidates) else Label2.REF
