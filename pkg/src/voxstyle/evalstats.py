"""Listening-test statistics: AB preference tables, MOS means with normal
95% intervals, and word recognition rates with Wilson score intervals.

Percentages are reported as integers with round-half-up, and MOS means to
two decimals, matching the usual table conventions. Wilson (rather than
Wald) intervals are used because they behave at the 0/1 boundaries.
"""

from __future__ import annotations

import csv
import string
from collections import Counter
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal

import numpy as np
from scipy.stats import norm

from .errors import FormatError


@dataclass(frozen=True)
class AbResponseSet:
    """Preference counts for systems A and B plus no-preference."""

    system_a: str
    system_b: str
    n_a: int
    n_b: int
    n_none: int

    def __post_init__(self):
        for name in ("n_a", "n_b", "n_none"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be nonnegative")
        if self.total < 1:
            raise ValueError("AB response set needs at least one response")

    @property
    def total(self) -> int:
        return self.n_a + self.n_b + self.n_none


def _round_half_up_percent(count: int, total: int) -> int:
    frac = Decimal(count) * 100 / Decimal(total)
    return int(frac.quantize(Decimal("1"), rounding=ROUND_HALF_UP))


def ab_summary(responses: AbResponseSet) -> tuple:
    """Integer percentages (A, B, no preference), round-half-up."""
    total = responses.total
    return tuple(_round_half_up_percent(c, total)
                 for c in (responses.n_a, responses.n_b, responses.n_none))


@dataclass(frozen=True)
class MosResponseSet:
    """Integer 1-5 ratings collected for one system."""

    system: str
    ratings: tuple

    def __post_init__(self):
        object.__setattr__(self, "ratings", tuple(int(r) for r in self.ratings))
        for r in self.ratings:
            if not 1 <= r <= 5:
                raise ValueError(f"rating {r} outside [1, 5]")


@dataclass(frozen=True)
class MosSummary:
    mean: float
    formatted: str
    n: int
    ci_low: float | None = None
    ci_high: float | None = None


def mos_mean(responses: MosResponseSet) -> MosSummary:
    """Arithmetic mean formatted to two decimals; CI = mean +- 1.96 s/sqrt(n)."""
    ratings = responses.ratings
    if not ratings:
        raise ValueError("cannot average an empty rating set")
    n = len(ratings)
    total = sum(ratings)
    mean = total / n
    formatted = str((Decimal(total) / Decimal(n)).quantize(
        Decimal("0.01"), rounding=ROUND_HALF_UP))
    if n < 2:
        return MosSummary(mean=mean, formatted=formatted, n=n)
    half = 1.96 * np.std(ratings, ddof=1) / np.sqrt(n)
    return MosSummary(mean=mean, formatted=formatted, n=n,
                      ci_low=mean - half, ci_high=mean + half)


@dataclass(frozen=True)
class WrrResult:
    correct: int
    total: int
    rate: float
    ci_low: float
    ci_high: float

    def __post_init__(self):
        if not 0.0 <= self.ci_low <= self.rate <= self.ci_high <= 1.0:
            raise ValueError("interval must satisfy 0 <= low <= rate <= high <= 1")


def wrr(correct: int, total: int, confidence: float = 0.95) -> WrrResult:
    """Word recognition rate with a Wilson score interval."""
    if total < 1:
        raise ValueError("total must be >= 1")
    if not 0 <= correct <= total:
        raise ValueError(f"correct {correct} outside [0, {total}]")
    if not 0.0 < confidence < 1.0:
        raise ValueError("confidence must be in (0, 1)")
    z = float(norm.ppf(0.5 + confidence / 2.0))
    p = correct / total
    denom = 1.0 + z * z / total
    center = (p + z * z / (2.0 * total)) / denom
    half = z * np.sqrt(p * (1.0 - p) / total + z * z / (4.0 * total * total)) / denom
    # the Wilson interval contains p by construction; clamping only undoes
    # last-bit rounding at the p=0 and p=1 boundaries
    low = min(max(0.0, center - half), p)
    high = max(min(1.0, center + half), p)
    return WrrResult(correct=correct, total=total, rate=p, ci_low=low, ci_high=high)


def _tokens(text) -> list:
    words = text.split() if isinstance(text, str) else list(text)
    out = []
    for w in words:
        w = str(w).strip(string.punctuation).lower()
        if w:
            out.append(w)
    return out


def word_score(reference, response) -> tuple:
    """(correct, total): multiset keyword matching, case/punctuation blind.

    Each reference word consumes at most one matching response word; total
    is the reference length.
    """
    ref = _tokens(reference)
    if not ref:
        raise ValueError("reference must contain at least one word")
    resp = Counter(_tokens(response))
    matched = Counter(ref) & resp
    return sum(matched.values()), len(ref)


RESPONSE_HEADER = ["listener_id", "system", "utterance_id", "payload"]


def read_responses(path) -> list:
    """Rows of (listener_id, system, utterance_id, payload) from a CSV."""
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise FormatError(f"{path}: empty responses file") from None
        if header != RESPONSE_HEADER:
            raise FormatError(
                f"{path}: expected header {','.join(RESPONSE_HEADER)!r}, got {','.join(header)!r}")
        rows = []
        for i, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 4:
                raise FormatError(f"{path}:{i}: expected 4 fields, got {len(row)}")
            rows.append(tuple(row))
    return rows


def ab_from_csv(path) -> dict:
    """Aggregate AB rows. The system field names the pair as 'X_vs_Y' and the
    payload is A (first system), B (second), or C (no preference)."""
    results = {}
    for i, (listener, pair, utt, payload) in enumerate(read_responses(path), start=2):
        if "_vs_" not in pair:
            raise FormatError(f"{path}:{i}: AB system field must look like 'X_vs_Y', got {pair!r}")
        if payload not in ("A", "B", "C"):
            raise FormatError(f"{path}:{i}: AB payload must be A, B, or C, got {payload!r}")
        counts = results.setdefault(pair, [0, 0, 0])
        counts[("A", "B", "C").index(payload)] += 1
    out = {}
    for pair, (n_a, n_b, n_none) in results.items():
        sys_a, sys_b = pair.split("_vs_", 1)
        out[pair] = AbResponseSet(system_a=sys_a, system_b=sys_b,
                                  n_a=n_a, n_b=n_b, n_none=n_none)
    return out


def mos_from_csv(path) -> dict:
    """Aggregate MOS rows (payload: integer rating 1-5) per system."""
    ratings = {}
    for i, (listener, system, utt, payload) in enumerate(read_responses(path), start=2):
        try:
            r = int(payload)
        except ValueError:
            raise FormatError(f"{path}:{i}: MOS payload must be an integer, got {payload!r}") from None
        if not 1 <= r <= 5:
            raise FormatError(f"{path}:{i}: rating {r} outside [1, 5]")
        ratings.setdefault(system, []).append(r)
    return {system: MosResponseSet(system=system, ratings=tuple(rs))
            for system, rs in ratings.items()}


def read_references(path) -> dict:
    """utterance_id -> reference text, from a CSV with header utterance_id,text."""
    with open(path, encoding="utf-8", newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header is None or header != ["utterance_id", "text"]:
            raise FormatError(f"{path}: expected header 'utterance_id,text'")
        refs = {}
        for i, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 2:
                raise FormatError(f"{path}:{i}: expected 2 fields, got {len(row)}")
            refs[row[0]] = row[1]
    return refs


def wrr_from_csv(path, references: dict, confidence: float = 0.95) -> dict:
    """Score transcript rows against references; Wilson WRR per system."""
    counts = {}
    for i, (listener, system, utt, payload) in enumerate(read_responses(path), start=2):
        if utt not in references:
            raise FormatError(f"{path}:{i}: no reference transcript for utterance {utt!r}")
        correct, total = word_score(references[utt], payload)
        agg = counts.setdefault(system, [0, 0])
        agg[0] += correct
        agg[1] += total
    return {system: wrr(c, t, confidence) for system, (c, t) in counts.items()}


def ab_table_to_csv(results: dict, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["pair", "pct_a", "pct_b", "pct_no_pref"])
        for pair in sorted(results):
            writer.writerow([pair, *ab_summary(results[pair])])


def mos_table_to_csv(summaries: dict, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["system", "n", "mos", "ci_low", "ci_high"])
        for system in sorted(summaries):
            s = summaries[system]
            low = "" if s.ci_low is None else f"{s.ci_low:.4f}"
            high = "" if s.ci_high is None else f"{s.ci_high:.4f}"
            writer.writerow([system, s.n, s.formatted, low, high])


def wrr_table_to_csv(results: dict, path) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["system", "correct", "total", "rate", "ci_low", "ci_high"])
        for system in sorted(results):
            r = results[system]
            writer.writerow([system, r.correct, r.total,
                             f"{r.rate:.4f}", f"{r.ci_low:.4f}", f"{r.ci_high:.4f}"])
