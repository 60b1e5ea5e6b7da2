"""Fuzzy grounding of extracted strings in article text.

A string is grounded when some substring window of the normalized article is
similar enough to it. The window search is exact per the contract below and
implemented as a dynamic program vectorized across all window start positions,
so grounding whole corpora stays fast without native extensions.

Contract for the window search (shared with the brute-force test oracle):
  - both inputs are normalized (casefold, whitespace collapsed);
  - an exact substring occurrence short-circuits to score 1.0;
  - otherwise windows of length ceil(0.8*len(candidate)) ..
    floor(1.2*len(candidate)) slide over the article at stride 1;
  - window similarity = 1 - levenshtein / max(len(candidate), len(window));
  - the score is the maximum window similarity; if the article is shorter
    than the smallest admissible window, the whole article is the window.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .corpus import Article
from .extraction import ExtractionRecord, GoldAnnotation, field_kind
from .text import normalize_text, similarity

_SENTINEL = np.uint32(0xFFFFFFFF)  # padding code point, never equals a real char


@dataclass(frozen=True)
class Thresholds:
    """Per-field-kind similarity thresholds.

    Identifiers must be near-exact to be actionable; citation strings suffer
    formatting noise, so they get a little more slack.
    """

    identifier: float = 0.95
    citation: float = 0.90

    def for_kind(self, kind: str) -> float:
        return self.citation if kind == "citation" else self.identifier

    def for_field(self, name: str) -> float:
        return self.for_kind(field_kind(name))


DEFAULT_THRESHOLDS = Thresholds()

EMBELLISHMENT_MODES = ("fraction", "binary")


@dataclass(frozen=True)
class MatchResult:
    """Outcome of grounding one candidate string."""

    candidate: str
    matched: bool
    score: float
    span: tuple[int, int] | None = None  # offsets into the normalized article


@dataclass(frozen=True)
class GroundingReport:
    """Per-string grounding results for one record against one article."""

    matches: dict[str, tuple[MatchResult, ...]]
    grounded_count: int
    total_count: int
    e: float


def _codes(s: str) -> np.ndarray:
    return np.frombuffer(s.encode("utf-32-le"), dtype=np.uint32)


def _best_window(art: str, cand: str) -> tuple[float, tuple[int, int]]:
    """Maximum windowed similarity of *cand* over normalized article *art*.

    Returns (score, span). Inputs must already be normalized; cand non-empty.
    """
    n, length = len(art), len(cand)
    lo = max(1, -(-4 * length // 5))  # ceil(0.8 * length), exact integer math
    hi = 6 * length // 5              # floor(1.2 * length)
    if n < lo:
        return similarity(cand, art), (0, n)
    hi = min(hi, n)

    starts = n - lo + 1
    cand_codes = _codes(cand)
    padded = np.concatenate(
        [_codes(art), np.full(hi, _SENTINEL, dtype=np.uint32)])

    # prev[i, s] = levenshtein(cand[:i], art[s : s + j]) after processing j
    # window characters; advancing j is one vectorized sweep over all starts.
    prev = np.tile(np.arange(length + 1, dtype=np.int32)[:, None], (1, starts))
    best_score = -1.0
    best_span = (0, 0)
    for j in range(1, hi + 1):
        wchar = padded[j - 1 : j - 1 + starts]
        cur = np.empty_like(prev)
        cur[0] = j
        for i in range(1, length + 1):
            cell = prev[i - 1] + (cand_codes[i - 1] != wchar)
            np.minimum(cell, prev[i] + 1, out=cell)
            np.minimum(cell, cur[i - 1] + 1, out=cell)
            cur[i] = cell
        prev = cur
        if j < lo:
            continue
        valid = n - j + 1  # starts whose length-j window stays inside art
        if valid <= 0:
            break
        dist = cur[length, :valid]
        s_idx = int(np.argmin(dist))
        score = 1.0 - int(dist[s_idx]) / max(length, j)
        if score > best_score:
            best_score = score
            best_span = (s_idx, s_idx + j)
            if best_score >= 1.0:
                break
    return best_score, best_span


def _fuzzy_contains_normalized(
    art_norm: str, candidate: str, threshold: float
) -> MatchResult:
    cand_norm = normalize_text(candidate)
    if not cand_norm:
        raise ValueError("candidate must be non-empty after normalization")
    idx = art_norm.find(cand_norm)
    if idx != -1:
        return MatchResult(candidate=candidate, matched=True, score=1.0,
                           span=(idx, idx + len(cand_norm)))
    score, span = _best_window(art_norm, cand_norm)
    matched = score >= threshold
    return MatchResult(candidate=candidate, matched=matched, score=score,
                       span=span if matched and span[0] < span[1] else None)


def fuzzy_contains(article_text: str, candidate: str, threshold: float) -> MatchResult:
    """Decide whether *candidate* occurs (fuzzily) in *article_text*.

    Matching is insensitive to case and whitespace variation on both sides.
    threshold must lie in (0, 1].
    """
    return _fuzzy_contains_normalized(normalize_text(article_text), candidate,
                                      threshold)


def _prepare_candidate(kind: str, value: str) -> str:
    # Markdown conversion tends to glue trailing slashes/punctuation onto URLs.
    if kind == "url":
        return value.rstrip("/.,;:!?)]}>\"'") or value
    return value


def embellishment_reward(
    article: Article,
    record: ExtractionRecord,
    thresholds: Thresholds = DEFAULT_THRESHOLDS,
    mode: str = "fraction",
) -> GroundingReport:
    """Grounding component of the reward: the share of evidence strings
    supported by the article text.

    Every string in the eight evidence lists is tested with its field-kind
    threshold. Booleans and descriptions are judgments, not extractions, and
    are not grounded. With no evidence strings at all, e = 1 (nothing could
    have been embellished). mode="binary" collapses e to {0, 1}: any
    ungrounded string zeroes it.
    """
    if mode not in EMBELLISHMENT_MODES:
        raise ValueError(f"unknown embellishment mode: {mode!r}")
    art_norm = normalize_text(article.body)
    matches: dict[str, tuple[MatchResult, ...]] = {}
    grounded = 0
    total = 0
    for name, values in record.lists().items():
        kind = field_kind(name)
        threshold = thresholds.for_kind(kind)
        results = []
        for value in values:
            result = _fuzzy_contains_normalized(
                art_norm, _prepare_candidate(kind, value), threshold)
            results.append(result)
            total += 1
            grounded += result.matched
        matches[name] = tuple(results)
    if total == 0:
        e = 1.0
    elif mode == "binary":
        e = 1.0 if grounded == total else 0.0
    else:
        e = grounded / total
    return GroundingReport(matches=matches, grounded_count=grounded,
                           total_count=total, e=e)


@dataclass(frozen=True)
class RemovalDiagnostic:
    """One gold evidence string that could not be recovered from its article."""

    article_id: str
    field: str
    string: str
    best_score: float
    threshold: float


@dataclass(frozen=True)
class RemovedAnnotation:
    annotation: GoldAnnotation
    diagnostics: tuple[RemovalDiagnostic, ...]


def filter_gold(
    corpus: list[Article],
    annotations: list[GoldAnnotation],
    thresholds: Thresholds = DEFAULT_THRESHOLDS,
) -> tuple[list[GoldAnnotation], list[RemovedAnnotation]]:
    """Drop gold annotations whose evidence is unrecoverable from the text.

    An annotation is removed iff at least one of its evidence strings fails
    fuzzy matching against its article (e.g. lost to markdown conversion or
    truncation). kept + removed partition the input; diagnostics name every
    failing string with its best score.
    """
    by_id = {a.id: a for a in corpus}
    kept: list[GoldAnnotation] = []
    removed: list[RemovedAnnotation] = []
    for ann in annotations:
        article = by_id.get(ann.article_id)
        if article is None:
            raise KeyError(
                f"gold annotation references unknown article {ann.article_id!r}")
        art_norm = normalize_text(article.body)
        diagnostics: list[RemovalDiagnostic] = []
        for name, values in ann.record.lists().items():
            kind = field_kind(name)
            threshold = thresholds.for_kind(kind)
            for value in values:
                result = _fuzzy_contains_normalized(
                    art_norm, _prepare_candidate(kind, value), threshold)
                if not result.matched:
                    diagnostics.append(RemovalDiagnostic(
                        article_id=ann.article_id, field=name, string=value,
                        best_score=result.score, threshold=threshold))
        if diagnostics:
            removed.append(RemovedAnnotation(ann, tuple(diagnostics)))
        else:
            kept.append(ann)
    return kept, removed
