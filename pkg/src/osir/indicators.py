"""Corpus-level open-science indicators from per-article extraction records.

Multi-sample outputs are first reduced to one verdict per article (majority
vote on the booleans, union of evidence). Verdicts then aggregate into
generation / reuse / neither rates by discipline, region, or in total, plus
reasoning-trace coverage and accession statistics.
"""

from __future__ import annotations

import csv
import json
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from pathlib import Path
from typing import Iterable

from .corpus import Article
from .evaluation import SampleSet
from .identifiers import canonicalize_identifier

GROUPINGS = ("discipline", "region", "total")
TOTAL_LABEL = "Total"


def percent_half_up(count: int, total: int) -> int:
    """Integer percentage with exact round-half-up (not banker's rounding)."""
    if total == 0:
        return 0
    return int((Decimal(100 * count) / Decimal(total))
               .quantize(Decimal("1"), rounding=ROUND_HALF_UP))


def percent_one_decimal(count: int, total: int) -> float:
    """One-decimal percentage, round-half-up."""
    if total == 0:
        return 0.0
    return float((Decimal(100 * count) / Decimal(total))
                 .quantize(Decimal("0.1"), rounding=ROUND_HALF_UP))


@dataclass(frozen=True)
class VerdictPolicy:
    """How ties are broken when parsed samples split evenly on a boolean."""

    tie_value: bool = False


@dataclass(frozen=True)
class ArticleVerdict:
    """Resolved per-article judgment after multi-sample reduction."""

    article_id: str
    new_data_generated: bool
    data_reused: bool
    neither: bool
    has_accession: bool
    has_generation_trace: bool
    has_reuse_trace: bool
    reused_accessions: tuple[str, ...]  # canonical, sorted
    unresolved: bool = False


@dataclass(frozen=True)
class IndicatorRow:
    """Counts and round-half-up integer percentages for one corpus group."""

    group: str
    publications: int
    generated_count: int
    generated_pct: int
    reused_count: int
    reused_pct: int
    neither_count: int
    neither_pct: int


@dataclass(frozen=True)
class TraceCoverage:
    articles: int
    any_count: int
    any_pct: int
    generation_count: int
    generation_pct: int
    reuse_count: int
    reuse_pct: int


@dataclass(frozen=True)
class AccessionStats:
    articles: int
    articles_with_accession: int
    articles_with_accession_pct: float  # one decimal
    unique_reused_accessions: int
    accessions: tuple[str, ...]  # canonical, sorted


def resolve_verdict(samples: SampleSet,
                    policy: VerdictPolicy = VerdictPolicy()) -> ArticleVerdict:
    """Reduce one article's samples to a single verdict.

    Booleans resolve by majority vote over parsed samples (exact ties take
    the policy default). Evidence is unioned across parsed samples. Trace
    flags reflect whether any sample carried a non-empty description for the
    category. Zero parsed samples yield an unresolved verdict with both
    booleans false.
    """
    if not samples.outcomes:
        raise ValueError(f"article {samples.article_id!r}: no samples")
    parsed = [o.record for o in samples.outcomes if o.parsed]
    if not parsed:
        return ArticleVerdict(
            article_id=samples.article_id,
            new_data_generated=False, data_reused=False, neither=True,
            has_accession=False, has_generation_trace=False,
            has_reuse_trace=False, reused_accessions=(), unresolved=True)

    def vote(field: str) -> bool:
        yes = sum(1 for r in parsed if getattr(r, field))
        if yes * 2 == len(parsed):
            return policy.tie_value
        return yes * 2 > len(parsed)

    generated = vote("new_data_generated")
    reused = vote("reuse_data")

    accession_union: set[str] = set()
    reused_accessions: set[str] = set()
    gen_trace = False
    reuse_trace = False
    for r in parsed:
        for value in r.new_data_accessions + r.reuse_data_accessions:
            if value.strip():
                accession_union.add(canonicalize_identifier("accession", value))
        for value in r.reuse_data_accessions:
            if value.strip():
                reused_accessions.add(canonicalize_identifier("accession", value))
        if r.new_data_description and r.new_data_description.strip():
            gen_trace = True
        if r.reuse_data_description and r.reuse_data_description.strip():
            reuse_trace = True

    return ArticleVerdict(
        article_id=samples.article_id,
        new_data_generated=generated,
        data_reused=reused,
        neither=not generated and not reused,
        has_accession=bool(accession_union),
        has_generation_trace=gen_trace,
        has_reuse_trace=reuse_trace,
        reused_accessions=tuple(sorted(reused_accessions)),
    )


def _row(group: str, verdicts: list[ArticleVerdict]) -> IndicatorRow:
    pubs = len(verdicts)
    generated = sum(1 for v in verdicts if v.new_data_generated)
    reused = sum(1 for v in verdicts if v.data_reused)
    neither = sum(1 for v in verdicts if v.neither)
    return IndicatorRow(
        group=group,
        publications=pubs,
        generated_count=generated,
        generated_pct=percent_half_up(generated, pubs),
        reused_count=reused,
        reused_pct=percent_half_up(reused, pubs),
        neither_count=neither,
        neither_pct=percent_half_up(neither, pubs),
    )


def aggregate_by(
    verdicts: list[ArticleVerdict],
    by: str = "total",
    articles: dict[str, Article] | None = None,
) -> list[IndicatorRow]:
    """Aggregate verdicts into one IndicatorRow per group plus a total row.

    by="discipline" / "region" require the articles mapping for group labels;
    by="total" emits the total row alone. Rows sort by group label and the
    per-group counts always sum to the total row's.
    """
    if by not in GROUPINGS:
        raise ValueError(f"unknown grouping: {by!r}")
    if by == "total":
        return [_row(TOTAL_LABEL, verdicts)]
    if articles is None:
        raise ValueError(f"grouping by {by!r} requires the article metadata")
    groups: dict[str, list[ArticleVerdict]] = {}
    for v in verdicts:
        article = articles.get(v.article_id)
        if article is None:
            raise KeyError(f"verdict references unknown article {v.article_id!r}")
        label = getattr(article, by) or "Unknown"
        groups.setdefault(label, []).append(v)
    rows = [_row(label, groups[label]) for label in sorted(groups)]
    rows.append(_row(TOTAL_LABEL, verdicts))
    return rows


def trace_coverage(verdicts: list[ArticleVerdict]) -> TraceCoverage:
    """Share of articles carrying reasoning traces, overall and per category."""
    n = len(verdicts)
    any_count = sum(1 for v in verdicts
                    if v.has_generation_trace or v.has_reuse_trace)
    gen = sum(1 for v in verdicts if v.has_generation_trace)
    reuse = sum(1 for v in verdicts if v.has_reuse_trace)
    return TraceCoverage(
        articles=n,
        any_count=any_count, any_pct=percent_half_up(any_count, n),
        generation_count=gen, generation_pct=percent_half_up(gen, n),
        reuse_count=reuse, reuse_pct=percent_half_up(reuse, n),
    )


def accession_stats(verdicts: list[ArticleVerdict]) -> AccessionStats:
    """Accession-bearing article share and unique reused accessions."""
    n = len(verdicts)
    with_acc = sum(1 for v in verdicts if v.has_accession)
    unique: set[str] = set()
    for v in verdicts:
        unique.update(v.reused_accessions)
    return AccessionStats(
        articles=n,
        articles_with_accession=with_acc,
        articles_with_accession_pct=percent_one_decimal(with_acc, n),
        unique_reused_accessions=len(unique),
        accessions=tuple(sorted(unique)),
    )


# ---------------------------------------------------------------------------
# File interfaces

INDICATOR_CSV_COLUMNS = (
    "group", "publications",
    "generated_count", "generated_pct",
    "reused_count", "reused_pct",
    "neither_count", "neither_pct",
)


def save_indicator_rows(rows: Iterable[IndicatorRow], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(INDICATOR_CSV_COLUMNS)
        for row in rows:
            writer.writerow([
                row.group, row.publications,
                row.generated_count, row.generated_pct,
                row.reused_count, row.reused_pct,
                row.neither_count, row.neither_pct,
            ])


def save_summary(trace: TraceCoverage, accessions: AccessionStats,
                 path: str | Path) -> None:
    payload = {
        "articles": trace.articles,
        "trace_coverage": {
            "any": {"count": trace.any_count, "pct": trace.any_pct},
            "generation": {"count": trace.generation_count,
                           "pct": trace.generation_pct},
            "reuse": {"count": trace.reuse_count, "pct": trace.reuse_pct},
        },
        "accessions": {
            "articles_with_accession": accessions.articles_with_accession,
            "articles_with_accession_pct": accessions.articles_with_accession_pct,
            "unique_reused_accessions": accessions.unique_reused_accessions,
            "values": list(accessions.accessions),
        },
    }
    with Path(path).open("w", encoding="utf-8") as fh:
        json.dump(payload, fh, sort_keys=True, indent=2, ensure_ascii=False)
        fh.write("\n")


def save_verdicts(verdicts: Iterable[ArticleVerdict], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for v in verdicts:
            fh.write(json.dumps({
                "article_id": v.article_id,
                "new_data_generated": v.new_data_generated,
                "data_reused": v.data_reused,
                "neither": v.neither,
                "has_accession": v.has_accession,
                "has_generation_trace": v.has_generation_trace,
                "has_reuse_trace": v.has_reuse_trace,
                "reused_accessions": list(v.reused_accessions),
                "unresolved": v.unresolved,
            }, sort_keys=True, ensure_ascii=False))
            fh.write("\n")
