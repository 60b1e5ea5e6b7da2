"""Multi-sample evaluation against gold: pass@1 / pass@k metrics and flagging.

Boolean fields are scored by accuracy, evidence lists by matching F1. With k
samples per article, pass@1 averages over every sample while pass@k takes the
best sample per article, so pass@k always dominates pass@1. Unparseable
samples count as wrong (F1 zero): excluding them would flatter the model.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

from .extraction import (
    BOOLEAN_FIELDS,
    GoldAnnotation,
    LIST_FIELDS,
    ParseOutcome,
    RawCompletion,
    parse_extraction,
)
from .grounding import DEFAULT_THRESHOLDS, Thresholds
from .scoring import field_f1, match_sets

PASS1_MODES = ("mean", "first")


@dataclass(frozen=True)
class SampleSet:
    """The k parse outcomes for one article, ordered by sample index."""

    article_id: str
    outcomes: tuple[ParseOutcome, ...]


@dataclass(frozen=True)
class FieldMetrics:
    pass_at_1: float
    pass_at_k: float


@dataclass(frozen=True)
class EvalReport:
    articles: int
    samples_per_article: int
    pass1_mode: str
    boolean_fields: dict[str, FieldMetrics]
    list_fields: dict[str, FieldMetrics]
    config: dict


@dataclass(frozen=True)
class FlagRules:
    f1_floor: float = 0.5


@dataclass(frozen=True)
class FlaggedArticle:
    article_id: str
    reasons: tuple[str, ...]


class EvaluationError(ValueError):
    pass


def build_sample_sets(completions: list[RawCompletion],
                      samples_per_article: int | None = None) -> list[SampleSet]:
    """Group completions into per-article SampleSets, parsing each sample.

    Every article must carry the same sample count with contiguous indices
    0..k-1; pass samples_per_article to also pin k explicitly.
    """
    by_article: dict[str, dict[int, RawCompletion]] = {}
    for c in completions:
        by_article.setdefault(c.article_id, {})[c.sample_index] = c
    if not by_article:
        return []
    counts = {len(v) for v in by_article.values()}
    if len(counts) != 1:
        raise EvaluationError(
            f"articles carry unequal sample counts: {sorted(counts)}")
    k = counts.pop()
    if samples_per_article is not None and k != samples_per_article:
        raise EvaluationError(
            f"expected {samples_per_article} samples per article, found {k}")
    sets: list[SampleSet] = []
    for article_id in sorted(by_article):
        indexed = by_article[article_id]
        if sorted(indexed) != list(range(k)):
            raise EvaluationError(
                f"article {article_id!r}: sample indices are not 0..{k - 1}")
        sets.append(SampleSet(
            article_id=article_id,
            outcomes=tuple(parse_extraction(indexed[i]) for i in range(k)),
        ))
    return sets


def _gold_map(gold: list[GoldAnnotation],
              samples: list[SampleSet]) -> dict[str, GoldAnnotation]:
    by_id = {g.article_id: g for g in gold}
    for s in samples:
        if s.article_id not in by_id:
            raise EvaluationError(f"missing gold for article {s.article_id!r}")
    return by_id


def evaluate_boolean_field(
    field: str,
    samples: list[SampleSet],
    gold: list[GoldAnnotation],
    pass1_mode: str = "mean",
) -> FieldMetrics:
    """Accuracy of one boolean field at pass@1 and pass@k.

    A sample is correct iff it parsed and its boolean equals gold. pass@1
    averages correctness over every (article, sample) pair ("mean" mode) or
    over first samples only ("first" mode); pass@k is the fraction of
    articles with at least one correct sample.
    """
    if pass1_mode not in PASS1_MODES:
        raise ValueError(f"unknown pass@1 mode: {pass1_mode!r}")
    if not samples:
        raise EvaluationError("no samples")
    by_id = _gold_map(gold, samples)
    first_or_all: list[float] = []
    per_article_any: list[float] = []
    for s in samples:
        want = getattr(by_id[s.article_id].record, field)
        correct = [
            o.parsed and getattr(o.record, field) == want for o in s.outcomes
        ]
        if pass1_mode == "first":
            first_or_all.append(1.0 if correct[0] else 0.0)
        else:
            first_or_all.extend(1.0 if c else 0.0 for c in correct)
        per_article_any.append(1.0 if any(correct) else 0.0)
    return FieldMetrics(
        pass_at_1=sum(first_or_all) / len(first_or_all),
        pass_at_k=sum(per_article_any) / len(per_article_any),
    )


def evaluate_list_field(
    field: str,
    samples: list[SampleSet],
    gold: list[GoldAnnotation],
    threshold: float,
    pass1_mode: str = "mean",
) -> FieldMetrics:
    """Matching F1 of one evidence-list field at pass@1 and pass@k.

    Unparsed samples score 0. pass@1 averages per-sample F1; pass@k averages
    each article's best sample F1.
    """
    if pass1_mode not in PASS1_MODES:
        raise ValueError(f"unknown pass@1 mode: {pass1_mode!r}")
    if not samples:
        raise EvaluationError("no samples")
    by_id = _gold_map(gold, samples)
    sample_f1s: list[float] = []
    best_f1s: list[float] = []
    for s in samples:
        want = getattr(by_id[s.article_id].record, field)
        f1s = [
            field_f1(match_sets(getattr(o.record, field), want, threshold))
            if o.parsed else 0.0
            for o in s.outcomes
        ]
        if pass1_mode == "first":
            sample_f1s.append(f1s[0])
        else:
            sample_f1s.extend(f1s)
        best_f1s.append(max(f1s))
    return FieldMetrics(
        pass_at_1=sum(sample_f1s) / len(sample_f1s),
        pass_at_k=sum(best_f1s) / len(best_f1s),
    )


def flag_disagreements(
    samples: list[SampleSet],
    gold: list[GoldAnnotation],
    rules: FlagRules = FlagRules(),
    thresholds: Thresholds = DEFAULT_THRESHOLDS,
) -> list[FlaggedArticle]:
    """Articles whose samples disagree with gold enough to warrant review.

    Flags when the majority vote of parsed samples contradicts gold on either
    boolean, or when any list field's best-sample F1 falls below the floor.
    """
    by_id = _gold_map(gold, samples)
    flagged: list[FlaggedArticle] = []
    for s in samples:
        ann = by_id[s.article_id]
        reasons: list[str] = []
        parsed = [o.record for o in s.outcomes if o.parsed]
        for name in BOOLEAN_FIELDS:
            votes = [getattr(r, name) for r in parsed]
            majority = sum(votes) * 2 > len(votes)  # ties resolve to False
            if majority != getattr(ann.record, name):
                reasons.append(f"{name} majority disagreement")
        for name in LIST_FIELDS:
            want = getattr(ann.record, name)
            best = max(
                (field_f1(match_sets(getattr(r, name), want,
                                     thresholds.for_field(name)))
                 for r in parsed),
                default=0.0,
            )
            if best < rules.f1_floor:
                reasons.append(
                    f"{name} best F1 {best:.2f} below floor {rules.f1_floor:.2f}")
        if reasons:
            flagged.append(FlaggedArticle(s.article_id, tuple(reasons)))
    return flagged


def build_eval_report(
    samples: list[SampleSet],
    gold: list[GoldAnnotation],
    pass1_mode: str = "mean",
    thresholds: Thresholds = DEFAULT_THRESHOLDS,
) -> EvalReport:
    """Evaluate all ten scored fields and assemble the report."""
    if not samples:
        raise EvaluationError("no samples")
    k = len(samples[0].outcomes)
    booleans = {
        name: evaluate_boolean_field(name, samples, gold, pass1_mode)
        for name in BOOLEAN_FIELDS
    }
    lists = {
        name: evaluate_list_field(name, samples, gold,
                                  thresholds.for_field(name), pass1_mode)
        for name in LIST_FIELDS
    }
    return EvalReport(
        articles=len(samples),
        samples_per_article=k,
        pass1_mode=pass1_mode,
        boolean_fields=booleans,
        list_fields=lists,
        config={
            "threshold_identifier": thresholds.identifier,
            "threshold_citation": thresholds.citation,
        },
    )


def render_report_table(report: EvalReport) -> str:
    """Aligned plain-text table: field, pass@1, pass@k.

    Boolean accuracies print as percentages, list F1s with three decimals.
    """
    k = report.samples_per_article
    header = ("field", "pass@1", f"pass@{k}")
    rows: list[tuple[str, str, str]] = []
    for name, m in report.boolean_fields.items():
        rows.append((name, f"{m.pass_at_1 * 100:.1f}%", f"{m.pass_at_k * 100:.1f}%"))
    for name, m in report.list_fields.items():
        rows.append((name, f"{m.pass_at_1:.3f}", f"{m.pass_at_k:.3f}"))
    width0 = max(len(r[0]) for r in rows + [header])
    width1 = max(len(r[1]) for r in rows + [header])
    width2 = max(len(r[2]) for r in rows + [header])
    lines = [
        f"{header[0]:<{width0}}  {header[1]:>{width1}}  {header[2]:>{width2}}",
        f"{'-' * width0}  {'-' * width1}  {'-' * width2}",
    ]
    for name, p1, pk in rows:
        lines.append(f"{name:<{width0}}  {p1:>{width1}}  {pk:>{width2}}")
    return "\n".join(lines)


def report_to_payload(report: EvalReport) -> dict:
    return {
        "articles": report.articles,
        "samples_per_article": report.samples_per_article,
        "pass1_mode": report.pass1_mode,
        "boolean_fields": {
            name: {"pass_at_1": m.pass_at_1, "pass_at_k": m.pass_at_k}
            for name, m in report.boolean_fields.items()
        },
        "list_fields": {
            name: {"pass_at_1": m.pass_at_1, "pass_at_k": m.pass_at_k}
            for name, m in report.list_fields.items()
        },
        "config": report.config,
    }


def save_report(report: EvalReport, path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        json.dump(report_to_payload(report), fh, sort_keys=True, indent=2,
                  ensure_ascii=False)
        fh.write("\n")
