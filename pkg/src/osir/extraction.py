"""Structured extraction records: schema, completion parsing, format reward.

A completion is expected to carry one JSON object with two boolean judgments,
eight evidence lists, and two optional free-text descriptions. Parsing is
total: malformed completions become a FormatFailure outcome, never an
exception. Field kinds are checked strictly (no "true" -> True coercion),
because the binary format reward gates on them.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, fields as dc_fields
from pathlib import Path
from typing import Iterable

from .identifiers import canonicalize_identifier

BOOLEAN_FIELDS = ("new_data_generated", "reuse_data")

LIST_FIELDS = (
    "new_data_citations",
    "new_data_accessions",
    "new_data_dois",
    "new_data_urls",
    "reuse_data_citations",
    "reuse_data_accessions",
    "reuse_data_dois",
    "reuse_data_urls",
)

DESCRIPTION_FIELDS = ("new_data_description", "reuse_data_description")

#: The ten fields that carry scored judgments (booleans + evidence lists).
SCORED_FIELDS = BOOLEAN_FIELDS + LIST_FIELDS

_FIELD_KIND = {
    "new_data_citations": "citation",
    "reuse_data_citations": "citation",
    "new_data_accessions": "accession",
    "reuse_data_accessions": "accession",
    "new_data_dois": "doi",
    "reuse_data_dois": "doi",
    "new_data_urls": "url",
    "reuse_data_urls": "url",
}


def field_kind(name: str) -> str:
    """Identifier kind ('doi' | 'url' | 'accession' | 'citation') of a list field."""
    return _FIELD_KIND[name]


@dataclass(frozen=True)
class ExtractionRecord:
    """The structured output extracted from one completion."""

    new_data_generated: bool
    reuse_data: bool
    new_data_citations: tuple[str, ...] = ()
    new_data_accessions: tuple[str, ...] = ()
    new_data_dois: tuple[str, ...] = ()
    new_data_urls: tuple[str, ...] = ()
    reuse_data_citations: tuple[str, ...] = ()
    reuse_data_accessions: tuple[str, ...] = ()
    reuse_data_dois: tuple[str, ...] = ()
    reuse_data_urls: tuple[str, ...] = ()
    new_data_description: str | None = None
    reuse_data_description: str | None = None

    def lists(self) -> dict[str, tuple[str, ...]]:
        return {name: getattr(self, name) for name in LIST_FIELDS}


@dataclass(frozen=True)
class RawCompletion:
    """Verbatim model output for one (article, sample) pair."""

    article_id: str
    sample_index: int
    text: str


@dataclass(frozen=True)
class ParseOutcome:
    """Result of parsing a completion: a record, or a reason it failed."""

    status: str  # "parsed" | "format_failure"
    record: ExtractionRecord | None = None
    failure_reason: str | None = None

    @property
    def parsed(self) -> bool:
        return self.status == "parsed"


@dataclass(frozen=True)
class GoldAnnotation:
    """Curator-labeled ground truth for one article, same shape as a record."""

    article_id: str
    record: ExtractionRecord


@dataclass(frozen=True)
class Violation:
    field: str
    rule: str


def _first_json_object(text: str) -> dict | None:
    """The first parseable JSON object embedded in *text*, if any.

    Tolerates surrounding prose and markdown code fences: scanning starts at
    each '{' and takes the first position where a JSON value decodes.
    """
    decoder = json.JSONDecoder()
    pos = text.find("{")
    while pos != -1:
        try:
            value, _ = decoder.raw_decode(text, pos)
        except json.JSONDecodeError:
            pos = text.find("{", pos + 1)
            continue
        return value if isinstance(value, dict) else None
    return None


def _record_from_payload(payload: dict) -> tuple[ExtractionRecord | None, str | None]:
    kwargs: dict = {}
    for name in BOOLEAN_FIELDS:
        if name not in payload:
            return None, f"missing field {name}"
        value = payload[name]
        if not isinstance(value, bool):
            return None, f"field {name} must be a boolean, got {type(value).__name__}"
        kwargs[name] = value
    for name in LIST_FIELDS:
        if name not in payload:
            return None, f"missing field {name}"
        value = payload[name]
        if not isinstance(value, list):
            return None, f"field {name} must be a list, got {type(value).__name__}"
        for item in value:
            if not isinstance(item, str):
                return None, (
                    f"field {name} must contain only strings, "
                    f"got {type(item).__name__}"
                )
        kwargs[name] = tuple(value)
    for name in DESCRIPTION_FIELDS:
        value = payload.get(name)
        if value is not None and not isinstance(value, str):
            return None, f"field {name} must be a string if present"
        kwargs[name] = value
    return ExtractionRecord(**kwargs), None


def parse_extraction(raw: RawCompletion) -> ParseOutcome:
    """Parse a completion into an ExtractionRecord, or report why it failed.

    Total and deterministic: any text yields an outcome. Unknown payload
    fields are ignored; the two description fields are optional.
    """
    payload = _first_json_object(raw.text)
    if payload is None:
        return ParseOutcome(status="format_failure",
                            failure_reason="no structured payload found")
    record, reason = _record_from_payload(payload)
    if record is None:
        return ParseOutcome(status="format_failure", failure_reason=reason)
    return ParseOutcome(status="parsed", record=record)


def format_reward(outcome: ParseOutcome) -> int:
    """Binary format gate: 1 iff the completion parsed into a valid record."""
    return 1 if outcome.parsed else 0


def validate_record(record: ExtractionRecord) -> list[Violation]:
    """Check record invariants beyond field kinds.

    Returns one Violation per broken rule: evidence strings must be non-empty
    after trimming, and unique within each list once canonicalized.
    """
    violations: list[Violation] = []
    for name, values in record.lists().items():
        kind = field_kind(name)
        canonical_seen: dict[str, str] = {}
        flagged: set[str] = set()
        for value in values:
            if not value.strip():
                violations.append(Violation(name, "empty string after trimming"))
                continue
            canon = canonicalize_identifier(kind, value)
            if canon in canonical_seen and canon not in flagged:
                violations.append(Violation(
                    name,
                    f"duplicate canonical value {canon!r} "
                    f"(from {canonical_seen[canon]!r} and {value!r})",
                ))
                flagged.add(canon)
            else:
                canonical_seen.setdefault(canon, value)
    return violations


def record_to_payload(record: ExtractionRecord) -> dict:
    """Record as a plain dict with the wire field names."""
    payload: dict = {}
    for f in dc_fields(record):
        value = getattr(record, f.name)
        payload[f.name] = list(value) if isinstance(value, tuple) else value
    return payload


def serialize_record(record: ExtractionRecord) -> str:
    return json.dumps(record_to_payload(record), sort_keys=True, ensure_ascii=False)


# ---------------------------------------------------------------------------
# Line-delimited file interfaces


class CompletionsFileError(ValueError):
    pass


def load_completions(path: str | Path) -> list[RawCompletion]:
    """Load a completions file: one {article_id, sample_index, text} per line."""
    path = Path(path)
    if not path.exists():
        raise CompletionsFileError(f"completions file not found: {path}")
    out: list[RawCompletion] = []
    seen: set[tuple[str, int]] = set()
    with path.open(encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                payload = json.loads(line)
            except json.JSONDecodeError as exc:
                raise CompletionsFileError(
                    f"line {line_no}: invalid JSON ({exc.msg})") from exc
            try:
                article_id = payload["article_id"]
                sample_index = payload["sample_index"]
                text = payload["text"]
            except (KeyError, TypeError) as exc:
                raise CompletionsFileError(
                    f"line {line_no}: missing field {exc}") from exc
            if not isinstance(sample_index, int) or sample_index < 0:
                raise CompletionsFileError(
                    f"line {line_no}: sample_index must be a non-negative integer")
            key = (article_id, sample_index)
            if key in seen:
                raise CompletionsFileError(
                    f"line {line_no}: duplicate sample {key}")
            seen.add(key)
            out.append(RawCompletion(article_id, sample_index, text))
    return out


def save_completions(completions: Iterable[RawCompletion], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for c in completions:
            fh.write(json.dumps(
                {"article_id": c.article_id, "sample_index": c.sample_index,
                 "text": c.text},
                sort_keys=True, ensure_ascii=False))
            fh.write("\n")


def save_records(
    records: Iterable[tuple[str, int, ExtractionRecord]],
    path: str | Path,
) -> None:
    """Write parsed records keyed by (article_id, sample_index)."""
    with Path(path).open("w", encoding="utf-8") as fh:
        for article_id, sample_index, record in records:
            payload = {"article_id": article_id, "sample_index": sample_index}
            payload.update(record_to_payload(record))
            fh.write(json.dumps(payload, sort_keys=True, ensure_ascii=False))
            fh.write("\n")


def load_records(path: str | Path) -> list[tuple[str, int, ExtractionRecord]]:
    path = Path(path)
    if not path.exists():
        raise CompletionsFileError(f"records file not found: {path}")
    out: list[tuple[str, int, ExtractionRecord]] = []
    with path.open(encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            payload = json.loads(line)
            record, reason = _record_from_payload(payload)
            if record is None:
                raise CompletionsFileError(f"line {line_no}: {reason}")
            out.append((payload["article_id"], int(payload["sample_index"]), record))
    return out


class GoldFileError(ValueError):
    pass


def load_gold(path: str | Path) -> list[GoldAnnotation]:
    """Load gold annotations: record fields plus article_id, one per line."""
    path = Path(path)
    if not path.exists():
        raise GoldFileError(f"gold file not found: {path}")
    out: list[GoldAnnotation] = []
    seen: dict[str, int] = {}
    with path.open(encoding="utf-8") as fh:
        for line_no, line in enumerate(fh, start=1):
            if not line.strip():
                continue
            try:
                payload = json.loads(line)
            except json.JSONDecodeError as exc:
                raise GoldFileError(
                    f"line {line_no}: invalid JSON ({exc.msg})") from exc
            article_id = payload.get("article_id")
            if not isinstance(article_id, str) or not article_id:
                raise GoldFileError(f"line {line_no}: missing or empty article_id")
            if article_id in seen:
                raise GoldFileError(
                    f"duplicate gold annotation for {article_id!r} on lines "
                    f"{seen[article_id]} and {line_no}")
            seen[article_id] = line_no
            record, reason = _record_from_payload(payload)
            if record is None:
                raise GoldFileError(f"line {line_no}: {reason}")
            out.append(GoldAnnotation(article_id=article_id, record=record))
    return out


def save_gold(annotations: Iterable[GoldAnnotation], path: str | Path) -> None:
    with Path(path).open("w", encoding="utf-8") as fh:
        for ann in annotations:
            payload = {"article_id": ann.article_id}
            payload.update(record_to_payload(ann.record))
            fh.write(json.dumps(payload, sort_keys=True, ensure_ascii=False))
            fh.write("\n")
