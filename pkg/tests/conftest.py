"""Shared test builders for corpora, records, and completion fixtures."""

from __future__ import annotations

import json
from pathlib import Path

import pytest

from osir.corpus import Article
from osir.extraction import (
    ExtractionRecord,
    GoldAnnotation,
    RawCompletion,
    record_to_payload,
    serialize_record,
)


def make_record(**overrides) -> ExtractionRecord:
    """An all-false, all-empty record with selected fields overridden."""
    base = dict(new_data_generated=False, reuse_data=False)
    base.update(overrides)
    return ExtractionRecord(**base)


def make_article(article_id: str, body: str, *, title: str = "",
                 discipline: str = "Health Sciences",
                 region: str = "Europe") -> Article:
    return Article(id=article_id, title=title, body=body,
                   discipline=discipline, region=region)


def completion_text(record: ExtractionRecord, *, prose: str = "",
                    fenced: bool = False) -> str:
    payload = serialize_record(record)
    if fenced:
        payload = f"```json\n{payload}\n```"
    return f"{prose}\n{payload}" if prose else payload


def make_completion(article_id: str, sample_index: int,
                    record: ExtractionRecord, **kw) -> RawCompletion:
    return RawCompletion(article_id, sample_index, completion_text(record, **kw))


def write_jsonl(path: Path, rows: list[dict]) -> Path:
    with path.open("w", encoding="utf-8") as fh:
        for row in rows:
            fh.write(json.dumps(row, sort_keys=True, ensure_ascii=False))
            fh.write("\n")
    return path


def corpus_row(article: Article) -> dict:
    row = {
        "id": article.id,
        "title": article.title,
        "body_markdown": article.body,
        "discipline": article.discipline,
        "region": article.region,
    }
    if article.published is not None:
        row["published"] = article.published
    return row


def gold_row(annotation: GoldAnnotation) -> dict:
    row = {"article_id": annotation.article_id}
    row.update(record_to_payload(annotation.record))
    return row


def completion_row(completion: RawCompletion) -> dict:
    return {
        "article_id": completion.article_id,
        "sample_index": completion.sample_index,
        "text": completion.text,
    }


@pytest.fixture
def tmp_corpus_file(tmp_path):
    def write(articles: list[Article], name: str = "corpus.jsonl") -> Path:
        return write_jsonl(tmp_path / name, [corpus_row(a) for a in articles])

    return write


DISCIPLINE_CYCLE = ("Health Sciences", "Life Sciences", "Physical Sciences",
                    "Social Sciences")
REGION_CYCLE = ("Europe", "Africa", "Asia")


def build_replay_bundle(directory: Path, n_articles: int = 3,
                        samples: int = 3) -> dict[str, Path]:
    """A self-consistent corpus + gold + replay fixture for pipeline tests.

    Every article body contains its gold evidence verbatim; samples replay
    the gold record (one sample per fourth article is unparseable prose, so
    the parse/verdict paths see both outcomes).
    """
    directory.mkdir(parents=True, exist_ok=True)
    corpus_rows, gold_rows, fixture_rows = [], [], []
    for i in range(n_articles):
        aid = f"art-{i:03d}"
        accession = f"GSE{10_000 + i}"
        doi = f"10.5061/dryad.{i:03d}"
        citation = f"Author{i} et al. 20{10 + i % 10}"
        url = f"https://repo.example.org/d{i}"
        generated = i % 3 != 0
        reused = i % 2 == 0
        body = (
            f"# Study {i}\n\nWe deposited sequencing reads under {accession} "
            f"and released tables at {doi}. Prior data from {citation} "
            f"were retrieved via {url} and reanalyzed.\n\n"
            f"## Data availability\n\nAll data supporting study {i} are shared."
        )
        record = make_record(
            new_data_generated=generated,
            reuse_data=reused,
            new_data_accessions=(accession,) if generated else (),
            new_data_dois=(doi,) if generated else (),
            reuse_data_citations=(citation,) if reused else (),
            reuse_data_urls=(url,) if reused else (),
            new_data_description=f"study {i} deposited new reads"
            if generated else None,
            reuse_data_description=f"study {i} reanalyzed earlier data"
            if reused else None,
        )
        corpus_rows.append(corpus_row(Article(
            id=aid, title=f"Study {i}", body=body,
            discipline=DISCIPLINE_CYCLE[i % len(DISCIPLINE_CYCLE)],
            region=REGION_CYCLE[i % len(REGION_CYCLE)])))
        gold_rows.append(gold_row(GoldAnnotation(aid, record)))
        for s in range(samples):
            if s == samples - 1 and i % 4 == 0:
                text = f"The model rambled about study {i} without any payload."
            elif s == 0:
                text = completion_text(
                    record, prose=f"Looking at study {i}: evidence found.")
            else:
                text = completion_text(record, fenced=True)
            fixture_rows.append({"article_id": aid, "sample_index": s,
                                 "text": text})
    paths = {
        "corpus": write_jsonl(directory / "corpus.jsonl", corpus_rows),
        "gold": write_jsonl(directory / "gold.jsonl", gold_rows),
        "fixture": write_jsonl(directory / "fixture.jsonl", fixture_rows),
    }
    return paths
