"""End-to-end orchestration: ingest -> prompt -> complete -> parse ->
(score) -> verdicts -> aggregate, with a digest manifest for reproducibility.

Stages communicate only via the files named in the manifest. Replay-mode runs
are bit-reproducible: identical inputs and config produce byte-identical
outputs, so deleting intermediates and re-running regenerates the same bytes.
"""

from __future__ import annotations

import hashlib
import json
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path

from .backend import make_backend
from .config import PipelineConfig
from .corpus import PROMPT_TEMPLATE_VERSION, build_prompt, load_corpus
from .evaluation import build_sample_sets
from .extraction import (
    RawCompletion,
    parse_extraction,
    load_gold,
    save_completions,
    save_records,
)
from .indicators import (
    accession_stats,
    aggregate_by,
    resolve_verdict,
    save_indicator_rows,
    save_summary,
    save_verdicts,
    trace_coverage,
)
from .scoring import total_reward


class PipelineError(RuntimeError):
    def __init__(self, stage: str, message: str, article_id: str | None = None):
        self.stage = stage
        self.article_id = article_id
        where = f"stage {stage!r}"
        if article_id is not None:
            where += f", article {article_id!r}"
        super().__init__(f"{where}: {message}")


@dataclass(frozen=True)
class StageOutput:
    name: str
    paths: tuple[str, ...]  # relative to the manifest's directory
    digests: tuple[str, ...]


@dataclass(frozen=True)
class PipelineManifest:
    corpus_path: str
    corpus_digest: str
    gold_path: str | None
    gold_digest: str | None
    config_digest: str
    prompt_template_version: str
    stages: tuple[StageOutput, ...]


def file_digest(path: str | Path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def config_digest(config: PipelineConfig) -> str:
    canonical = json.dumps(config.to_payload(), sort_keys=True,
                           separators=(",", ":"))
    return hashlib.sha256(canonical.encode("utf-8")).hexdigest()


def manifest_to_payload(manifest: PipelineManifest) -> dict:
    return {
        "corpus": {"path": manifest.corpus_path, "sha256": manifest.corpus_digest},
        "gold": (None if manifest.gold_path is None else
                 {"path": manifest.gold_path, "sha256": manifest.gold_digest}),
        "config_sha256": manifest.config_digest,
        "prompt_template_version": manifest.prompt_template_version,
        "stages": [
            {"name": s.name,
             "outputs": [{"path": p, "sha256": d}
                         for p, d in zip(s.paths, s.digests)]}
            for s in manifest.stages
        ],
    }


def _stage(name: str, out_dir: Path, *paths: Path) -> StageOutput:
    rel = tuple(str(p.relative_to(out_dir)) for p in paths)
    return StageOutput(name=name, paths=rel,
                       digests=tuple(file_digest(p) for p in paths))


def run_pipeline(
    corpus_path: str | Path,
    out_dir: str | Path,
    config: PipelineConfig,
    gold_path: str | Path | None = None,
) -> PipelineManifest:
    """Run every stage over the corpus and write all artifacts under out_dir.

    Any stage failure aborts with the stage name (and article id where
    known). Returns the manifest, which is also written to
    out_dir/manifest.json.
    """
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    stages: list[StageOutput] = []

    # ingest
    try:
        articles = load_corpus(corpus_path)
    except Exception as exc:
        raise PipelineError("ingest", str(exc)) from exc
    gold = None
    if gold_path is not None:
        try:
            gold = load_gold(gold_path)
        except Exception as exc:
            raise PipelineError("ingest", str(exc)) from exc

    # prompt
    prompts = []
    for article in articles:
        try:
            prompts.append(build_prompt(article, config.token_budget))
        except Exception as exc:
            raise PipelineError("prompt", str(exc), article.id) from exc
    prompts_path = out / "prompts.jsonl"
    with prompts_path.open("w", encoding="utf-8") as fh:
        for p in prompts:
            fh.write(json.dumps(
                {"article_id": p.article_id, "text": p.text,
                 "token_count": p.token_count, "truncated": p.truncated},
                sort_keys=True, ensure_ascii=False))
            fh.write("\n")
    stages.append(_stage("prompt", out, prompts_path))

    # complete: fan out up to max_in_flight requests, merge in article order
    backend = make_backend(config.backend())
    n = config.samples_per_article

    def fetch(prompt):
        return backend.complete(prompt, n)

    completions: list[RawCompletion] = []
    try:
        with ThreadPoolExecutor(max_workers=config.max_in_flight) as pool:
            for batch in pool.map(fetch, prompts):
                completions.extend(batch)
    except Exception as exc:
        raise PipelineError("complete", str(exc)) from exc
    completions.sort(key=lambda c: (c.article_id, c.sample_index))
    completions_path = out / "completions.jsonl"
    save_completions(completions, completions_path)
    stages.append(_stage("complete", out, completions_path))

    # parse
    outcomes = {(c.article_id, c.sample_index): parse_extraction(c)
                for c in completions}
    records_path = out / "records.jsonl"
    save_records(
        ((aid, idx, o.record) for (aid, idx), o in sorted(outcomes.items())
         if o.parsed),
        records_path)
    stages.append(_stage("parse", out, records_path))

    articles_by_id = {a.id: a for a in articles}

    # score (only with gold)
    if gold is not None:
        gold_by_id = {g.article_id: g for g in gold}
        rewards_path = out / "rewards.jsonl"
        with rewards_path.open("w", encoding="utf-8") as fh:
            for c in completions:
                ann = gold_by_id.get(c.article_id)
                if ann is None:
                    raise PipelineError("score", "no gold annotation",
                                        c.article_id)
                try:
                    breakdown = total_reward(
                        articles_by_id[c.article_id], c, ann,
                        config.thresholds(), config.embellishment_mode)
                except Exception as exc:
                    raise PipelineError("score", str(exc), c.article_id) from exc
                fh.write(json.dumps({
                    "article_id": c.article_id,
                    "sample_index": c.sample_index,
                    "f": breakdown.f, "e": breakdown.e,
                    "v": breakdown.v, "r": breakdown.r,
                    "sub_scores": breakdown.sub_scores,
                }, sort_keys=True, ensure_ascii=False))
                fh.write("\n")
        stages.append(_stage("score", out, rewards_path))

    # verdicts
    sample_sets = build_sample_sets(completions)
    try:
        verdicts = [resolve_verdict(s) for s in sample_sets]
    except Exception as exc:
        raise PipelineError("verdicts", str(exc)) from exc
    verdicts_path = out / "verdicts.jsonl"
    save_verdicts(verdicts, verdicts_path)
    stages.append(_stage("verdicts", out, verdicts_path))

    # aggregate
    try:
        rows = aggregate_by(verdicts, config.group_by, articles_by_id)
        trace = trace_coverage(verdicts)
        accessions = accession_stats(verdicts)
    except Exception as exc:
        raise PipelineError("aggregate", str(exc)) from exc
    indicators_path = out / "indicators.csv"
    summary_path = out / "summary.json"
    save_indicator_rows(rows, indicators_path)
    save_summary(trace, accessions, summary_path)
    stages.append(_stage("aggregate", out, indicators_path, summary_path))

    manifest = PipelineManifest(
        corpus_path=str(corpus_path),
        corpus_digest=file_digest(corpus_path),
        gold_path=None if gold_path is None else str(gold_path),
        gold_digest=None if gold_path is None else file_digest(gold_path),
        config_digest=config_digest(config),
        prompt_template_version=PROMPT_TEMPLATE_VERSION,
        stages=tuple(stages),
    )
    manifest_path = out / "manifest.json"
    with manifest_path.open("w", encoding="utf-8") as fh:
        json.dump(manifest_to_payload(manifest), fh, sort_keys=True, indent=2,
                  ensure_ascii=False)
        fh.write("\n")
    return manifest
