"""Command-line interface: every pipeline stage as a subcommand.

Configuration precedence: defaults < --config file < OSIR_* environment
variables < explicit flags.
"""

from __future__ import annotations

import csv
import json
from collections import Counter
from pathlib import Path

import click

from .backend import make_backend
from .config import ConfigError, PipelineConfig, load_config
from .corpus import build_prompt, load_corpus
from .evaluation import (
    FlagRules,
    SampleSet,
    build_sample_sets,
    build_eval_report,
    flag_disagreements,
    render_report_table,
    save_report,
)
from .extraction import (
    ParseOutcome,
    load_completions,
    load_gold,
    load_records,
    parse_extraction,
    save_completions,
    save_gold,
    save_records,
)
from .grounding import filter_gold
from .indicators import (
    accession_stats,
    aggregate_by,
    resolve_verdict,
    save_indicator_rows,
    save_summary,
    trace_coverage,
)
from .pipeline import PipelineError, manifest_to_payload, run_pipeline
from .scoring import total_reward


def _config(config_path: str | None, **overrides) -> PipelineConfig:
    try:
        return load_config(config_path, **overrides)
    except ConfigError as exc:
        raise click.ClickException(str(exc)) from exc


@click.group()
def main() -> None:
    """Measure research-data generation and reuse across an article corpus."""


@main.command()
@click.option("--corpus", "corpus_path", required=True,
              type=click.Path(exists=False), help="Line-delimited corpus file.")
@click.option("--validate", is_flag=True, default=False,
              help="Exit non-zero on any malformed article.")
def ingest(corpus_path: str, validate: bool) -> None:
    """Load a corpus file and report its composition."""
    try:
        articles = load_corpus(corpus_path)
    except Exception as exc:
        raise click.ClickException(str(exc)) from exc
    by_discipline = Counter(a.discipline for a in articles)
    click.echo(f"{len(articles)} articles")
    for discipline, count in sorted(by_discipline.items()):
        click.echo(f"  {discipline}: {count}")
    if validate:
        click.echo("corpus OK")


@main.command()
@click.option("--corpus", "corpus_path", required=True, type=click.Path())
@click.option("--backend", "backend_mode", type=click.Choice(["http", "replay"]),
              default=None, help="Completion backend.")
@click.option("--fixture", "fixture_path", type=click.Path(), default=None,
              help="Replay fixture file (replay mode).")
@click.option("--endpoint", default=None, help="Completion endpoint (http mode).")
@click.option("--samples", "samples_per_article", type=int, default=None,
              help="Samples per article.")
@click.option("--budget", "token_budget", type=int, default=None,
              help="Prompt token budget.")
@click.option("--out", "out_path", required=True, type=click.Path(),
              help="Where to write completions (JSONL).")
@click.option("--records", "records_path", type=click.Path(), default=None,
              help="Also write parsed records here (JSONL).")
@click.option("--config", "config_path", type=click.Path(), default=None)
def extract(corpus_path: str, backend_mode: str | None,
            fixture_path: str | None, endpoint: str | None,
            samples_per_article: int | None, token_budget: int | None,
            out_path: str, records_path: str | None,
            config_path: str | None) -> None:
    """Prompt the backend for every article and store raw completions."""
    config = _config(config_path, backend_mode=backend_mode,
                     fixture_path=fixture_path, endpoint=endpoint,
                     samples_per_article=samples_per_article,
                     token_budget=token_budget)
    try:
        articles = load_corpus(corpus_path)
        backend = make_backend(config.backend())
        completions = []
        for article in articles:
            prompt = build_prompt(article, config.token_budget)
            completions.extend(backend.complete(prompt,
                                                config.samples_per_article))
        completions.sort(key=lambda c: (c.article_id, c.sample_index))
        save_completions(completions, out_path)
        if records_path is not None:
            parsed = [(c.article_id, c.sample_index, o.record)
                      for c in completions
                      if (o := parse_extraction(c)).parsed]
            save_records(parsed, records_path)
    except Exception as exc:
        raise click.ClickException(str(exc)) from exc
    click.echo(f"{len(completions)} completions -> {out_path}")


@main.command()
@click.option("--corpus", "corpus_path", required=True, type=click.Path())
@click.option("--completions", "completions_path", required=True,
              type=click.Path())
@click.option("--gold", "gold_path", required=True, type=click.Path())
@click.option("--out", "out_path", required=True, type=click.Path())
@click.option("--embellishment", "embellishment_mode",
              type=click.Choice(["fraction", "binary"]), default=None)
@click.option("--min-reward", type=float, default=None,
              help="With --select, keep only rewards >= this value.")
@click.option("--select", is_flag=True, default=False,
              help="Emit only completions whose reward clears --min-reward.")
@click.option("--config", "config_path", type=click.Path(), default=None)
def score(corpus_path: str, completions_path: str, gold_path: str,
          out_path: str, embellishment_mode: str | None,
          min_reward: float | None, select: bool,
          config_path: str | None) -> None:
    """Score completions against gold: f, e, v and the composite reward."""
    config = _config(config_path, embellishment_mode=embellishment_mode)
    if select and min_reward is None:
        raise click.ClickException("--select requires --min-reward")
    try:
        articles = {a.id: a for a in load_corpus(corpus_path)}
        completions = load_completions(completions_path)
        gold = {g.article_id: g for g in load_gold(gold_path)}
        written = 0
        with Path(out_path).open("w", encoding="utf-8") as fh:
            for c in sorted(completions,
                            key=lambda c: (c.article_id, c.sample_index)):
                if c.article_id not in articles:
                    raise click.ClickException(
                        f"completion references unknown article {c.article_id!r}")
                if c.article_id not in gold:
                    raise click.ClickException(
                        f"no gold annotation for article {c.article_id!r}")
                breakdown = total_reward(
                    articles[c.article_id], c, gold[c.article_id],
                    config.thresholds(), config.embellishment_mode)
                if select and breakdown.r < min_reward:
                    continue
                fh.write(json.dumps({
                    "article_id": c.article_id,
                    "sample_index": c.sample_index,
                    "f": breakdown.f, "e": breakdown.e,
                    "v": breakdown.v, "r": breakdown.r,
                    "sub_scores": breakdown.sub_scores,
                }, sort_keys=True, ensure_ascii=False))
                fh.write("\n")
                written += 1
    except click.ClickException:
        raise
    except Exception as exc:
        raise click.ClickException(str(exc)) from exc
    click.echo(f"{written} reward rows -> {out_path}")


@main.command(name="eval")
@click.option("--completions", "completions_path", required=True,
              type=click.Path())
@click.option("--gold", "gold_path", required=True, type=click.Path())
@click.option("--samples", "samples_per_article", type=int, default=None,
              help="Expected samples per article.")
@click.option("--pass1", "pass1_mode", type=click.Choice(["mean", "first"]),
              default=None)
@click.option("--flag-floor", "f1_floor", type=float, default=None,
              help="Best-sample F1 floor below which articles get flagged.")
@click.option("--out", "out_path", required=True, type=click.Path())
def eval_command(completions_path: str, gold_path: str,
                 samples_per_article: int | None, pass1_mode: str | None,
                 f1_floor: float | None, out_path: str) -> None:
    """Evaluate completions against gold and print the metrics table."""
    config = _config(None, pass1_mode=pass1_mode,
                     samples_per_article=samples_per_article,
                     f1_floor=f1_floor)
    try:
        completions = load_completions(completions_path)
        gold = load_gold(gold_path)
        samples = build_sample_sets(
            completions,
            samples_per_article if samples_per_article is not None else None)
        report = build_eval_report(samples, gold, config.pass1_mode,
                                   config.thresholds())
        flagged = flag_disagreements(samples, gold,
                                     FlagRules(f1_floor=config.f1_floor),
                                     config.thresholds())
        save_report(report, out_path)
    except Exception as exc:
        raise click.ClickException(str(exc)) from exc
    click.echo(render_report_table(report))
    click.echo(f"\n{len(flagged)} articles flagged for review")
    for f in flagged:
        click.echo(f"  {f.article_id}: {'; '.join(f.reasons)}")
    click.echo(f"report -> {out_path}")


@main.command(name="filter-gold")
@click.option("--corpus", "corpus_path", required=True, type=click.Path())
@click.option("--gold", "gold_path", required=True, type=click.Path())
@click.option("--out-kept", "kept_path", required=True, type=click.Path())
@click.option("--out-removed", "removed_path", required=True, type=click.Path())
@click.option("--config", "config_path", type=click.Path(), default=None)
def filter_gold_command(corpus_path: str, gold_path: str, kept_path: str,
                        removed_path: str, config_path: str | None) -> None:
    """Drop gold annotations whose evidence is absent from the article text."""
    config = _config(config_path)
    try:
        corpus = load_corpus(corpus_path)
        annotations = load_gold(gold_path)
        kept, removed = filter_gold(corpus, annotations, config.thresholds())
        save_gold(kept, kept_path)
        with Path(removed_path).open("w", encoding="utf-8", newline="") as fh:
            writer = csv.writer(fh, lineterminator="\n")
            writer.writerow(
                ["article_id", "field", "string", "best_score", "threshold"])
            for r in removed:
                for d in r.diagnostics:
                    writer.writerow([d.article_id, d.field, d.string,
                                     f"{d.best_score:.6f}", d.threshold])
    except Exception as exc:
        raise click.ClickException(str(exc)) from exc
    click.echo(f"kept {len(kept)} -> {kept_path}")
    click.echo(f"removed {len(removed)} -> {removed_path}")


@main.command()
@click.option("--records", "records_path", required=True, type=click.Path())
@click.option("--corpus", "corpus_path", required=True, type=click.Path())
@click.option("--by", "group_by",
              type=click.Choice(["discipline", "region", "total"]),
              default=None)
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--config", "config_path", type=click.Path(), default=None)
def aggregate(records_path: str, corpus_path: str, group_by: str | None,
              out_dir: str, config_path: str | None) -> None:
    """Resolve verdicts from parsed records and emit indicator tables.

    Corpus articles with no parsed record at all become unresolved verdicts
    (counted under "neither").
    """
    config = _config(config_path, group_by=group_by)
    try:
        articles = {a.id: a for a in load_corpus(corpus_path)}
        records = load_records(records_path)
        by_article: dict[str, dict[int, ParseOutcome]] = {}
        for article_id, sample_index, record in records:
            if article_id not in articles:
                raise click.ClickException(
                    f"record references unknown article {article_id!r}")
            by_article.setdefault(article_id, {})[sample_index] = ParseOutcome(
                status="parsed", record=record)
        unparsed = (ParseOutcome(status="format_failure",
                                 failure_reason="no parsed samples"),)
        verdicts = []
        for article_id in sorted(articles):
            indexed = by_article.get(article_id, {})
            outcomes = tuple(indexed[i] for i in sorted(indexed)) or unparsed
            verdicts.append(resolve_verdict(
                SampleSet(article_id=article_id, outcomes=outcomes)))
        rows = aggregate_by(verdicts, config.group_by, articles)
        out = Path(out_dir)
        out.mkdir(parents=True, exist_ok=True)
        save_indicator_rows(rows, out / "indicators.csv")
        save_summary(trace_coverage(verdicts), accession_stats(verdicts),
                     out / "summary.json")
    except click.ClickException:
        raise
    except Exception as exc:
        raise click.ClickException(str(exc)) from exc
    for row in rows:
        click.echo(f"{row.group}: {row.publications} publications, "
                   f"{row.generated_pct}% generated, {row.reused_pct}% reused, "
                   f"{row.neither_pct}% neither")
    click.echo(f"indicators -> {out_dir}")


@main.command()
@click.option("--corpus", "corpus_path", required=True, type=click.Path())
@click.option("--gold", "gold_path", type=click.Path(), default=None)
@click.option("--out", "out_dir", required=True, type=click.Path())
@click.option("--backend", "backend_mode", type=click.Choice(["http", "replay"]),
              default=None)
@click.option("--fixture", "fixture_path", type=click.Path(), default=None)
@click.option("--endpoint", default=None)
@click.option("--samples", "samples_per_article", type=int, default=None)
@click.option("--by", "group_by",
              type=click.Choice(["discipline", "region", "total"]),
              default=None)
@click.option("--config", "config_path", type=click.Path(), default=None)
def run(corpus_path: str, gold_path: str | None, out_dir: str,
        backend_mode: str | None, fixture_path: str | None,
        endpoint: str | None, samples_per_article: int | None,
        group_by: str | None, config_path: str | None) -> None:
    """Run the full pipeline and write a digest manifest."""
    config = _config(config_path, backend_mode=backend_mode,
                     fixture_path=fixture_path, endpoint=endpoint,
                     samples_per_article=samples_per_article,
                     group_by=group_by)
    try:
        manifest = run_pipeline(corpus_path, out_dir, config, gold_path)
    except PipelineError as exc:
        raise click.ClickException(str(exc)) from exc
    except Exception as exc:
        raise click.ClickException(str(exc)) from exc
    payload = manifest_to_payload(manifest)
    click.echo(f"{len(payload['stages'])} stages -> {out_dir}")
    for stage in payload["stages"]:
        for output in stage["outputs"]:
            click.echo(f"  {stage['name']}: {output['path']} "
                       f"sha256:{output['sha256'][:12]}")


if __name__ == "__main__":
    main()
