"""Operator command line: ingest, simulate, serve, export-run, eval, tune."""

from __future__ import annotations

import csv as csv_module
import functools
import sys
from pathlib import Path

import click
import numpy as np

from .corpus import CsvSchema, make_synthetic_document, parse_metadata_csv, parse_topics_xml
from .errors import CalkitError, SchemaError
from .evaluation import Qrels, evaluate, parse_qrels
from .features import TfidfVectorizer, vectorize
from .journal import JudgmentJournal
from .learner import LOOP_TYPES, LearnerConfig, SgdLogisticRanker
from .runs import ORDERING_METHODS, RunEntry, build_run, parse_run_file, write_run_file
from .session import (
    SimulatedAssessor,
    StoppingConfig,
    build_sessions,
    run_simulated,
)
from .storage import DataDir, load_workspace, save_workspace


def _fail(message: str, code: int) -> None:
    click.echo(f"error: {message}", err=True)
    sys.exit(code)


def handle_errors(fn):
    """Exit 1 on validation problems, 2 on unexpected runtime failures."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except (SchemaError, FileNotFoundError, ValueError, KeyError) as exc:
            _fail(str(exc), 1)
        except CalkitError as exc:
            _fail(str(exc), 2)
        except click.ClickException:
            raise
        except Exception as exc:  # noqa: BLE001
            _fail(f"{type(exc).__name__}: {exc}", 2)

    return wrapper


def learner_options(fn):
    fn = click.option("--seed", type=int, default=0, show_default=True,
                      help="Seed for every random choice.")(fn)
    fn = click.option("--iterations", type=int, default=200_000, show_default=True,
                      help="SGD steps per (re)training.")(fn)
    fn = click.option("--loop-type", type=click.Choice(LOOP_TYPES), default="roc-pair",
                      show_default=True, help="Example sampling loop.")(fn)
    fn = click.option("--lambda", "lambda_", type=float, default=1e-4, show_default=True,
                      help="L2 regularization strength.")(fn)
    return fn


def session_options(fn):
    fn = click.option("--budget", type=int, default=None,
                      help="Assessment cap per topic (S-CAL default 300).")(fn)
    fn = click.option("--b", "stop_b", type=float, default=50.0, show_default=True,
                      help="Stopping rule fixed overhead b.")(fn)
    fn = click.option("--a", "stop_a", type=float, default=1.0, show_default=True,
                      help="Stopping rule slope a.")(fn)
    fn = click.option("--mode", type=click.Choice(["cal", "scal"]), default="cal",
                      show_default=True, help="Review loop variant.")(fn)
    return fn


@click.group()
def main() -> None:
    """High-recall review: continuous active learning over metadata corpora."""


@main.command()
@click.option("--corpus", "corpus_path", type=click.Path(path_type=Path), required=True,
              help="Metadata CSV file.")
@click.option("--topics", "topics_path", type=click.Path(path_type=Path), required=True,
              help="Topics XML file.")
@click.option("--data-dir", type=click.Path(path_type=Path), required=True,
              help="Directory for the corpus, vocabulary and topic caches.")
@click.option("--col-doc-id", default=CsvSchema.doc_id, show_default=True)
@click.option("--col-title", default=CsvSchema.title, show_default=True)
@click.option("--col-abstract", default=CsvSchema.abstract, show_default=True)
@click.option("--col-authors", default=CsvSchema.authors, show_default=True)
@click.option("--col-year", default=CsvSchema.year, show_default=True)
@click.option("--col-publisher", default=CsvSchema.publisher, show_default=True)
@handle_errors
def ingest(corpus_path, topics_path, data_dir, col_doc_id, col_title, col_abstract,
           col_authors, col_year, col_publisher) -> None:
    """Parse corpus and topics, fit the vocabulary, and cache everything."""
    schema = CsvSchema(doc_id=col_doc_id, title=col_title, abstract=col_abstract,
                       authors=col_authors, year=col_year, publisher=col_publisher)
    result = parse_metadata_csv(corpus_path, schema)
    if result.warnings:
        click.echo(
            f"warning: dropped {result.duplicates} duplicate-id rows, "
            f"skipped {result.skipped} empty-id rows",
            err=True,
        )
    topics = parse_topics_xml(topics_path)
    synthetic = [make_synthetic_document(t) for t in topics]
    vectorizer = TfidfVectorizer().fit(result.corpus.documents, synthetic)
    save_workspace(DataDir(data_dir), result.corpus, vectorizer.vocabulary_, topics)
    click.echo(
        f"ingested {len(result.corpus)} documents, {len(topics)} topics, "
        f"vocabulary of {len(vectorizer.vocabulary_)} terms -> {data_dir}"
    )


@main.command()
@click.option("--corpus", "corpus_path", type=click.Path(path_type=Path), required=True)
@click.option("--topics", "topics_path", type=click.Path(path_type=Path), required=True)
@click.option("--qrels", "qrels_path", type=click.Path(path_type=Path), required=True,
              help="Qrels used as the simulated assessor's ground truth.")
@click.option("--max-assessments", type=int, default=300, show_default=True)
@click.option("--checkpoint-every", type=int, default=25, show_default=True,
              help="Recall table granularity (assessments).")
@session_options
@learner_options
@handle_errors
def simulate(corpus_path, topics_path, qrels_path, max_assessments, checkpoint_every,
             mode, stop_a, stop_b, budget, lambda_, loop_type, iterations, seed) -> None:
    """Run the review loop with an oracle assessor; print recall vs effort."""
    corpus = parse_metadata_csv(corpus_path).corpus
    topics = parse_topics_xml(topics_path)
    qrels = parse_qrels(qrels_path)
    oracle = SimulatedAssessor(qrels.grades)
    learner = LearnerConfig(lambda_=lambda_, loop_type=loop_type,
                            iterations=iterations, seed=seed)
    _, sessions = build_sessions(
        corpus, topics, mode=mode, learner_config=learner,
        stopping=StoppingConfig(a=stop_a, b=stop_b), budget=budget, seed=seed,
    )
    click.echo("topic\tassessments\trelevant_found\trecall")
    for topic in topics:
        session = sessions[topic.topic_id]
        transcript = run_simulated(session, oracle, max_assessments=max_assessments)
        total_relevant = qrels.relevant_count(topic.topic_id)
        found = 0
        for position, step in enumerate(transcript, start=1):
            if step.label >= 1:
                found += 1
            if position % checkpoint_every == 0 or position == len(transcript):
                recall = found / total_relevant if total_relevant else 0.0
                click.echo(
                    f"{topic.topic_id}\t{position}\t{found}\t{recall:.4f}"
                )


@main.command()
@click.option("--data-dir", type=click.Path(path_type=Path), default=None,
              help="Ingested workspace (overrides the config file).")
@click.option("--config", "config_path", type=click.Path(path_type=Path), default=None,
              help="INI-style service config; CALKIT_* env vars override it.")
@click.option("--port", type=int, default=None)
@click.option("--host", default=None)
@handle_errors
def serve(data_dir, config_path, port, host) -> None:
    """Start the assessor HTTP service over an ingested workspace."""
    import uvicorn

    from .service import create_app, load_service_config, service_from_config

    config = load_service_config(config_path)
    if data_dir is not None:
        config.data_dir = data_dir
    if port is not None:
        config.port = port
    if host is not None:
        config.host = host
    service = service_from_config(config)
    app = create_app(service, ui_dir=config.ui_dir)
    uvicorn.run(app, host=config.host, port=config.port)


@main.command("export-run")
@click.option("--data-dir", type=click.Path(path_type=Path), required=True,
              help="Ingested workspace holding the judgment journal.")
@click.option("--method", "methods", type=click.Choice(ORDERING_METHODS), multiple=True,
              help="Ordering method(s); default all three.")
@click.option("--depth", type=int, default=1000, show_default=True)
@click.option("--tag", default=None, help="Run tag; defaults to calkit-<method>.")
@click.option("--out-dir", type=click.Path(path_type=Path), default=None,
              help="Output directory (default <data-dir>/runs).")
@session_options
@learner_options
@handle_errors
def export_run(data_dir, methods, depth, tag, out_dir, mode, stop_a, stop_b, budget,
               lambda_, loop_type, iterations, seed) -> None:
    """Rebuild sessions from the journal and write TREC run files."""
    dd = DataDir(data_dir)
    corpus, vocabulary, topics = load_workspace(dd)
    vectorizer = TfidfVectorizer()
    vectorizer.vocabulary_ = vocabulary
    learner = LearnerConfig(lambda_=lambda_, loop_type=loop_type,
                            iterations=iterations, seed=seed)
    _, sessions = build_sessions(
        corpus, topics, mode=mode, learner_config=learner,
        stopping=StoppingConfig(a=stop_a, b=stop_b), budget=budget, seed=seed,
        vectorizer=vectorizer,
    )
    for judgment in JudgmentJournal(dd.journal_path).replay():
        if judgment.topic_id in sessions:
            sessions[judgment.topic_id].apply_judgment(judgment)
    for session in sessions.values():
        session.rebuild_schedule()
        session.refresh_model()
    out = Path(out_dir) if out_dir is not None else dd.runs_dir
    out.mkdir(parents=True, exist_ok=True)
    for method in methods or ORDERING_METHODS:
        entries: list[RunEntry] = []
        for topic in topics:
            entries.extend(
                build_run(sessions[topic.topic_id], method, depth=depth,
                          tag=tag or f"calkit-{method}")
            )
        path = out / f"run-{method}.txt"
        write_run_file(entries, path)
        click.echo(f"wrote {len(entries)} entries -> {path}")


@main.command("eval")
@click.option("--run", "run_path", type=click.Path(path_type=Path), required=True)
@click.option("--qrels", "qrels_path", type=click.Path(path_type=Path), required=True)
@click.option("--rbp-p", type=float, default=0.5, show_default=True)
@click.option("--csv", "csv_path", type=click.Path(path_type=Path), default=None,
              help="Also write (metric, topic, value) rows to this CSV file.")
@handle_errors
def eval_command(run_path, qrels_path, rbp_p, csv_path) -> None:
    """Score a TREC run file against qrels."""
    run = parse_run_file(run_path)
    qrels = parse_qrels(qrels_path)
    report = evaluate(run, qrels, rbp_p=rbp_p)
    click.echo(report.to_text())
    if csv_path is not None:
        with Path(csv_path).open("w", newline="", encoding="utf-8") as fh:
            writer = csv_module.writer(fh)
            writer.writerow(["metric", "topic", "value"])
            writer.writerows(report.to_csv_rows())
        click.echo(f"wrote CSV -> {csv_path}")


@main.command()
@click.option("--corpus", "corpus_path", type=click.Path(path_type=Path), required=True)
@click.option("--topics", "topics_path", type=click.Path(path_type=Path), required=True)
@click.option("--qrels", "qrels_path", type=click.Path(path_type=Path), required=True,
              help="Labeled data; half trains, half is the scoring holdout.")
@click.option("--lambda", "lambdas", type=float, multiple=True,
              default=(1e-5, 1e-4, 1e-3), show_default=True)
@click.option("--loop-type", "loop_types", type=click.Choice(LOOP_TYPES), multiple=True,
              default=LOOP_TYPES, show_default=True)
@click.option("--iterations", type=int, default=200_000, show_default=True)
@click.option("--depth", type=int, default=1000, show_default=True)
@click.option("--seed", type=int, default=0, show_default=True)
@handle_errors
def tune(corpus_path, topics_path, qrels_path, lambdas, loop_types, iterations,
         depth, seed) -> None:
    """Grid-search (lambda x loop_type) by MAP on a held-out label split."""
    corpus = parse_metadata_csv(corpus_path).corpus
    topics = parse_topics_xml(topics_path)
    qrels = parse_qrels(qrels_path)
    vectorizer = TfidfVectorizer().fit(
        corpus.documents, [make_synthetic_document(t) for t in topics]
    )
    vocabulary = vectorizer.vocabulary_
    vectors = {
        doc.doc_id: vec
        for doc, vec in zip(corpus.documents, vectorizer.transform(corpus.documents))
    }

    # Seeded per-topic split of the labeled documents: half trains the
    # model, the other half is scored, so no label leaks into its own MAP.
    splits: dict[int, tuple[list[tuple[str, int]], dict[tuple[int, str], int]]] = {}
    for topic in topics:
        judged = sorted(qrels.judged.get(topic.topic_id, {}).items())
        if len(judged) < 4:
            continue
        rng = np.random.default_rng([seed, topic.topic_id])
        order = rng.permutation(len(judged))
        half = len(judged) // 2
        train = [judged[i] for i in order[:half]]
        holdout = {
            (topic.topic_id, judged[i][0]): judged[i][1] for i in order[half:]
        }
        splits[topic.topic_id] = (train, holdout)
    if not splits:
        raise ValueError("qrels provide too few labeled documents to tune on")

    best: tuple[float, float, str] | None = None
    click.echo("lambda\tloop_type\tmap")
    for lambda_ in lambdas:
        for loop_type in loop_types:
            run_entries: list[RunEntry] = []
            holdout_grades: dict[tuple[int, str], int] = {}
            for topic in topics:
                if topic.topic_id not in splits:
                    continue
                train, holdout = splits[topic.topic_id]
                holdout_grades.update(holdout)
                X = [vectorize(make_synthetic_document(topic), vocabulary)]
                y = [1]
                for doc_id, grade in train:
                    X.append(vectors[doc_id])
                    y.append(1 if grade >= 1 else 0)
                if 0 not in y:
                    rng = np.random.default_rng([seed, topic.topic_id, 1])
                    for i in rng.choice(len(corpus), size=min(100, len(corpus)),
                                        replace=False):
                        X.append(vectors[corpus.documents[i].doc_id])
                        y.append(0)
                model = SgdLogisticRanker(lambda_=lambda_, loop_type=loop_type,
                                          iterations=iterations, seed=seed)
                model.fit(X, y, n_features=len(vocabulary))
                train_docs = {doc_id for doc_id, _ in train}
                candidates = [d for d in corpus.doc_ids if d not in train_docs]
                ranked = model.rank(candidates, vectors)[:depth]
                for position, (doc_id, _score) in enumerate(ranked, start=1):
                    run_entries.append(
                        RunEntry(topic.topic_id, doc_id, position,
                                 float(len(ranked) - position), "tune")
                    )
            report = evaluate(run_entries, Qrels(holdout_grades))
            score = report.means["map"]
            click.echo(f"{lambda_:g}\t{loop_type}\t{score:.4f}")
            if best is None or score > best[0]:
                best = (score, lambda_, loop_type)
    click.echo(f"best: lambda={best[1]:g} loop_type={best[2]} map={best[0]:.4f}")


if __name__ == "__main__":
    main()
