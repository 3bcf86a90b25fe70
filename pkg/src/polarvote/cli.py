"""Command-line entry point: ``polarvote <command> ...``."""

from __future__ import annotations

import argparse
import csv
import logging
import sys
from pathlib import Path

from . import classifiers, corpus as corpus_mod
from .corpus import (Corpus, CorpusError, Document, check_distribution, deduplicate,
                     distribution_report, load_corpus, load_emotion_corpus, load_emotion_mapping,
                     map_emotions, resolve_expected, sniff_header, write_corpus)
from .ensemble import (EnsembleError, VotingEnsemble, check_member_count, disagreement_rate,
                       doc_rng, format_percent, write_vote_log)
from .evaluation import evaluate, fleiss_kappa, ratings_from_votes
from .experiments import ConfigError, RunConfig, emit_report, prepare, results_from_csv, run_grid

log = logging.getLogger("polarvote")


class CliError(Exception):
    pass


def _load_any(path: Path, name: str | None, emotion_map: Path | None) -> Corpus:
    header = sniff_header(path) if path.is_file() else []
    if "emotion" in header:
        mapping = load_emotion_mapping(emotion_map)
        return map_emotions(load_emotion_corpus(path, name), mapping)
    if emotion_map is not None:
        raise CliError(f"{path}: --emotion-map given but the file has no 'emotion' column")
    return load_corpus(path, name)


def cmd_ingest(args) -> int:
    corpus = _load_any(args.input, args.name, args.emotion_map)
    n_in = len(corpus)
    if args.dedup:
        corpus = deduplicate(corpus)
        log.info("dedup: %d -> %d documents", n_in, len(corpus))
    expected = resolve_expected(args.expect)
    if expected is not None:
        check_distribution(corpus, expected)
    out = args.output or Path(f"{corpus.name}.csv")
    write_corpus(corpus, out)
    print(distribution_report(corpus).as_text())
    log.info("wrote %s", out)
    return 0


def cmd_validate(args) -> int:
    corpus = _load_any(args.input, args.name, args.emotion_map)
    print(distribution_report(corpus).as_text())
    expected = resolve_expected(args.expect)
    if expected is not None:
        check_distribution(corpus, expected)
        print(f"class counts match {tuple(expected)}")
    return 0


def cmd_train(args) -> int:
    corpus = load_corpus(args.input, args.name)
    params = {}
    for item in args.param or []:
        key, _, value = item.partition("=")
        params[key] = _number(value)
    spec = classifiers.ClassifierSpec(args.family, corpus.name, params)
    model = classifiers.train(spec, corpus.documents, args.seed)
    classifiers.save_model(model, args.output)
    log.info("trained %s on %s (%d docs) -> %s", spec.family.value, corpus.name, len(corpus), args.output)
    return 0


def _number(text: str):
    for cast in (int, float):
        try:
            return cast(text)
        except ValueError:
            pass
    raise CliError(f"hyperparameter value {text!r} is not a number")


def _load_models(paths):
    return [classifiers.load_model(p) for p in paths]


def cmd_predict(args) -> int:
    check_member_count(len(args.model))
    ensemble = VotingEnsemble(_load_models(args.model))
    if args.text is not None:
        pred = ensemble.predict(args.text, doc_rng(args.seed, 0))
        votes = " ".join(f"{p.name}={v.label}" for p, v in zip(args.model, pred.votes))
        print(pred.final.label)
        print(f"votes: {votes}")
        print(f"tie: {str(pred.tie_broken_randomly).lower()}")
        return 0
    docs = _read_inputs(args.input)
    preds = ensemble.predict_corpus(docs, args.seed)
    write_vote_log(args.output or sys.stdout, docs, preds)
    return 0


def _read_inputs(path: Path) -> list[Document]:
    header = sniff_header(path) if path.is_file() else []
    if "label" in header:
        return list(load_corpus(path).documents)
    if not path.is_file():
        raise FileNotFoundError(f"input file not found: {path}")
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.DictReader(fh))
    if rows and not {"id", "text"} <= set(rows[0]):
        raise CliError(f"{path}: expected columns id,text[,label]")
    # unlabeled documents; the label is a placeholder never read by prediction
    return [Document(r["id"], r["text"], corpus_mod.Polarity.NEUTRAL) for r in rows]


def cmd_evaluate(args) -> int:
    corpus = load_corpus(args.input, args.name)
    models = _load_models(args.model)
    gold = corpus.labels
    if len(models) == 1:
        report = evaluate(models[0].predict_batch(corpus.documents), gold)
        print(report.as_text())
        return 0
    preds = VotingEnsemble(models).predict_corpus(corpus.documents, args.seed)
    print("voting classifier")
    print(evaluate([p.final for p in preds], gold).as_text())
    for path, i in zip(args.model, range(len(models))):
        acc = evaluate([p.votes[i] for p in preds], gold)
        print(f"\n{path.name}: accuracy {acc.accuracy:.4f}, macro-F1 {acc.macro_f1:.4f}")
    print(f"\ndisagreement {format_percent(disagreement_rate(preds))}")
    if len(preds) >= 2:
        print(fleiss_kappa(ratings_from_votes(preds)).as_text())
    if args.vote_log:
        write_vote_log(args.vote_log, corpus.documents, preds)
    return 0


def cmd_run_grid(args) -> int:
    config = RunConfig.from_file(args.config)
    if args.seed is not None:
        config.seed = args.seed
    if args.out is not None:
        config.output_dir = args.out
    grids, corpora = prepare(config, args.grid)
    results = run_grid(config, args.grid, corpora, grids)
    config.output_dir.mkdir(parents=True, exist_ok=True)
    emit_report(results, "csv", config.output_dir / "results.csv")
    emit_report(results, "md", config.output_dir / "results.md")
    log.info("%d result rows written to %s", len(results), config.output_dir)
    return 0


def cmd_report(args) -> int:
    if not args.results.is_file():
        raise FileNotFoundError(f"results file not found: {args.results}")
    results = results_from_csv(args.results.read_text(encoding="utf-8"))
    text = emit_report(results, args.format, args.output)
    if args.output is None:
        sys.stdout.write(text)
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="polarvote", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def command(name, func, help_text):
        p = sub.add_parser(name, help=help_text, description=help_text)
        p.add_argument("--seed", type=int, default=42 if name != "run-grid" else None,
                       help="seed for every stochastic step" + (" (overrides the config)" if name == "run-grid" else ""))
        p.set_defaults(func=func)
        return p

    p = command("ingest", cmd_ingest, "normalize a corpus file and print its class distribution")
    p.add_argument("--input", type=Path, required=True)
    p.add_argument("--name")
    p.add_argument("--emotion-map", type=Path, help="emotion=polarity file (default mapping if omitted)")
    p.add_argument("--dedup", action="store_true", help="merge documents with equal normalized text")
    p.add_argument("--expect", type=_expect, help="corpus name from the reference table or pos,neu,neg")
    p.add_argument("--output", type=Path)

    p = command("validate-corpus", cmd_validate, "check a corpus file and print its class distribution")
    p.add_argument("--input", type=Path, required=True)
    p.add_argument("--name")
    p.add_argument("--emotion-map", type=Path)
    p.add_argument("--expect", type=_expect)

    p = command("train", cmd_train, "train one base classifier and save it")
    p.add_argument("--family", required=True, choices=[f.value for f in classifiers.Family])
    p.add_argument("--input", type=Path, required=True)
    p.add_argument("--name")
    p.add_argument("--param", action="append", metavar="KEY=VALUE")
    p.add_argument("--output", type=Path, required=True)

    p = command("predict", cmd_predict, "majority-vote prediction with an odd number (>= 3) of models")
    p.add_argument("--model", type=Path, action="append", required=True)
    src = p.add_mutually_exclusive_group(required=True)
    src.add_argument("--text")
    src.add_argument("--input", type=Path, help="CSV with id,text[,label]")
    p.add_argument("--output", type=Path, help="vote CSV (default: stdout)")

    p = command("evaluate", cmd_evaluate, "score one model or an ensemble on a labeled corpus")
    p.add_argument("--model", type=Path, action="append", required=True)
    p.add_argument("--input", type=Path, required=True)
    p.add_argument("--name")
    p.add_argument("--vote-log", type=Path)

    p = command("run-grid", cmd_run_grid, "run built-in experiment grids from a config file")
    p.add_argument("--config", type=Path, required=True)
    p.add_argument("--grid", default="all", choices=["within", "rq21", "rq22", "all"])
    p.add_argument("--out", type=Path)

    p = command("report", cmd_report, "render a results.csv as csv or markdown")
    p.add_argument("--results", type=Path, required=True)
    p.add_argument("--format", default="md", choices=["csv", "md"])
    p.add_argument("--output", type=Path)
    return parser


def _expect(text: str):
    if "," in text:
        return [int(x) for x in text.split(",")]
    return text


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    if args.command == "evaluate" and len(args.model) != 1:
        try:
            check_member_count(len(args.model))
        except EnsembleError as exc:
            print(f"error: {exc}", file=sys.stderr)
            return 2
    try:
        return args.func(args)
    except ConfigError as exc:
        print("error: invalid configuration:", file=sys.stderr)
        for problem in exc.problems:
            print(f"  - {problem}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (CorpusError, EnsembleError, CliError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
