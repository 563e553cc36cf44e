"""Command-line entry point: ``sentipers <verb> ...``.

Exit codes: 0 success, 2 configuration error, 3 data error, 4 numeric failure.
``SENTIPERS_SEED`` supplies the default seed; ``TRANSLATOR_URL`` and
``TRANSLATOR_KEY`` configure the http translator backend.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from pathlib import Path

import numpy as np

from . import __version__
from .augment import augment
from .classifiers import SentimentClassifier
from .corpus import load_schema, parse_corpus, stats
from .dataset import FIVE_CLASS, format_rank, read_dataset, write_dataset
from .embed import build_vocab, load_pretrained
from .errors import ConfigError, DataError, SentiPersError
from .experiment import (DEFAULT_VARIANTS, VARIANTS, ExperimentConfig, load_grid_from_runs, rerun_from_metadata,
                         run_experiment, run_matrix)
from .labels import SplitSpec, binarize, split, to_ternary
from .metrics import confusion, MetricReport
from .preprocess import LemmaDictionary, preprocess_dataset
from .translators import make_translator

logger = logging.getLogger("sentipers")

NEURAL_FLAGS = ("epochs", "batch_size", "lr", "lstm_hidden", "dense_units", "cnn_dense_units", "dropout",
                "embed_dim", "filters", "clip_norm")


def default_seed() -> int:
    value = os.environ.get("SENTIPERS_SEED")
    if value is None:
        return 0
    try:
        return int(value)
    except ValueError:
        raise ConfigError(f"SENTIPERS_SEED must be an integer, got {value!r}") from None


def _read_input(path):
    """A dataset file, or an XML corpus parsed with the default schema."""
    if str(path).lower().endswith(".xml"):
        return parse_corpus(path).dataset()
    return read_dataset(path)


def _emit(text: str, out):
    if out:
        Path(out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)


def _model_params(args) -> dict:
    params = {}
    for name in NEURAL_FLAGS + ("l2", "alpha", "schedule"):
        value = getattr(args, name, None)
        if value is not None:
            params[name] = value
    return params


# -- verbs -----------------------------------------------------------------------

def cmd_parse(args):
    result = parse_corpus(args.corpus, load_schema(args.schema))
    write_dataset(result.dataset(), args.output)
    reasons = {}
    for skipped in result.skipped:
        reasons[skipped.reason] = reasons.get(skipped.reason, 0) + 1
    print(f"parsed={len(result.sentences)} skipped={len(result.skipped)} elements={result.total_elements}"
          + "".join(f" {k}={v}" for k, v in sorted(reasons.items())), file=sys.stderr)


def cmd_stats(args):
    data = _read_input(args.input)
    if args.format == "json":
        print(json.dumps({"scheme": data.scheme.kind, "total": len(data),
                          "counts": {str(k): v for k, v in data.counts().items()}}))
        return
    if data.scheme.kind == FIVE_CLASS:
        st = stats(data.sentences)
        for rank, n in sorted(st.counts.items()):
            print(f"{format_rank(rank)}\t{n}")
        print(f"total\t{st.total}")
        return
    for name, n in zip(data.scheme.class_names(), [data.counts().get(c, 0) for c in data.scheme.classes]):
        print(f"{name}\t{n}")
    print(f"total\t{len(data)}")


def cmd_preprocess(args):
    lemmas = LemmaDictionary.load(args.lemma_dict) if args.lemma_dict else LemmaDictionary()
    data, report = preprocess_dataset(_read_input(args.input), lemmas)
    write_dataset(data, args.output)
    print(f"input={report.input_count} output={report.output_count} "
          f"empty_after_preprocess={len(report.empty_after_preprocess)}", file=sys.stderr)


def cmd_binarize(args):
    data = _read_input(args.input)
    out = to_ternary(data) if args.ternary else binarize(data, args.strategy)
    write_dataset(out, args.output)
    print(" ".join(f"{name}={out.counts().get(c, 0)}" for name, c in zip(out.scheme.class_names(), out.scheme.classes)),
          file=sys.stderr)


def cmd_split(args):
    data = _read_input(args.input)
    train, test = split(data, SplitSpec(args.train_fraction, args.seed, not args.no_stratify))
    write_dataset(train, args.train)
    write_dataset(test, args.test)
    print(f"train={len(train)} test={len(test)}", file=sys.stderr)


def cmd_augment(args):
    data = read_dataset(args.input)
    translator = None
    if args.method in ("translation", "synonym"):
        if args.backend == "dict" and not args.table:
            raise ConfigError(f"{args.method} with the dict backend needs --table")
        translator = make_translator(args.backend, args.table)
    policy = args.policy
    if policy not in ("median", "mean", "max") and not str(policy).startswith("uniform:"):
        try:
            policy = {int(k): int(v) for k, v in json.loads(policy).items()}
        except (ValueError, AttributeError):
            raise ConfigError(f"--policy must be median, mean, max, uniform:N or a JSON object, got {args.policy!r}") from None
    out, report = augment(data, args.method, translator, seed=args.seed, rate=args.rate, policy=policy,
                          middle_lang=args.middle_lang, workers=args.workers)
    write_dataset(out, args.output)
    if args.report:
        Path(args.report).write_text(json.dumps(report.as_dict(), indent=2, sort_keys=True), encoding="utf-8")
    print(f"input={report.input_count} output={report.output_count} skipped={report.skipped} "
          f"failures={report.failures}", file=sys.stderr)


def cmd_build_vocab(args):
    vocab = build_vocab(read_dataset(args.input), args.max_size)
    vocab.save(args.output)
    line = f"size={len(vocab)} sha256={vocab.digest()}"
    if args.vectors:
        line += f" coverage={load_pretrained(args.vectors, vocab, seed=args.seed).coverage:.6f}"
    print(line)


def cmd_train(args):
    train = read_dataset(args.input)
    valid = read_dataset(args.valid) if args.valid else None
    clf = SentimentClassifier.fit(args.model, train, valid, embedding=args.embed, vectors=args.vectors,
                                  features=args.features, vocab_size=args.vocab_size, seed=args.seed,
                                  model_params=_model_params(args))
    clf.save(args.output)
    if clf.trained is not None:
        for h in clf.trained.history:
            valid = f" valid_f1={h['valid_f1']}" if "valid_f1" in h else ""
            print(f"epoch={h['epoch']} train_loss={h['train_loss']:.6f}{valid}", file=sys.stderr)
    print(f"saved {args.output}", file=sys.stderr)


def cmd_predict(args):
    clf = SentimentClassifier.load(args.model)
    data = _read_input(args.input)
    proba = clf.predict_proba(data)
    pred = proba.argmax(axis=1) if clf.is_neural or clf.name == "nb" else clf.predict(data)
    names = clf.scheme.class_names()
    lines = ["\t".join(["source_id", "predicted"] + [f"p_{n}" for n in names])]
    for s, k, row in zip(data, pred, proba):
        lines.append("\t".join([s.source_id, names[int(k)]] + [repr(float(p)) for p in row]))
    _emit("\n".join(lines) + "\n", args.output)


def cmd_evaluate(args):
    clf = SentimentClassifier.load(args.model)
    data = read_dataset(args.input)
    if data.scheme != clf.scheme:
        raise DataError(f"label scheme of {args.input} ({data.scheme.kind}) does not match the model "
                        f"({clf.scheme.kind})")
    y_true = np.array(data.class_indices(), dtype=np.int64)
    report = MetricReport.from_confusion(confusion(y_true, clf.predict(data), clf.scheme.n_classes),
                                         clf.scheme.class_names())
    if args.format == "json":
        text = json.dumps(report.as_dict(), indent=2, sort_keys=True) + "\n"
    elif args.format == "csv":
        text = report.to_csv_row(header=True)
    else:
        text = report.to_keyvalue()
    _emit(text if text.endswith("\n") else text + "\n", args.output)


def _experiment_config(args) -> ExperimentConfig:
    data: dict = {}
    if args.config:
        try:
            data = json.loads(Path(args.config).read_text(encoding="utf-8"))
        except json.JSONDecodeError as exc:
            raise ConfigError(f"{args.config}: invalid JSON ({exc})") from None
        if not isinstance(data, dict):
            raise ConfigError(f"{args.config}: expected a JSON object")
    flags = {"corpus": args.corpus, "classes": args.classes, "strategy": args.strategy, "schema": args.schema,
             "lemma_dict": args.lemma_dict, "table": args.table, "backend": args.backend, "vectors": args.vectors,
             "features": args.features, "seed": args.seed, "balance_policy": args.policy,
             "synonym_rate": args.rate, "middle_lang": args.middle_lang}
    data.update({k: v for k, v in flags.items() if v is not None})
    if args.no_deterministic:
        data["deterministic"] = False
    params = dict(data.get("model_params", {}))
    params.update({k: getattr(args, k) for k in NEURAL_FLAGS if getattr(args, k, None) is not None})
    data["model_params"] = params
    if "seed" not in data:
        data["seed"] = default_seed()
    if not data.get("corpus"):
        raise ConfigError("no corpus given (positional argument or 'corpus' in --config)")
    return data


def cmd_run(args):
    data = _experiment_config(args)
    for key in ("model", "embedding", "variant"):
        value = getattr(args, key if key != "embedding" else "embed")
        if value is not None:
            data[key] = value
    if data.get("model") in ("nb", "svm", "sgd") and args.embed is None:
        data["embedding"] = None
    result = run_experiment(ExperimentConfig.from_dict(data), args.out)
    print(result.report.to_keyvalue().rstrip("\n"))
    print(f"run_id={result.metadata['run_id']}")


def cmd_matrix(args):
    data = _experiment_config(args)
    data.pop("model", None), data.pop("embedding", None), data.pop("variant", None)
    base = ExperimentConfig.from_dict(data)
    variants = args.variants.split(",") if args.variants else DEFAULT_VARIANTS
    unknown = set(variants) - set(VARIANTS)
    if unknown:
        raise ConfigError(f"unknown dataset variants {sorted(unknown)}")
    grid = run_matrix(base, args.out, variants, include_synonym=args.include_synonym, workers=args.workers)
    print(grid.to_text(), end="")
    failed = [k for k, c in grid.cells.items() if c.status != "ok"]
    if failed:
        print(f"{len(failed)} cell(s) FAILED; see the log above", file=sys.stderr)
        return 1
    return 0


def cmd_report(args):
    grid = load_grid_from_runs(args.out)
    if not grid.cells:
        raise DataError(f"no run metadata under {Path(args.out) / 'runs'}")
    print(grid.to_csv() if args.format == "csv" else grid.to_text(), end="")


def cmd_rerun(args):
    result, identical = rerun_from_metadata(args.metadata, check_inputs=not args.skip_input_check)
    print(f"weighted_f1={result.weighted_f1!r} identical={'yes' if identical else 'no'}")
    return 0 if identical else 1


# -- parser ----------------------------------------------------------------------

def _add_translator_flags(p):
    p.add_argument("--table", help="dictionary translator table file")
    p.add_argument("--backend", choices=("dict", "http"), default=None,
                   help="translator backend (http reads TRANSLATOR_URL / TRANSLATOR_KEY)")
    p.add_argument("--middle-lang", dest="middle_lang", default=None)
    p.add_argument("--rate", type=float, default=None, help="synonym substitution rate")
    p.add_argument("--policy", default=None, help="balance policy: median, mean, max, uniform:N or JSON {rank: n}")


def _add_neural_flags(p):
    p.add_argument("--epochs", type=int)
    p.add_argument("--batch-size", dest="batch_size", type=int)
    p.add_argument("--lr", type=float)
    p.add_argument("--lstm-hidden", dest="lstm_hidden", type=int)
    p.add_argument("--dense-units", dest="dense_units", type=int)
    p.add_argument("--cnn-dense-units", dest="cnn_dense_units", type=int)
    p.add_argument("--dropout", type=float)
    p.add_argument("--embed-dim", dest="embed_dim", type=int)
    p.add_argument("--filters", type=int)
    p.add_argument("--clip-norm", dest="clip_norm", type=float)


def _add_experiment_flags(p):
    p.add_argument("corpus", nargs="?", help="XML corpus or five-class dataset file")
    p.add_argument("--config", help="JSON experiment config; flags override its values")
    p.add_argument("--classes", type=int, choices=(2, 5))
    p.add_argument("--strategy", choices=("NR", "NP", "NN"))
    p.add_argument("--schema", help="JSON corpus schema")
    p.add_argument("--lemma-dict", dest="lemma_dict")
    p.add_argument("--vectors", help="pretrained word-vector text file")
    p.add_argument("--features", choices=("count", "tfidf"))
    p.add_argument("--seed", type=int)
    p.add_argument("--out", default="results", help="output directory for run metadata and grids")
    p.add_argument("--no-deterministic", dest="no_deterministic", action="store_true",
                   help="allow multi-threaded BLAS (results may differ in the last bits)")
    _add_translator_flags(p)
    _add_neural_flags(p)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="sentipers", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="verb", required=True)

    p = sub.add_parser("parse", help="XML corpus -> dataset file")
    _positional_or_flag(p, "corpus", "--xml")
    p.add_argument("-o", "--output", "--out", dest="output", required=True)
    p.add_argument("--schema")
    p.set_defaults(func=cmd_parse)

    p = sub.add_parser("stats", help="class counts of a dataset or corpus")
    _positional_or_flag(p, "input", "--in")
    p.add_argument("--format", choices=("text", "json"), default="text")
    p.set_defaults(func=cmd_stats)

    p = sub.add_parser("preprocess", help="normalize, clean and lemmatize")
    p.add_argument("input")
    p.add_argument("-o", "--output", "--out", dest="output", required=True)
    p.add_argument("--lemma-dict", dest="lemma_dict")
    p.set_defaults(func=cmd_preprocess)

    p = sub.add_parser("binarize", help="reduce five-class labels to binary (or ternary)")
    p.add_argument("input")
    p.add_argument("-o", "--output", "--out", dest="output", required=True)
    group = p.add_mutually_exclusive_group()
    group.add_argument("--strategy", choices=("NR", "NP", "NN"), default="NR")
    group.add_argument("--ternary", action="store_true")
    p.set_defaults(func=cmd_binarize)

    p = sub.add_parser("split", help="stratified train/test split")
    p.add_argument("input")
    p.add_argument("--train", required=True)
    p.add_argument("--test", required=True)
    p.add_argument("--train-fraction", dest="train_fraction", type=float, default=0.75)
    p.add_argument("--seed", type=int)
    p.add_argument("--no-stratify", dest="no_stratify", action="store_true")
    p.set_defaults(func=cmd_split)

    p = sub.add_parser("augment", help="augment a training split")
    p.add_argument("input")
    p.add_argument("-o", "--output", "--out", dest="output", required=True)
    p.add_argument("--method", choices=("balanced", "translation", "synonym"), required=True)
    p.add_argument("--seed", type=int)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--report", help="write the augmentation report as JSON")
    _add_translator_flags(p)
    p.set_defaults(func=cmd_augment, backend="dict", middle_lang="en", rate=0.2, policy="median")

    p = sub.add_parser("build-vocab", help="vocabulary from a training split")
    p.add_argument("input")
    p.add_argument("-o", "--output", "--out", dest="output", required=True)
    p.add_argument("--max-size", dest="max_size", type=int, default=2000)
    p.add_argument("--vectors", help="report pretrained coverage against this vector file")
    p.add_argument("--seed", type=int)
    p.set_defaults(func=cmd_build_vocab)

    p = sub.add_parser("train", help="train one model and save a checkpoint")
    p.add_argument("input")
    p.add_argument("--valid")
    p.add_argument("--model", "--arch", dest="model", choices=("nb", "svm", "sgd", "blstm", "cnn"), required=True)
    p.add_argument("--embed", choices=("online", "pretrained"))
    p.add_argument("--vectors")
    p.add_argument("--features", choices=("count", "tfidf"),
                   help="baseline features (default: count for nb, tfidf for svm/sgd)")
    p.add_argument("--vocab-size", dest="vocab_size", type=int, default=2000)
    p.add_argument("--seed", type=int)
    p.add_argument("--l2", type=float)
    p.add_argument("--alpha", type=float)
    p.add_argument("--schedule", choices=("invscaling", "optimal", "constant"))
    p.add_argument("-o", "--output", "--out", dest="output", required=True)
    _add_neural_flags(p)
    p.set_defaults(func=cmd_train)

    p = sub.add_parser("predict", help="class probabilities for a dataset")
    p.add_argument("model")
    p.add_argument("input")
    p.add_argument("-o", "--output", "--out", dest="output")
    p.set_defaults(func=cmd_predict)

    p = sub.add_parser("evaluate", help="weighted F1 of a checkpoint on a labelled dataset")
    p.add_argument("model")
    p.add_argument("input")
    p.add_argument("--format", choices=("keyvalue", "json", "csv"), default="keyvalue")
    p.add_argument("-o", "--output", "--out", dest="output")
    p.set_defaults(func=cmd_evaluate)

    p = sub.add_parser("run", help="one end-to-end experiment")
    _add_experiment_flags(p)
    p.add_argument("--model", "--arch", dest="model", choices=("nb", "svm", "sgd", "blstm", "cnn"))
    p.add_argument("--embed", choices=("online", "pretrained"))
    p.add_argument("--variant", choices=VARIANTS)
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("matrix", help="dataset-variant x model result grid")
    _add_experiment_flags(p)
    p.add_argument("--variants", help=f"comma-separated subset of {','.join(VARIANTS)}")
    p.add_argument("--include-synonym", dest="include_synonym", action="store_true")
    p.add_argument("--workers", type=int, default=1)
    p.set_defaults(func=cmd_matrix)

    p = sub.add_parser("report", help="rebuild the grid from stored run metadata")
    p.add_argument("out", nargs="?", default="results")
    p.add_argument("--format", choices=("text", "csv"), default="text")
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("rerun", help="rerun a stored run and compare its F1 bit for bit")
    p.add_argument("metadata")
    p.add_argument("--skip-input-check", dest="skip_input_check", action="store_true")
    p.set_defaults(func=cmd_rerun)
    return parser


def _positional_or_flag(p, dest, flag):
    p.add_argument(dest, nargs="?")
    p.add_argument(flag, dest=f"{dest}_flag", metavar=dest.upper(), help=f"same as the positional {dest}")


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    for dest in ("corpus", "input"):
        if hasattr(args, f"{dest}_flag"):
            value = getattr(args, dest) or getattr(args, f"{dest}_flag")
            if value is None:
                parser.error(f"{args.verb}: {dest} is required")
            setattr(args, dest, value)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if hasattr(args, "seed") and args.seed is None and args.verb not in ("run", "matrix"):
            args.seed = default_seed()
        return int(args.func(args) or 0)
    except SentiPersError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return exc.exit_code
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return DataError.exit_code
    except argparse.ArgumentTypeError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return ConfigError.exit_code


if __name__ == "__main__":
    sys.exit(main())
