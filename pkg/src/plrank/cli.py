"""Command-line entry points: train, predict, evaluate.

Exit codes: 0 success, 2 bad flags, 3 parse/validation/configuration
errors, 4 I/O errors.
"""

from __future__ import annotations

import argparse
import os
import sys

import numpy as np

from .booster import TrainConfig, train
from .data import Dataset, dense_features, load_dataset
from .errors import PLRankError, ValidationError
from .linear import LinearModel, train_linear
from .metrics import evaluate
from .model_io import load_model, save_model
from .tree import Ensemble, predict_ensemble_matrix

EXIT_OK = 0
EXIT_USAGE = 2
EXIT_DATA = 3
EXIT_IO = 4


def _cutoff_list(text: str) -> list[int]:
    try:
        cutoffs = [int(part) for part in text.split(",") if part]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad cutoff list {text!r}") from None
    if not cutoffs or any(k < 1 for k in cutoffs):
        raise argparse.ArgumentTypeError(f"cutoffs must be positive: {text!r}")
    return cutoffs


def _default_threads() -> int:
    env = os.environ.get("PLRANK_THREADS")
    if env is not None:
        try:
            return max(1, int(env))
        except ValueError:
            pass
    return os.cpu_count() or 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="plrank",
        description="Listwise likelihood boosting: train, predict, evaluate.",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="train a ranking model")
    p_train.add_argument("--train", required=True, metavar="PATH")
    p_train.add_argument(
        "--loss",
        default="plrank",
        choices=["plrank", "mart1", "mart2", "cmart1", "listmle-linear"],
    )
    p_train.add_argument("--trees", type=int, default=1000)
    p_train.add_argument("--leaves", type=int, default=30)
    p_train.add_argument("--lr", type=float, default=0.1)
    p_train.add_argument("--topk", type=int, default=10)
    p_train.add_argument("--objectives", type=int, default=1)
    p_train.add_argument("--seed", type=int, default=42)
    p_train.add_argument("--min-leaf", type=int, default=1)
    p_train.add_argument("--bins", type=int, default=0,
                         help="histogram bins for split search (0 = exact)")
    p_train.add_argument("--iterations", type=int, default=100,
                         help="optimizer cap for --loss listmle-linear")
    p_train.add_argument("--init-model", metavar="PATH")
    p_train.add_argument("--valid", metavar="PATH")
    p_train.add_argument("--threads", type=int, default=_default_threads())
    p_train.add_argument("--out", required=True, metavar="PATH")
    p_train.set_defaults(func=cmd_train)

    p_predict = sub.add_parser("predict", help="score a dataset with a model")
    p_predict.add_argument("--model", required=True, metavar="PATH")
    p_predict.add_argument("--data", required=True, metavar="PATH")
    p_predict.add_argument("--strict", action="store_true",
                           help="reject feature indices the model has not seen")
    p_predict.add_argument("--threads", type=int, default=_default_threads())
    p_predict.add_argument("--out", required=True, metavar="PATH")
    p_predict.set_defaults(func=cmd_predict)

    p_eval = sub.add_parser("evaluate", help="evaluate a score file")
    p_eval.add_argument("--data", required=True, metavar="PATH")
    p_eval.add_argument("--scores", required=True, metavar="PATH")
    p_eval.add_argument("--ndcg", type=_cutoff_list, default=[1, 3, 10],
                        metavar="K1,K2,...")
    p_eval.add_argument("--err", action="store_true", help="also report ERR")
    p_eval.add_argument("--gmax", type=int, default=None)
    p_eval.add_argument("--degenerate", default="zero",
                        choices=["zero", "one", "skip"])
    p_eval.add_argument("--format", default="text", choices=["text", "kv"])
    p_eval.set_defaults(func=cmd_evaluate)
    return parser


def cmd_train(args: argparse.Namespace) -> int:
    dataset = load_dataset(args.train)
    if args.loss == "listmle-linear":
        model: Ensemble | LinearModel = train_linear(
            dataset,
            k=args.topk,
            objectives=args.objectives,
            iterations=args.iterations,
            seed=args.seed,
            on_iteration=print,
        )
    else:
        init_model = None
        if args.init_model is not None:
            loaded = load_model(args.init_model)
            if not isinstance(loaded, Ensemble):
                raise ValidationError("--init-model must be a tree ensemble file")
            init_model = loaded
        valid = load_dataset(args.valid) if args.valid is not None else None
        config = TrainConfig(
            loss=args.loss,
            trees=args.trees,
            leaves=args.leaves,
            learning_rate=args.lr,
            top_k=args.topk,
            objectives=args.objectives,
            seed=args.seed,
            min_leaf_docs=args.min_leaf,
            histogram_bins=args.bins,
            init_model=init_model,
        )
        model, _ = train(dataset, config, valid_dataset=valid, on_iteration=print)
    save_model(model, args.out)
    return EXIT_OK


def _dataset_scores(model: Ensemble | LinearModel, dataset: Dataset, strict: bool) -> np.ndarray:
    if isinstance(model, Ensemble):
        model_width = model.num_features
    else:
        model_width = model.weights.size
    if strict and dataset.max_feature_index > model_width:
        raise ValidationError(
            f"data uses feature index {dataset.max_feature_index}, "
            f"model covers only {model_width}"
        )
    width = max(model_width, dataset.max_feature_index)
    scores = np.zeros(dataset.num_documents, dtype=np.float64)
    for group in dataset.groups:
        X = dense_features(group, width)
        if isinstance(model, Ensemble):
            scores[group.doc_ids] = predict_ensemble_matrix(model, X)
        else:
            scores[group.doc_ids] = model.predict_matrix(X)
    return scores


def cmd_predict(args: argparse.Namespace) -> int:
    model = load_model(args.model)
    dataset = load_dataset(args.data)
    scores = _dataset_scores(model, dataset, args.strict)
    with open(args.out, "w", encoding="utf-8", newline="\n") as fh:
        for value in scores:
            fh.write(f"{value:.17g}\n")
    return EXIT_OK


def _load_scores(path: str) -> np.ndarray:
    values = []
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                values.append(float(line))
            except ValueError:
                raise ValidationError(f"bad score {line!r}", lineno) from None
    return np.array(values, dtype=np.float64)


def cmd_evaluate(args: argparse.Namespace) -> int:
    dataset = load_dataset(args.data)
    scores = _load_scores(args.scores)
    report = evaluate(
        dataset,
        scores,
        cutoffs=args.ndcg,
        g_max=args.gmax,
        degenerate_policy=args.degenerate,
    )
    if args.format == "kv":
        print(report.format_keyvalues(include_err=args.err))
    else:
        print(report.format_text(include_err=args.err))
    return EXIT_OK


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if exc.code is not None else EXIT_OK
    try:
        return args.func(args)
    except PLRankError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO


if __name__ == "__main__":
    sys.exit(main())
