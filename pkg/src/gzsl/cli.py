"""Command-line interface: ``gzsl {gen,train,eval,predict,inspect}``.

Exit codes: 0 success, 1 usage error, 2 data error, 3 numerical failure.
Options may also come from a JSON file given with ``--config``; its keys
are the long option names with dashes replaced by underscores, and any
flag given on the command line wins over the file.
"""

from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from dataclasses import fields
from pathlib import Path

import numpy as np

from .data import SynthSpec, load_attributes, load_dataset, load_partition, read_dataset, write_synthetic
from .errors import DataError, GzslError, InvalidSpec, NumericError
from .model import GzslModel
from .nn import load_checkpoint
from .pipeline import evaluate, predict_batch, prediction_dump
from .trainer import PRESETS, TrainConfig, train

log = logging.getLogger("gzsl")

EXIT_OK, EXIT_USAGE, EXIT_DATA, EXIT_NUMERIC = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


HYPER_FLAGS = {
    "beta1": "beta1", "beta2": "beta2", "beta3": "beta3",
    "lambda1": "lambda1", "lambda2": "lambda2",
    "gamma1": "gamma1", "gamma2": "gamma2", "gamma3": "gamma3",
    "lr_shared": "lr_shared", "lr_pbd": "lr_pbd", "lr_stae": "lr_stae", "lr_emotion": "lr_emotion",
    "batch_size": "batch_size", "epochs": "epochs", "warmup_epoch": "threshold_warmup_epoch",
    "seed": "seed", "pooling": "pooling",
}

SYNTH_FLAGS = {
    "emotions": "n_emotions",
    "gestures_per_emotion": "gestures_per_emotion",
    "unseen_per_emotion": "unseen_per_emotion",
    "train_per_class": "train_per_class",
    "test_per_seen_class": "test_per_seen_class",
    "test_per_unseen_class": "test_per_unseen_class",
    "noise": "noise",
    "latent_dim": "latent_dim",
    "seed": "seed",
}


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="gzsl", description="Zero-shot emotion recognition from skeleton sequences.")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    sub.required = True

    def common(p, *paths):
        p.add_argument("--config", help="JSON file with default values for any option")
        for name in paths:
            p.add_argument(f"--{name}", help=f"{name} path")

    gen = sub.add_parser("gen", help="write a synthetic dataset, attribute and partition file")
    common(gen, "out")
    gen.add_argument("--seed", type=int)
    gen.add_argument("--emotions", type=int)
    gen.add_argument("--gestures-per-emotion", type=int)
    gen.add_argument("--unseen-per-emotion", type=int)
    gen.add_argument("--train-per-class", type=int)
    gen.add_argument("--test-per-seen-class", type=int)
    gen.add_argument("--test-per-unseen-class", type=int)
    gen.add_argument("--noise", type=float)
    gen.add_argument("--latent-dim", type=int)

    tr = sub.add_parser("train", help="train a model and write a checkpoint")
    common(tr, "dataset", "attributes", "partition", "checkpoint", "log")
    tr.add_argument("--preset", choices=sorted(PRESETS))
    tr.add_argument("--seed", type=int)
    tr.add_argument("--epochs", type=int)
    tr.add_argument("--warmup-epoch", type=int, help="first epoch (0-based) with threshold losses")
    tr.add_argument("--batch-size", type=int)
    tr.add_argument("--pooling", choices=("last", "mean"))
    for name in ("beta1", "beta2", "beta3", "lambda1", "lambda2", "gamma1", "gamma2", "gamma3",
                 "lr-shared", "lr-pbd", "lr-stae", "lr-emotion"):
        tr.add_argument(f"--{name}", type=float)

    for name, helptext in (("eval", "evaluate a checkpoint on the test split"),
                           ("predict", "per-sample predictions for the test split")):
        p = sub.add_parser(name, help=helptext)
        common(p, "dataset", "partition", "checkpoint", "out")
        p.add_argument("--threads", type=int, help="worker threads for feature extraction")
        p.add_argument("--per-sample", action="store_const", const=True,
                       help="solve every unseen-gated sample on its own (no instance graph)")
        if name == "eval":
            p.add_argument("--dump", help="also write per-sample predictions to this file")

    ins = sub.add_parser("inspect", help="summarise a checkpoint or data files")
    common(ins, "checkpoint", "dataset", "attributes", "partition")
    return parser


def _merge_config(args: argparse.Namespace) -> argparse.Namespace:
    if not getattr(args, "config", None):
        return args
    try:
        data = json.loads(Path(args.config).read_text(encoding="utf-8"))
    except FileNotFoundError as exc:
        raise UsageError(f"config file not found: {args.config}") from exc
    except json.JSONDecodeError as exc:
        raise UsageError(f"config file is not valid JSON: {exc}") from exc
    if not isinstance(data, dict):
        raise UsageError("config file must hold a JSON object")
    unknown = sorted(k for k in data if k not in vars(args) or k in ("command", "config"))
    if unknown:
        raise UsageError(f"unknown config keys: {', '.join(unknown)}")
    for key, value in data.items():
        if getattr(args, key) is None:
            setattr(args, key, value)
    return args


def _require(args, *names):
    missing = [f"--{n.replace('_', '-')}" for n in names if getattr(args, n, None) in (None, "")]
    if missing:
        raise UsageError(f"{args.command}: missing required option(s) {' '.join(missing)}")


def _train_config(args) -> TrainConfig:
    base = PRESETS[args.preset or "partition1"]
    overrides = {}
    for flag, name in HYPER_FLAGS.items():
        value = getattr(args, flag, None)
        if value is not None:
            overrides[name] = value
    try:
        return base.with_overrides(**overrides)
    except (InvalidSpec, TypeError) as exc:
        raise UsageError(f"invalid training option: {exc}") from exc


def cmd_gen(args) -> int:
    _require(args, "out")
    overrides = {name: getattr(args, flag) for flag, name in SYNTH_FLAGS.items() if getattr(args, flag) is not None}
    spec = SynthSpec(**overrides)
    paths = write_synthetic(spec, args.out)
    for kind, path in paths.items():
        print(f"{kind}: {path}")
    return EXIT_OK


def cmd_train(args) -> int:
    _require(args, "dataset", "attributes", "partition", "checkpoint")
    config = _train_config(args)
    train_set, _test, partition = load_dataset(args.dataset, args.partition)
    attributes = load_attributes(args.attributes, required=partition.classes)
    log_path = Path(args.log) if args.log else Path(str(args.checkpoint) + ".log.jsonl")

    def on_epoch(record):
        log.info("epoch %d total %.6f", record["epoch"], record["total"])

    result = train(train_set, partition, attributes, config, on_epoch=on_epoch)
    result.model.save(args.checkpoint, {"config": config.to_dict(), "preset": args.preset or "partition1"})
    log_path.write_text(result.log_text(), encoding="utf-8")
    print(f"checkpoint: {args.checkpoint}")
    print(f"log: {log_path}")
    return EXIT_OK


def _load_for_inference(args):
    _require(args, "dataset", "partition", "checkpoint")
    model, _meta = GzslModel.load(args.checkpoint)
    _train, test, _partition = load_dataset(args.dataset, args.partition)
    return model, test


def cmd_eval(args) -> int:
    model, test = _load_for_inference(args)
    batch = predict_batch(test, model, transductive=not args.per_sample, threads=args.threads or 1)
    report = evaluate(test, model, batch=batch)
    text = report.to_json()
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    if args.dump:
        Path(args.dump).write_text(prediction_dump(batch), encoding="utf-8")
    log.info("%s", report.summary())
    return EXIT_OK


def cmd_predict(args) -> int:
    model, test = _load_for_inference(args)
    batch = predict_batch(test, model, transductive=not args.per_sample, threads=args.threads or 1)
    text = prediction_dump(batch)
    if args.out:
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        sys.stdout.write(text)
    return EXIT_OK


def cmd_inspect(args) -> int:
    if not any(getattr(args, n) for n in ("checkpoint", "dataset", "attributes", "partition")):
        raise UsageError("inspect: give at least one of --checkpoint, --dataset, --attributes, --partition")
    if args.checkpoint:
        params, meta = load_checkpoint(args.checkpoint)
        n_values = sum(int(np.prod(v.shape)) for k, v in params.items() if not k.startswith("const."))
        print(f"checkpoint {args.checkpoint}: {len(params)} arrays, {n_values} trainable values")
        print(f"  seen {meta.get('seen')} unseen {meta.get('unseen')}")
        if "pbd.thresholds" in params:
            print(f"  thresholds {np.array2string(params['pbd.thresholds'], precision=4)}")
    if args.dataset:
        samples, descriptor = read_dataset(args.dataset)
        lengths = [s.length for s in samples]
        splits = {sp: sum(s.split == sp for s in samples) for sp in ("train", "test")}
        print(f"dataset {args.dataset}: {len(samples)} samples ({splits['train']} train, {splits['test']} test)")
        if samples:
            print(f"  frames {min(lengths)}..{max(lengths)}, dims {samples[0].frames.shape[1]}")
        print(f"  classes {len(descriptor.get('classes', {}))}")
    if args.attributes:
        attrs = load_attributes(args.attributes)
        print(f"attributes {args.attributes}: {len(attrs.class_ids)} classes x {attrs.dim} attributes")
        print(f"  names {' '.join(attrs.names)}")
    if args.partition:
        part = load_partition(args.partition)
        print(f"partition {part.name}: seen {list(part.seen)} unseen {list(part.unseen)}")
    return EXIT_OK


COMMANDS = {"gen": cmd_gen, "train": cmd_train, "eval": cmd_eval, "predict": cmd_predict, "inspect": cmd_inspect}


def _setup_logging() -> None:
    level = os.environ.get("GZSL_LOG", "warning").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), format="%(levelname)s %(message)s")


def run(argv: list[str] | None = None) -> int:
    _setup_logging()
    parser = build_parser()
    try:
        args = _merge_config(parser.parse_args(argv))
        return COMMANDS[args.command](args)
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except SystemExit as exc:  # --help
        return int(exc.code or 0)
    except (DataError, OSError) as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except NumericError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except GzslError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DATA


def main() -> None:
    sys.exit(run())
