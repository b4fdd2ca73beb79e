"""Command-line entry point tying the pipeline stages together.

Subcommands: synth, ingest, featurize, train, eval, early-detect,
plot-data.  Every artifact embeds the run configuration and a format
version; identical inputs, config and seed reproduce artifacts
byte-for-byte.
"""

from __future__ import annotations

import argparse
import csv
import sys
from pathlib import Path

import torch

from . import __version__
from .config import load_config
from .errors import SompsError
from .featurize import EmbeddingTable
from .harness import (
    SplitSets,
    early_detection_sweep,
    evaluate,
    stratified_split,
    train,
)
from .ingest import filter_eligible, load_corpus
from .neural import FeatureDims, ModelConfig, SompsNet
from .pipeline import FeaturePipeline
from .serialize import (
    CORPUS_FORMAT_VERSION,
    REPORT_FORMAT_VERSION,
    TENSOR_FORMAT_VERSION,
    load_checkpoint,
    load_corpus_artifact,
    load_features,
    read_json,
    save_checkpoint,
    save_corpus,
    save_features,
    write_corpus_jsonl,
    write_json,
)
from .synth import generate_synthetic, synthetic_embedding_table


def _cmd_synth(args) -> int:
    window = tuple(args.signal_window) if args.signal_window else None
    corpus = generate_synthetic(
        args.n,
        fake_fraction=args.fake_frac,
        seed=args.seed,
        signal_strength=args.signal,
        signal_window_hours=window,
    )
    out_dir = Path(args.out_dir)
    paths = write_corpus_jsonl(corpus, out_dir)
    table = synthetic_embedding_table(dim=args.embedding_dim, seed=args.seed)
    table.to_file(out_dir / "embeddings.txt")
    print(f"wrote {len(corpus)} articles to {out_dir} ({', '.join(p.name for p in paths.values())}, embeddings.txt)")
    return 0


def _cmd_ingest(args) -> int:
    corpus = load_corpus(args.news, args.engagements, args.users)
    save_corpus(args.out, corpus)
    print(f"wrote {args.out}: {len(corpus)} articles, {len(corpus.users)} users")
    return 0


def _cmd_featurize(args) -> int:
    run = load_config(args.config, seed=args.seed)
    corpus = filter_eligible(load_corpus_artifact(args.corpus))
    table = EmbeddingTable.from_file(args.embeddings)
    splits = stratified_split(corpus, run.split_spec())
    pipe = FeaturePipeline.fit(
        corpus,
        splits.train,
        table,
        top_tags=run.top_tags,
        top_publishers=run.top_publishers,
        tweet_users=run.tweet_users,
        retweet_users=run.retweet_users,
        seq_len=run.seq_len,
        cutoff_hours=args.cutoff_hours,
    )
    features, skipped = pipe.transform_corpus(corpus)
    if not features:
        raise SompsError("no articles could be featurized")
    dims = FeatureDims.from_features(next(iter(features.values())))
    meta = {
        "format_version": TENSOR_FORMAT_VERSION,
        "config": run.to_dict(),
        "splits": splits.to_dict(),
        "skipped": skipped,
        "dims": dims.to_dict(),
        "fitted": pipe.fitted_state(),
        "cutoff_hours": args.cutoff_hours,
    }
    save_features(args.out, meta, features)
    print(f"wrote {args.out}: {len(features)} articles featurized, {len(skipped)} ineligible")
    return 0


def _cmd_train(args) -> int:
    meta, features = load_features(args.features)
    if args.split_seed is not None and args.split_seed != meta["config"]["seed"]:
        raise SompsError(
            f"split seed mismatch: features were built with seed {meta['config']['seed']}, "
            f"got --split-seed {args.split_seed}"
        )
    run = load_config(args.config, variant=args.variant)
    splits = SplitSets(
        train=tuple(meta["splits"]["train"]),
        val=tuple(meta["splits"]["val"]),
        test=tuple(meta["splits"]["test"]),
    )
    dims = FeatureDims(**meta["dims"])
    result = train(features, splits, run.model_config(), dims)
    ckpt_meta = {
        "format_version": TENSOR_FORMAT_VERSION,
        "config": run.to_dict(),
        "variant": run.variant,
        "dims": meta["dims"],
        "cutoff_hours": meta.get("cutoff_hours"),
        "best_epoch": result.best_epoch,
        "best_val_f1_macro": result.best_val_f1_macro,
        "log": [entry.to_dict() for entry in result.log],
    }
    save_checkpoint(args.out, result.model, ckpt_meta)
    print(
        f"wrote {args.out}: variant={run.variant} best_epoch={result.best_epoch} "
        f"val_f1_macro={result.best_val_f1_macro:.4f}"
    )
    return 0


def _cmd_eval(args) -> int:
    ckpt_meta, arrays = load_checkpoint(args.model)
    if args.variant is not None and args.variant != ckpt_meta["variant"]:
        raise SompsError(
            f"variant mismatch: checkpoint was trained as {ckpt_meta['variant']!r}, "
            f"requested {args.variant!r}"
        )
    meta, features = load_features(args.features)
    splits = meta["splits"]
    ids = [i for i in splits[args.split] if i in features]
    config = ModelConfig(**{
        k: v for k, v in ckpt_meta["config"].items()
        if k in ModelConfig.__dataclass_fields__
    })
    model = SompsNet(FeatureDims(**ckpt_meta["dims"]), config)
    model.load_state_dict({k: torch.as_tensor(v) for k, v in arrays.items()})
    report = evaluate(model, features, ids)
    report.cutoff_hours = ckpt_meta.get("cutoff_hours")
    doc = {
        "kind": "report",
        "format_version": REPORT_FORMAT_VERSION,
        "config": ckpt_meta["config"],
        "split": args.split,
        **report.to_dict(),
    }
    write_json(args.report, doc)
    print(
        f"wrote {args.report}: split={args.split} accuracy={report.accuracy:.4f} "
        f"f1_real={report.f1_real:.4f} f1_fake={report.f1_fake:.4f} f1_macro={report.f1_macro:.4f}"
    )
    return 0


def _cmd_early_detect(args) -> int:
    run = load_config(args.config)
    corpus = filter_eligible(load_corpus_artifact(args.corpus))
    table = EmbeddingTable.from_file(args.embeddings)
    splits = stratified_split(corpus, run.split_spec())
    curve = early_detection_sweep(
        corpus,
        table,
        splits,
        run.model_config(),
        args.max_hours,
        top_tags=run.top_tags,
        top_publishers=run.top_publishers,
        sizing_override=run.sizing_override(),
    )
    doc = {
        "kind": "curve",
        "format_version": REPORT_FORMAT_VERSION,
        "config": run.to_dict(),
        "rows": curve.to_rows(),
    }
    write_json(args.out, doc)
    print(f"wrote {args.out}: {len(curve.points)} cutoffs up to {args.max_hours} h")
    return 0


def _cmd_plot_data(args) -> int:
    doc = read_json(args.curve)
    if doc.get("kind") != "curve":
        raise SompsError(f"{args.curve}: not an early-detection curve")
    columns = ["cutoff_hours", "accuracy", "f1_real", "f1_fake", "f1_macro", "eligible"]
    with open(args.out, "w", newline="", encoding="utf-8") as handle:
        writer = csv.writer(handle)
        writer.writerow(columns)
        for row in doc["rows"]:
            writer.writerow([row.get(col, "") for col in columns])
    print(f"wrote {args.out}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="somps",
        description="Fake health news detection from social engagements and publisher statistics.",
    )
    parser.add_argument(
        "--version",
        action="version",
        version=(
            f"somps {__version__} "
            f"(tensor archive v{TENSOR_FORMAT_VERSION}, corpus v{CORPUS_FORMAT_VERSION}, "
            f"report v{REPORT_FORMAT_VERSION})"
        ),
    )
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("synth", help="generate a synthetic corpus with a planted signal")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--fake-frac", type=float, default=0.5)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--signal", type=float, default=1.0)
    p.add_argument("--out-dir", required=True)
    p.add_argument("--signal-window", type=float, nargs=2, metavar=("LO", "HI"))
    p.add_argument("--embedding-dim", type=int, default=16)
    p.set_defaults(func=_cmd_synth)

    p = sub.add_parser("ingest", help="parse and validate JSONL inputs into a corpus artifact")
    p.add_argument("--news", required=True)
    p.add_argument("--engagements", required=True)
    p.add_argument("--users", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_ingest)

    p = sub.add_parser("featurize", help="fit the pipeline on the training split and featurize")
    p.add_argument("--corpus", required=True)
    p.add_argument("--embeddings", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--cutoff-hours", type=float, default=None)
    p.add_argument("--config", default=None)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=_cmd_featurize)

    p = sub.add_parser("train", help="train a model on a feature archive")
    p.add_argument("--features", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--config", default=None)
    p.add_argument("--variant", choices=("somps", "sig", "pns"), default=None)
    p.add_argument("--split-seed", type=int, default=None)
    p.set_defaults(func=_cmd_train)

    p = sub.add_parser("eval", help="evaluate a checkpoint on one split")
    p.add_argument("--model", required=True)
    p.add_argument("--features", required=True)
    p.add_argument("--split", choices=("train", "val", "test"), default="test")
    p.add_argument("--report", required=True)
    p.add_argument("--variant", choices=("somps", "sig", "pns"), default=None)
    p.set_defaults(func=_cmd_eval)

    p = sub.add_parser("early-detect", help="sweep observation windows in 4-hour steps")
    p.add_argument("--corpus", required=True)
    p.add_argument("--embeddings", required=True)
    p.add_argument("--max-hours", type=int, required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--config", default=None)
    p.set_defaults(func=_cmd_early_detect)

    p = sub.add_parser("plot-data", help="export an early-detection curve as CSV")
    p.add_argument("--curve", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=_cmd_plot_data)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except (SompsError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
