"""Training and evaluation harness.

Stratified splitting, mini-batch SGD with momentum and early stopping on
validation macro-F1, threshold-0.5 evaluation with per-class F1, and the
early-detection sweep that refits the whole pipeline per observation
window and retrains from scratch at each cutoff.
"""

from __future__ import annotations

import copy
import math
from dataclasses import dataclass, field, replace
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np
import torch

from .errors import SplitError, TrainingDivergenceError
from .featurize import ArticleFeatures, EmbeddingTable, SizingParams
from .ingest import Corpus, FAKE, REAL
from .neural import FeatureBatch, FeatureDims, ModelConfig, SompsNet, bce_loss
from .pipeline import FeaturePipeline

SPLIT_NAMES = ("train", "val", "test")


@dataclass(frozen=True)
class SplitSpec:
    """Stratified split fractions and the shuffle seed."""

    train_frac: float = 0.75
    val_frac: float = 0.10
    test_frac: float = 0.15
    seed: int = 0

    def __post_init__(self):
        total = self.train_frac + self.val_frac + self.test_frac
        if abs(total - 1.0) > 1e-9:
            raise ValueError(f"split fractions must sum to 1, got {total}")

    @property
    def fractions(self) -> tuple[float, float, float]:
        return (self.train_frac, self.val_frac, self.test_frac)


@dataclass(frozen=True)
class SplitSets:
    train: tuple[str, ...]
    val: tuple[str, ...]
    test: tuple[str, ...]

    def named(self, name: str) -> tuple[str, ...]:
        if name not in SPLIT_NAMES:
            raise ValueError(f"unknown split {name!r}")
        return getattr(self, name)

    def to_dict(self) -> dict:
        return {"train": list(self.train), "val": list(self.val), "test": list(self.test)}


def _allocate(class_sizes: Mapping[int, int], fractions: Sequence[float]) -> dict[int, list[int]]:
    """Per-class split counts: floors first, leftovers placed by largest
    fractional remainder into splits still below their overall target."""
    total = sum(class_sizes.values())
    split_targets = [math.floor(total * f) for f in fractions]
    remainders = [total * f - t for f, t in zip(fractions, split_targets)]
    for _ in range(total - sum(split_targets)):
        pick = max(range(len(fractions)), key=lambda s: (remainders[s], -s))
        split_targets[pick] += 1
        remainders[pick] = -1.0

    counts = {c: [math.floor(n * f) for f in fractions] for c, n in class_sizes.items()}
    deficits = [
        split_targets[s] - sum(counts[c][s] for c in counts) for s in range(len(fractions))
    ]
    for cls in sorted(class_sizes, key=lambda c: (-class_sizes[c], c)):
        leftovers = class_sizes[cls] - sum(counts[cls])
        rem = [class_sizes[cls] * f - math.floor(class_sizes[cls] * f) for f in fractions]
        for _ in range(leftovers):
            open_splits = [s for s in range(len(fractions)) if deficits[s] > 0]
            pick = max(open_splits, key=lambda s: (rem[s], -s))
            counts[cls][pick] += 1
            deficits[pick] -= 1
            rem[pick] = -1.0
    return counts


def stratified_split(corpus: Corpus, spec: SplitSpec) -> SplitSets:
    """Deterministic label-stratified split into train/val/test id sets.

    Per-class counts stay within one article of the exact proportion and
    every split receives at least one article of each class.
    """
    by_class: dict[int, list[str]] = {}
    for article in corpus.news:
        by_class.setdefault(article.label, []).append(article.news_id)
    if not by_class:
        raise SplitError("cannot split an empty corpus")
    for cls, ids in sorted(by_class.items()):
        if len(ids) < len(SPLIT_NAMES):
            raise SplitError(
                f"class {cls} has only {len(ids)} articles; need >= {len(SPLIT_NAMES)}"
            )

    counts = _allocate({c: len(ids) for c, ids in by_class.items()}, spec.fractions)
    for cls, per_split in sorted(counts.items()):
        if min(per_split) < 1:
            raise SplitError(
                f"class {cls} would leave a split empty under fractions {spec.fractions}"
            )

    rng = np.random.default_rng(spec.seed)
    buckets: dict[str, list[str]] = {name: [] for name in SPLIT_NAMES}
    for cls in sorted(by_class):
        ids = sorted(by_class[cls])
        order = [ids[i] for i in rng.permutation(len(ids))]
        start = 0
        for name, take in zip(SPLIT_NAMES, counts[cls]):
            buckets[name].extend(order[start : start + take])
            start += take
    return SplitSets(
        train=tuple(sorted(buckets["train"])),
        val=tuple(sorted(buckets["val"])),
        test=tuple(sorted(buckets["test"])),
    )


@dataclass
class EvalReport:
    """Threshold-0.5 classification metrics on one article set."""

    accuracy: float
    f1_real: float
    f1_fake: float
    f1_macro: float
    confusion: dict[str, int]
    probabilities: dict[str, float]
    variant: str
    cutoff_hours: Optional[float] = None

    def to_dict(self) -> dict:
        return {
            "accuracy": self.accuracy,
            "f1_real": self.f1_real,
            "f1_fake": self.f1_fake,
            "f1_macro": self.f1_macro,
            "confusion": dict(sorted(self.confusion.items())),
            "probabilities": dict(sorted(self.probabilities.items())),
            "variant": self.variant,
            "cutoff_hours": self.cutoff_hours,
        }


def _f1(tp: int, fp: int, fn: int) -> float:
    denom = 2 * tp + fp + fn
    return 2 * tp / denom if denom else 0.0


def metrics_from_confusion(tp: int, fp: int, fn: int, tn: int) -> dict[str, float]:
    """Accuracy and per-class F1 with the real class (label 1) as positive."""
    total = tp + fp + fn + tn
    f1_real = _f1(tp, fp, fn)
    f1_fake = _f1(tn, fn, fp)
    return {
        "accuracy": (tp + tn) / total if total else 0.0,
        "f1_real": f1_real,
        "f1_fake": f1_fake,
        "f1_macro": (f1_real + f1_fake) / 2.0,
    }


def predictions_from_probabilities(probabilities: Sequence[float]) -> list[int]:
    return [REAL if p >= 0.5 else FAKE for p in probabilities]


def evaluate(
    model: SompsNet,
    features: Mapping[str, ArticleFeatures],
    article_ids: Sequence[str],
    batch_size: int = 256,
) -> EvalReport:
    """Evaluate the model on the given articles (threshold 0.5 on P(real))."""
    ids = list(article_ids)
    if not ids:
        raise ValueError("cannot evaluate on an empty article set")
    missing = [i for i in ids if i not in features]
    if missing:
        raise ValueError(f"articles without features: {', '.join(missing)}")

    was_training = model.training
    model.eval()
    probabilities: dict[str, float] = {}
    with torch.no_grad():
        for start in range(0, len(ids), batch_size):
            chunk = ids[start : start + batch_size]
            batch = FeatureBatch.from_features([features[i] for i in chunk])
            trace = model(batch)
            for news_id, prob in zip(chunk, trace.probability.tolist()):
                probabilities[news_id] = prob
    model.train(was_training)

    labels = [features[i].label for i in ids]
    preds = predictions_from_probabilities([probabilities[i] for i in ids])
    tp = sum(1 for y, p in zip(labels, preds) if y == REAL and p == REAL)
    fp = sum(1 for y, p in zip(labels, preds) if y == FAKE and p == REAL)
    fn = sum(1 for y, p in zip(labels, preds) if y == REAL and p == FAKE)
    tn = sum(1 for y, p in zip(labels, preds) if y == FAKE and p == FAKE)
    metrics = metrics_from_confusion(tp, fp, fn, tn)
    return EvalReport(
        accuracy=metrics["accuracy"],
        f1_real=metrics["f1_real"],
        f1_fake=metrics["f1_fake"],
        f1_macro=metrics["f1_macro"],
        confusion={"tp": tp, "fp": fp, "fn": fn, "tn": tn},
        probabilities=probabilities,
        variant=model.config.variant,
    )


@dataclass
class EpochLog:
    epoch: int
    train_loss: float
    val_f1_macro: float
    improved: bool

    def to_dict(self) -> dict:
        return {
            "epoch": self.epoch,
            "train_loss": self.train_loss,
            "val_f1_macro": self.val_f1_macro,
            "improved": self.improved,
        }


@dataclass
class TrainResult:
    model: SompsNet
    log: list[EpochLog]
    best_epoch: int
    best_val_f1_macro: float


def train(
    features: Mapping[str, ArticleFeatures],
    splits: SplitSets,
    config: ModelConfig,
    dims: Optional[FeatureDims] = None,
) -> TrainResult:
    """Mini-batch SGD with momentum; early stopping on validation macro-F1.

    Stops after ``patience`` epochs without improvement or at
    ``max_epochs``, whichever comes first, and returns the model restored
    to its best-validation state.
    """
    train_ids = [i for i in splits.train if i in features]
    val_ids = [i for i in splits.val if i in features]
    if not train_ids or not val_ids:
        raise ValueError("training and validation splits must both be non-empty")

    torch.manual_seed(config.seed)
    if dims is None:
        dims = FeatureDims.from_features(features[train_ids[0]])
    model = SompsNet(dims, config)
    optimizer = torch.optim.SGD(
        model.parameters(), lr=config.learning_rate, momentum=config.momentum
    )
    rng = np.random.default_rng(config.seed)

    log: list[EpochLog] = []
    best_state = copy.deepcopy(model.state_dict())
    best_metric = -math.inf
    best_epoch = -1
    stale = 0
    for epoch in range(config.max_epochs):
        model.train()
        order = [train_ids[i] for i in rng.permutation(len(train_ids))]
        loss_sum = 0.0
        for batch_index, start in enumerate(range(0, len(order), config.batch_size)):
            chunk = order[start : start + config.batch_size]
            batch = FeatureBatch.from_features([features[i] for i in chunk])
            trace = model(batch)
            losses = bce_loss(trace.probability, batch.labels)
            loss = losses.mean()
            if not torch.isfinite(loss):
                raise TrainingDivergenceError(epoch, batch_index, chunk)
            optimizer.zero_grad()
            loss.backward()
            optimizer.step()
            loss_sum += loss.item() * len(chunk)

        val_report = evaluate(model, features, val_ids)
        improved = val_report.f1_macro > best_metric
        if improved:
            best_metric = val_report.f1_macro
            best_epoch = epoch
            best_state = copy.deepcopy(model.state_dict())
            stale = 0
        else:
            stale += 1
        log.append(EpochLog(epoch, loss_sum / len(order), val_report.f1_macro, improved))
        if stale >= config.patience:
            break

    model.load_state_dict(best_state)
    model.eval()
    return TrainResult(model=model, log=log, best_epoch=best_epoch, best_val_f1_macro=best_metric)


@dataclass
class CurvePoint:
    cutoff_hours: float
    eligible_count: int
    report: Optional[EvalReport]

    @property
    def valid(self) -> bool:
        return self.report is not None

    def to_row(self) -> dict:
        row = {
            "cutoff_hours": self.cutoff_hours,
            "eligible": self.eligible_count,
            "valid": self.valid,
        }
        if self.report is not None:
            row.update(
                accuracy=self.report.accuracy,
                f1_real=self.report.f1_real,
                f1_fake=self.report.f1_fake,
                f1_macro=self.report.f1_macro,
            )
        return row


@dataclass
class EarlyDetectionCurve:
    points: list[CurvePoint] = field(default_factory=list)

    def to_rows(self) -> list[dict]:
        return [p.to_row() for p in self.points]


CUTOFF_STEP_HOURS = 4


def early_detection_sweep(
    corpus: Corpus,
    table: EmbeddingTable,
    splits: SplitSets,
    config: ModelConfig,
    max_hours: int,
    *,
    top_tags: int = 8,
    top_publishers: int = 8,
    sizing_override: Optional[SizingParams] = None,
) -> EarlyDetectionCurve:
    """Retrain and evaluate with only the first N hours of engagements visible.

    One point per cutoff in {4, 8, ..., max_hours}.  Sizing, encoders and
    standardization are refitted on the training split inside each window;
    articles with no tweets in a window are excluded from that point and
    reflected in its eligible count.
    """
    if max_hours < CUTOFF_STEP_HOURS or max_hours % CUTOFF_STEP_HOURS != 0:
        raise ValueError(f"max_hours must be a positive multiple of {CUTOFF_STEP_HOURS}")

    curve = EarlyDetectionCurve()
    override = sizing_override.to_dict() if sizing_override else {}
    for cutoff in range(CUTOFF_STEP_HOURS, max_hours + 1, CUTOFF_STEP_HOURS):
        pipe = FeaturePipeline.fit(
            corpus,
            splits.train,
            table,
            top_tags=top_tags,
            top_publishers=top_publishers,
            cutoff_hours=float(cutoff),
            **override,
        )
        features, _ = pipe.transform_corpus(corpus)
        eligible = len(features)

        train_labels = {features[i].label for i in splits.train if i in features}
        test_ids = [i for i in splits.test if i in features]
        if len(train_labels) < 2 or not test_ids:
            curve.points.append(CurvePoint(float(cutoff), eligible, None))
            continue

        result = train(features, splits, config)
        report = evaluate(result.model, features, test_ids)
        report.cutoff_hours = float(cutoff)
        curve.points.append(CurvePoint(float(cutoff), eligible, report))
    return curve
