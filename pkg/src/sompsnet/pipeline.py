"""Fitted featurization pipeline.

Everything data-dependent (tensor sizing medians, categorical encoders,
publisher rating statistics, column standardization) is fitted on the
training split only and then applied unchanged to every article, so no
validation/test information leaks into the features.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from .errors import IneligibleAtCutoffError
from .featurize import (
    PNS_NUMERIC_PREFIX,
    UAM_FLAG_COLUMNS,
    UAM_WIDTH,
    ArticleFeatures,
    EmbeddingTable,
    PnsEncoders,
    SizingParams,
    compute_sizing,
    featurize_article,
)
from .ingest import Corpus


@dataclass(frozen=True)
class Standardizer:
    """Zero-mean/unit-variance scaling for a masked subset of columns."""

    mean: np.ndarray
    scale: np.ndarray
    columns: np.ndarray  # boolean mask over columns

    @classmethod
    def fit(cls, rows: np.ndarray, columns: np.ndarray) -> "Standardizer":
        width = columns.shape[0]
        if rows.size == 0:
            return cls(np.zeros(width), np.ones(width), columns)
        mean = rows.mean(axis=0)
        std = rows.std(axis=0)
        scale = np.where(std > 1e-12, std, 1.0)
        mean = np.where(columns, mean, 0.0)
        scale = np.where(columns, scale, 1.0)
        return cls(mean, scale, columns)

    def apply(self, rows: np.ndarray) -> np.ndarray:
        return (rows - self.mean) / self.scale

    def to_dict(self) -> dict:
        return {
            "mean": self.mean.tolist(),
            "scale": self.scale.tolist(),
            "columns": self.columns.astype(int).tolist(),
        }


def _uam_mask() -> np.ndarray:
    mask = np.ones(UAM_WIDTH, dtype=bool)
    mask[:UAM_FLAG_COLUMNS] = False
    return mask


def _pns_mask(dim: int) -> np.ndarray:
    mask = np.zeros(dim, dtype=bool)
    mask[:PNS_NUMERIC_PREFIX] = True
    mask[-1] = True  # publisher mean rating slot
    return mask


@dataclass(frozen=True)
class FeaturePipeline:
    """Featurizer with all fitted state (training split only) frozen in."""

    sizing: SizingParams
    table: EmbeddingTable
    encoders: PnsEncoders
    uam_standardizer_tweets: Standardizer
    uam_standardizer_retweets: Standardizer
    pns_standardizer: Standardizer
    cutoff_hours: Optional[float] = None

    @classmethod
    def fit(
        cls,
        corpus: Corpus,
        train_ids: Iterable[str],
        table: EmbeddingTable,
        *,
        top_tags: int = 8,
        top_publishers: int = 8,
        tweet_users: Optional[int] = None,
        retweet_users: Optional[int] = None,
        seq_len: Optional[int] = None,
        cutoff_hours: Optional[float] = None,
    ) -> "FeaturePipeline":
        train_ids = list(train_ids)
        train_corpus = corpus.restrict(train_ids)
        if len(train_corpus) == 0:
            raise ValueError("training split is empty")

        computed = compute_sizing(train_corpus, cutoff_hours=cutoff_hours)
        sizing = SizingParams(
            tweet_users=tweet_users or computed.tweet_users,
            retweet_users=retweet_users or computed.retweet_users,
            seq_len=seq_len or computed.seq_len,
        )
        encoders = PnsEncoders.fit(
            list(train_corpus.news), top_tags=top_tags, top_publishers=top_publishers
        )

        uam_rows_t: list[np.ndarray] = []
        uam_rows_r: list[np.ndarray] = []
        pns_rows: list[np.ndarray] = []
        for article in train_corpus.news:
            try:
                raw = featurize_article(
                    article, train_corpus, sizing, table, encoders, cutoff_hours
                )
            except IneligibleAtCutoffError:
                continue
            uam_rows_t.append(raw.uam_tweets[: raw.valid_tweet_users])
            uam_rows_r.append(raw.uam_retweets[: raw.valid_retweet_users])
            pns_rows.append(raw.pns)

        stack = lambda rows: np.concatenate(rows, axis=0) if rows else np.zeros((0, UAM_WIDTH))
        uam_mask = _uam_mask()
        return cls(
            sizing=sizing,
            table=table,
            encoders=encoders,
            uam_standardizer_tweets=Standardizer.fit(stack(uam_rows_t), uam_mask),
            uam_standardizer_retweets=Standardizer.fit(stack(uam_rows_r), uam_mask),
            pns_standardizer=Standardizer.fit(
                np.stack(pns_rows) if pns_rows else np.zeros((0, encoders.dim)),
                _pns_mask(encoders.dim),
            ),
            cutoff_hours=cutoff_hours,
        )

    def transform_article(self, corpus: Corpus, news_id: str) -> ArticleFeatures:
        """Standardized features for one article (raises if ineligible at cutoff)."""
        raw = featurize_article(
            corpus.article(news_id), corpus, self.sizing, self.table,
            self.encoders, self.cutoff_hours,
        )
        vt, vr = raw.valid_tweet_users, raw.valid_retweet_users
        raw.uam_tweets[:vt] = self.uam_standardizer_tweets.apply(raw.uam_tweets[:vt])
        raw.uam_retweets[:vr] = self.uam_standardizer_retweets.apply(raw.uam_retweets[:vr])
        raw.pns = self.pns_standardizer.apply(raw.pns)
        raw.validate()
        return raw

    def transform_corpus(
        self, corpus: Corpus, news_ids: Optional[Sequence[str]] = None
    ) -> tuple[dict[str, ArticleFeatures], list[str]]:
        """Featurize the given articles; returns (features, ineligible ids)."""
        ids = list(news_ids) if news_ids is not None else list(corpus.news_ids)
        features: dict[str, ArticleFeatures] = {}
        skipped: list[str] = []
        for news_id in ids:
            try:
                features[news_id] = self.transform_article(corpus, news_id)
            except IneligibleAtCutoffError:
                skipped.append(news_id)
        return features, skipped

    def fitted_state(self) -> dict:
        """JSON-serializable snapshot of every fitted statistic."""
        return {
            "sizing": self.sizing.to_dict(),
            "encoders": self.encoders.to_dict(),
            "uam_standardizer_tweets": self.uam_standardizer_tweets.to_dict(),
            "uam_standardizer_retweets": self.uam_standardizer_retweets.to_dict(),
            "pns_standardizer": self.pns_standardizer.to_dict(),
            "cutoff_hours": self.cutoff_hours,
        }
