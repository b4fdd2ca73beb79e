"""Per-article feature construction.

Turns a corpus into fixed-shape tensors per article:

* averaged engagement-text embeddings per kind (tweet/retweet),
* social connectivity matrices over the first-k engaging users,
* user activity matrices (profile flags, counts, posting history),
* a publisher/news-statistics vector.

All shapes are static (zero-padded) so articles can be stacked into
batches regardless of raw engagement counts.  An optional cutoff window
restricts every sub-step to engagements observed within a fixed number
of hours after the article's first tweet.
"""

from __future__ import annotations

import hashlib
import math
import re
import string
from collections import Counter
from dataclasses import dataclass
from datetime import datetime, timedelta
from typing import Iterable, Mapping, Optional, Sequence

import numpy as np

from .errors import IneligibleAtCutoffError, NotFittedError
from .ingest import Corpus, Engagement, EngagementKind, NewsRecord, UserRecord

_URL_RE = re.compile(r"(?:https?://|www\.)\S+", re.IGNORECASE)
_PUNCT_TO_SPACE = str.maketrans({c: " " for c in string.punctuation})

SECONDS_PER_DAY = 86400.0
SECONDS_PER_HOUR = 3600.0

#: User activity matrix width: 14 shared profile/history columns plus one
#: engagement-kind-specific column.
UAM_COMMON_WIDTH = 14
UAM_WIDTH = UAM_COMMON_WIDTH + 1

#: Leading UAM columns that are 0/1 flags and bypass standardization.
UAM_FLAG_COLUMNS = 5


def tokenize(text: str) -> list[str]:
    """Lowercase tokens after stripping URLs and mapping punctuation to spaces."""
    return _URL_RE.sub(" ", text).lower().translate(_PUNCT_TO_SPACE).split()


def _token_vector(token: str, dim: int, seed: int) -> np.ndarray:
    digest = hashlib.blake2b(f"{seed}:{token}".encode("utf-8"), digest_size=8).digest()
    rng = np.random.default_rng(int.from_bytes(digest, "little"))
    return rng.uniform(-0.5, 0.5, size=dim)


class EmbeddingTable:
    """Token-to-vector lookup with an all-zeros vector for OOV and padding."""

    def __init__(self, vectors: Mapping[str, np.ndarray]):
        if not vectors:
            raise ValueError("embedding table must contain at least one token")
        dims = {len(v) for v in vectors.values()}
        if len(dims) != 1:
            raise ValueError(f"inconsistent embedding dimensions: {sorted(dims)}")
        self.dim = dims.pop()
        self._vectors = {t: np.asarray(v, dtype=np.float64) for t, v in vectors.items()}
        self._zero = np.zeros(self.dim, dtype=np.float64)

    def __len__(self) -> int:
        return len(self._vectors)

    def __contains__(self, token: str) -> bool:
        return token in self._vectors

    def lookup(self, token: str) -> np.ndarray:
        return self._vectors.get(token, self._zero)

    def embed_tokens(self, tokens: Sequence[str], m: int) -> np.ndarray:
        """Embed a token sequence truncated/zero-padded to m rows."""
        out = np.zeros((m, self.dim), dtype=np.float64)
        for i, token in enumerate(tokens[:m]):
            out[i] = self.lookup(token)
        return out

    @classmethod
    def from_file(cls, path) -> "EmbeddingTable":
        """Load `token v1 ... ve` lines (whitespace separated)."""
        vectors: dict[str, np.ndarray] = {}
        with open(path, "r", encoding="utf-8") as handle:
            for line in handle:
                parts = line.split()
                if not parts:
                    continue
                vectors[parts[0]] = np.array([float(x) for x in parts[1:]], dtype=np.float64)
        return cls(vectors)

    def to_file(self, path) -> None:
        with open(path, "w", encoding="utf-8") as handle:
            for token in sorted(self._vectors):
                values = " ".join(repr(float(x)) for x in self._vectors[token])
                handle.write(f"{token} {values}\n")

    @classmethod
    def from_tokens(cls, tokens: Iterable[str], dim: int, seed: int = 0) -> "EmbeddingTable":
        """Deterministic per-token random vectors (hash-seeded, corpus-independent)."""
        return cls({t: _token_vector(t, dim, seed) for t in set(tokens)})


@dataclass(frozen=True)
class SizingParams:
    """Static tensor sizes: first-k users per kind and token sequence length."""

    tweet_users: int
    retweet_users: int
    seq_len: int

    def __post_init__(self):
        for name in ("tweet_users", "retweet_users", "seq_len"):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")

    def to_dict(self) -> dict:
        return {
            "tweet_users": self.tweet_users,
            "retweet_users": self.retweet_users,
            "seq_len": self.seq_len,
        }


def lower_median(values: Sequence[int]) -> int:
    """Median taking the lower middle element for even-length input."""
    if not values:
        raise ValueError("median of empty sequence")
    ordered = sorted(values)
    return ordered[(len(ordered) - 1) // 2]


def windowed_engagements(
    corpus: Corpus, news_id: str, cutoff_hours: Optional[float]
) -> tuple[Engagement, ...]:
    """Engagements visible within cutoff hours of the article's first tweet.

    With no cutoff the full (time-sorted) list is returned.  Articles with
    no tweets at all have an undefined window start and yield nothing.
    """
    group = corpus.engagements_for(news_id)
    if cutoff_hours is None:
        return group
    tweet_times = [e.created_at for e in group if e.kind is EngagementKind.TWEET]
    if not tweet_times:
        return ()
    horizon = min(tweet_times) + timedelta(hours=cutoff_hours)
    return tuple(e for e in group if e.created_at <= horizon)


def compute_sizing(corpus: Corpus, cutoff_hours: Optional[float] = None) -> SizingParams:
    """Derive static sizes as medians over the corpus.

    tweet_users / retweet_users are medians of per-article distinct engaging
    user counts; seq_len is the median token count over all tweets.  Lower
    middle element for even-length medians; results clamped to >= 1.
    """
    if len(corpus) == 0:
        raise ValueError("cannot size an empty corpus")
    tweet_user_counts: list[int] = []
    retweet_user_counts: list[int] = []
    token_counts: list[int] = []
    for article in corpus.news:
        group = windowed_engagements(corpus, article.news_id, cutoff_hours)
        tweet_user_counts.append(
            len({e.user_id for e in group if e.kind is EngagementKind.TWEET})
        )
        retweet_user_counts.append(
            len({e.user_id for e in group if e.kind is EngagementKind.RETWEET})
        )
        token_counts.extend(
            len(tokenize(e.text)) for e in group if e.kind is EngagementKind.TWEET
        )
    return SizingParams(
        tweet_users=max(1, lower_median(tweet_user_counts)),
        retweet_users=max(1, lower_median(retweet_user_counts)),
        seq_len=max(1, lower_median(token_counts) if token_counts else 1),
    )


def embed_engagements(texts: Sequence[str], table: EmbeddingTable, m: int) -> np.ndarray:
    """Average of per-text embedded token sequences, each padded to m rows.

    Empty texts contribute all-pad (zero) rows; the list itself must be
    non-empty.
    """
    if not texts:
        raise ValueError("texts must be non-empty; callers handle the empty branch")
    stacked = np.stack([table.embed_tokens(tokenize(t), m) for t in texts])
    return stacked.mean(axis=0)


def connectivity_score(user_x: UserRecord, user_y: UserRecord) -> float:
    """Normalized overlap of two users' follower/following networks, in [0, 1]."""
    numerator = len(
        (user_x.follower_ids & user_y.follower_ids)
        | (user_x.following_ids & user_y.following_ids)
    )
    denominator = len(
        user_x.follower_ids
        | user_y.follower_ids
        | user_x.following_ids
        | user_y.following_ids
    )
    return numerator / denominator if denominator else 0.0


def build_connectivity_matrix(users: Sequence[UserRecord], k: int) -> np.ndarray:
    """Symmetric pairwise connectivity matrix, zero diagonal, zero-padded to k."""
    if len(users) > k:
        raise ValueError(f"got {len(users)} users for a {k}x{k} matrix")
    matrix = np.zeros((k, k), dtype=np.float64)
    for i in range(len(users)):
        for j in range(i + 1, len(users)):
            score = connectivity_score(users[i], users[j])
            matrix[i, j] = score
            matrix[j, i] = score
    return matrix


def select_engaging_users(engagements: Sequence[Engagement], kind: EngagementKind, k: int) -> list[str]:
    """First k distinct user ids engaging with the given kind, in time order."""
    ordered: list[str] = []
    seen: set[str] = set()
    for engagement in engagements:
        if engagement.kind is not kind or engagement.user_id in seen:
            continue
        seen.add(engagement.user_id)
        ordered.append(engagement.user_id)
        if len(ordered) == k:
            break
    return ordered


def average_posts_per_day(user: UserRecord) -> float:
    """Historical posting rate: post count over ceil(span) days (0 if no history)."""
    posts = user.post_timestamps
    if not posts:
        return 0.0
    span_days = (max(posts) - min(posts)).total_seconds() / SECONDS_PER_DAY
    return len(posts) / max(math.ceil(span_days), 1)


def max_posts_single_day(user: UserRecord) -> int:
    if not user.post_timestamps:
        return 0
    per_day = Counter(stamp.date() for stamp in user.post_timestamps)
    return max(per_day.values())


def build_user_activity_matrix(
    users: Sequence[UserRecord],
    engagements: Sequence[Engagement],
    kind: EngagementKind,
    k: int,
) -> np.ndarray:
    """Per-user feature rows for the selected users, zero-padded to k rows.

    Columns: five 0/1 profile flags, description/username word counts, four
    platform counters, average posts per day, max posts on a single day,
    days between account creation and the user's first engagement of this
    kind on the article, and one kind-specific column (tweet count on the
    article, or hours between the article's first tweet and first retweet).
    """
    if len(users) > k:
        raise ValueError(f"got {len(users)} users for {k} rows")
    tweet_times = [e.created_at for e in engagements if e.kind is EngagementKind.TWEET]
    retweet_times = [e.created_at for e in engagements if e.kind is EngagementKind.RETWEET]
    first_tweet = min(tweet_times) if tweet_times else None
    first_retweet = min(retweet_times) if retweet_times else None
    if first_tweet is not None and first_retweet is not None:
        tweet_to_retweet_hours = (
            first_retweet - first_tweet
        ).total_seconds() / SECONDS_PER_HOUR
    else:
        tweet_to_retweet_hours = 0.0

    first_engagement: dict[str, datetime] = {}
    tweet_counts: Counter = Counter()
    for engagement in engagements:
        if engagement.kind is EngagementKind.TWEET:
            tweet_counts[engagement.user_id] += 1
        if engagement.kind is kind and engagement.user_id not in first_engagement:
            first_engagement[engagement.user_id] = engagement.created_at

    matrix = np.zeros((k, UAM_WIDTH), dtype=np.float64)
    for row, user in enumerate(users):
        engaged_at = first_engagement.get(user.user_id)
        if user.account_created_at is not None and engaged_at is not None:
            days_since_creation = (
                engaged_at - user.account_created_at
            ).total_seconds() / SECONDS_PER_DAY
        else:
            days_since_creation = 0.0
        if kind is EngagementKind.TWEET:
            kind_specific = float(tweet_counts[user.user_id])
        else:
            kind_specific = tweet_to_retweet_hours
        matrix[row] = [
            float(user.protected),
            float(user.default_profile_image),
            float(user.verified),
            float(user.default_profile_ui),
            float(user.geo_enabled),
            float(user.description_word_count),
            float(user.username_word_count),
            float(user.favourites_count),
            float(user.friends_count),
            float(user.followers_count),
            float(user.listed_count),
            average_posts_per_day(user),
            float(max_posts_single_day(user)),
            days_since_creation,
            kind_specific,
        ]
    return matrix


@dataclass(frozen=True)
class PnsEncoders:
    """Categorical encoders and publisher rating statistics, fitted on training articles."""

    tag_vocab: tuple[str, ...]
    publisher_vocab: tuple[str, ...]
    publisher_mean_rating: Mapping[str, float]
    global_mean_rating: float

    @classmethod
    def fit(
        cls, articles: Sequence[NewsRecord], top_tags: int = 8, top_publishers: int = 8
    ) -> "PnsEncoders":
        if not articles:
            raise ValueError("cannot fit encoders on zero articles")
        tag_freq: Counter = Counter()
        publisher_freq: Counter = Counter()
        rating_sums: dict[str, list[float]] = {}
        for article in articles:
            tag_freq.update(article.tags)
            publisher_freq[article.publisher] += 1
            rating_sums.setdefault(article.publisher, []).append(float(article.review_rating))
        # Frequency-ranked vocabularies; ties broken alphabetically for determinism.
        tags = tuple(t for t, _ in sorted(tag_freq.items(), key=lambda kv: (-kv[1], kv[0]))[:top_tags])
        publishers = tuple(
            p for p, _ in sorted(publisher_freq.items(), key=lambda kv: (-kv[1], kv[0]))[:top_publishers]
        )
        means = {p: sum(r) / len(r) for p, r in rating_sums.items()}
        global_mean = sum(float(a.review_rating) for a in articles) / len(articles)
        return cls(
            tag_vocab=tags,
            publisher_vocab=publishers,
            publisher_mean_rating=means,
            global_mean_rating=global_mean,
        )

    @property
    def dim(self) -> int:
        # counts/lifetime block + tag multi-hot + publisher one-hot (each with
        # an "other" bucket) + publisher mean rating slot
        return 7 + (len(self.tag_vocab) + 1) + (len(self.publisher_vocab) + 1) + 1

    def to_dict(self) -> dict:
        return {
            "tag_vocab": list(self.tag_vocab),
            "publisher_vocab": list(self.publisher_vocab),
            "publisher_mean_rating": dict(sorted(self.publisher_mean_rating.items())),
            "global_mean_rating": self.global_mean_rating,
        }


#: Leading numeric columns of the news-statistics vector (standardized).
PNS_NUMERIC_PREFIX = 7


def build_pns_vector(
    article: NewsRecord,
    engagements: Sequence[Engagement],
    encoders: Optional[PnsEncoders],
) -> np.ndarray:
    """Publisher/news statistics vector over the visible engagements.

    Layout: [tweets, retweets, replies, unique hashtags, total likes,
    unique mentions, lifetime days] ++ tag multi-hot (+other) ++
    publisher one-hot (+other) ++ [publisher mean training rating].
    """
    if encoders is None:
        raise NotFittedError("news-statistics encoders have not been fitted")
    kinds = Counter(e.kind for e in engagements)
    hashtags = {tag for e in engagements for tag in e.hashtags}
    mentions = {uid for e in engagements for uid in e.mentioned_user_ids}
    total_likes = sum(e.like_count for e in engagements)

    tweet_times = [e.created_at for e in engagements if e.kind is EngagementKind.TWEET]
    if tweet_times and engagements:
        last = max(e.created_at for e in engagements)
        lifetime_days = max(
            0.0, (last - min(tweet_times)).total_seconds() / SECONDS_PER_DAY
        )
    else:
        lifetime_days = 0.0

    tag_block = np.zeros(len(encoders.tag_vocab) + 1, dtype=np.float64)
    for tag in article.tags:
        if tag in encoders.tag_vocab:
            tag_block[encoders.tag_vocab.index(tag)] = 1.0
        else:
            tag_block[-1] = 1.0

    publisher_block = np.zeros(len(encoders.publisher_vocab) + 1, dtype=np.float64)
    if article.publisher in encoders.publisher_vocab:
        publisher_block[encoders.publisher_vocab.index(article.publisher)] = 1.0
    else:
        publisher_block[-1] = 1.0

    mean_rating = encoders.publisher_mean_rating.get(
        article.publisher, encoders.global_mean_rating
    )

    head = np.array(
        [
            float(kinds.get(EngagementKind.TWEET, 0)),
            float(kinds.get(EngagementKind.RETWEET, 0)),
            float(kinds.get(EngagementKind.REPLY, 0)),
            float(len(hashtags)),
            float(total_likes),
            float(len(mentions)),
            lifetime_days,
        ],
        dtype=np.float64,
    )
    return np.concatenate([head, tag_block, publisher_block, [mean_rating]])


@dataclass
class ArticleFeatures:
    """Fixed-shape per-article tensors plus the label and valid-row counts."""

    news_id: str
    emb_tweets: np.ndarray
    emb_retweets: np.ndarray
    adj_tweets: np.ndarray
    adj_retweets: np.ndarray
    uam_tweets: np.ndarray
    uam_retweets: np.ndarray
    pns: np.ndarray
    label: int
    valid_tweet_users: int
    valid_retweet_users: int

    def validate(self) -> None:
        for name in ("emb_tweets", "emb_retweets", "adj_tweets", "adj_retweets",
                     "uam_tweets", "uam_retweets", "pns"):
            arr = getattr(self, name)
            if not np.all(np.isfinite(arr)):
                raise ValueError(f"{self.news_id}: non-finite values in {name}")
        for adj, valid in (
            (self.adj_tweets, self.valid_tweet_users),
            (self.adj_retweets, self.valid_retweet_users),
        ):
            if not np.array_equal(adj, adj.T):
                raise ValueError(f"{self.news_id}: connectivity matrix not symmetric")
            if adj.min() < 0.0 or adj.max() > 1.0:
                raise ValueError(f"{self.news_id}: connectivity scores outside [0, 1]")
            if np.any(np.diagonal(adj) != 0.0):
                raise ValueError(f"{self.news_id}: connectivity diagonal must be zero")
            if np.any(adj[valid:, :]) or np.any(adj[:, valid:]):
                raise ValueError(f"{self.news_id}: nonzero connectivity beyond valid users")
        for uam, valid in (
            (self.uam_tweets, self.valid_tweet_users),
            (self.uam_retweets, self.valid_retweet_users),
        ):
            if np.any(uam[valid:]):
                raise ValueError(f"{self.news_id}: nonzero activity rows beyond valid users")


def featurize_article(
    article: NewsRecord,
    corpus: Corpus,
    sizing: SizingParams,
    table: EmbeddingTable,
    encoders: Optional[PnsEncoders],
    cutoff_hours: Optional[float] = None,
) -> ArticleFeatures:
    """Assemble raw (unstandardized) features for one article.

    With a cutoff, every sub-step sees only engagements within the window.
    Raises IneligibleAtCutoffError when no tweets fall inside the window.
    """
    visible = windowed_engagements(corpus, article.news_id, cutoff_hours)
    tweets = [e for e in visible if e.kind is EngagementKind.TWEET]
    retweets = [e for e in visible if e.kind is EngagementKind.RETWEET]
    if not tweets:
        raise IneligibleAtCutoffError(article.news_id, cutoff_hours)

    tweet_user_ids = select_engaging_users(visible, EngagementKind.TWEET, sizing.tweet_users)
    retweet_user_ids = select_engaging_users(visible, EngagementKind.RETWEET, sizing.retweet_users)
    tweet_users = [corpus.users[uid] for uid in tweet_user_ids]
    retweet_users = [corpus.users[uid] for uid in retweet_user_ids]

    emb_t = embed_engagements([e.text for e in tweets], table, sizing.seq_len)
    if retweets:
        emb_r = embed_engagements([e.text for e in retweets], table, sizing.seq_len)
    else:
        emb_r = np.zeros((sizing.seq_len, table.dim), dtype=np.float64)

    features = ArticleFeatures(
        news_id=article.news_id,
        emb_tweets=emb_t,
        emb_retweets=emb_r,
        adj_tweets=build_connectivity_matrix(tweet_users, sizing.tweet_users),
        adj_retweets=build_connectivity_matrix(retweet_users, sizing.retweet_users),
        uam_tweets=build_user_activity_matrix(
            tweet_users, visible, EngagementKind.TWEET, sizing.tweet_users
        ),
        uam_retweets=build_user_activity_matrix(
            retweet_users, visible, EngagementKind.RETWEET, sizing.retweet_users
        ),
        pns=build_pns_vector(article, visible, encoders),
        label=article.label,
        valid_tweet_users=len(tweet_users),
        valid_retweet_users=len(retweet_users),
    )
    features.validate()
    return features
