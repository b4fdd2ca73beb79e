"""Corpus ingestion: parse, validate and label line-delimited news/engagement/user files.

The on-disk format is JSON Lines: one object per line in three files
(news.jsonl, engagements.jsonl, users.jsonl).  Loading derives article
labels from review ratings, time-sorts engagement lists, enforces
referential integrity and records lossy-data repairs in a per-corpus
quality report.  The returned ``Corpus`` is immutable (frozen records,
tuple-valued collections) and safe to share across threads.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field, replace
from datetime import datetime, timezone
from enum import Enum
from typing import Iterable, Mapping, Optional, Sequence

from .errors import ParseError, ValidationError

FAKE = 0
REAL = 1

#: Ratings below this value mark an article as fake.
FAKE_RATING_THRESHOLD = 3

MAX_TEXT_CHARS = 280


class EngagementKind(str, Enum):
    TWEET = "tweet"
    RETWEET = "retweet"
    REPLY = "reply"


def label_from_rating(review_rating: int) -> int:
    """Binary label for an article: 0 (fake) iff its review rating is below 3."""
    return FAKE if review_rating < FAKE_RATING_THRESHOLD else REAL


def parse_timestamp(raw: str) -> datetime:
    """Parse an ISO-8601 timestamp, normalising to UTC (naive values assumed UTC)."""
    text = raw.replace("Z", "+00:00") if raw.endswith("Z") else raw
    stamp = datetime.fromisoformat(text)
    if stamp.tzinfo is None:
        return stamp.replace(tzinfo=timezone.utc)
    return stamp.astimezone(timezone.utc)


def format_timestamp(stamp: datetime) -> str:
    """Canonical ISO-8601 UTC rendering with a trailing Z."""
    return stamp.astimezone(timezone.utc).isoformat().replace("+00:00", "Z")


@dataclass(frozen=True)
class NewsRecord:
    """One news article with its review-derived label and lifetime bounds."""

    news_id: str
    publisher: str
    tags: tuple[str, ...]
    review_rating: int
    label: int
    first_tweet_time: Optional[datetime] = None
    first_retweet_time: Optional[datetime] = None


@dataclass(frozen=True)
class Engagement:
    """One tweet, retweet or reply posted about an article."""

    engagement_id: str
    news_id: str
    kind: EngagementKind
    user_id: str
    text: str
    created_at: datetime
    like_count: int = 0
    hashtags: tuple[str, ...] = ()
    mentioned_user_ids: tuple[str, ...] = ()


@dataclass(frozen=True)
class UserRecord:
    """Profile fields, follow network and historical posting activity of one user."""

    user_id: str
    protected: bool = False
    verified: bool = False
    geo_enabled: bool = False
    default_profile_image: bool = False
    default_profile_ui: bool = False
    description_word_count: int = 0
    username_word_count: int = 0
    favourites_count: int = 0
    friends_count: int = 0
    followers_count: int = 0
    listed_count: int = 0
    account_created_at: Optional[datetime] = None
    follower_ids: frozenset[str] = frozenset()
    following_ids: frozenset[str] = frozenset()
    post_timestamps: tuple[datetime, ...] = ()


@dataclass
class DataQualityReport:
    """Lossy-data repairs and anomalies observed while building a corpus."""

    defaulted_fields: Counter = field(default_factory=Counter)
    truncated_texts: int = 0
    retweet_before_tweet: list[str] = field(default_factory=list)

    def merge_parse_stats(self, other: "DataQualityReport") -> None:
        self.defaulted_fields.update(other.defaulted_fields)
        self.truncated_texts += other.truncated_texts

    def to_dict(self) -> dict:
        return {
            "defaulted_fields": dict(sorted(self.defaulted_fields.items())),
            "truncated_texts": self.truncated_texts,
            "retweet_before_tweet": sorted(self.retweet_before_tweet),
        }


@dataclass(frozen=True)
class Corpus:
    """Validated, immutable bundle of articles, engagements and users."""

    news: tuple[NewsRecord, ...]
    engagements: Mapping[str, tuple[Engagement, ...]]
    users: Mapping[str, UserRecord]
    quality: DataQualityReport = field(default_factory=DataQualityReport, compare=False)

    def __len__(self) -> int:
        return len(self.news)

    @property
    def news_ids(self) -> tuple[str, ...]:
        return tuple(article.news_id for article in self.news)

    def article(self, news_id: str) -> NewsRecord:
        return self._by_id[news_id]

    @property
    def _by_id(self) -> dict[str, NewsRecord]:
        # Tiny corpora keep this cheap; rebuilt on demand to stay frozen-safe.
        return {article.news_id: article for article in self.news}

    def engagements_for(self, news_id: str) -> tuple[Engagement, ...]:
        return self.engagements.get(news_id, ())

    def restrict(self, news_ids: Iterable[str]) -> "Corpus":
        """Sub-corpus containing only the given articles (users pruned)."""
        keep = set(news_ids)
        news = tuple(a for a in self.news if a.news_id in keep)
        engagements = {a.news_id: self.engagements.get(a.news_id, ()) for a in news}
        referenced = {e.user_id for group in engagements.values() for e in group}
        users = {uid: self.users[uid] for uid in sorted(referenced)}
        return Corpus(news=news, engagements=engagements, users=users, quality=self.quality)


def build_corpus(
    news: Sequence[NewsRecord],
    engagements: Iterable[Engagement],
    users: Mapping[str, UserRecord],
    quality: Optional[DataQualityReport] = None,
) -> Corpus:
    """Assemble and validate a Corpus from parsed records.

    Derives first-tweet/first-retweet times, sorts engagement lists by
    (created_at, engagement_id) and enforces uniqueness plus referential
    integrity.  Shared by the file loader and the synthetic generator so
    both produce identically-validated corpora.
    """
    quality = quality or DataQualityReport()

    seen: set[str] = set()
    duplicates: set[str] = set()
    for article in news:
        if article.news_id in seen:
            duplicates.add(article.news_id)
        seen.add(article.news_id)
    if duplicates:
        raise ValidationError(f"duplicate news_id values: {', '.join(sorted(duplicates))}")

    grouped: dict[str, list[Engagement]] = {article.news_id: [] for article in news}
    unknown_news: set[str] = set()
    dangling_users: set[str] = set()
    for engagement in engagements:
        if engagement.news_id not in grouped:
            unknown_news.add(engagement.news_id)
            continue
        if engagement.user_id not in users:
            dangling_users.add(engagement.user_id)
            continue
        grouped[engagement.news_id].append(engagement)
    if unknown_news:
        raise ValidationError(
            f"engagements reference unknown news_id values: {', '.join(sorted(unknown_news))}"
        )
    if dangling_users:
        raise ValidationError(
            f"engagements reference unknown user_id values: {', '.join(sorted(dangling_users))}"
        )

    sorted_engagements: dict[str, tuple[Engagement, ...]] = {}
    finished_news: list[NewsRecord] = []
    for article in news:
        group = tuple(
            sorted(grouped[article.news_id], key=lambda e: (e.created_at, e.engagement_id))
        )
        sorted_engagements[article.news_id] = group
        tweet_times = [e.created_at for e in group if e.kind is EngagementKind.TWEET]
        retweet_times = [e.created_at for e in group if e.kind is EngagementKind.RETWEET]
        first_tweet = min(tweet_times) if tweet_times else None
        first_retweet = min(retweet_times) if retweet_times else None
        if first_tweet is not None and first_retweet is not None and first_retweet < first_tweet:
            quality.retweet_before_tweet.append(article.news_id)
        finished_news.append(
            replace(article, first_tweet_time=first_tweet, first_retweet_time=first_retweet)
        )

    return Corpus(
        news=tuple(finished_news),
        engagements=sorted_engagements,
        users=dict(users),
        quality=quality,
    )


def _iter_jsonl(path):
    with open(path, "r", encoding="utf-8") as handle:
        for line_no, line in enumerate(handle, start=1):
            line = line.strip()
            if not line:
                continue
            try:
                obj = json.loads(line)
            except json.JSONDecodeError as exc:
                raise ParseError(path, line_no, "<line>", f"invalid JSON: {exc}") from exc
            if not isinstance(obj, dict):
                raise ParseError(path, line_no, "<line>", "expected a JSON object")
            yield line_no, obj


def _require(obj, key, path, line_no):
    if key not in obj or obj[key] is None:
        raise ParseError(path, line_no, key, "required field missing")
    return obj[key]


def _as_str(value, key, path, line_no) -> str:
    if not isinstance(value, str):
        raise ParseError(path, line_no, key, f"expected string, got {type(value).__name__}")
    return value


def _as_int(value, key, path, line_no, minimum=None) -> int:
    if isinstance(value, bool) or not isinstance(value, int):
        raise ParseError(path, line_no, key, f"expected integer, got {type(value).__name__}")
    if minimum is not None and value < minimum:
        raise ParseError(path, line_no, key, f"must be >= {minimum}, got {value}")
    return value


def _as_bool(value, key, path, line_no) -> bool:
    if not isinstance(value, bool):
        raise ParseError(path, line_no, key, f"expected boolean, got {type(value).__name__}")
    return value


def _as_str_list(value, key, path, line_no) -> tuple[str, ...]:
    if not isinstance(value, list) or not all(isinstance(v, str) for v in value):
        raise ParseError(path, line_no, key, "expected a list of strings")
    return tuple(value)


def _parse_stamp(value, key, path, line_no) -> datetime:
    text = _as_str(value, key, path, line_no)
    try:
        return parse_timestamp(text)
    except ValueError as exc:
        raise ParseError(path, line_no, key, f"invalid timestamp {text!r}") from exc


def _word_count(text: str) -> int:
    return len(text.split())


def _load_news(path) -> list[NewsRecord]:
    records = []
    for line_no, obj in _iter_jsonl(path):
        news_id = _as_str(_require(obj, "news_id", path, line_no), "news_id", path, line_no)
        publisher = _as_str(obj.get("publisher", ""), "publisher", path, line_no)
        tags = _as_str_list(obj.get("tags", []), "tags", path, line_no)
        rating = _as_int(
            _require(obj, "review_rating", path, line_no), "review_rating", path, line_no
        )
        if not 0 <= rating <= 5:
            raise ParseError(path, line_no, "review_rating", f"must be in 0..5, got {rating}")
        records.append(
            NewsRecord(
                news_id=news_id,
                publisher=publisher,
                tags=tags,
                review_rating=rating,
                label=label_from_rating(rating),
            )
        )
    return records


def _load_engagements(path, quality: DataQualityReport) -> list[Engagement]:
    records = []
    for line_no, obj in _iter_jsonl(path):
        kind_raw = _as_str(_require(obj, "kind", path, line_no), "kind", path, line_no)
        try:
            kind = EngagementKind(kind_raw)
        except ValueError:
            raise ParseError(
                path, line_no, "kind", f"must be one of tweet/retweet/reply, got {kind_raw!r}"
            ) from None
        text = _as_str(obj.get("text", ""), "text", path, line_no)
        if len(text) > MAX_TEXT_CHARS:
            text = text[:MAX_TEXT_CHARS]
            quality.truncated_texts += 1
        records.append(
            Engagement(
                engagement_id=_as_str(
                    _require(obj, "engagement_id", path, line_no), "engagement_id", path, line_no
                ),
                news_id=_as_str(_require(obj, "news_id", path, line_no), "news_id", path, line_no),
                kind=kind,
                user_id=_as_str(_require(obj, "user_id", path, line_no), "user_id", path, line_no),
                text=text,
                created_at=_parse_stamp(
                    _require(obj, "created_at", path, line_no), "created_at", path, line_no
                ),
                like_count=_as_int(obj.get("like_count", 0), "like_count", path, line_no, minimum=0),
                hashtags=_as_str_list(obj.get("hashtags", []), "hashtags", path, line_no),
                mentioned_user_ids=_as_str_list(obj.get("mentions", []), "mentions", path, line_no),
            )
        )
    return records


_USER_FLAGS = ("protected", "verified", "geo_enabled", "default_profile_image", "default_profile_ui")
_USER_COUNTS = ("favourites_count", "friends_count", "followers_count", "listed_count")


def _load_users(path, quality: DataQualityReport) -> dict[str, UserRecord]:
    users: dict[str, UserRecord] = {}
    for line_no, obj in _iter_jsonl(path):
        user_id = _as_str(_require(obj, "user_id", path, line_no), "user_id", path, line_no)

        flags = {}
        for key in _USER_FLAGS:
            if key in obj and obj[key] is not None:
                flags[key] = _as_bool(obj[key], key, path, line_no)
            else:
                flags[key] = False
                quality.defaulted_fields[f"users.{key}"] += 1

        counts = {}
        for key in _USER_COUNTS:
            if key in obj and obj[key] is not None:
                counts[key] = _as_int(obj[key], key, path, line_no, minimum=0)
            else:
                counts[key] = 0
                quality.defaulted_fields[f"users.{key}"] += 1

        if "account_created_at" in obj and obj["account_created_at"] is not None:
            created = _parse_stamp(obj["account_created_at"], "account_created_at", path, line_no)
        else:
            created = None
            quality.defaulted_fields["users.account_created_at"] += 1

        if "followers" in obj and obj["followers"] is not None:
            followers = frozenset(_as_str_list(obj["followers"], "followers", path, line_no)) - {user_id}
        else:
            followers = frozenset()
            quality.defaulted_fields["users.followers"] += 1
        if "following" in obj and obj["following"] is not None:
            following = frozenset(_as_str_list(obj["following"], "following", path, line_no)) - {user_id}
        else:
            following = frozenset()
            quality.defaulted_fields["users.following"] += 1

        if "post_timestamps" in obj and obj["post_timestamps"] is not None:
            raw_posts = obj["post_timestamps"]
            if not isinstance(raw_posts, list):
                raise ParseError(path, line_no, "post_timestamps", "expected a list of timestamps")
            posts = tuple(
                sorted(_parse_stamp(v, "post_timestamps", path, line_no) for v in raw_posts)
            )
        else:
            posts = ()
            quality.defaulted_fields["users.post_timestamps"] += 1

        users[user_id] = UserRecord(
            user_id=user_id,
            protected=flags["protected"],
            verified=flags["verified"],
            geo_enabled=flags["geo_enabled"],
            default_profile_image=flags["default_profile_image"],
            default_profile_ui=flags["default_profile_ui"],
            description_word_count=_word_count(_as_str(obj.get("description", ""), "description", path, line_no)),
            username_word_count=_word_count(_as_str(obj.get("username", ""), "username", path, line_no)),
            favourites_count=counts["favourites_count"],
            friends_count=counts["friends_count"],
            followers_count=counts["followers_count"],
            listed_count=counts["listed_count"],
            account_created_at=created,
            follower_ids=followers,
            following_ids=following,
            post_timestamps=posts,
        )
    return users


def load_corpus(news_path, engagements_path, users_path) -> Corpus:
    """Load and validate a corpus from three JSON Lines files."""
    quality = DataQualityReport()
    news = _load_news(news_path)
    users = _load_users(users_path, quality)
    engagements = _load_engagements(engagements_path, quality)
    return build_corpus(news, engagements, users, quality)


def filter_eligible(corpus: Corpus) -> Corpus:
    """Retain only articles with at least one tweet and one retweet.

    The users map is pruned to users referenced by surviving engagements.
    Idempotent: filtering a filtered corpus is a no-op.
    """
    keep = []
    for article in corpus.news:
        group = corpus.engagements_for(article.news_id)
        has_tweet = any(e.kind is EngagementKind.TWEET for e in group)
        has_retweet = any(e.kind is EngagementKind.RETWEET for e in group)
        if has_tweet and has_retweet:
            keep.append(article.news_id)
    return corpus.restrict(keep)
