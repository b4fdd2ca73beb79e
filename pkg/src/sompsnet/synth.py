"""Synthetic corpus generator with a tunable planted class signal.

Fake articles draw their engaging users from a bot-like population
(default profile flags, bursty young accounts, dense mutual follow
overlap), their engagement texts from a sensational template vocabulary
and their metadata from low-credibility publishers; real articles from
the organic counterparts.  ``signal_strength`` mixes the two populations:
0 makes the classes statistically indistinguishable, 1 separates them
fully.

An optional ``signal_window_hours=(lo, hi)`` delays every
class-distinguishing engagement into that window after the first tweet
and neutralizes article-level metadata signal, so classifiers restricted
to earlier observation windows see pure noise.
"""

from __future__ import annotations

from datetime import datetime, timedelta, timezone
from typing import Optional

import numpy as np

from .featurize import EmbeddingTable
from .ingest import (
    Corpus,
    Engagement,
    EngagementKind,
    NewsRecord,
    UserRecord,
    build_corpus,
    label_from_rating,
)

BASE_TIME = datetime(2024, 1, 1, tzinfo=timezone.utc)

SENSATIONAL_WORDS = (
    "shocking", "miracle", "cure", "exposed", "secret", "banned",
    "deadly", "hoax", "truth", "urgent", "warning", "coverup",
)
MEASURED_WORDS = (
    "study", "finds", "researchers", "evidence", "trial", "patients",
    "results", "journal", "analysis", "data", "modest", "review",
)
FILLER_WORDS = (
    "the", "a", "of", "in", "for", "and", "new", "health",
    "news", "report", "about", "this",
)
SENSATIONAL_HASHTAGS = ("#truthbomb", "#wakeup", "#bigpharma", "#naturalcure")
MEASURED_HASHTAGS = ("#health", "#science", "#research", "#medicine")

LOW_CRED_PUBLISHERS = (
    "viralwellness", "healthtruthnow", "miraclereport", "naturalnewsflash",
    "wellnessleaks", "curewatch",
)
HIGH_CRED_PUBLISHERS = (
    "medjournalwire", "healthdeskdaily", "clinicalreview", "sciencehealthnews",
    "publichealthpost", "medicalmonitor",
)
CLICKBAIT_TAGS = ("detox", "superfood", "bigpharma", "miracle", "natural")
SOBER_TAGS = ("cardiology", "oncology", "nutrition", "alzheimers", "obstetrics")

_FOLLOWER_HUBS = tuple(f"fhub{i:03d}" for i in range(40))
_FOLLOWING_HUBS = tuple(f"ghub{i:03d}" for i in range(40))


def template_vocabulary() -> tuple[str, ...]:
    """Every word the generator can emit in engagement texts."""
    return tuple(sorted(set(SENSATIONAL_WORDS + MEASURED_WORDS + FILLER_WORDS)))


def synthetic_embedding_table(dim: int = 16, seed: int = 0) -> EmbeddingTable:
    """Embedding table covering the generator vocabulary (hash-seeded vectors)."""
    return EmbeddingTable.from_tokens(template_vocabulary(), dim=dim, seed=seed)


def _bot_user(rng: np.random.Generator, user_id: str) -> UserRecord:
    age_days = float(rng.uniform(2.0, 10.0))
    created = BASE_TIME - timedelta(days=age_days)
    span_days = float(rng.uniform(1.5, min(8.0, age_days)))
    rate = float(rng.uniform(25.0, 60.0))
    count = max(2, int(rate * span_days))
    offsets = np.sort(rng.uniform(0.0, span_days, size=count))
    posts = tuple(created + timedelta(days=float(o)) for o in offsets)
    followers = frozenset(
        rng.choice(_FOLLOWER_HUBS, size=int(rng.integers(18, 29)), replace=False)
    )
    following = frozenset(
        rng.choice(_FOLLOWING_HUBS, size=int(rng.integers(18, 29)), replace=False)
    )
    return UserRecord(
        user_id=user_id,
        protected=bool(rng.random() < 0.02),
        verified=False,
        geo_enabled=bool(rng.random() < 0.05),
        default_profile_image=bool(rng.random() < 0.85),
        default_profile_ui=bool(rng.random() < 0.9),
        description_word_count=int(rng.integers(0, 4)),
        username_word_count=int(rng.integers(1, 3)),
        favourites_count=int(rng.integers(0, 50)),
        friends_count=int(rng.integers(500, 3000)),
        followers_count=int(rng.integers(0, 50)),
        listed_count=int(rng.integers(0, 3)),
        account_created_at=created,
        follower_ids=followers,
        following_ids=following,
        post_timestamps=posts,
    )


def _organic_user(rng: np.random.Generator, user_id: str) -> UserRecord:
    age_days = float(rng.uniform(300.0, 3000.0))
    created = BASE_TIME - timedelta(days=age_days)
    rate = float(rng.uniform(0.2, 3.0))
    count = max(1, int(rate * 30.0))
    offsets = np.sort(rng.uniform(0.0, 30.0, size=count))
    posts = tuple(BASE_TIME - timedelta(days=30.0) + timedelta(days=float(o)) for o in offsets)
    followers = frozenset(
        f"u{int(i)}" for i in rng.integers(0, 200000, size=int(rng.integers(10, 41)))
    )
    following = frozenset(
        f"u{int(i)}" for i in rng.integers(0, 200000, size=int(rng.integers(10, 41)))
    )
    return UserRecord(
        user_id=user_id,
        protected=bool(rng.random() < 0.02),
        verified=bool(rng.random() < 0.1),
        geo_enabled=bool(rng.random() < 0.4),
        default_profile_image=bool(rng.random() < 0.05),
        default_profile_ui=bool(rng.random() < 0.3),
        description_word_count=int(rng.integers(3, 31)),
        username_word_count=int(rng.integers(1, 4)),
        favourites_count=int(rng.integers(100, 20000)),
        friends_count=int(rng.integers(50, 1000)),
        followers_count=int(rng.integers(50, 5000)),
        listed_count=int(rng.integers(0, 50)),
        account_created_at=created,
        follower_ids=followers,
        following_ids=following,
        post_timestamps=posts,
    )


def _make_text(rng: np.random.Generator, is_fake: bool, s_eff: float) -> tuple[str, tuple[str, ...]]:
    aligned = rng.random() < 0.5 + 0.5 * s_eff
    sensational = is_fake if aligned else not is_fake
    vocab = SENSATIONAL_WORDS if sensational else MEASURED_WORDS
    hashtag_pool = SENSATIONAL_HASHTAGS if sensational else MEASURED_HASHTAGS
    length = int(rng.integers(5, 12))
    words = []
    for _ in range(length):
        pool = vocab if rng.random() < 0.65 else FILLER_WORDS
        word = str(rng.choice(pool))
        if rng.random() < 0.15:
            word += "!"
        words.append(word)
    if rng.random() < 0.15:
        words.append("https://t.co/" + "".join(rng.choice(list("abcdefgh"), size=6)))
    hashtags = (str(rng.choice(hashtag_pool)),) if rng.random() < 0.5 else ()
    return " ".join(words), hashtags


def generate_synthetic(
    n_articles: int,
    fake_fraction: float = 0.5,
    seed: int = 0,
    signal_strength: float = 1.0,
    *,
    signal_window_hours: Optional[tuple[float, float]] = None,
) -> Corpus:
    """Deterministic synthetic corpus with exactly floor(fake_fraction * n) fake articles.

    Every article has at least one tweet and one retweet.  With
    ``signal_window_hours`` set, class-distinguishing engagements arrive
    only inside that window and publishers/tags carry no class signal.
    """
    if n_articles < 1:
        raise ValueError("n_articles must be >= 1")
    if not 0.0 <= fake_fraction <= 1.0:
        raise ValueError("fake_fraction must be in [0, 1]")
    if not 0.0 <= signal_strength <= 1.0:
        raise ValueError("signal_strength must be in [0, 1]")
    if signal_window_hours is not None:
        lo, hi = signal_window_hours
        if not 0.0 <= lo < hi:
            raise ValueError("signal_window_hours must satisfy 0 <= lo < hi")

    rng = np.random.default_rng(seed)
    s = signal_strength
    windowed = signal_window_hours is not None

    n_fake = int(np.floor(fake_fraction * n_articles))
    fake_positions = set(rng.permutation(n_articles)[:n_fake].tolist())

    n_bots = max(40, int(0.8 * n_articles))
    n_orgs = max(60, int(1.2 * n_articles))
    bots = [_bot_user(rng, f"bot{i:05d}") for i in range(n_bots)]
    orgs = [_organic_user(rng, f"org{i:05d}") for i in range(n_orgs)]

    def pick_user(is_fake: bool, s_eff: float) -> UserRecord:
        p_bot = 0.5 + 0.5 * s_eff if is_fake else 0.5 - 0.5 * s_eff
        if rng.random() < p_bot:
            return bots[int(rng.integers(0, n_bots))]
        return orgs[int(rng.integers(0, n_orgs))]

    news: list[NewsRecord] = []
    engagements: list[Engagement] = []
    engaged_users: dict[str, UserRecord] = {}
    next_engagement = 0

    for idx in range(n_articles):
        is_fake = idx in fake_positions
        news_id = f"n{idx:05d}"

        if windowed:
            publisher = str(rng.choice(LOW_CRED_PUBLISHERS + HIGH_CRED_PUBLISHERS))
            tag_pool = CLICKBAIT_TAGS + SOBER_TAGS
            tags = tuple(
                sorted(set(rng.choice(tag_pool, size=int(rng.integers(1, 4))).tolist()))
            )
        else:
            aligned = rng.random() < 0.5 + 0.5 * s
            low_cred = is_fake if aligned else not is_fake
            publisher = str(rng.choice(LOW_CRED_PUBLISHERS if low_cred else HIGH_CRED_PUBLISHERS))
            tag_pool = CLICKBAIT_TAGS if low_cred else SOBER_TAGS
            tags = tuple(
                sorted(set(rng.choice(tag_pool, size=int(rng.integers(1, 4))).tolist()))
            )
        rating = int(rng.integers(0, 3)) if is_fake else int(rng.integers(3, 6))

        start = BASE_TIME + timedelta(days=float(rng.uniform(0.0, 60.0)))
        if windowed:
            lifetime = float(rng.uniform(signal_window_hours[1] + 6.0, 72.0))
        else:
            lifetime = float(rng.uniform(24.0, 72.0))

        base_tweets = int(rng.integers(4, 10))
        base_retweets = int(rng.integers(2, 6))
        base_replies = int(rng.integers(0, 3))
        if is_fake:
            extra_tweets = int(round(s * rng.uniform(5.0, 10.0)))
            extra_retweets = int(round(s * rng.uniform(3.0, 6.0)))
        else:
            extra_tweets = int(round(s * rng.uniform(0.0, 2.0)))
            extra_retweets = int(round(s * rng.uniform(0.0, 1.0)))

        base_signal = 0.0 if windowed else s
        specs: list[tuple[EngagementKind, float, float]] = []
        for j in range(base_tweets):
            offset = 0.0 if j == 0 else float(rng.uniform(0.0, lifetime))
            specs.append((EngagementKind.TWEET, offset, base_signal))
        for _ in range(base_retweets):
            specs.append((EngagementKind.RETWEET, float(rng.uniform(0.05, lifetime)), base_signal))
        for _ in range(base_replies):
            specs.append((EngagementKind.REPLY, float(rng.uniform(0.0, lifetime)), 0.0))
        for kind, count in ((EngagementKind.TWEET, extra_tweets), (EngagementKind.RETWEET, extra_retweets)):
            for _ in range(count):
                if windowed:
                    offset = float(rng.uniform(signal_window_hours[0], signal_window_hours[1]))
                else:
                    offset = float(rng.uniform(0.05, lifetime))
                specs.append((kind, offset, s))

        for kind, offset, s_eff in specs:
            user = pick_user(is_fake, s_eff)
            engaged_users[user.user_id] = user
            text, hashtags = _make_text(rng, is_fake, s_eff)
            if kind is EngagementKind.REPLY:
                text, hashtags = _make_text(rng, is_fake, 0.0)
            mentions = (
                (f"u{int(rng.integers(0, 200000))}",) if rng.random() < 0.2 else ()
            )
            likes = int(rng.poisson(0.4 if user.user_id.startswith("bot") else 1.5))
            engagements.append(
                Engagement(
                    engagement_id=f"e{next_engagement:07d}",
                    news_id=news_id,
                    kind=kind,
                    user_id=user.user_id,
                    text=text,
                    created_at=start + timedelta(hours=offset),
                    like_count=likes,
                    hashtags=hashtags,
                    mentioned_user_ids=mentions,
                )
            )
            next_engagement += 1

        news.append(
            NewsRecord(
                news_id=news_id,
                publisher=publisher,
                tags=tags,
                review_rating=rating,
                label=label_from_rating(rating),
            )
        )

    users = {uid: engaged_users[uid] for uid in sorted(engaged_users)}
    return build_corpus(news, engagements, users)
