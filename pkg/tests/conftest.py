"""Shared builders and fixtures for the test suite."""

from datetime import datetime, timedelta, timezone

import pytest

from sompsnet import (
    Corpus,
    Engagement,
    EngagementKind,
    NewsRecord,
    UserRecord,
    filter_eligible,
    generate_synthetic,
    label_from_rating,
    synthetic_embedding_table,
)
from sompsnet.ingest import build_corpus

BASE = datetime(2024, 1, 1, tzinfo=timezone.utc)


def make_user(
    user_id,
    followers=(),
    following=(),
    post_day_offsets=(),
    created_days_ago=None,
    **fields,
):
    """UserRecord with post timestamps given as day offsets from BASE."""
    created = BASE - timedelta(days=created_days_ago) if created_days_ago is not None else None
    return UserRecord(
        user_id=user_id,
        account_created_at=created,
        follower_ids=frozenset(followers),
        following_ids=frozenset(following),
        post_timestamps=tuple(
            sorted(BASE + timedelta(days=float(d)) for d in post_day_offsets)
        ),
        **fields,
    )


def make_engagement(engagement_id, news_id, kind, user_id, hours, text="", **fields):
    """Engagement at an hour offset from BASE."""
    return Engagement(
        engagement_id=engagement_id,
        news_id=news_id,
        kind=EngagementKind(kind),
        user_id=user_id,
        text=text,
        created_at=BASE + timedelta(hours=float(hours)),
        **fields,
    )


def make_article(news_id, rating=4, publisher="pub-a", tags=()):
    return NewsRecord(
        news_id=news_id,
        publisher=publisher,
        tags=tuple(tags),
        review_rating=rating,
        label=label_from_rating(rating),
    )


def make_corpus(news, engagements, users):
    return build_corpus(list(news), list(engagements), {u.user_id: u for u in users})


@pytest.fixture(scope="session")
def synth_corpus():
    return filter_eligible(generate_synthetic(40, fake_fraction=0.5, seed=13, signal_strength=1.0))


@pytest.fixture(scope="session")
def synth_table():
    return synthetic_embedding_table(dim=8, seed=13)
