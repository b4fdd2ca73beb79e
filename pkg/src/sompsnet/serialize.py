"""Artifact serialization.

Two container formats, both byte-deterministic for identical inputs:

* Tensor archive (features.bin, model.ckpt): magic ``SNTA``, a little-endian
  u32 format version, a u64 header length, a UTF-8 JSON header holding
  arbitrary metadata plus a tensor manifest (name, dtype, shape, offset,
  nbytes, sorted by name), then the raw little-endian C-order payloads.
* Corpus artifact (corpus.bin): canonical JSON (sorted keys, compact
  separators) with a format version.

Also exports a corpus back to the three JSON Lines files.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Mapping

import numpy as np

from .errors import FormatError
from .featurize import ArticleFeatures
from .ingest import (
    Corpus,
    DataQualityReport,
    Engagement,
    EngagementKind,
    NewsRecord,
    UserRecord,
    build_corpus,
    format_timestamp,
    label_from_rating,
    parse_timestamp,
)

TENSOR_MAGIC = b"SNTA"
TENSOR_FORMAT_VERSION = 1
CORPUS_FORMAT_VERSION = 1
REPORT_FORMAT_VERSION = 1


def dump_json(obj) -> str:
    """Canonical JSON rendering: sorted keys, compact separators, newline."""
    return json.dumps(obj, sort_keys=True, separators=(",", ":")) + "\n"


def write_json(path, obj) -> None:
    Path(path).write_text(dump_json(obj), encoding="utf-8")


def read_json(path) -> dict:
    return json.loads(Path(path).read_text(encoding="utf-8"))


def write_tensor_archive(path, meta: dict, tensors: Mapping[str, np.ndarray]) -> None:
    manifest = []
    payload = bytearray()
    for name in sorted(tensors):
        arr = np.ascontiguousarray(tensors[name])
        if arr.dtype.byteorder == ">":
            arr = arr.astype(arr.dtype.newbyteorder("<"))
        raw = arr.tobytes()
        manifest.append(
            {
                "name": name,
                "dtype": arr.dtype.str.lstrip("<=|"),
                "shape": list(arr.shape),
                "offset": len(payload),
                "nbytes": len(raw),
            }
        )
        payload.extend(raw)
    header = dump_json({"meta": meta, "tensors": manifest}).encode("utf-8")
    with open(path, "wb") as handle:
        handle.write(TENSOR_MAGIC)
        handle.write(TENSOR_FORMAT_VERSION.to_bytes(4, "little"))
        handle.write(len(header).to_bytes(8, "little"))
        handle.write(header)
        handle.write(bytes(payload))


def read_tensor_archive(path) -> tuple[dict, dict[str, np.ndarray]]:
    with open(path, "rb") as handle:
        magic = handle.read(4)
        if magic != TENSOR_MAGIC:
            raise FormatError(f"{path}: not a tensor archive (magic {magic!r})")
        version = int.from_bytes(handle.read(4), "little")
        if version != TENSOR_FORMAT_VERSION:
            raise FormatError(f"{path}: unsupported tensor archive version {version}")
        header_len = int.from_bytes(handle.read(8), "little")
        header = json.loads(handle.read(header_len).decode("utf-8"))
        payload = handle.read()
    tensors = {}
    for entry in header["tensors"]:
        raw = payload[entry["offset"] : entry["offset"] + entry["nbytes"]]
        arr = np.frombuffer(raw, dtype=np.dtype(entry["dtype"]).newbyteorder("<"))
        tensors[entry["name"]] = arr.reshape(entry["shape"]).copy()
    return header["meta"], tensors


# ---------------------------------------------------------------------------
# Corpus artifact
# ---------------------------------------------------------------------------


def _news_to_dict(article: NewsRecord) -> dict:
    return {
        "news_id": article.news_id,
        "publisher": article.publisher,
        "tags": list(article.tags),
        "review_rating": article.review_rating,
    }


def _engagement_to_dict(e: Engagement) -> dict:
    return {
        "engagement_id": e.engagement_id,
        "news_id": e.news_id,
        "kind": e.kind.value,
        "user_id": e.user_id,
        "text": e.text,
        "created_at": format_timestamp(e.created_at),
        "like_count": e.like_count,
        "hashtags": list(e.hashtags),
        "mentions": list(e.mentioned_user_ids),
    }


def _user_to_dict(u: UserRecord) -> dict:
    return {
        "user_id": u.user_id,
        "protected": u.protected,
        "verified": u.verified,
        "geo_enabled": u.geo_enabled,
        "default_profile_image": u.default_profile_image,
        "default_profile_ui": u.default_profile_ui,
        "description_word_count": u.description_word_count,
        "username_word_count": u.username_word_count,
        "favourites_count": u.favourites_count,
        "friends_count": u.friends_count,
        "followers_count": u.followers_count,
        "listed_count": u.listed_count,
        "account_created_at": (
            format_timestamp(u.account_created_at) if u.account_created_at else None
        ),
        "followers": sorted(u.follower_ids),
        "following": sorted(u.following_ids),
        "post_timestamps": [format_timestamp(t) for t in u.post_timestamps],
    }


def _user_from_dict(obj: dict) -> UserRecord:
    return UserRecord(
        user_id=obj["user_id"],
        protected=obj["protected"],
        verified=obj["verified"],
        geo_enabled=obj["geo_enabled"],
        default_profile_image=obj["default_profile_image"],
        default_profile_ui=obj["default_profile_ui"],
        description_word_count=obj["description_word_count"],
        username_word_count=obj["username_word_count"],
        favourites_count=obj["favourites_count"],
        friends_count=obj["friends_count"],
        followers_count=obj["followers_count"],
        listed_count=obj["listed_count"],
        account_created_at=(
            parse_timestamp(obj["account_created_at"]) if obj["account_created_at"] else None
        ),
        follower_ids=frozenset(obj["followers"]),
        following_ids=frozenset(obj["following"]),
        post_timestamps=tuple(parse_timestamp(t) for t in obj["post_timestamps"]),
    )


def save_corpus(path, corpus: Corpus) -> None:
    doc = {
        "kind": "corpus",
        "format_version": CORPUS_FORMAT_VERSION,
        "news": [_news_to_dict(a) for a in corpus.news],
        "engagements": [
            _engagement_to_dict(e)
            for news_id in corpus.news_ids
            for e in corpus.engagements_for(news_id)
        ],
        "users": [_user_to_dict(corpus.users[uid]) for uid in sorted(corpus.users)],
        "quality": corpus.quality.to_dict(),
    }
    write_json(path, doc)


def load_corpus_artifact(path) -> Corpus:
    doc = read_json(path)
    if doc.get("kind") != "corpus":
        raise FormatError(f"{path}: not a corpus artifact")
    if doc.get("format_version") != CORPUS_FORMAT_VERSION:
        raise FormatError(f"{path}: unsupported corpus version {doc.get('format_version')}")
    news = [
        NewsRecord(
            news_id=o["news_id"],
            publisher=o["publisher"],
            tags=tuple(o["tags"]),
            review_rating=o["review_rating"],
            label=label_from_rating(o["review_rating"]),
        )
        for o in doc["news"]
    ]
    engagements = [
        Engagement(
            engagement_id=o["engagement_id"],
            news_id=o["news_id"],
            kind=EngagementKind(o["kind"]),
            user_id=o["user_id"],
            text=o["text"],
            created_at=parse_timestamp(o["created_at"]),
            like_count=o["like_count"],
            hashtags=tuple(o["hashtags"]),
            mentioned_user_ids=tuple(o["mentions"]),
        )
        for o in doc["engagements"]
    ]
    users = {o["user_id"]: _user_from_dict(o) for o in doc["users"]}
    quality = DataQualityReport()
    quality.defaulted_fields.update(doc["quality"]["defaulted_fields"])
    quality.truncated_texts = doc["quality"]["truncated_texts"]
    quality.retweet_before_tweet = list(doc["quality"]["retweet_before_tweet"])
    return build_corpus(news, engagements, users, quality)


def write_corpus_jsonl(corpus: Corpus, out_dir) -> dict[str, Path]:
    """Export a corpus to news/engagements/users JSON Lines files."""
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    paths = {
        "news": out_dir / "news.jsonl",
        "engagements": out_dir / "engagements.jsonl",
        "users": out_dir / "users.jsonl",
    }
    with open(paths["news"], "w", encoding="utf-8") as handle:
        for article in corpus.news:
            handle.write(json.dumps(_news_to_dict(article), sort_keys=True) + "\n")
    with open(paths["engagements"], "w", encoding="utf-8") as handle:
        for news_id in corpus.news_ids:
            for e in corpus.engagements_for(news_id):
                handle.write(json.dumps(_engagement_to_dict(e), sort_keys=True) + "\n")
    with open(paths["users"], "w", encoding="utf-8") as handle:
        for uid in sorted(corpus.users):
            obj = _user_to_dict(corpus.users[uid])
            # jsonl schema carries raw text; word counts are derived on load
            obj["description"] = " ".join(["x"] * obj.pop("description_word_count"))
            obj["username"] = " ".join(["u"] * obj.pop("username_word_count"))
            handle.write(json.dumps(obj, sort_keys=True) + "\n")
    return paths


# ---------------------------------------------------------------------------
# Feature and checkpoint archives
# ---------------------------------------------------------------------------

_FEATURE_TENSORS = (
    "emb_tweets", "emb_retweets", "adj_tweets", "adj_retweets",
    "uam_tweets", "uam_retweets", "pns",
)


def save_features(path, meta: dict, features: Mapping[str, ArticleFeatures]) -> None:
    tensors: dict[str, np.ndarray] = {}
    articles = {}
    for news_id in sorted(features):
        feat = features[news_id]
        for name in _FEATURE_TENSORS:
            tensors[f"{news_id}/{name}"] = getattr(feat, name).astype(np.float32)
        articles[news_id] = {
            "label": feat.label,
            "valid_tweet_users": feat.valid_tweet_users,
            "valid_retweet_users": feat.valid_retweet_users,
        }
    write_tensor_archive(path, {**meta, "kind": "features", "articles": articles}, tensors)


def load_features(path) -> tuple[dict, dict[str, ArticleFeatures]]:
    meta, tensors = read_tensor_archive(path)
    if meta.get("kind") != "features":
        raise FormatError(f"{path}: not a feature archive")
    features = {}
    for news_id, info in meta["articles"].items():
        kwargs = {
            name: tensors[f"{news_id}/{name}"].astype(np.float64)
            for name in _FEATURE_TENSORS
        }
        features[news_id] = ArticleFeatures(
            news_id=news_id,
            label=info["label"],
            valid_tweet_users=info["valid_tweet_users"],
            valid_retweet_users=info["valid_retweet_users"],
            **kwargs,
        )
    return meta, features


def save_checkpoint(path, model, meta: dict) -> None:
    tensors = {name: value.detach().numpy() for name, value in model.state_dict().items()}
    write_tensor_archive(path, {**meta, "kind": "model"}, tensors)


def load_checkpoint(path) -> tuple[dict, dict[str, np.ndarray]]:
    meta, tensors = read_tensor_archive(path)
    if meta.get("kind") != "model":
        raise FormatError(f"{path}: not a model checkpoint")
    return meta, tensors
