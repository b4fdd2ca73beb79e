"""Run configuration: one flat key-value namespace for every tunable.

Configs come from an optional ``key = value`` file plus command-line
overrides, reject unknown keys, and are echoed verbatim into every output
artifact for provenance.
"""

from __future__ import annotations

import dataclasses
from dataclasses import dataclass
from pathlib import Path
from typing import Optional

from .featurize import SizingParams
from .harness import SplitSpec
from .neural import VARIANT_SOMPS, ModelConfig


@dataclass
class RunConfig:
    seed: int = 0
    variant: str = VARIANT_SOMPS
    train_frac: float = 0.75
    val_frac: float = 0.10
    test_frac: float = 0.15
    # featurization
    tweet_users: Optional[int] = None
    retweet_users: Optional[int] = None
    seq_len: Optional[int] = None
    top_tags: int = 8
    top_publishers: int = 8
    # model
    gcn_layers: int = 3
    gcn_output_dim: int = 16
    bilstm_hidden: int = 100
    attention_heads: int = 16
    head_dim_qk: int = 4
    head_dim_v: int = 12
    pns_dense_dim: int = 16
    dropout: float = 0.5
    # optimisation
    learning_rate: float = 0.001
    momentum: float = 0.9
    batch_size: int = 32
    max_epochs: int = 100
    patience: int = 10

    def split_spec(self) -> SplitSpec:
        return SplitSpec(
            train_frac=self.train_frac,
            val_frac=self.val_frac,
            test_frac=self.test_frac,
            seed=self.seed,
        )

    def model_config(self) -> ModelConfig:
        return ModelConfig(
            gcn_layers=self.gcn_layers,
            gcn_output_dim=self.gcn_output_dim,
            bilstm_hidden=self.bilstm_hidden,
            attention_heads=self.attention_heads,
            head_dim_qk=self.head_dim_qk,
            head_dim_v=self.head_dim_v,
            pns_dense_dim=self.pns_dense_dim,
            dropout=self.dropout,
            learning_rate=self.learning_rate,
            momentum=self.momentum,
            batch_size=self.batch_size,
            max_epochs=self.max_epochs,
            patience=self.patience,
            seed=self.seed,
            variant=self.variant,
        )

    def sizing_override(self) -> Optional[SizingParams]:
        """Full sizing override when all three sizes are pinned, else None."""
        if self.tweet_users and self.retweet_users and self.seq_len:
            return SizingParams(self.tweet_users, self.retweet_users, self.seq_len)
        return None

    def to_dict(self) -> dict:
        return dataclasses.asdict(self)

    def replace(self, **overrides) -> "RunConfig":
        known = {f.name for f in dataclasses.fields(self)}
        unknown = set(overrides) - known
        if unknown:
            raise ValueError(f"unknown config keys: {', '.join(sorted(unknown))}")
        return dataclasses.replace(self, **overrides)


_FIELD_TYPES = {f.name: f.type for f in dataclasses.fields(RunConfig)}
_INT_FIELDS = {
    "seed", "top_tags", "top_publishers", "gcn_layers", "gcn_output_dim",
    "bilstm_hidden", "attention_heads", "head_dim_qk", "head_dim_v",
    "pns_dense_dim", "batch_size", "max_epochs", "patience",
}
_OPTIONAL_INT_FIELDS = {"tweet_users", "retweet_users", "seq_len"}
_FLOAT_FIELDS = {
    "train_frac", "val_frac", "test_frac", "dropout", "learning_rate", "momentum",
}


def _parse_value(key: str, raw: str):
    if key in _INT_FIELDS:
        return int(raw)
    if key in _OPTIONAL_INT_FIELDS:
        return None if raw.lower() in ("none", "") else int(raw)
    if key in _FLOAT_FIELDS:
        return float(raw)
    return raw


def load_config(path=None, **overrides) -> RunConfig:
    """Build a RunConfig from an optional file plus keyword overrides.

    File format: one ``key = value`` assignment per line, ``#`` comments.
    Unknown keys are rejected.
    """
    values: dict = {}
    if path is not None:
        for line_no, line in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{line_no}: expected 'key = value', got {line!r}")
            key, raw = (part.strip() for part in line.split("=", 1))
            if key not in _FIELD_TYPES:
                raise ValueError(f"{path}:{line_no}: unknown config key {key!r}")
            values[key] = _parse_value(key, raw)
    config = RunConfig().replace(**values)
    cleaned = {k: v for k, v in overrides.items() if v is not None}
    return config.replace(**cleaned)
