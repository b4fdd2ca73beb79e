"""Differentiable two-branch classifier over per-article feature tensors.

Each engagement branch (tweets, retweets) runs a stacked graph
convolution over the degree-normalized connectivity matrix, a Bi-LSTM
over the averaged engagement embedding, and multi-head cross attention
with queries from the text encoding and keys/values from the graph
embedding.  The pooled branch outputs are concatenated with a dense
encoding of the publisher/news-statistics vector and classified with a
single sigmoid unit (probability that the article is real).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional, Sequence

import torch
import torch.nn as nn

from .featurize import ArticleFeatures

VARIANT_SOMPS = "somps"
VARIANT_SIG = "sig"
VARIANT_PNS = "pns"
VARIANTS = (VARIANT_SOMPS, VARIANT_SIG, VARIANT_PNS)

PROB_EPS = 1e-7


@dataclass
class ModelConfig:
    """Architecture and optimisation hyperparameters."""

    gcn_layers: int = 3
    gcn_output_dim: int = 16
    bilstm_hidden: int = 100
    attention_heads: int = 16
    head_dim_qk: int = 4
    head_dim_v: int = 12
    pns_dense_dim: int = 16
    dropout: float = 0.5
    learning_rate: float = 0.001
    momentum: float = 0.9
    batch_size: int = 32
    max_epochs: int = 100
    patience: int = 10
    seed: int = 0
    variant: str = VARIANT_SOMPS

    def validate(self) -> None:
        for name in (
            "gcn_layers", "gcn_output_dim", "bilstm_hidden", "attention_heads",
            "head_dim_qk", "head_dim_v", "pns_dense_dim", "batch_size",
            "max_epochs", "patience",
        ):
            if getattr(self, name) < 1:
                raise ValueError(f"{name} must be >= 1")
        if not 0.0 <= self.dropout < 1.0:
            raise ValueError("dropout must be in [0, 1)")
        if self.variant not in VARIANTS:
            raise ValueError(f"variant must be one of {VARIANTS}, got {self.variant!r}")

    def to_dict(self) -> dict:
        return {
            "gcn_layers": self.gcn_layers,
            "gcn_output_dim": self.gcn_output_dim,
            "bilstm_hidden": self.bilstm_hidden,
            "attention_heads": self.attention_heads,
            "head_dim_qk": self.head_dim_qk,
            "head_dim_v": self.head_dim_v,
            "pns_dense_dim": self.pns_dense_dim,
            "dropout": self.dropout,
            "learning_rate": self.learning_rate,
            "momentum": self.momentum,
            "batch_size": self.batch_size,
            "max_epochs": self.max_epochs,
            "patience": self.patience,
            "seed": self.seed,
            "variant": self.variant,
        }


@dataclass(frozen=True)
class FeatureDims:
    """Input tensor sizes the model is built for."""

    tweet_users: int
    retweet_users: int
    seq_len: int
    embed_dim: int
    tweet_feat_dim: int
    retweet_feat_dim: int
    pns_dim: int

    @classmethod
    def from_features(cls, features: ArticleFeatures) -> "FeatureDims":
        return cls(
            tweet_users=features.adj_tweets.shape[0],
            retweet_users=features.adj_retweets.shape[0],
            seq_len=features.emb_tweets.shape[0],
            embed_dim=features.emb_tweets.shape[1],
            tweet_feat_dim=features.uam_tweets.shape[1],
            retweet_feat_dim=features.uam_retweets.shape[1],
            pns_dim=features.pns.shape[0],
        )

    def to_dict(self) -> dict:
        return {
            "tweet_users": self.tweet_users,
            "retweet_users": self.retweet_users,
            "seq_len": self.seq_len,
            "embed_dim": self.embed_dim,
            "tweet_feat_dim": self.tweet_feat_dim,
            "retweet_feat_dim": self.retweet_feat_dim,
            "pns_dim": self.pns_dim,
        }


@dataclass
class FeatureBatch:
    """Stacked article tensors ready for a forward pass."""

    news_ids: tuple[str, ...]
    adj_tweets: torch.Tensor
    uam_tweets: torch.Tensor
    emb_tweets: torch.Tensor
    adj_retweets: torch.Tensor
    uam_retweets: torch.Tensor
    emb_retweets: torch.Tensor
    pns: torch.Tensor
    labels: torch.Tensor

    @classmethod
    def from_features(
        cls, features: Sequence[ArticleFeatures], dtype: torch.dtype = torch.float32
    ) -> "FeatureBatch":
        if not features:
            raise ValueError("cannot build a batch from zero articles")
        stack = lambda name: torch.stack(
            [torch.as_tensor(getattr(f, name), dtype=dtype) for f in features]
        )
        return cls(
            news_ids=tuple(f.news_id for f in features),
            adj_tweets=stack("adj_tweets"),
            uam_tweets=stack("uam_tweets"),
            emb_tweets=stack("emb_tweets"),
            adj_retweets=stack("adj_retweets"),
            uam_retweets=stack("uam_retweets"),
            emb_retweets=stack("emb_retweets"),
            pns=stack("pns"),
            labels=torch.tensor([f.label for f in features], dtype=dtype),
        )

    def __len__(self) -> int:
        return len(self.news_ids)


def normalize_adjacency(adj: torch.Tensor) -> torch.Tensor:
    """Self-loop augmented symmetric degree normalization D^-1/2 (A+I) D^-1/2.

    Accepts a single [k, k] matrix or a batch [..., k, k].  Self-loops keep
    every degree strictly positive, so zero-padded graphs normalize cleanly.
    """
    if adj.shape[-1] != adj.shape[-2]:
        raise ValueError(f"adjacency must be square, got {tuple(adj.shape)}")
    if not torch.allclose(adj, adj.transpose(-1, -2), atol=1e-8):
        raise ValueError("adjacency must be symmetric")
    if (adj < 0).any():
        raise ValueError("adjacency must be non-negative")
    eye = torch.eye(adj.shape[-1], dtype=adj.dtype, device=adj.device)
    looped = adj + eye
    inv_sqrt_degree = looped.sum(dim=-1).rsqrt()
    return inv_sqrt_degree.unsqueeze(-1) * looped * inv_sqrt_degree.unsqueeze(-2)


def gcn_forward(
    adj_norm: torch.Tensor,
    node_features: torch.Tensor,
    weights: Sequence[torch.Tensor],
    activation=torch.relu,
) -> torch.Tensor:
    """Stacked graph convolution: H <- act(A_norm @ H @ W) per layer."""
    h = node_features
    for w in weights:
        if h.shape[-1] != w.shape[0]:
            raise ValueError(
                f"feature dim {h.shape[-1]} does not match weight input dim {w.shape[0]}"
            )
        h = activation(adj_norm @ h @ w)
    return h


def scaled_dot_attention(
    q: torch.Tensor, k: torch.Tensor, v: torch.Tensor
) -> tuple[torch.Tensor, torch.Tensor]:
    """Softmax(Q K^T / sqrt(d_k)) V; returns (output, attention weights)."""
    if q.shape[-1] != k.shape[-1]:
        raise ValueError("query/key dims differ")
    if k.shape[-2] != v.shape[-2]:
        raise ValueError("key/value counts differ")
    scores = q @ k.transpose(-1, -2) / math.sqrt(q.shape[-1])
    weights = torch.softmax(scores, dim=-1)
    return weights @ v, weights


def _lecun_uniform_(tensor: torch.Tensor, fan_in: int) -> None:
    # variance-preserving for linear maps
    bound = math.sqrt(3.0 / fan_in)
    nn.init.uniform_(tensor, -bound, bound)


def _kaiming_uniform_(tensor: torch.Tensor, fan_in: int) -> None:
    # variance-preserving under a rectifier
    bound = math.sqrt(6.0 / fan_in)
    nn.init.uniform_(tensor, -bound, bound)


def multi_head_attention(
    query_seq: torch.Tensor,
    kv_seq: torch.Tensor,
    w_q: torch.Tensor,
    w_k: torch.Tensor,
    w_v: torch.Tensor,
    w_o: torch.Tensor,
) -> tuple[torch.Tensor, torch.Tensor]:
    """Per-head projections, scaled dot-product attention per head, then
    concatenated head outputs through the output projection.

    Projections are [heads, in_dim, head_dim]; w_o is
    [heads * head_dim_v, out_dim].  Returns (output, per-head weights).
    """
    q = torch.einsum("...md,hde->...hme", query_seq, w_q)
    k = torch.einsum("...nd,hde->...hne", kv_seq, w_k)
    v = torch.einsum("...nd,hde->...hne", kv_seq, w_v)
    attended, weights = scaled_dot_attention(q, k, v)
    concat = attended.movedim(-3, -2)
    concat = concat.reshape(*concat.shape[:-2], w_q.shape[0] * attended.shape[-1])
    return concat @ w_o, weights


class MultiHeadCrossAttention(nn.Module):
    """Cross attention: queries from one sequence, keys/values from another.

    The two input sequences may have different lengths and widths.
    """

    def __init__(
        self,
        query_dim: int,
        kv_dim: int,
        n_heads: int,
        head_dim_qk: int,
        head_dim_v: int,
        output_dim: Optional[int] = None,
    ):
        super().__init__()
        self.n_heads = n_heads
        self.output_dim = output_dim or n_heads * head_dim_v
        self.w_q = nn.Parameter(torch.empty(n_heads, query_dim, head_dim_qk))
        self.w_k = nn.Parameter(torch.empty(n_heads, kv_dim, head_dim_qk))
        self.w_v = nn.Parameter(torch.empty(n_heads, kv_dim, head_dim_v))
        self.w_o = nn.Parameter(torch.empty(n_heads * head_dim_v, self.output_dim))
        _lecun_uniform_(self.w_q, query_dim)
        _lecun_uniform_(self.w_k, kv_dim)
        _lecun_uniform_(self.w_v, kv_dim)
        _lecun_uniform_(self.w_o, self.w_o.shape[0])

    def forward(
        self, query_seq: torch.Tensor, kv_seq: torch.Tensor
    ) -> tuple[torch.Tensor, torch.Tensor]:
        return multi_head_attention(query_seq, kv_seq, self.w_q, self.w_k, self.w_v, self.w_o)


class GraphEncoder(nn.Module):
    """Stack of graph-convolution weight matrices (no bias)."""

    def __init__(self, in_dim: int, out_dim: int, layers: int):
        super().__init__()
        dims = [in_dim] + [out_dim] * layers
        self.weights = nn.ParameterList(
            nn.Parameter(torch.empty(dims[i], dims[i + 1])) for i in range(layers)
        )
        for w in self.weights:
            _kaiming_uniform_(w, w.shape[0])

    def forward(self, adj_norm: torch.Tensor, node_features: torch.Tensor) -> torch.Tensor:
        return gcn_forward(adj_norm, node_features, list(self.weights))


def bilstm_forward(x: torch.Tensor, lstm: nn.LSTM) -> torch.Tensor:
    """Bidirectional recurrent encoding; accepts [m, e] or [batch, m, e]."""
    single = x.dim() == 2
    if single:
        x = x.unsqueeze(0)
    out, _ = lstm(x)
    return out.squeeze(0) if single else out


@dataclass
class BranchTrace:
    adj_norm: torch.Tensor
    graph: torch.Tensor
    text_encoding: torch.Tensor
    attention_weights: torch.Tensor
    pooled: torch.Tensor


@dataclass
class ForwardTrace:
    """All intermediate activations of one forward pass."""

    tweet: BranchTrace
    retweet: BranchTrace
    o_sig: torch.Tensor
    o_pns: torch.Tensor
    logit: torch.Tensor
    probability: torch.Tensor


class BranchEncoder(nn.Module):
    """Graph + text encoder with cross attention for one engagement kind."""

    def __init__(self, feat_dim: int, embed_dim: int, config: ModelConfig):
        super().__init__()
        self.gcn = GraphEncoder(feat_dim, config.gcn_output_dim, config.gcn_layers)
        self.lstm = nn.LSTM(
            embed_dim, config.bilstm_hidden, batch_first=True, bidirectional=True
        )
        self.attention = MultiHeadCrossAttention(
            query_dim=2 * config.bilstm_hidden,
            kv_dim=config.gcn_output_dim,
            n_heads=config.attention_heads,
            head_dim_qk=config.head_dim_qk,
            head_dim_v=config.head_dim_v,
        )
        self.output_dim = self.attention.output_dim

    def forward(
        self, adj: torch.Tensor, node_features: torch.Tensor, embeddings: torch.Tensor
    ) -> BranchTrace:
        adj_norm = normalize_adjacency(adj)
        graph = self.gcn(adj_norm, node_features)
        text_encoding = bilstm_forward(embeddings, self.lstm)
        attended, weights = self.attention(text_encoding, graph)
        pooled = attended.mean(dim=-2)
        return BranchTrace(adj_norm, graph, text_encoding, weights, pooled)


class SompsNet(nn.Module):
    """Fused two-branch classifier; probability is P(article is real)."""

    def __init__(self, dims: FeatureDims, config: ModelConfig):
        super().__init__()
        config.validate()
        self.config = config
        self.dims = dims
        self.tweet_branch = BranchEncoder(dims.tweet_feat_dim, dims.embed_dim, config)
        self.retweet_branch = BranchEncoder(dims.retweet_feat_dim, dims.embed_dim, config)
        self.pns_dense = nn.Linear(dims.pns_dim, config.pns_dense_dim)
        self.dropout = nn.Dropout(config.dropout)
        fused_dim = self.tweet_branch.output_dim + self.retweet_branch.output_dim
        self.classifier = nn.Linear(fused_dim + config.pns_dense_dim, 1)

    def forward(self, batch: FeatureBatch) -> ForwardTrace:
        tweet = self.tweet_branch(batch.adj_tweets, batch.uam_tweets, batch.emb_tweets)
        retweet = self.retweet_branch(
            batch.adj_retweets, batch.uam_retweets, batch.emb_retweets
        )
        o_sig = torch.cat([tweet.pooled, retweet.pooled], dim=-1)
        o_pns = torch.relu(self.pns_dense(batch.pns))
        if self.config.variant == VARIANT_SIG:
            o_pns = torch.zeros_like(o_pns)
        elif self.config.variant == VARIANT_PNS:
            o_sig = torch.zeros_like(o_sig)
        fused = self.dropout(torch.cat([o_sig, o_pns], dim=-1))
        logit = self.classifier(fused).squeeze(-1)
        return ForwardTrace(
            tweet=tweet,
            retweet=retweet,
            o_sig=o_sig,
            o_pns=o_pns,
            logit=logit,
            probability=torch.sigmoid(logit),
        )


def bce_loss(probability: torch.Tensor, target: torch.Tensor) -> torch.Tensor:
    """Binary cross entropy on probabilities, clamped away from 0 and 1."""
    p = probability.clamp(PROB_EPS, 1.0 - PROB_EPS)
    return -(target * torch.log(p) + (1.0 - target) * torch.log(1.0 - p))
