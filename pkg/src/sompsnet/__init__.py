"""Fake health news detection from social engagements and publisher statistics."""

__version__ = "0.1.0"

from .config import RunConfig, load_config
from .errors import (
    FormatError,
    IneligibleAtCutoffError,
    NotFittedError,
    ParseError,
    SompsError,
    SplitError,
    TrainingDivergenceError,
    ValidationError,
)
from .featurize import (
    ArticleFeatures,
    EmbeddingTable,
    PnsEncoders,
    SizingParams,
    build_connectivity_matrix,
    build_pns_vector,
    build_user_activity_matrix,
    compute_sizing,
    connectivity_score,
    embed_engagements,
    featurize_article,
    tokenize,
)
from .harness import (
    EarlyDetectionCurve,
    EvalReport,
    SplitSets,
    SplitSpec,
    early_detection_sweep,
    evaluate,
    stratified_split,
    train,
)
from .ingest import (
    Corpus,
    Engagement,
    EngagementKind,
    NewsRecord,
    UserRecord,
    filter_eligible,
    label_from_rating,
    load_corpus,
)
from .neural import (
    FeatureBatch,
    FeatureDims,
    ModelConfig,
    MultiHeadCrossAttention,
    SompsNet,
    bce_loss,
    bilstm_forward,
    gcn_forward,
    multi_head_attention,
    normalize_adjacency,
    scaled_dot_attention,
)
from .pipeline import FeaturePipeline, Standardizer
from .synth import generate_synthetic, synthetic_embedding_table
