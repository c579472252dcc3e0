"""Timeline-based verification of temporal claims.

The library extracts events from claims and evidence, encodes them with
date-aware positional information, scores claim/evidence event pairs with
three-level attention, and classifies each claim event, the chronological
order, and the overall claim. A synthetic benchmark generator and a
training/evaluation harness round out the toolkit.
"""

from .core import (
    Claim,
    Event,
    EvidencePool,
    GoldLabels,
    Label2,
    Label3,
    ProbDist,
    Provenance,
    VerificationResult,
    label_from_dist,
)
from .encode import EventEncoderHandle, EventEncoding, embed_tokens, encode_event
from .extract import extract_events, score_evidence
from .temporal import (
    TimeSpan,
    TimelinePosition,
    chronological_sort,
    earliest_reference,
    order_consistency_oracle,
    parse_temporal_expression,
    positional_encoding,
)
from .attention import (
    AttentionMatrix,
    AttentionProjection,
    event_level,
    multi_level_scores,
    time_level,
    token_level,
    top_k,
)
from .model import (
    ModelDims,
    ModelParams,
    SequenceReps,
    build_u,
    claim_event_head,
    claim_head,
    load_checkpoint,
    order_head,
    save_checkpoint,
    verify_claim,
)
from .losses import (
    AdamState,
    LossBreakdown,
    cross_entropy,
    godel_aggregate,
    kl_divergence,
    loss_cross,
    optimize_step,
    total_loss,
)
from .datagen import (
    FactTuple,
    GenSpec,
    build_timeline,
    corrupt_fact,
    generate_dataset,
    perturb_order,
    sample_claim,
    synthesize_claim,
    synthesize_fact_corpus,
    verbalize,
)
from .harness import RunConfig, ablate, evaluate, sweep, train
from .metrics import MetricsReport

__version__ = "0.1.0"
