"""Contextual decomposition attributions for small LSTM and SHA-RNN language models."""

__version__ = "0.1.0"

from .checkpoint import (
    Checkpoint,
    CheckpointError,
    ModelConfig,
    Vocab,
    load_checkpoint,
    random_checkpoint,
    save_checkpoint,
)
from .corpus import CorpusItem, Lexicon, build_vocab, generate_corpus, load_lexicon
from .decompose import (
    DecomposedPair,
    GCD_DEFAULT,
    InteractionPolicy,
    MURDOCH,
    RelevantSpan,
    decomposed_forward,
    get_policy,
    logit_attribution,
)
from .evaluate import (
    AttributionReport,
    aggregate_attributions,
    build_report,
    na_accuracy,
    subject_attribution,
)
from .models import forward, perplexity

__all__ = [
    "AttributionReport",
    "Checkpoint",
    "CheckpointError",
    "CorpusItem",
    "DecomposedPair",
    "GCD_DEFAULT",
    "InteractionPolicy",
    "Lexicon",
    "ModelConfig",
    "MURDOCH",
    "RelevantSpan",
    "Vocab",
    "aggregate_attributions",
    "build_report",
    "build_vocab",
    "decomposed_forward",
    "forward",
    "generate_corpus",
    "get_policy",
    "load_checkpoint",
    "load_lexicon",
    "logit_attribution",
    "na_accuracy",
    "perplexity",
    "random_checkpoint",
    "save_checkpoint",
    "subject_attribution",
]
