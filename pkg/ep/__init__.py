"""Edit probability: alignment-tolerant string probability over per-frame distributions."""

from .core import (
    EOS,
    Alphabet,
    EditOp,
    EmissionSequence,
    EpMatrix,
    Frame,
    OpKind,
    TargetString,
    best_edit_path,
    classify_path,
    ep_forward,
    ep_score,
    fp_prefix_vector,
    op_log_prob,
    path_log_prob,
    validate_emissions,
)
from .decode import (
    EpTrie,
    Lexicon,
    Prediction,
    PredictionSource,
    build_trie,
    greedy_base_string,
    predict_free,
    predict_lex,
)
from .grad import EmissionGradients, batch_loss, chain_softmax, ep_backward

__all__ = [
    "EOS",
    "Alphabet",
    "EditOp",
    "EmissionGradients",
    "EmissionSequence",
    "EpMatrix",
    "EpTrie",
    "Frame",
    "Lexicon",
    "OpKind",
    "Prediction",
    "PredictionSource",
    "TargetString",
    "batch_loss",
    "best_edit_path",
    "build_trie",
    "chain_softmax",
    "classify_path",
    "ep_backward",
    "ep_forward",
    "ep_score",
    "fp_prefix_vector",
    "greedy_base_string",
    "op_log_prob",
    "path_log_prob",
    "predict_free",
    "predict_lex",
    "validate_emissions",
]
