"""Post-ASR correction of user-vocabulary phrases.

Noisy-channel edit costs and n-gram mappings are learned from a parallel
corpus of phrases and their misrecognitions, user phrases are indexed under
likely misspellings, and a matcher replaces hypothesis spans with the
retrieved phrases they most plausibly stand for.
"""
from .alignment import AlignedPair, EditCostTable, align_pair, estimate_costs
from .corruptor import CorruptionModel, corrupt
from .dataset import Context, TrainingExample, build_dataset, build_example
from .errors import ConfigError, InvalidInputError, ParseError, PoolError
from .index import PhraseNgramIndex, UserVocabulary, build_index
from .mappings import NgramMapping, extract_mappings
from .matcher import MatcherConfig, TaggedFragment, tag
from .metrics import EvalCounts, diff_keyword_metrics, ideal_wer, topk_recall, wer
from .pipeline import correct_transcript, split_transcript
from .retrieval import CandidateSet, Fragment, levenshtein_retrieve, retrieve

__version__ = "0.1.0"

__all__ = [
    "AlignedPair", "CandidateSet", "ConfigError", "Context", "CorruptionModel", "EditCostTable",
    "EvalCounts", "Fragment", "InvalidInputError", "MatcherConfig", "NgramMapping", "ParseError",
    "PhraseNgramIndex", "PoolError", "TaggedFragment", "TrainingExample", "UserVocabulary",
    "align_pair", "build_dataset", "build_example", "build_index", "correct_transcript", "corrupt",
    "diff_keyword_metrics", "estimate_costs", "extract_mappings", "ideal_wer",
    "levenshtein_retrieve", "retrieve", "split_transcript", "tag", "topk_recall", "wer",
]
