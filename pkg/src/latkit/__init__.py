"""Word-lattice rescoring toolkit: expansion, cached scoring, exact n-best,
weight tuning, and WER reporting for two-pass recognizer combination."""

from .cmaes import CmaEs, CmaResult, minimize
from .combine import Coefficients, combined_score
from .errors import (
    ExternalScorerError,
    LatkitError,
    LatticeError,
    LatticeSyntaxError,
    LatticeValidationError,
    MissingPosteriorError,
    MissingStreamError,
    NoPathError,
    RescoreError,
    ScorerError,
)
from .external import ExternalScorer
from .lattice import (
    END_WORD,
    NULL_WORD,
    START_WORD,
    Arc,
    Lattice,
    LatticeStats,
    Node,
    build_lattice,
    compute_arc_posteriors,
    copy_lattice,
    parse_lattice,
    prune,
    serialize_lattice,
    stats,
    topological_order,
    validate,
)
from .nbest import (
    Hypothesis,
    NBestList,
    extract_nbest,
    format_nbest,
    parse_nbest,
    rescore_nbest,
    select_best,
)
from .rescore import RescoreCache, RescoreConfig, best_path, expand_ngram, rescore_lattice
from .scorers import (
    ConstantScorer,
    MockTimeScorer,
    NgramScorer,
    Scorer,
    StepResult,
    UniformScorer,
    WordPieceScorer,
    WordPieceVocab,
    scorer_from_spec,
    tokenize,
    train_ngram,
)
from .tune import TuneReport, eval_selection, select_transcripts, tune_cmaes
from .wer import (
    CorpusWer,
    LengthBucket,
    WerCounts,
    corpus_wer,
    format_transcripts,
    normalize_tokens,
    parse_transcripts,
    wer,
    werr_by_length,
)

__version__ = "0.1.0"

__all__ = [
    "Arc",
    "CmaEs",
    "CmaResult",
    "Coefficients",
    "ConstantScorer",
    "CorpusWer",
    "END_WORD",
    "ExternalScorer",
    "ExternalScorerError",
    "Hypothesis",
    "LatkitError",
    "Lattice",
    "LatticeError",
    "LatticeStats",
    "LatticeSyntaxError",
    "LatticeValidationError",
    "LengthBucket",
    "MissingPosteriorError",
    "MissingStreamError",
    "MockTimeScorer",
    "NBestList",
    "NULL_WORD",
    "NgramScorer",
    "NoPathError",
    "Node",
    "RescoreCache",
    "RescoreConfig",
    "RescoreError",
    "START_WORD",
    "Scorer",
    "ScorerError",
    "StepResult",
    "TuneReport",
    "UniformScorer",
    "WerCounts",
    "WordPieceScorer",
    "WordPieceVocab",
    "best_path",
    "build_lattice",
    "combined_score",
    "compute_arc_posteriors",
    "copy_lattice",
    "corpus_wer",
    "eval_selection",
    "expand_ngram",
    "extract_nbest",
    "format_nbest",
    "format_transcripts",
    "minimize",
    "normalize_tokens",
    "parse_lattice",
    "parse_nbest",
    "parse_transcripts",
    "prune",
    "rescore_lattice",
    "rescore_nbest",
    "scorer_from_spec",
    "select_best",
    "select_transcripts",
    "serialize_lattice",
    "stats",
    "tokenize",
    "topological_order",
    "train_ngram",
    "tune_cmaes",
    "validate",
    "wer",
    "werr_by_length",
]
