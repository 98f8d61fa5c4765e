"""Euphemism detection and identification toolkit.

Given a raw text corpus and a list of target keywords, rank vocabulary words
by how strongly they substitute for the keywords in informative contexts
(detection), and map each such word to a probability distribution over the
keywords it stands for (identification). Includes a P@k / Acc@k evaluation
harness and a moderator review service that feeds confirmed euphemisms back
into the keyword list.
"""

from .backends import (
    Backend,
    CountBackend,
    ReplacementRanking,
    build_count_oracle,
    load_backend,
    rank_replacements,
    score,
)
from .corpus import (
    MASK_TOKEN,
    Corpus,
    MaskedSentence,
    Sentence,
    TargetKeyword,
    count_occurrences,
    extract_masked_sentences,
    extract_word_contexts,
    load_corpus,
    load_keywords,
    tokenize,
)
from .detection import (
    CandidateEntry,
    CandidateRanking,
    FilterDecision,
    detect,
    filter_contexts,
    generate_candidates,
)
from .errors import (
    BackendError,
    ConfigError,
    CorpusError,
    EuphkitError,
    EvaluationError,
    KeywordListError,
    PipelineError,
)
from .evaluation import (
    GroundTruth,
    accuracy_at_k,
    emit_report,
    load_ground_truth,
    precision_at_k,
)
from .identification import (
    CoarseClassifier,
    EuphemismDistribution,
    FineClassifier,
    LabeledContext,
    build_fine_training_set,
    identify,
    sample_negative_contexts,
    train_coarse,
    train_fine,
)

__version__ = "0.1.0"
