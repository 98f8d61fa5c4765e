"""Euphemism identification: map a word to a distribution over keywords.

Training data is self-supervised: masking a known keyword yields a labeled
context. A coarse binary classifier first rejects contexts where the word is
used in its innocuous cover sense; a fine multinomial classifier then labels
each surviving context with a keyword, and label counts normalize into the
output distribution.
"""

from __future__ import annotations

import logging
import pickle
import random
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import sparse
from sklearn.linear_model import LogisticRegression

from .corpus import (
    MASK_TOKEN,
    Corpus,
    MaskedSentence,
    TargetKeyword,
    extract_masked_sentences,
    extract_word_contexts,
)
from .errors import PipelineError

logger = logging.getLogger(__name__)

MIN_CONTEXT_TOKENS = 3  # contexts with fewer non-mask tokens carry no signal
DEFAULT_SPLIT = (0.7, 0.1, 0.2)


@dataclass(frozen=True)
class LabeledContext:
    masked: MaskedSentence
    label: TargetKeyword

    def __post_init__(self) -> None:
        if self.masked.origin_keyword != self.label:
            raise PipelineError("label must equal the context's origin keyword")


@dataclass(frozen=True)
class EuphemismDistribution:
    word: str
    label_counts: dict[str, int] = field(hash=False)
    probabilities: dict[str, float] = field(hash=False)
    n_contexts_total: int
    n_contexts_kept: int
    flag: str | None = None


class SentenceEncoder:
    """Mean of member-token one-hot encodings (mask slot excluded)."""

    def __init__(self, vocabulary: tuple[str, ...]) -> None:
        self.vocabulary = vocabulary
        self._index = {tok: i for i, tok in enumerate(vocabulary)}

    @classmethod
    def fit(cls, contexts: list[MaskedSentence]) -> "SentenceEncoder":
        tokens = sorted(
            {t for m in contexts for t in m.tokens_with_mask if t != MASK_TOKEN}
        )
        if not tokens:
            raise PipelineError("cannot fit an encoder on empty contexts")
        return cls(tuple(tokens))

    def encode(self, contexts: list[MaskedSentence]) -> sparse.csr_matrix:
        rows, cols, vals = [], [], []
        for r, m in enumerate(contexts):
            toks = [t for t in m.tokens_with_mask if t != MASK_TOKEN]
            known = [self._index[t] for t in toks if t in self._index]
            if toks:
                w = 1.0 / len(toks)
                for c in known:
                    rows.append(r)
                    cols.append(c)
                    vals.append(w)
        return sparse.csr_matrix(
            (vals, (rows, cols)), shape=(len(contexts), len(self.vocabulary))
        )


def usable_contexts(contexts: list[MaskedSentence]) -> list[MaskedSentence]:
    """Drop contexts with fewer than MIN_CONTEXT_TOKENS non-mask tokens."""
    return [m for m in contexts if len(m.tokens_with_mask) - 1 >= MIN_CONTEXT_TOKENS]


def split_indices(n: int, seed: int, split=DEFAULT_SPLIT) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Deterministic 70/10/20 index split (each size exact up to rounding)."""
    train_frac, val_frac, _ = split
    rng = np.random.default_rng(seed)
    perm = rng.permutation(n)
    # integer round-half-up keeps every split within one of its exact share
    n_train = (int(round(train_frac * 10)) * n + 5) // 10
    n_val = (int(round(val_frac * 10)) * n + 5) // 10
    return perm[:n_train], perm[n_train : n_train + n_val], perm[n_train + n_val :]


def build_fine_training_set(
    corpus: Corpus, keywords: list[TargetKeyword]
) -> list[LabeledContext]:
    """One labeled context per keyword occurrence in the corpus."""
    samples = [
        LabeledContext(masked=m, label=m.origin_keyword)
        for m in extract_masked_sentences(corpus, keywords)
    ]
    counts = {k.surface: 0 for k in keywords}
    for s in samples:
        counts[s.label.surface] += 1
    for surface, count in counts.items():
        if count == 0:
            logger.warning("keyword %r has no occurrences; class is untrainable", surface)
    return samples


def sample_negative_contexts(
    corpus: Corpus,
    count: int,
    seed: int,
    keywords: list[TargetKeyword],
) -> list[MaskedSentence]:
    """Uniformly masked random contexts from keyword-free sentences.

    Draws (sentence, position) uniformly and rejects sentences that contain
    any target keyword or are too short to yield a usable context; fixed seed
    gives an identical sample list.
    """
    if count < 1:
        raise PipelineError("negative sample count must be >= 1")
    if len(corpus) < count:
        raise PipelineError(
            f"corpus has {len(corpus)} sentences; cannot draw {count} negatives"
        )
    keyword_token_sets = [k.tokens for k in keywords]

    def contains_keyword(tokens: tuple[str, ...]) -> bool:
        for ktoks in keyword_token_sets:
            n = len(ktoks)
            if n == 1:
                if ktoks[0] in tokens:
                    return True
            elif any(tokens[i : i + n] == ktoks for i in range(len(tokens) - n + 1)):
                return True
        return False

    eligible = [
        s
        for s in corpus.sentences
        if len(s.tokens) - 1 >= MIN_CONTEXT_TOKENS and not contains_keyword(s.tokens)
    ]
    if not eligible:
        raise PipelineError("every corpus sentence contains a keyword or is too short")

    rng = random.Random(seed)
    samples: list[MaskedSentence] = []
    attempts = 0
    max_attempts = max(1000, 100 * count)
    while len(samples) < count:
        attempts += 1
        if attempts > max_attempts:
            raise PipelineError("negative sampling exhausted; corpus too small after rejection")
        sentence = corpus.sentences[rng.randrange(len(corpus.sentences))]
        if len(sentence.tokens) - 1 < MIN_CONTEXT_TOKENS or contains_keyword(sentence.tokens):
            continue
        pos = rng.randrange(len(sentence.tokens))
        masked = (
            sentence.tokens[:pos] + (MASK_TOKEN,) + sentence.tokens[pos + 1 :]
        )
        samples.append(
            MaskedSentence(
                tokens_with_mask=masked,
                origin_sentence_id=sentence.id,
                masked_surface=sentence.tokens[pos],
                origin_keyword=None,
            )
        )
    return samples


@dataclass
class CoarseClassifier:
    """Binary filter: is this masked context about the target category?"""

    kind: str
    encoder: SentenceEncoder
    model: LogisticRegression
    decision_threshold: float
    metrics: dict[str, float | None]

    def predict_proba(self, contexts: list[MaskedSentence]) -> np.ndarray:
        if not contexts:
            return np.zeros(0)
        positive_col = int(np.flatnonzero(self.model.classes_ == 1)[0])
        return self.model.predict_proba(self.encoder.encode(contexts))[:, positive_col]

    def save(self, path: str | Path) -> None:
        Path(path).write_bytes(pickle.dumps(self))

    @staticmethod
    def load(path: str | Path) -> "CoarseClassifier":
        return pickle.loads(Path(path).read_bytes())


@dataclass
class FineClassifier:
    """Multinomial classifier from masked context to target keyword."""

    classes: tuple[TargetKeyword, ...]
    encoder: SentenceEncoder
    model: LogisticRegression
    metrics: dict[str, float | None]

    def predict_distribution(self, contexts: list[MaskedSentence]) -> np.ndarray:
        """(n, n_classes) rows summing to 1, aligned with self.classes."""
        if not contexts:
            return np.zeros((0, len(self.classes)))
        proba = self.model.predict_proba(self.encoder.encode(contexts))
        out = np.zeros((len(contexts), len(self.classes)))
        surfaces = [k.surface for k in self.classes]
        for j, label in enumerate(self.model.classes_):
            out[:, surfaces.index(label)] = proba[:, j]
        return out

    def predict_labels(self, contexts: list[MaskedSentence]) -> list[TargetKeyword]:
        dist = self.predict_distribution(contexts)
        return [self.classes[i] for i in np.argmax(dist, axis=1)]

    def save(self, path: str | Path) -> None:
        Path(path).write_bytes(pickle.dumps(self))

    @staticmethod
    def load(path: str | Path) -> "FineClassifier":
        return pickle.loads(Path(path).read_bytes())


def _accuracy(model, X, y) -> float | None:
    if len(y) == 0:
        return None
    return float(np.mean(model.predict(X) == np.asarray(y)))


def train_coarse(
    positives: list[MaskedSentence],
    negatives: list[MaskedSentence],
    split=DEFAULT_SPLIT,
    seed: int = 0,
    decision_threshold: float = 0.5,
) -> CoarseClassifier:
    """Fit the binary category filter on positive vs sampled-negative contexts."""
    if not positives or not negatives:
        raise PipelineError("coarse training needs both positive and negative contexts")
    contexts = list(positives) + list(negatives)
    labels = np.array([1] * len(positives) + [0] * len(negatives))
    encoder = SentenceEncoder.fit(contexts)
    X = encoder.encode(contexts)

    train_idx, val_idx, test_idx = split_indices(len(contexts), seed, split)
    y_train = labels[train_idx]
    if len(set(y_train.tolist())) < 2:
        raise PipelineError("degenerate training split: single-class input")
    model = LogisticRegression(max_iter=1000)
    model.fit(X[train_idx], y_train)
    metrics = {
        "train_acc": _accuracy(model, X[train_idx], y_train),
        "val_acc": _accuracy(model, X[val_idx], labels[val_idx]),
        "test_acc": _accuracy(model, X[test_idx], labels[test_idx]),
    }
    return CoarseClassifier(
        kind="logreg-bow",
        encoder=encoder,
        model=model,
        decision_threshold=decision_threshold,
        metrics=metrics,
    )


def train_fine(
    samples: list[LabeledContext],
    split=DEFAULT_SPLIT,
    seed: int = 0,
) -> FineClassifier:
    """Fit the multinomial keyword classifier on self-supervised samples."""
    classes = sorted({s.label for s in samples}, key=lambda k: k.surface)
    if len(classes) < 2:
        raise PipelineError("fine training needs samples from at least 2 classes")
    contexts = [s.masked for s in samples]
    labels = np.array([s.label.surface for s in samples])
    encoder = SentenceEncoder.fit(contexts)
    X = encoder.encode(contexts)

    train_idx, _val_idx, test_idx = split_indices(len(samples), seed, split)
    y_train = labels[train_idx]
    if len(set(y_train.tolist())) < 2:
        raise PipelineError("degenerate training split: fewer than 2 classes in train")
    model = LogisticRegression(max_iter=1000)
    model.fit(X[train_idx], y_train)
    metrics = {
        "train_acc": _accuracy(model, X[train_idx], y_train),
        "test_acc": _accuracy(model, X[test_idx], labels[test_idx]),
    }
    return FineClassifier(
        classes=tuple(classes), encoder=encoder, model=model, metrics=metrics
    )


def identify(
    word: str,
    corpus: Corpus,
    coarse: CoarseClassifier,
    fine: FineClassifier,
    soft: bool = False,
) -> EuphemismDistribution:
    """Distribution over target keywords for one word's corpus usage.

    With ``soft=True`` probabilities aggregate the fine classifier's full
    per-context distributions instead of argmax label counts.
    """
    contexts = extract_word_contexts(corpus, word)
    if not contexts:
        raise PipelineError(f"word {word!r} does not occur in the corpus")
    n_total = len(contexts)
    usable = usable_contexts(contexts)
    if usable:
        proba = coarse.predict_proba(usable)
        kept = [m for m, p in zip(usable, proba) if p >= coarse.decision_threshold]
    else:
        kept = []
    surfaces = [k.surface for k in fine.classes]
    counts = {s: 0 for s in surfaces}
    if not kept:
        return EuphemismDistribution(
            word=word,
            label_counts=counts,
            probabilities={},
            n_contexts_total=n_total,
            n_contexts_kept=0,
            flag="non-euphemistic usage only",
        )
    for label in fine.predict_labels(kept):
        counts[label.surface] += 1
    if soft:
        mass = fine.predict_distribution(kept).sum(axis=0)
        probabilities = {s: float(v / mass.sum()) for s, v in zip(surfaces, mass)}
    else:
        probabilities = {s: counts[s] / len(kept) for s in surfaces}
    return EuphemismDistribution(
        word=word,
        label_counts=counts,
        probabilities=probabilities,
        n_contexts_total=n_total,
        n_contexts_kept=len(kept),
    )
