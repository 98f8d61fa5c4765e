"""Corpus loading, normalization, and masked-context extraction.

A corpus is an immutable, deduplicated collection of tokenized sentences.
Masked sentences are sentences with one keyword occurrence replaced by a
single mask slot; they are the unit of work for every downstream stage.
"""

from __future__ import annotations

import json
import re
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

from .errors import CorpusError, KeywordListError

MASK_TOKEN = "[MASK]"

# Masked sentences longer than this are windowed symmetrically around the
# mask slot (MLM backends have hard context limits).
MAX_MASKED_TOKENS = 128

_TOKEN_RE = re.compile(r"[\w']+|[^\w\s]")
_SENTENCE_FINAL = frozenset({".", "!", "?"})


def tokenize(text: str) -> list[str]:
    """Lowercase and split into word tokens with punctuation detached."""
    return _TOKEN_RE.findall(text.lower())


def split_sentences(tokens: list[str]) -> list[list[str]]:
    """Split a token stream after each run of sentence-final punctuation."""
    sentences: list[list[str]] = []
    current: list[str] = []
    for i, tok in enumerate(tokens):
        current.append(tok)
        next_tok = tokens[i + 1] if i + 1 < len(tokens) else None
        if tok in _SENTENCE_FINAL and next_tok not in _SENTENCE_FINAL:
            sentences.append(current)
            current = []
    if current:
        sentences.append(current)
    return sentences


@dataclass(frozen=True)
class Sentence:
    id: str
    tokens: tuple[str, ...]
    source_doc: str

    def __post_init__(self) -> None:
        if not self.tokens:
            raise CorpusError(f"sentence {self.id} has no tokens")


@dataclass(frozen=True)
class TargetKeyword:
    """A category-tagged keyword whose euphemisms are sought."""

    surface: str
    category: str

    def __post_init__(self) -> None:
        if not self.surface:
            raise KeywordListError("keyword surface must be non-empty")

    @property
    def tokens(self) -> tuple[str, ...]:
        return tuple(self.surface.split())


@dataclass(frozen=True)
class MaskedSentence:
    """A sentence with exactly one mask slot plus provenance.

    ``origin_start`` is the offset of ``tokens_with_mask`` within the origin
    sentence; nonzero only when the context was windowed to fit
    MAX_MASKED_TOKENS.
    """

    tokens_with_mask: tuple[str, ...]
    origin_sentence_id: str
    masked_surface: str
    origin_keyword: TargetKeyword | None = None
    origin_start: int = 0

    def __post_init__(self) -> None:
        if self.tokens_with_mask.count(MASK_TOKEN) != 1:
            raise CorpusError(
                f"masked sentence from {self.origin_sentence_id} must contain "
                f"exactly one {MASK_TOKEN} slot"
            )

    @property
    def mask_index(self) -> int:
        return self.tokens_with_mask.index(MASK_TOKEN)

    @property
    def ref(self) -> str:
        """Stable identifier: origin sentence, absolute position, span width."""
        width = len(self.masked_surface.split())
        return f"{self.origin_sentence_id}:{self.origin_start + self.mask_index}+{width}"

    def reconstruct(self) -> tuple[str, ...]:
        """Reinsert the masked surface in place of the mask slot."""
        i = self.mask_index
        return (
            self.tokens_with_mask[:i]
            + tuple(self.masked_surface.split())
            + self.tokens_with_mask[i + 1 :]
        )


@dataclass(frozen=True)
class Corpus:
    sentences: tuple[Sentence, ...]
    vocabulary: Counter = field(hash=False)

    def __len__(self) -> int:
        return len(self.sentences)

    def __iter__(self):
        return iter(self.sentences)

    def document_frequency(self) -> Counter:
        df: Counter = Counter()
        for sent in self.sentences:
            df.update(set(sent.tokens))
        return df

    def sentence_by_id(self, sentence_id: str) -> Sentence:
        try:
            return self._by_id[sentence_id]
        except KeyError:
            raise CorpusError(f"unknown sentence id {sentence_id!r}") from None

    @property
    def _by_id(self) -> dict[str, Sentence]:
        cached = getattr(self, "_by_id_cache", None)
        if cached is None:
            cached = {s.id: s for s in self.sentences}
            object.__setattr__(self, "_by_id_cache", cached)
        return cached


def _iter_texts(path: Path, format: str):
    if format == "plain-lines":
        with path.open(encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                text = line.strip()
                if text:
                    yield lineno, text
    elif format == "json-lines":
        with path.open(encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.strip()
                if not line:
                    continue
                try:
                    record = json.loads(line)
                except json.JSONDecodeError as exc:
                    raise CorpusError(f"{path}:{lineno}: invalid json: {exc}") from exc
                text = record.get("text", "")
                if not isinstance(text, str):
                    raise CorpusError(f"{path}:{lineno}: 'text' field must be a string")
                if text.strip():
                    yield lineno, text
    else:
        raise CorpusError(f"unknown corpus format {format!r}")


def load_corpus(path: str | Path, format: str = "plain-lines") -> Corpus:
    """Load and normalize a raw text file into a Corpus.

    Posts are lowercased, tokenized with punctuation detached, split into
    sentences, and deduplicated by exact token sequence. Sentence ids are
    assigned in order of first appearance, so two loads of the same file
    produce identical corpora.
    """
    path = Path(path)
    if not path.is_file():
        raise CorpusError(f"corpus file not found: {path}")

    seen: dict[tuple[str, ...], None] = {}
    sentences: list[Sentence] = []
    vocabulary: Counter = Counter()
    for lineno, text in _iter_texts(path, format):
        for sent_tokens in split_sentences(tokenize(text)):
            key = tuple(sent_tokens)
            if not key or key in seen:
                continue
            seen[key] = None
            sid = f"s{len(sentences):06d}"
            sentences.append(Sentence(id=sid, tokens=key, source_doc=f"{path.name}:{lineno}"))
            vocabulary.update(key)

    if not sentences:
        raise CorpusError(f"empty corpus after normalization: {path}")
    return Corpus(sentences=tuple(sentences), vocabulary=vocabulary)


def load_keywords(path: str | Path) -> list[TargetKeyword]:
    """Read a keyword list file: one ``surface<TAB>category`` per line."""
    path = Path(path)
    if not path.is_file():
        raise KeywordListError(f"keyword file not found: {path}")

    keywords: list[TargetKeyword] = []
    seen: set[str] = set()
    with path.open(encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, start=1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise KeywordListError(
                    f"{path}:{lineno}: expected 'surface<TAB>category', got {line!r}"
                )
            surface = " ".join(tokenize(parts[0]))
            category = parts[1].strip()
            if not surface or not category:
                raise KeywordListError(f"{path}:{lineno}: empty surface or category")
            if surface in seen:
                raise KeywordListError(f"{path}:{lineno}: duplicate keyword {surface!r}")
            seen.add(surface)
            keywords.append(TargetKeyword(surface=surface, category=category))
    if not keywords:
        raise KeywordListError(f"no keywords found in {path}")
    return keywords


def _window_around(tokens: list[str], mask_pos: int) -> tuple[list[str], int]:
    """Trim a masked token list to MAX_MASKED_TOKENS around the mask slot."""
    if len(tokens) <= MAX_MASKED_TOKENS:
        return tokens, 0
    half = (MAX_MASKED_TOKENS - 1) // 2
    start = mask_pos - half
    end = mask_pos + (MAX_MASKED_TOKENS - half)
    if start < 0:
        end -= start
        start = 0
    if end > len(tokens):
        start -= end - len(tokens)
        end = len(tokens)
        start = max(start, 0)
    return tokens[start:end], start


def _occurrences(tokens: tuple[str, ...], surface_tokens: tuple[str, ...]) -> list[int]:
    n = len(surface_tokens)
    if n == 0 or n > len(tokens):
        return []
    return [
        i
        for i in range(len(tokens) - n + 1)
        if tokens[i : i + n] == surface_tokens
    ]


def _mask_at(sentence: Sentence, pos: int, surface_tokens: tuple[str, ...],
             keyword: TargetKeyword | None) -> MaskedSentence:
    masked = list(sentence.tokens[:pos]) + [MASK_TOKEN] + list(sentence.tokens[pos + len(surface_tokens):])
    masked, start = _window_around(masked, pos)
    return MaskedSentence(
        tokens_with_mask=tuple(masked),
        origin_sentence_id=sentence.id,
        masked_surface=" ".join(surface_tokens),
        origin_keyword=keyword,
        origin_start=start,
    )


def extract_masked_sentences(
    corpus: Corpus, keywords: list[TargetKeyword]
) -> list[MaskedSentence]:
    """One masked sentence per keyword occurrence, in (sentence, position) order.

    Multi-token surfaces are matched as contiguous token runs and replaced by
    a single mask slot.
    """
    if not keywords:
        raise KeywordListError("keyword list must be non-empty")
    out: list[MaskedSentence] = []
    for sentence in corpus.sentences:
        hits: list[tuple[int, int, TargetKeyword]] = []
        for k_index, keyword in enumerate(keywords):
            for pos in _occurrences(sentence.tokens, keyword.tokens):
                hits.append((pos, k_index, keyword))
        for pos, _k_index, keyword in sorted(hits, key=lambda h: (h[0], h[1])):
            out.append(_mask_at(sentence, pos, keyword.tokens, keyword))
    return out


def extract_word_contexts(corpus: Corpus, word: str) -> list[MaskedSentence]:
    """All masked contexts of an arbitrary word or phrase (no keyword label)."""
    surface = tuple(tokenize(word))
    if not surface:
        raise CorpusError("word must be non-empty")
    out: list[MaskedSentence] = []
    for sentence in corpus.sentences:
        for pos in _occurrences(sentence.tokens, surface):
            out.append(_mask_at(sentence, pos, surface, None))
    return out


def count_occurrences(corpus: Corpus, keywords: list[TargetKeyword]) -> dict[str, int]:
    """Per-keyword corpus occurrence counts (zero-count keywords included)."""
    counts: dict[str, int] = {}
    for keyword in keywords:
        counts[keyword.surface] = sum(
            len(_occurrences(s.tokens, keyword.tokens)) for s in corpus.sentences
        )
    return counts
