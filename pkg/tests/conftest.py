from __future__ import annotations

from collections import Counter

import pytest

from euphkit.corpus import Corpus, Sentence, TargetKeyword, load_corpus


def corpus_from_tokens(token_lists: list[list[str]]) -> Corpus:
    """Build a Corpus directly from token lists (bypasses file loading)."""
    sentences = tuple(
        Sentence(id=f"s{i:06d}", tokens=tuple(toks), source_doc="mem")
        for i, toks in enumerate(token_lists)
    )
    vocab: Counter = Counter()
    for s in sentences:
        vocab.update(s.tokens)
    return Corpus(sentences=sentences, vocabulary=vocab)


@pytest.fixture
def write_corpus(tmp_path):
    def _write(lines: list[str], name: str = "corpus.txt"):
        path = tmp_path / name
        path.write_text("".join(line + "\n" for line in lines), encoding="utf-8")
        return load_corpus(path)

    return _write


@pytest.fixture
def drug_keywords() -> list[TargetKeyword]:
    return [
        TargetKeyword(surface="heroin", category="drug"),
        TargetKeyword(surface="marijuana", category="drug"),
    ]
