"""Euphemism detection: denoise keyword contexts, then rank candidates.

Pipeline: extract masked keyword contexts (corpus module), keep only the
contexts whose top-t replacement list contains a target keyword, then weigh
every vocabulary word by its summed replacement probability over the kept
contexts.
"""

from __future__ import annotations

import json
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

from .backends import Backend
from .corpus import (
    MASK_TOKEN,
    Corpus,
    MaskedSentence,
    TargetKeyword,
    extract_masked_sentences,
    extract_word_contexts,
)
from .errors import PipelineError


@dataclass(frozen=True)
class FilterDecision:
    masked: MaskedSentence
    kept: bool
    best_keyword_rank: int | None

    def __post_init__(self) -> None:
        if self.kept != (self.best_keyword_rank is not None):
            raise PipelineError("kept flag must match presence of best_keyword_rank")


@dataclass(frozen=True)
class CandidateEntry:
    word: str
    weight: float
    support: int


@dataclass(frozen=True)
class CandidateRanking:
    entries: tuple[CandidateEntry, ...]
    params: dict = field(hash=False)

    def words(self) -> tuple[str, ...]:
        return tuple(e.word for e in self.entries)

    def top(self, k: int) -> tuple[CandidateEntry, ...]:
        return self.entries[:k]


def filter_contexts(
    masked: list[MaskedSentence],
    keywords: list[TargetKeyword],
    handle: Backend,
    t: int,
) -> tuple[list[MaskedSentence], list[FilterDecision]]:
    """Keep masked sentences whose top-t replacements contain a keyword.

    Only single-token keyword surfaces can satisfy the membership test;
    backends rank single tokens.
    """
    if t < 1:
        raise PipelineError("threshold t must be >= 1")
    keyword_tokens = {k.surface for k in keywords if len(k.tokens) == 1}
    kept: list[MaskedSentence] = []
    decisions: list[FilterDecision] = []
    rankings = handle.rank_many(masked, t)
    for m, ranking in zip(masked, rankings):
        best: int | None = None
        for rank, (token, _prob) in enumerate(ranking.entries, start=1):
            if token in keyword_tokens:
                best = rank
                break
        if best is not None:
            kept.append(m)
        decisions.append(FilterDecision(masked=m, kept=best is not None, best_keyword_rank=best))
    return kept, decisions


def _is_punctuation(token: str) -> bool:
    return not any(ch.isalnum() for ch in token)


def generate_candidates(
    kept: list[MaskedSentence],
    handle: Backend,
    keywords: list[TargetKeyword],
) -> CandidateRanking:
    """Rank every vocabulary word by its summed replacement probability.

    Keyword surfaces, the mask token, punctuation, and the backend's
    high-document-frequency stop tokens are removed from the output only;
    scoring stays normalized over the full vocabulary.
    """
    if not kept:
        raise PipelineError("no informative contexts; lower t or check keywords")
    weights, support = handle.sum_scores(kept)
    excluded = {k.surface for k in keywords}
    excluded.add(MASK_TOKEN)
    excluded.update(handle.stop_tokens)
    entries = [
        CandidateEntry(word=word, weight=float(weights[i]), support=int(support[i]))
        for i, word in enumerate(handle.vocabulary)
        if word not in excluded and not _is_punctuation(word)
    ]
    entries.sort(key=lambda e: (-e.weight, e.word))
    return CandidateRanking(
        entries=tuple(entries),
        params={"t": None, "backend": handle.kind, "n_contexts": len(kept)},
    )


def detect(
    corpus: Corpus,
    keywords: list[TargetKeyword],
    handle: Backend,
    t: int,
    run_dir: str | Path | None = None,
    extra_params: dict | None = None,
) -> CandidateRanking:
    """Full detection pass; optionally persists ranking and filter decisions."""
    masked = extract_masked_sentences(corpus, keywords)
    if not masked:
        raise PipelineError("no keyword occurrences in corpus; nothing to filter")
    kept, decisions = filter_contexts(masked, keywords, handle, t)
    ranking = generate_candidates(kept, handle, keywords)
    ranking.params["t"] = t
    ranking.params.update(extra_params or {})
    if run_dir is not None:
        persist_detection(Path(run_dir), ranking, decisions)
    return ranking


def persist_detection(
    run_dir: Path, ranking: CandidateRanking, decisions: list[FilterDecision]
) -> dict[str, Path]:
    rankings_dir = run_dir / "rankings"
    rankings_dir.mkdir(parents=True, exist_ok=True)
    ranking_path = rankings_dir / "candidates.tsv"
    with ranking_path.open("w", encoding="utf-8") as fh:
        fh.write("rank\tword\tweight\tsupport\n")
        for rank, entry in enumerate(ranking.entries, start=1):
            fh.write(f"{rank}\t{entry.word}\t{entry.weight!r}\t{entry.support}\n")

    decisions_path = rankings_dir / "filter_decisions.jsonl"
    with decisions_path.open("w", encoding="utf-8") as fh:
        for d in decisions:
            record = {
                "masked_ref": d.masked.ref,
                "tokens": list(d.masked.tokens_with_mask),
                "keyword": d.masked.origin_keyword.surface if d.masked.origin_keyword else None,
                "kept": d.kept,
                "best_keyword_rank": d.best_keyword_rank,
            }
            fh.write(json.dumps(record, sort_keys=True) + "\n")

    params_path = rankings_dir / "params.json"
    params_path.write_text(
        json.dumps(ranking.params, indent=2, sort_keys=True) + "\n", encoding="utf-8"
    )
    return {"ranking": ranking_path, "decisions": decisions_path, "params": params_path}


def load_ranking(run_dir: Path) -> CandidateRanking:
    ranking_path = run_dir / "rankings" / "candidates.tsv"
    if not ranking_path.is_file():
        raise PipelineError(f"no detection ranking under {run_dir}")
    entries = []
    with ranking_path.open(encoding="utf-8") as fh:
        next(fh)
        for line in fh:
            _rank, word, weight, support = line.rstrip("\n").split("\t")
            entries.append(CandidateEntry(word=word, weight=float(weight), support=int(support)))
    params_path = run_dir / "rankings" / "params.json"
    params = json.loads(params_path.read_text(encoding="utf-8")) if params_path.is_file() else {}
    return CandidateRanking(entries=tuple(entries), params=params)


def candidate_contexts(
    corpus: Corpus,
    words: list[str],
    keywords: list[TargetKeyword],
    handle: Backend,
    t: int,
    per_word: int = 10,
) -> dict[str, list[dict]]:
    """Filter-kept example contexts for each candidate word, for review.

    A candidate's contexts are its own masked sentences, run through the same
    top-t keyword test used for detection; the informative ones survive.
    """
    out: dict[str, list[dict]] = {}
    for word in words:
        contexts = extract_word_contexts(corpus, word)
        kept, _ = filter_contexts(contexts, keywords, handle, t)
        examples = []
        for m in kept[:per_word]:
            origin = corpus.sentence_by_id(m.origin_sentence_id)
            examples.append(
                {
                    "sentence_id": origin.id,
                    "tokens": list(origin.tokens),
                    "highlight": m.origin_start + m.mask_index,
                }
            )
        out[word] = examples
    return out


def bigram_completions(corpus: Corpus, word: str, limit: int = 3) -> list[str]:
    """Most frequent two-word phrases containing the word, for report notes."""
    counts: Counter = Counter()
    for sentence in corpus.sentences:
        toks = sentence.tokens
        for i, tok in enumerate(toks):
            if tok != word:
                continue
            if i > 0 and not _is_punctuation(toks[i - 1]):
                counts[f"{toks[i - 1]} {word}"] += 1
            if i + 1 < len(toks) and not _is_punctuation(toks[i + 1]):
                counts[f"{word} {toks[i + 1]}"] += 1
    ranked = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    return [phrase for phrase, _ in ranked[:limit]]
