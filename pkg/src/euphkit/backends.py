"""Masked-token scoring backends.

One contract covers both context filtering and candidate generation: a
backend owns a candidate vocabulary and, for any masked sentence, a
normalized probability distribution over that vocabulary at the mask slot.

Two implementations ship: ``CountBackend`` (deterministic context-count
oracle, suitable for tests and desk-scale runs) and the fine-tuned
contextual model in :mod:`euphkit.mlm`.
"""

from __future__ import annotations

import hashlib
import json
from collections import Counter, defaultdict
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import kernels
from .corpus import MASK_TOKEN, Corpus, MaskedSentence
from .errors import BackendError

PAD_ID = -1   # context slot beyond the sentence boundary
UNK_ID = -2   # context token never seen in the oracle's corpus

N_STOP_TOKENS = 50


@dataclass(frozen=True)
class ReplacementRanking:
    """Ordered (token, probability) entries for one masked sentence."""

    entries: tuple[tuple[str, float], ...]
    masked_ref: str

    def tokens(self) -> tuple[str, ...]:
        return tuple(token for token, _ in self.entries)


class Backend:
    """Shared scoring interface; see module docstring for the contract."""

    kind: str = "abstract"

    def __init__(self, vocabulary: tuple[str, ...], stop_tokens: tuple[str, ...],
                 state_ref: str) -> None:
        if not vocabulary:
            raise BackendError("backend vocabulary must be non-empty")
        self.vocabulary = vocabulary
        self.stop_tokens = stop_tokens
        self.state_ref = state_ref
        self._vocab_index = {tok: i for i, tok in enumerate(vocabulary)}

    def score_vector(self, masked: MaskedSentence) -> np.ndarray:
        raise NotImplementedError

    def score(self, candidate: str, masked: MaskedSentence) -> float:
        idx = self._vocab_index.get(candidate)
        if idx is None:
            raise BackendError(f"candidate {candidate!r} not in backend vocabulary")
        return float(self.score_vector(masked)[idx])

    def rank_replacements(self, masked: MaskedSentence, depth: int) -> ReplacementRanking:
        return self.rank_many([masked], depth)[0]

    def rank_many(self, masked: list[MaskedSentence], depth: int) -> list[ReplacementRanking]:
        if depth < 1:
            raise BackendError("depth must be >= 1")
        out = []
        for m in masked:
            vec = self.score_vector(m)
            k = min(depth, len(self.vocabulary))
            # stable sort on -prob keeps ascending (lexicographic) id order on ties
            order = np.argsort(-vec, kind="stable")[:k]
            entries = tuple((self.vocabulary[i], float(vec[i])) for i in order)
            out.append(ReplacementRanking(entries=entries, masked_ref=m.ref))
        return out

    def sum_scores(self, masked: list[MaskedSentence]) -> tuple[np.ndarray, np.ndarray]:
        """(weights, support): elementwise sums of score vectors, and per-token
        counts of masked sentences carrying above-floor evidence for the token."""
        weights = np.zeros(len(self.vocabulary), np.float64)
        support = np.zeros(len(self.vocabulary), np.int64)
        floor = 1.0 / len(self.vocabulary)
        for m in masked:
            vec = self.score_vector(m)
            weights += vec
            support += vec > floor
        return weights, support

    def save(self, directory: str | Path) -> Path:
        raise NotImplementedError


def _context_keys(tokens, pos: int, window: int, span: int,
                  vocab_index: dict[str, int]):
    """Left/right context-id tuples for the token span starting at pos."""
    n = len(tokens)
    left = []
    for j in range(pos - window, pos):
        left.append(PAD_ID if j < 0 else vocab_index.get(tokens[j], UNK_ID))
    right = []
    for j in range(pos + span, pos + span + window):
        right.append(PAD_ID if j >= n else vocab_index.get(tokens[j], UNK_ID))
    return tuple(left), tuple(right)


class CountBackend(Backend):
    """Deterministic oracle: context-window counts with additive smoothing.

    h(candidate | masked) = (count + smoothing) / denom, where count is the
    number of corpus occurrences of the candidate sharing the masked slot's
    left window plus those sharing its right window, and
    denom = (left_total + right_total) + smoothing * n_vocab.
    """

    kind = "count-oracle"

    def __init__(self, vocabulary, stop_tokens, window: int, smoothing: float,
                 left_counts: dict, right_counts: dict) -> None:
        self.window = window
        self.smoothing = smoothing
        self._left_counts = left_counts
        self._right_counts = right_counts
        self._left_rows, self._left_tables = _to_csr(left_counts)
        self._right_rows, self._right_tables = _to_csr(right_counts)
        state_ref = "count-oracle:" + self._fingerprint(vocabulary, window, smoothing)
        super().__init__(vocabulary, stop_tokens, state_ref)

    def _fingerprint(self, vocabulary, window, smoothing) -> str:
        digest = hashlib.sha256()
        digest.update(f"{window}|{smoothing}|{len(vocabulary)}".encode())
        for side in (self._left_counts, self._right_counts):
            for key in sorted(side):
                digest.update(repr(key).encode())
                digest.update(repr(sorted(side[key].items())).encode())
        return digest.hexdigest()[:16]

    @property
    def _tables(self):
        return self._left_tables + self._right_tables

    def _row_indices(self, masked: list[MaskedSentence]):
        lrow = np.empty(len(masked), np.int64)
        rrow = np.empty(len(masked), np.int64)
        for i, m in enumerate(masked):
            lkey, rkey = _context_keys(
                m.tokens_with_mask, m.mask_index, self.window, 1, self._vocab_index
            )
            lrow[i] = self._left_rows.get(lkey, -1)
            rrow[i] = self._right_rows.get(rkey, -1)
        return lrow, rrow

    def score_vector(self, masked: MaskedSentence) -> np.ndarray:
        lrow, rrow = self._row_indices([masked])
        weights, _ = kernels.accumulate_weights(
            lrow, rrow, self._tables, self.smoothing, len(self.vocabulary)
        )
        return weights

    def rank_many(self, masked: list[MaskedSentence], depth: int) -> list[ReplacementRanking]:
        if depth < 1:
            raise BackendError("depth must be >= 1")
        if not masked:
            return []
        lrow, rrow = self._row_indices(masked)
        ids, probs = kernels.top_depth(
            lrow, rrow, self._tables, self.smoothing, len(self.vocabulary), depth
        )
        out = []
        for i, m in enumerate(masked):
            entries = tuple(
                (self.vocabulary[ids[i, j]], float(probs[i, j]))
                for j in range(ids.shape[1])
            )
            out.append(ReplacementRanking(entries=entries, masked_ref=m.ref))
        return out

    def sum_scores(self, masked: list[MaskedSentence]) -> tuple[np.ndarray, np.ndarray]:
        if not masked:
            return (
                np.zeros(len(self.vocabulary), np.float64),
                np.zeros(len(self.vocabulary), np.int64),
            )
        lrow, rrow = self._row_indices(masked)
        return kernels.accumulate_weights(
            lrow, rrow, self._tables, self.smoothing, len(self.vocabulary)
        )

    def save(self, directory: str | Path) -> Path:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        meta = {
            "kind": self.kind,
            "window": self.window,
            "smoothing": self.smoothing,
            "n_vocab": len(self.vocabulary),
            "stop_tokens": list(self.stop_tokens),
            "state_ref": self.state_ref,
        }
        (directory / "meta.json").write_text(
            json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
        (directory / "vocab.txt").write_text(
            "".join(tok + "\n" for tok in self.vocabulary), encoding="utf-8"
        )
        with (directory / "contexts.tsv").open("w", encoding="utf-8") as fh:
            for side_name, side in (("left", self._left_counts), ("right", self._right_counts)):
                for key in sorted(side):
                    ctx = " ".join("<pad>" if t == PAD_ID else self.vocabulary[t] for t in key)
                    for tok_id, count in sorted(side[key].items()):
                        fh.write(f"{side_name}\t{ctx}\t{self.vocabulary[tok_id]}\t{count}\n")
        return directory

    @classmethod
    def load(cls, directory: str | Path) -> "CountBackend":
        directory = Path(directory)
        meta = json.loads((directory / "meta.json").read_text(encoding="utf-8"))
        vocabulary = tuple(
            (directory / "vocab.txt").read_text(encoding="utf-8").splitlines()
        )
        vocab_index = {tok: i for i, tok in enumerate(vocabulary)}
        left_counts: dict = defaultdict(Counter)
        right_counts: dict = defaultdict(Counter)
        with (directory / "contexts.tsv").open(encoding="utf-8") as fh:
            for line in fh:
                side_name, ctx, token, count = line.rstrip("\n").split("\t")
                key = tuple(
                    PAD_ID if part == "<pad>" else vocab_index[part]
                    for part in ctx.split(" ")
                )
                side = left_counts if side_name == "left" else right_counts
                side[key][vocab_index[token]] += int(count)
        return cls(
            vocabulary=vocabulary,
            stop_tokens=tuple(meta["stop_tokens"]),
            window=int(meta["window"]),
            smoothing=float(meta["smoothing"]),
            left_counts=dict(left_counts),
            right_counts=dict(right_counts),
        )


def _to_csr(counts: dict):
    """CSR arrays (ptr, tok, cnt, totals) with rows in sorted-key order."""
    keys = sorted(counts)
    rows = {key: i for i, key in enumerate(keys)}
    ptr = np.zeros(len(keys) + 1, np.int64)
    toks: list[int] = []
    cnts: list[float] = []
    totals = np.zeros(len(keys), np.float64)
    for i, key in enumerate(keys):
        entries = sorted(counts[key].items())
        for tok, count in entries:
            toks.append(tok)
            cnts.append(float(count))
        totals[i] = float(sum(count for _, count in entries))
        ptr[i + 1] = len(toks)
    return rows, (
        ptr,
        np.asarray(toks, np.int64),
        np.asarray(cnts, np.float64),
        totals,
    )


def corpus_stop_tokens(corpus: Corpus, n: int = N_STOP_TOKENS) -> tuple[str, ...]:
    """The n highest-document-frequency tokens, ties broken lexicographically."""
    df = corpus.document_frequency()
    ranked = sorted(df.items(), key=lambda kv: (-kv[1], kv[0]))
    return tuple(tok for tok, _ in ranked[:n])


def build_count_oracle(
    corpus: Corpus,
    window: int = 1,
    smoothing: float = 0.01,
    n_stop: int = N_STOP_TOKENS,
) -> CountBackend:
    """Count every (context window -> filler token) pair in the corpus."""
    if len(corpus) == 0:
        raise BackendError("cannot build a count oracle from an empty corpus")
    if window < 1:
        raise BackendError("window must be >= 1")
    if smoothing <= 0:
        raise BackendError("smoothing must be > 0")
    vocabulary = tuple(sorted(corpus.vocabulary))
    vocab_index = {tok: i for i, tok in enumerate(vocabulary)}
    left_counts: dict = defaultdict(Counter)
    right_counts: dict = defaultdict(Counter)
    for sentence in corpus.sentences:
        tokens = sentence.tokens
        for pos, token in enumerate(tokens):
            lkey, rkey = _context_keys(tokens, pos, window, 1, vocab_index)
            tok_id = vocab_index[token]
            left_counts[lkey][tok_id] += 1
            right_counts[rkey][tok_id] += 1
    return CountBackend(
        vocabulary=vocabulary,
        stop_tokens=corpus_stop_tokens(corpus, n_stop),
        window=window,
        smoothing=smoothing,
        left_counts=dict(left_counts),
        right_counts=dict(right_counts),
    )


def load_backend(directory: str | Path) -> Backend:
    """Reload a persisted backend of any kind."""
    directory = Path(directory)
    meta_path = directory / "meta.json"
    if not meta_path.is_file():
        raise BackendError(f"no backend state under {directory}")
    kind = json.loads(meta_path.read_text(encoding="utf-8")).get("kind")
    if kind == CountBackend.kind:
        return CountBackend.load(directory)
    if kind == "contextual-mlm":
        from .mlm import ContextualBackend

        return ContextualBackend.load(directory)
    raise BackendError(f"unknown backend kind {kind!r}")


def rank_replacements(handle: Backend, masked: MaskedSentence, depth: int) -> ReplacementRanking:
    return handle.rank_replacements(masked, depth)


def score(handle: Backend, candidate: str, masked: MaskedSentence) -> float:
    return handle.score(candidate, masked)
