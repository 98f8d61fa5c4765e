"""Contextual masked-language-model backend.

Wraps a transformer MLM (BERT-style) behind the shared Backend contract and
provides domain-adaptive fine-tuning on the raw corpus. The candidate
vocabulary is the model's whole-word tokens: subword continuation pieces and
special tokens are never valid euphemism candidates, so the mask-slot
distribution is renormalized over the whole-word subset.

torch and transformers are imported lazily; install the ``mlm`` extra.
"""

from __future__ import annotations

import json
import logging
import math
from pathlib import Path

import numpy as np

from .backends import Backend, corpus_stop_tokens
from .corpus import MASK_TOKEN, Corpus, MaskedSentence
from .errors import BackendError

logger = logging.getLogger(__name__)

DEFAULT_HYPERPARAMS = {"epochs": 3, "batch_size": 16, "learning_rate": 5e-5, "seed": 0}

# standard BERT dynamic masking recipe
MASK_FRACTION = 0.15
REPLACE_WITH_MASK = 0.8
REPLACE_WITH_RANDOM = 0.1


def _import_torch():
    try:
        import torch
        from transformers import AutoModelForMaskedLM, AutoTokenizer
    except ImportError as exc:
        raise BackendError(
            "contextual-mlm backend requires torch and transformers "
            "(pip install 'euphkit[mlm]')"
        ) from exc
    return torch, AutoModelForMaskedLM, AutoTokenizer


def _whole_word_tokens(tokenizer) -> list[str]:
    special = set(tokenizer.all_special_tokens)
    out = []
    for token in tokenizer.get_vocab():
        if token in special or token.startswith("##"):
            continue
        if token.startswith("[unused"):
            continue
        out.append(token)
    return sorted(out)


class ContextualBackend(Backend):
    kind = "contextual-mlm"

    def __init__(self, model, tokenizer, stop_tokens, state_ref) -> None:
        self._model = model.eval()
        self._tokenizer = tokenizer
        vocabulary = tuple(_whole_word_tokens(tokenizer))
        super().__init__(vocabulary, stop_tokens, state_ref)
        vocab_map = tokenizer.get_vocab()
        self._vocab_token_ids = np.array([vocab_map[t] for t in vocabulary], np.int64)
        self._max_length = int(getattr(model.config, "max_position_embeddings", 512))

    def _encode(self, masked: MaskedSentence):
        words = [
            self._tokenizer.mask_token if tok == MASK_TOKEN else tok
            for tok in masked.tokens_with_mask
        ]
        return " ".join(words)

    def _mask_distributions(self, masked: list[MaskedSentence]) -> np.ndarray:
        """(n, |vocabulary|) rows: renormalized whole-word softmax at the mask."""
        import torch

        texts = [self._encode(m) for m in masked]
        rows = np.zeros((len(masked), len(self.vocabulary)), np.float64)
        mask_id = self._tokenizer.mask_token_id
        batch_size = 32
        with torch.no_grad():
            for start in range(0, len(texts), batch_size):
                chunk = texts[start : start + batch_size]
                enc = self._tokenizer(
                    chunk,
                    return_tensors="pt",
                    padding=True,
                    truncation=True,
                    max_length=self._max_length,
                )
                logits = self._model(**enc).logits
                for i in range(len(chunk)):
                    positions = (enc["input_ids"][i] == mask_id).nonzero(as_tuple=True)[0]
                    if len(positions) != 1:
                        raise BackendError(
                            "masked sentence must contain exactly one mask slot "
                            "after tokenization"
                        )
                    probs = torch.softmax(logits[i, positions[0]].double(), dim=-1).numpy()
                    subset = probs[self._vocab_token_ids]
                    rows[start + i] = subset / subset.sum()
        return rows

    def score_vector(self, masked: MaskedSentence) -> np.ndarray:
        return self._mask_distributions([masked])[0]

    def rank_many(self, masked: list[MaskedSentence], depth: int) -> list:
        if depth < 1:
            raise BackendError("depth must be >= 1")
        if not masked:
            return []
        from .backends import ReplacementRanking

        rows = self._mask_distributions(masked)
        k = min(depth, len(self.vocabulary))
        out = []
        for i, m in enumerate(masked):
            order = np.argsort(-rows[i], kind="stable")[:k]
            entries = tuple((self.vocabulary[j], float(rows[i][j])) for j in order)
            out.append(ReplacementRanking(entries=entries, masked_ref=m.ref))
        return out

    def sum_scores(self, masked: list[MaskedSentence]) -> tuple[np.ndarray, np.ndarray]:
        weights = np.zeros(len(self.vocabulary), np.float64)
        support = np.zeros(len(self.vocabulary), np.int64)
        floor = 1.0 / len(self.vocabulary)
        batch = 256
        for start in range(0, len(masked), batch):
            rows = self._mask_distributions(masked[start : start + batch])
            weights += rows.sum(axis=0)
            support += (rows > floor).sum(axis=0)
        return weights, support

    def save(self, directory: str | Path) -> Path:
        directory = Path(directory)
        directory.mkdir(parents=True, exist_ok=True)
        self._model.save_pretrained(directory)
        self._tokenizer.save_pretrained(directory)
        meta = {
            "kind": self.kind,
            "stop_tokens": list(self.stop_tokens),
            "state_ref": self.state_ref,
        }
        (directory / "meta.json").write_text(
            json.dumps(meta, indent=2, sort_keys=True) + "\n", encoding="utf-8"
        )
        return directory

    @classmethod
    def load(cls, directory: str | Path) -> "ContextualBackend":
        torch, AutoModelForMaskedLM, AutoTokenizer = _import_torch()
        directory = Path(directory)
        meta = json.loads((directory / "meta.json").read_text(encoding="utf-8"))
        model = AutoModelForMaskedLM.from_pretrained(directory)
        tokenizer = AutoTokenizer.from_pretrained(directory)
        return cls(
            model=model,
            tokenizer=tokenizer,
            stop_tokens=tuple(meta["stop_tokens"]),
            state_ref=meta["state_ref"],
        )


def _mask_batch(input_ids, special_mask, tokenizer, generator, torch):
    """Apply the 80/10/10 dynamic masking recipe; -100 labels skip loss."""
    labels = input_ids.clone()
    probability = torch.full(input_ids.shape, MASK_FRACTION)
    probability.masked_fill_(special_mask, 0.0)
    selected = torch.bernoulli(probability, generator=generator).bool()
    labels[~selected] = -100

    replace_mask = (
        torch.bernoulli(torch.full(input_ids.shape, REPLACE_WITH_MASK), generator=generator).bool()
        & selected
    )
    input_ids[replace_mask] = tokenizer.mask_token_id

    random_frac = REPLACE_WITH_RANDOM / (1.0 - REPLACE_WITH_MASK)
    random_mask = (
        torch.bernoulli(torch.full(input_ids.shape, random_frac), generator=generator).bool()
        & selected
        & ~replace_mask
    )
    random_ids = torch.randint(
        len(tokenizer), input_ids.shape, dtype=input_ids.dtype, generator=generator
    )
    input_ids[random_mask] = random_ids[random_mask]
    return input_ids, labels


def fine_tune(
    corpus: Corpus,
    base_model_ref: str,
    hyperparams: dict | None = None,
    out_dir: str | Path = "mlm-backend",
) -> ContextualBackend:
    """Adapt a pretrained MLM to the corpus language and persist the result.

    ``epochs = 0`` persists the unmodified base model. Fixed seed gives
    reproducible weights on identical hardware and software.
    """
    torch, AutoModelForMaskedLM, AutoTokenizer = _import_torch()
    if len(corpus) == 0:
        raise BackendError("cannot fine-tune on an empty corpus")
    params = dict(DEFAULT_HYPERPARAMS)
    params.update(hyperparams or {})
    seed = int(params["seed"])
    epochs = int(params["epochs"])
    batch_size = int(params["batch_size"])
    learning_rate = float(params["learning_rate"])

    try:
        tokenizer = AutoTokenizer.from_pretrained(base_model_ref)
        model = AutoModelForMaskedLM.from_pretrained(base_model_ref)
    except Exception as exc:
        raise BackendError(f"base model unavailable: {base_model_ref} ({exc})") from exc

    torch.manual_seed(seed)
    generator = torch.Generator().manual_seed(seed)

    texts = [" ".join(s.tokens) for s in corpus.sentences]
    max_length = int(getattr(model.config, "max_position_embeddings", 512))
    encoded = tokenizer(
        texts,
        padding=True,
        truncation=True,
        max_length=max_length,
        return_tensors="pt",
        return_special_tokens_mask=True,
    )
    special_mask = encoded["special_tokens_mask"].bool() | (
        encoded["attention_mask"] == 0
    )

    if epochs > 0:
        optimizer = torch.optim.AdamW(model.parameters(), lr=learning_rate)
        model.train()
        n = encoded["input_ids"].shape[0]
        try:
            for epoch in range(epochs):
                order = torch.randperm(n, generator=generator)
                epoch_loss = 0.0
                n_batches = 0
                for start in range(0, n, batch_size):
                    idx = order[start : start + batch_size]
                    input_ids, labels = _mask_batch(
                        encoded["input_ids"][idx].clone(),
                        special_mask[idx],
                        tokenizer,
                        generator,
                        torch,
                    )
                    if (labels != -100).sum() == 0:
                        continue
                    out = model(
                        input_ids=input_ids,
                        attention_mask=encoded["attention_mask"][idx],
                        labels=labels,
                    )
                    out.loss.backward()
                    optimizer.step()
                    optimizer.zero_grad()
                    epoch_loss += out.loss.detach().item()
                    n_batches += 1
                if n_batches:
                    logger.info(
                        "fine-tune epoch %d/%d: mean masked loss %.4f",
                        epoch + 1,
                        epochs,
                        epoch_loss / n_batches,
                    )
        except (MemoryError, RuntimeError) as exc:
            if isinstance(exc, RuntimeError) and "memory" not in str(exc).lower():
                raise
            raise BackendError(
                f"out of memory while fine-tuning on {len(corpus)} sentences; "
                "reduce batch_size or corpus size"
            ) from exc
        model.eval()

    out_dir = Path(out_dir)
    handle = ContextualBackend(
        model=model,
        tokenizer=tokenizer,
        stop_tokens=corpus_stop_tokens(corpus),
        state_ref=str(out_dir),
    )
    handle.save(out_dir)
    return handle
