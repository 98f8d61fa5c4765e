from __future__ import annotations

import logging
import random

import numpy as np
import pytest

from euphkit.corpus import MASK_TOKEN, MaskedSentence, TargetKeyword
from euphkit.errors import PipelineError
from euphkit.identification import (
    LabeledContext,
    build_fine_training_set,
    identify,
    sample_negative_contexts,
    split_indices,
    train_coarse,
    train_fine,
    usable_contexts,
)

from conftest import corpus_from_tokens

HEROIN = TargetKeyword(surface="heroin", category="drug")
MARIJUANA = TargetKeyword(surface="marijuana", category="drug")


def synthetic_masked(tokens: list[str], keyword: TargetKeyword | None = None,
                     surface: str = "x", sid: str = "s000000") -> MaskedSentence:
    return MaskedSentence(
        tokens_with_mask=tuple(tokens),
        origin_sentence_id=sid,
        masked_surface=surface,
        origin_keyword=keyword,
    )


def test_training_set_from_documented_sentence():
    corpus = corpus_from_tokens(
        [["i", "have", "xanax", "real", "roxi", "opana", "cole", "and", "heroin", "for", "sale", "."]]
    )
    samples = build_fine_training_set(corpus, [HEROIN])
    assert len(samples) == 1
    assert samples[0].label == HEROIN
    assert samples[0].masked.tokens_with_mask[8] == MASK_TOKEN
    assert samples[0].masked.reconstruct() == corpus.sentences[0].tokens


def test_training_set_one_sample_per_occurrence(caplog):
    corpus = corpus_from_tokens(
        [
            ["heroin", "for", "sale", "a1"],
            ["cheap", "heroin", "here", "a2"],
            ["heroin", "again", "today", "a3"],
        ]
    )
    with caplog.at_level(logging.WARNING):
        samples = build_fine_training_set(corpus, [HEROIN, MARIJUANA])
    assert len(samples) == 3
    assert all(s.label == HEROIN for s in samples)
    assert "marijuana" in caplog.text  # zero-occurrence class warning


def test_labeled_context_label_must_match():
    m = synthetic_masked(["a", MASK_TOKEN, "b"], keyword=HEROIN)
    with pytest.raises(PipelineError):
        LabeledContext(masked=m, label=MARIJUANA)


def test_negative_sampling_balanced_and_deterministic():
    rng = random.Random(3)
    pool = ["alpha", "bravo", "charlie", "delta", "echo", "foxtrot"]
    token_lists = [[rng.choice(pool) for _ in range(5)] for _ in range(40)]
    token_lists += [["heroin", "for", "sale", f"k{i}"] for i in range(5)]
    corpus = corpus_from_tokens(token_lists)

    negatives = sample_negative_contexts(corpus, count=12, seed=11, keywords=[HEROIN])
    assert len(negatives) == 12
    again = sample_negative_contexts(corpus, count=12, seed=11, keywords=[HEROIN])
    assert negatives == again
    different = sample_negative_contexts(corpus, count=12, seed=12, keywords=[HEROIN])
    assert negatives != different

    for m in negatives:
        origin = corpus.sentence_by_id(m.origin_sentence_id)
        assert "heroin" not in origin.tokens
        assert m.reconstruct() == origin.tokens


def test_negative_sampling_rejects_saturated_corpus():
    corpus = corpus_from_tokens([["heroin", "a", "b", "c"], ["heroin", "d", "e", "f"]])
    with pytest.raises(PipelineError):
        sample_negative_contexts(corpus, count=2, seed=0, keywords=[HEROIN])


def test_negative_sampling_needs_enough_sentences():
    corpus = corpus_from_tokens([["a", "b", "c", "d"]])
    with pytest.raises(PipelineError, match="cannot draw"):
        sample_negative_contexts(corpus, count=5, seed=0, keywords=[HEROIN])


def test_split_sizes_and_determinism():
    train, val, test = split_indices(100, seed=5)
    assert (len(train), len(val), len(test)) == (70, 10, 20)
    train2, val2, test2 = split_indices(100, seed=5)
    assert train.tolist() == train2.tolist()
    assert val.tolist() == val2.tolist()
    assert test.tolist() == test2.tolist()
    assert sorted(np.concatenate([train, val, test]).tolist()) == list(range(100))

    for n in (10, 37, 101, 999):
        tr, va, te = split_indices(n, seed=1)
        assert abs(len(tr) - 0.7 * n) <= 1
        assert abs(len(va) - 0.1 * n) <= 1
        assert abs(len(te) - 0.2 * n) <= 1


DRUG_WORDS = ["syringe", "overdose", "dealer", "gram", "stash", "score"]
BENIGN_WORDS = ["weather", "garden", "picnic", "museum", "library", "recipe"]


def separable_data(n_each: int, seed: int):
    rng = random.Random(seed)

    def make(words, sid_prefix):
        out = []
        for i in range(n_each):
            tokens = [rng.choice(words) for _ in range(5)]
            tokens.insert(rng.randrange(len(tokens) + 1), MASK_TOKEN)
            out.append(
                MaskedSentence(
                    tokens_with_mask=tuple(tokens),
                    origin_sentence_id=f"{sid_prefix}{i:05d}",
                    masked_surface="x",
                )
            )
        return out

    return make(DRUG_WORDS, "p"), make(BENIGN_WORDS, "n")


def test_coarse_classifier_separable_accuracy():
    positives, negatives = separable_data(150, seed=2)
    clf = train_coarse(positives, negatives, seed=0)
    assert clf.metrics["test_acc"] >= 0.95
    assert clf.metrics["train_acc"] >= 0.95
    # probabilities land on the right side of the default 0.5 threshold
    p_pos = clf.predict_proba(positives[:10])
    p_neg = clf.predict_proba(negatives[:10])
    assert (p_pos >= 0.5).all()
    assert (p_neg < 0.5).all()


def test_coarse_classifier_rejects_degenerate_input():
    positives, _ = separable_data(10, seed=0)
    with pytest.raises(PipelineError):
        train_coarse(positives, [], seed=0)


def test_fine_classifier_disjoint_vocabulary_accuracy():
    rng = random.Random(4)
    keywords = [TargetKeyword(surface=f"kw{i}", category="drug") for i in range(10)]
    samples = []
    for i, kw in enumerate(keywords):
        vocab = [f"c{i}w{j}" for j in range(6)]
        for s in range(40):
            tokens = [rng.choice(vocab) for _ in range(5)]
            tokens.insert(rng.randrange(len(tokens) + 1), MASK_TOKEN)
            m = MaskedSentence(
                tokens_with_mask=tuple(tokens),
                origin_sentence_id=f"s{i:02d}{s:04d}",
                masked_surface=kw.surface,
                origin_keyword=kw,
            )
            samples.append(LabeledContext(masked=m, label=kw))
    clf = train_fine(samples, seed=0)
    assert clf.metrics["test_acc"] >= 0.5  # 5x the 0.1 random baseline
    dist = clf.predict_distribution([samples[0].masked, samples[-1].masked])
    assert np.allclose(dist.sum(axis=1), 1.0, atol=1e-9)


def test_fine_classifier_identical_classes_near_chance():
    rng = random.Random(9)
    shared = [f"w{j}" for j in range(8)]
    kws = [TargetKeyword(surface="kwa", category="drug"),
           TargetKeyword(surface="kwb", category="drug")]
    samples = []
    for i in range(600):
        kw = kws[i % 2]
        tokens = [rng.choice(shared) for _ in range(5)]
        tokens.insert(rng.randrange(len(tokens) + 1), MASK_TOKEN)
        m = MaskedSentence(
            tokens_with_mask=tuple(tokens),
            origin_sentence_id=f"s{i:05d}",
            masked_surface=kw.surface,
            origin_keyword=kw,
        )
        samples.append(LabeledContext(masked=m, label=kw))
    clf = train_fine(samples, seed=0)
    assert 0.4 <= clf.metrics["test_acc"] <= 0.6


def test_fine_classifier_requires_two_classes():
    samples = []
    for i in range(10):
        m = synthetic_masked(["a", MASK_TOKEN, "b"], keyword=HEROIN, sid=f"s{i:05d}")
        samples.append(LabeledContext(masked=m, label=HEROIN))
    with pytest.raises(PipelineError):
        train_fine(samples, seed=0)


def weed_corpus():
    """'weed' contexts mirror 'marijuana' contexts; 'ice' mirrors nothing."""
    rng = random.Random(21)
    token_lists = []
    for i in range(30):
        token_lists.append(["smoke", "marijuana", "daily", "leaf", "blunt", f"m{i}"])
        token_lists.append(["inject", "heroin", "daily", "needle", "spoon", f"h{i}"])
    for i in range(20):
        token_lists.append(["smoke", "weed", "daily", "leaf", "blunt", f"w{i}"])
    for i in range(60):
        words = ["sunny", "walk", "coffee", "novel", "guitar", "sofa"]
        token_lists.append([rng.choice(words) for _ in range(5)] + [f"n{i}"])
    return corpus_from_tokens(token_lists)


def trained_classifiers(corpus, keywords, seed=0):
    samples = build_fine_training_set(corpus, keywords)
    usable = [s for s in samples if len(s.masked.tokens_with_mask) - 1 >= 3]
    positives = [s.masked for s in usable]
    negatives = sample_negative_contexts(corpus, len(positives), seed, keywords)
    coarse = train_coarse(positives, negatives, seed=seed)
    fine = train_fine(usable, seed=seed)
    return coarse, fine


def test_identify_maps_weed_to_marijuana():
    corpus = weed_corpus()
    keywords = [HEROIN, MARIJUANA]
    coarse, fine = trained_classifiers(corpus, keywords)
    dist = identify("weed", corpus, coarse, fine)

    assert dist.n_contexts_total == 20
    assert dist.n_contexts_kept > 0
    assert sum(dist.probabilities.values()) == pytest.approx(1.0, abs=1e-9)
    assert sum(dist.label_counts.values()) == dist.n_contexts_kept
    assert dist.n_contexts_kept <= dist.n_contexts_total
    assert max(dist.probabilities, key=dist.probabilities.get) == "marijuana"


def test_identify_soft_aggregation_also_normalizes():
    corpus = weed_corpus()
    coarse, fine = trained_classifiers(corpus, [HEROIN, MARIJUANA])
    dist = identify("weed", corpus, coarse, fine, soft=True)
    assert sum(dist.probabilities.values()) == pytest.approx(1.0, abs=1e-9)
    assert max(dist.probabilities, key=dist.probabilities.get) == "marijuana"


def test_identify_unknown_word_rejected():
    corpus = weed_corpus()
    coarse, fine = trained_classifiers(corpus, [HEROIN, MARIJUANA])
    with pytest.raises(PipelineError, match="does not occur"):
        identify("absentword", corpus, coarse, fine)


def test_identify_flags_fully_rejected_words():
    corpus = weed_corpus()
    coarse, fine = trained_classifiers(corpus, [HEROIN, MARIJUANA])
    # "sofa" occurs only in benign noise contexts the coarse filter rejects
    dist = identify("sofa", corpus, coarse, fine)
    assert dist.n_contexts_kept == 0
    assert dist.probabilities == {}
    assert dist.flag == "non-euphemistic usage only"
    assert sum(dist.label_counts.values()) == 0


def test_identify_single_sided_counts_put_all_mass_on_one_class():
    corpus = weed_corpus()
    coarse, fine = trained_classifiers(corpus, [HEROIN, MARIJUANA])
    dist = identify("blunt", corpus, coarse, fine)
    if dist.n_contexts_kept > 0 and dist.label_counts.get("heroin", 0) == 0:
        assert dist.probabilities["marijuana"] == pytest.approx(1.0, abs=1e-9)


def test_usable_contexts_drops_short_ones():
    short = synthetic_masked([MASK_TOKEN, "a"])
    ok = synthetic_masked(["a", MASK_TOKEN, "b", "c"])
    assert usable_contexts([short, ok]) == [ok]


def test_round_trip_of_all_labeled_contexts():
    corpus = weed_corpus()
    samples = build_fine_training_set(corpus, [HEROIN, MARIJUANA])
    assert samples  # non-empty by construction
    for s in samples:
        origin = corpus.sentence_by_id(s.masked.origin_sentence_id)
        assert s.masked.reconstruct() == origin.tokens
