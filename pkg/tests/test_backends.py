from __future__ import annotations

import json
import os
import random
import subprocess
import sys

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from euphkit.backends import (
    CountBackend,
    build_count_oracle,
    load_backend,
    rank_replacements,
    score,
)
from euphkit.corpus import MASK_TOKEN, MaskedSentence
from euphkit.errors import BackendError

import oracles
from conftest import corpus_from_tokens


def masked(tokens: list[str], surface: str = "x") -> MaskedSentence:
    return MaskedSentence(
        tokens_with_mask=tuple(tokens),
        origin_sentence_id="s000000",
        masked_surface=surface,
    )


@pytest.fixture
def addict_corpus():
    # Three distinct sentences share the "[MASK] addict" right window for
    # "heroin", one for "coffee": 3 vs 1 context matches before smoothing.
    return corpus_from_tokens(
        [
            ["heroin", "addict", "one"],
            ["heroin", "addict", "two"],
            ["heroin", "addict", "three"],
            ["coffee", "addict", "four"],
        ]
    )


def test_heroin_outranks_coffee(addict_corpus):
    handle = build_count_oracle(addict_corpus, window=1, smoothing=0.01)
    m = masked(["former", MASK_TOKEN, "addict"])
    # hand count: left window ("former",) unseen; right window ("addict",)
    # holds heroin x3, coffee x1, total 4; vocab has 7 tokens.
    denom = (0.0 + 4.0) + 0.01 * 7
    assert score(handle, "heroin", m) == (3 + 0.01) / denom
    assert score(handle, "coffee", m) == (1 + 0.01) / denom

    ranking = rank_replacements(handle, m, 2)
    assert ranking.tokens() == ("heroin", "coffee")
    assert ranking.entries[0][1] > ranking.entries[1][1]


def test_unseen_context_is_uniform(addict_corpus):
    handle = build_count_oracle(addict_corpus, window=1, smoothing=0.01)
    m = masked(["qq", MASK_TOKEN, "zz"])
    vec = handle.score_vector(m)
    assert np.allclose(vec, 1.0 / len(handle.vocabulary))


def test_window_two_collapses_when_only_window_one_matches():
    corpus = corpus_from_tokens([["aa", "heroin", "addict", "bb"]])
    m = masked(["cc", MASK_TOKEN, "addict", "dd"])
    w1 = build_count_oracle(corpus, window=1, smoothing=0.01)
    assert w1.rank_replacements(m, 1).tokens() == ("heroin",)
    assert w1.score("heroin", m) > 1.0 / len(w1.vocabulary)

    # window 2 contexts ((pad, cc) and (addict, dd)) never occur in the corpus
    w2 = build_count_oracle(corpus, window=2, smoothing=0.01)
    vec = w2.score_vector(m)
    assert np.allclose(vec, 1.0 / len(w2.vocabulary))


def test_depth_one_returns_argmax(addict_corpus):
    handle = build_count_oracle(addict_corpus)
    m = masked(["former", MASK_TOKEN, "addict"])
    ranking = handle.rank_replacements(m, 1)
    assert len(ranking.entries) == 1
    assert ranking.tokens() == ("heroin",)


def test_equal_counts_break_lexicographically():
    corpus = corpus_from_tokens([["heroin", "addict", "pa"], ["coffee", "addict", "pb"]])
    handle = build_count_oracle(corpus)
    m = masked(["former", MASK_TOKEN, "addict"])
    ranking = handle.rank_replacements(m, 2)
    assert ranking.tokens() == ("coffee", "heroin")


def test_depth_beyond_vocabulary_returns_full_ranking(addict_corpus):
    handle = build_count_oracle(addict_corpus)
    m = masked(["former", MASK_TOKEN, "addict"])
    ranking = handle.rank_replacements(m, 10_000)
    assert len(ranking.entries) == len(handle.vocabulary)
    assert sorted(ranking.tokens()) == sorted(handle.vocabulary)


def test_score_sums_to_one(addict_corpus):
    handle = build_count_oracle(addict_corpus)
    for tokens in (["former", MASK_TOKEN, "addict"], ["qq", MASK_TOKEN], [MASK_TOKEN, "one"]):
        total = sum(handle.score(tok, masked(tokens)) for tok in handle.vocabulary)
        assert total == pytest.approx(1.0, abs=1e-6)


def test_small_smoothing_limit_gives_count_fraction():
    # right context ("addict",) seen 4 times, heroin fills 2 of 4
    corpus = corpus_from_tokens(
        [
            ["heroin", "addict", "pa"],
            ["heroin", "addict", "pb"],
            ["coffee", "addict", "pc"],
            ["tea", "addict", "pd"],
        ]
    )
    handle = build_count_oracle(corpus, window=1, smoothing=1e-12)
    value = handle.score("heroin", masked(["unseenword", MASK_TOKEN, "addict"]))
    assert value == pytest.approx(0.5, abs=1e-9)


def test_out_of_vocabulary_candidate_rejected(addict_corpus):
    handle = build_count_oracle(addict_corpus)
    with pytest.raises(BackendError, match="not in backend vocabulary"):
        handle.score("nosuchtoken", masked(["former", MASK_TOKEN, "addict"]))


def test_build_validations(addict_corpus):
    with pytest.raises(BackendError):
        build_count_oracle(addict_corpus, window=0)
    with pytest.raises(BackendError):
        build_count_oracle(addict_corpus, smoothing=0.0)


def test_rank_many_matches_single_calls(addict_corpus):
    handle = build_count_oracle(addict_corpus)
    batch = [
        masked(["former", MASK_TOKEN, "addict"]),
        masked(["qq", MASK_TOKEN, "zz"]),
        masked([MASK_TOKEN, "addict", "one"]),
    ]
    together = handle.rank_many(batch, 4)
    for m, ranking in zip(batch, together):
        assert handle.rank_replacements(m, 4).entries == ranking.entries


def test_deterministic_rebuild(addict_corpus):
    a = build_count_oracle(addict_corpus, window=1, smoothing=0.01)
    b = build_count_oracle(addict_corpus, window=1, smoothing=0.01)
    assert a.state_ref == b.state_ref
    m = masked(["former", MASK_TOKEN, "addict"])
    assert a.rank_replacements(m, 8).entries == b.rank_replacements(m, 8).entries


def test_save_load_round_trip(addict_corpus, tmp_path):
    handle = build_count_oracle(addict_corpus, window=1, smoothing=0.01)
    handle.save(tmp_path / "backend")
    reloaded = load_backend(tmp_path / "backend")
    assert isinstance(reloaded, CountBackend)
    assert reloaded.state_ref == handle.state_ref
    assert reloaded.vocabulary == handle.vocabulary
    assert reloaded.stop_tokens == handle.stop_tokens
    m = masked(["former", MASK_TOKEN, "addict"])
    assert reloaded.rank_replacements(m, 8).entries == handle.rank_replacements(m, 8).entries

    first = (tmp_path / "backend" / "contexts.tsv").read_bytes()
    handle.save(tmp_path / "backend2")
    assert (tmp_path / "backend2" / "contexts.tsv").read_bytes() == first


TOKENS = ["ice", "pot", "grass", "snow", "deal", "cold", "cheap", "buy", "x1", "x2"]


def random_token_lists(rng: random.Random, n_sentences: int) -> list[list[str]]:
    return [
        [rng.choice(TOKENS) for _ in range(rng.randint(1, 9))]
        for _ in range(n_sentences)
    ]


@pytest.mark.parametrize("seed", range(8))
@pytest.mark.parametrize("window", [1, 2])
def test_scores_match_brute_force(seed, window):
    rng = random.Random(seed)
    token_lists = random_token_lists(rng, rng.randint(2, 12))
    corpus = corpus_from_tokens(token_lists)
    handle = build_count_oracle(corpus, window=window, smoothing=0.01)

    sentence = rng.choice(token_lists)
    pos = rng.randrange(len(sentence))
    masked_tokens = sentence[:pos] + [MASK_TOKEN] + sentence[pos + 1 :]
    m = masked(masked_tokens)

    expected = oracles.score_map(token_lists, masked_tokens, window, 0.01)
    for token, expected_prob in expected.items():
        assert handle.score(token, m) == expected_prob

    expected_rank = oracles.rank(token_lists, masked_tokens, window, 0.01, 5)
    got = handle.rank_replacements(m, 5)
    assert list(got.entries) == [(tok, prob) for tok, prob in expected_rank]


@settings(max_examples=60, deadline=None)
@given(
    st.lists(
        st.lists(st.sampled_from(TOKENS), min_size=1, max_size=8),
        min_size=1,
        max_size=8,
    ),
    st.integers(min_value=0, max_value=7),
    st.integers(min_value=1, max_value=12),
)
def test_rank_consistency_property(token_lists, pick, depth):
    """rank_replacements equals the depth largest score() values, tie rule applied."""
    corpus = corpus_from_tokens(token_lists)
    handle = build_count_oracle(corpus)
    sentence = token_lists[pick % len(token_lists)]
    masked_tokens = [MASK_TOKEN] + sentence
    m = masked(masked_tokens)

    by_score = sorted(
        ((tok, handle.score(tok, m)) for tok in handle.vocabulary),
        key=lambda kv: (-kv[1], kv[0]),
    )[: min(depth, len(handle.vocabulary))]
    assert list(handle.rank_replacements(m, depth).entries) == by_score

    total = sum(prob for _tok, prob in by_score) if depth >= len(handle.vocabulary) else None
    if total is not None:
        assert total == pytest.approx(1.0, abs=1e-6)


def test_numpy_fallback_path_matches(addict_corpus, tmp_path):
    """EUPHKIT_NO_NUMBA selects the numpy kernels with identical results."""
    handle = build_count_oracle(addict_corpus, window=1, smoothing=0.01)
    m = masked(["former", MASK_TOKEN, "addict"])
    expected = [list(e) for e in handle.rank_replacements(m, 8).entries]

    script = (
        "import json\n"
        "from euphkit import kernels\n"
        "assert not kernels.USING_NUMBA\n"
        "from euphkit.backends import build_count_oracle\n"
        "from euphkit.corpus import MASK_TOKEN, MaskedSentence\n"
        "from conftest import corpus_from_tokens\n"
        "corpus = corpus_from_tokens([['heroin','addict','one'],['heroin','addict','two'],"
        "['heroin','addict','three'],['coffee','addict','four']])\n"
        "handle = build_count_oracle(corpus, window=1, smoothing=0.01)\n"
        "m = MaskedSentence(tokens_with_mask=('former', MASK_TOKEN, 'addict'),"
        "origin_sentence_id='s000000', masked_surface='x')\n"
        "print(json.dumps([list(e) for e in handle.rank_replacements(m, 8).entries]))\n"
    )
    env = dict(os.environ, EUPHKIT_NO_NUMBA="1")
    result = subprocess.run(
        [sys.executable, "-c", script],
        capture_output=True,
        text=True,
        env=env,
        cwd=os.path.dirname(__file__),
    )
    assert result.returncode == 0, result.stderr
    assert json.loads(result.stdout.strip()) == expected
