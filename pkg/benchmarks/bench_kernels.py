"""Benchmark the numba kernels against the pure-numpy fallback.

Two workloads:
  * synth: the bundled synthetic corpus pushed through the real count
    backend (realistic shapes, includes table construction cost), and
  * stress: randomly generated CSR context tables at configurable scale
    (isolates the kernel loops).

Both paths are checked for bit-identical outputs before timing. Run with
EUPHKIT_NO_NUMBA unset; the script addresses each implementation directly.

    python3 benchmarks/bench_kernels.py --rows 20000 --vocab 30000
"""

from __future__ import annotations

import argparse
import time

import numpy as np

from euphkit import kernels
from euphkit.backends import build_count_oracle
from euphkit.corpus import load_corpus, load_keywords, extract_masked_sentences
from euphkit.synth import SynthSpec, write_synth


def _time(fn, repeats: int = 3) -> float:
    best = float("inf")
    for _ in range(repeats):
        start = time.perf_counter()
        fn()
        best = min(best, time.perf_counter() - start)
    return best


def random_tables(rng, n_rows: int, vocab: int, entries_per_row: int):
    n_ctx = max(1, n_rows // 4)
    ptr = np.zeros(n_ctx + 1, np.int64)
    toks = []
    cnts = []
    totals = np.zeros(n_ctx, np.float64)
    for i in range(n_ctx):
        row_tokens = rng.choice(vocab, size=entries_per_row, replace=False)
        row_tokens.sort()
        row_counts = rng.integers(1, 9, size=entries_per_row).astype(np.float64)
        toks.extend(row_tokens.tolist())
        cnts.extend(row_counts.tolist())
        totals[i] = row_counts.sum()
        ptr[i + 1] = len(toks)
    tables = (ptr, np.asarray(toks, np.int64), np.asarray(cnts, np.float64), totals)
    rows = rng.integers(-1, n_ctx, size=n_rows).astype(np.int64)
    return tables, rows


def stress(args) -> None:
    rng = np.random.default_rng(args.seed)
    left_tables, lrow = random_tables(rng, args.rows, args.vocab, args.entries)
    right_tables, rrow = random_tables(rng, args.rows, args.vocab, args.entries)
    tables = left_tables + right_tables
    smoothing = 0.01

    def run_numpy():
        return kernels.accumulate_weights_numpy(lrow, rrow, tables, smoothing, args.vocab)

    def run_numba():
        return kernels.accumulate_weights_numba(lrow, rrow, tables, smoothing, args.vocab)

    def topk_numpy():
        return kernels.top_depth_numpy(lrow, rrow, tables, smoothing, args.vocab, 5)

    def topk_numba():
        return kernels.top_depth_numba(lrow, rrow, tables, smoothing, args.vocab, 5)

    w_np, h_np = run_numpy()
    w_nb, h_nb = run_numba()  # also JIT warmup
    assert np.array_equal(w_np, w_nb) and np.array_equal(h_np, h_nb), "paths diverge"
    ids_np, probs_np = topk_numpy()
    ids_nb, probs_nb = topk_numba()
    assert np.array_equal(ids_np, ids_nb) and np.array_equal(probs_np, probs_nb)

    t_np = _time(run_numpy)
    t_nb = _time(run_numba)
    print(f"stress accumulate_weights  rows={args.rows} vocab={args.vocab}")
    print(f"  numpy: {t_np:8.3f}s   numba: {t_nb:8.3f}s   speedup: {t_np / t_nb:6.1f}x")
    t_np = _time(topk_numpy)
    t_nb = _time(topk_numba)
    print(f"stress top_depth(5)        rows={args.rows} vocab={args.vocab}")
    print(f"  numpy: {t_np:8.3f}s   numba: {t_nb:8.3f}s   speedup: {t_np / t_nb:6.1f}x")


def synth_detect(args, tmp_dir: str) -> None:
    spec = SynthSpec(
        seed=3,
        keyword_sentences=args.keyword_sentences,
        euphemism_sentences=120,
        noise_sentences=2000,
    )
    paths = write_synth(spec, tmp_dir)
    corpus = load_corpus(paths["corpus"])
    keywords = load_keywords(paths["keywords"])
    handle = build_count_oracle(corpus)
    masked = extract_masked_sentences(corpus, keywords)
    lrow, rrow = handle._row_indices(masked)
    tables = handle._tables
    nvocab = len(handle.vocabulary)

    def run_numpy():
        return kernels.accumulate_weights_numpy(lrow, rrow, tables, 0.01, nvocab)

    def run_numba():
        return kernels.accumulate_weights_numba(lrow, rrow, tables, 0.01, nvocab)

    w_np, _ = run_numpy()
    w_nb, _ = run_numba()
    assert np.array_equal(w_np, w_nb)
    t_np = _time(run_numpy)
    t_nb = _time(run_numba)
    print(f"synth corpus generation    contexts={len(masked)} vocab={nvocab}")
    print(f"  numpy: {t_np:8.3f}s   numba: {t_nb:8.3f}s   speedup: {t_np / t_nb:6.1f}x")


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--rows", type=int, default=20_000)
    parser.add_argument("--vocab", type=int, default=30_000)
    parser.add_argument("--entries", type=int, default=20, help="CSR entries per context row")
    parser.add_argument("--keyword-sentences", type=int, default=2_000)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()

    if not kernels.USING_NUMBA or kernels.accumulate_weights_numba is None:
        raise SystemExit("numba path unavailable; unset EUPHKIT_NO_NUMBA and install numba")

    import tempfile

    with tempfile.TemporaryDirectory() as tmp_dir:
        synth_detect(args, tmp_dir)
    stress(args)


if __name__ == "__main__":
    main()
