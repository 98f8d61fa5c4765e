"""Hot numeric kernels for count-backend scoring.

Two interchangeable implementations of each kernel: a numba ``@njit`` loop
and a pure-numpy fallback. The fallback is selected by setting the
``EUPHKIT_NO_NUMBA`` environment variable (checked once at import) or when
numba is not importable. Both paths produce bit-identical results: every
probability is computed with the same canonical expression

    h = (count + smoothing) / denom
    denom = (left_total + right_total) + smoothing * n_vocab

so downstream equality checks against naive recomputations hold exactly.

Context tables are CSR-like: ``ptr`` (n_rows+1) offsets into parallel
``tok``/``cnt`` arrays, plus per-row count totals. A masked sentence maps to
one left row and one right row (-1 when its context was never observed).
"""

from __future__ import annotations

import os

import numpy as np

NUMBA_ENV_FLAG = "EUPHKIT_NO_NUMBA"


def _accumulate_loop(lrow, rrow, lptr, ltok, lcnt, ltot,
                     rptr, rtok, rcnt, rtot,
                     smoothing, weights, hits):
    """Add each masked row's full-vocabulary probability vector into weights.

    hits[v] counts rows in which token v had nonzero context evidence.
    """
    nvocab = weights.shape[0]
    cnt = np.zeros(nvocab, np.float64)
    touched = np.empty(nvocab, np.int64)
    for i in range(lrow.shape[0]):
        n_touched = 0
        lt = 0.0
        rt = 0.0
        li = lrow[i]
        if li >= 0:
            lt = ltot[li]
            for j in range(lptr[li], lptr[li + 1]):
                tok = ltok[j]
                if cnt[tok] == 0.0:
                    touched[n_touched] = tok
                    n_touched += 1
                cnt[tok] += lcnt[j]
        ri = rrow[i]
        if ri >= 0:
            rt = rtot[ri]
            for j in range(rptr[ri], rptr[ri + 1]):
                tok = rtok[j]
                if cnt[tok] == 0.0:
                    touched[n_touched] = tok
                    n_touched += 1
                cnt[tok] += rcnt[j]
        denom = (lt + rt) + smoothing * nvocab
        hbase = (0.0 + smoothing) / denom
        for v in range(nvocab):
            if cnt[v] == 0.0:
                weights[v] += hbase
            else:
                weights[v] += (cnt[v] + smoothing) / denom
        for j in range(n_touched):
            tok = touched[j]
            hits[tok] += 1
            cnt[tok] = 0.0


def _top_depth_loop(lrow, rrow, lptr, ltok, lcnt, ltot,
                    rptr, rtok, rcnt, rtot,
                    smoothing, nvocab, depth, out_ids, out_probs):
    """Per masked row, the top-`depth` tokens by probability.

    Ties break by ascending token id; ids are assigned in sorted-token order
    so id order is lexicographic order.
    """
    k = out_ids.shape[1]
    cnt = np.zeros(nvocab, np.float64)
    touched = np.empty(nvocab, np.int64)
    for i in range(lrow.shape[0]):
        n_touched = 0
        lt = 0.0
        rt = 0.0
        li = lrow[i]
        if li >= 0:
            lt = ltot[li]
            for j in range(lptr[li], lptr[li + 1]):
                tok = ltok[j]
                if cnt[tok] == 0.0:
                    touched[n_touched] = tok
                    n_touched += 1
                cnt[tok] += lcnt[j]
        ri = rrow[i]
        if ri >= 0:
            rt = rtot[ri]
            for j in range(rptr[ri], rptr[ri + 1]):
                tok = rtok[j]
                if cnt[tok] == 0.0:
                    touched[n_touched] = tok
                    n_touched += 1
                cnt[tok] += rcnt[j]
        denom = (lt + rt) + smoothing * nvocab
        hbase = (0.0 + smoothing) / denom

        # Nonzero-evidence tokens always outrank zero-evidence ones, so sort
        # them by (count desc, id asc) and pad with ascending untouched ids.
        tids = np.sort(touched[:n_touched])
        tcnts = np.empty(n_touched, np.float64)
        for j in range(n_touched):
            tcnts[j] = cnt[tids[j]]
        order = np.argsort(-tcnts, kind="mergesort")

        filled = 0
        for j in range(min(k, n_touched)):
            tok = tids[order[j]]
            out_ids[i, filled] = tok
            out_probs[i, filled] = (cnt[tok] + smoothing) / denom
            filled += 1
        v = 0
        while filled < k:
            if cnt[v] == 0.0:
                out_ids[i, filled] = v
                out_probs[i, filled] = hbase
                filled += 1
            v += 1

        for j in range(n_touched):
            cnt[touched[j]] = 0.0


def accumulate_weights_numpy(lrow, rrow, tables, smoothing, nvocab):
    """Vectorized fallback for the weight-accumulation kernel."""
    lptr, ltok, lcnt, ltot, rptr, rtok, rcnt, rtot = tables
    weights = np.zeros(nvocab, np.float64)
    hits = np.zeros(nvocab, np.int64)
    cnt = np.zeros(nvocab, np.float64)
    for i in range(lrow.shape[0]):
        lt = 0.0
        rt = 0.0
        li = lrow[i]
        ri = rrow[i]
        if li >= 0:
            lt = ltot[li]
            sl = slice(lptr[li], lptr[li + 1])
            cnt[ltok[sl]] += lcnt[sl]
        if ri >= 0:
            rt = rtot[ri]
            sl = slice(rptr[ri], rptr[ri + 1])
            cnt[rtok[sl]] += rcnt[sl]
        denom = (lt + rt) + smoothing * nvocab
        hbase = (0.0 + smoothing) / denom
        nz = cnt != 0.0
        weights += np.where(nz, (cnt + smoothing) / denom, hbase)
        hits += nz
        if li >= 0:
            cnt[ltok[lptr[li]:lptr[li + 1]]] = 0.0
        if ri >= 0:
            cnt[rtok[rptr[ri]:rptr[ri + 1]]] = 0.0
    return weights, hits


def top_depth_numpy(lrow, rrow, tables, smoothing, nvocab, depth):
    """Vectorized fallback for the per-row top-`depth` kernel."""
    lptr, ltok, lcnt, ltot, rptr, rtok, rcnt, rtot = tables
    n = lrow.shape[0]
    k = min(depth, nvocab)
    out_ids = np.zeros((n, k), np.int64)
    out_probs = np.zeros((n, k), np.float64)
    cnt = np.zeros(nvocab, np.float64)
    for i in range(n):
        lt = 0.0
        rt = 0.0
        li = lrow[i]
        ri = rrow[i]
        if li >= 0:
            lt = ltot[li]
            sl = slice(lptr[li], lptr[li + 1])
            cnt[ltok[sl]] += lcnt[sl]
        if ri >= 0:
            rt = rtot[ri]
            sl = slice(rptr[ri], rptr[ri + 1])
            cnt[rtok[sl]] += rcnt[sl]
        denom = (lt + rt) + smoothing * nvocab
        hbase = (0.0 + smoothing) / denom

        tids = np.flatnonzero(cnt)
        order = np.argsort(-cnt[tids], kind="mergesort")
        tids = tids[order]

        filled = min(k, tids.shape[0])
        out_ids[i, :filled] = tids[:filled]
        out_probs[i, :filled] = (cnt[tids[:filled]] + smoothing) / denom
        if filled < k:
            zero_mask = np.ones(nvocab, bool)
            zero_mask[tids] = False
            pad = np.flatnonzero(zero_mask)[: k - filled]
            out_ids[i, filled:] = pad
            out_probs[i, filled:] = hbase

        cnt[tids] = 0.0
    return out_ids, out_probs


_numba_disabled = os.environ.get(NUMBA_ENV_FLAG, "") != ""
if not _numba_disabled:
    try:
        from numba import njit
    except ImportError:
        _numba_disabled = True

USING_NUMBA = not _numba_disabled

if USING_NUMBA:
    _accumulate_jit = njit(cache=True)(_accumulate_loop)
    _top_depth_jit = njit(cache=True)(_top_depth_loop)

    def accumulate_weights_numba(lrow, rrow, tables, smoothing, nvocab):
        weights = np.zeros(nvocab, np.float64)
        hits = np.zeros(nvocab, np.int64)
        _accumulate_jit(lrow, rrow, *tables, smoothing, weights, hits)
        return weights, hits

    def top_depth_numba(lrow, rrow, tables, smoothing, nvocab, depth):
        n = lrow.shape[0]
        k = min(depth, nvocab)
        out_ids = np.zeros((n, k), np.int64)
        out_probs = np.zeros((n, k), np.float64)
        _top_depth_jit(lrow, rrow, *tables, smoothing, nvocab, k, out_ids, out_probs)
        return out_ids, out_probs

    accumulate_weights = accumulate_weights_numba
    top_depth = top_depth_numba
else:
    accumulate_weights_numba = None
    top_depth_numba = None
    accumulate_weights = accumulate_weights_numpy
    top_depth = top_depth_numpy
