"""Hot numeric kernels: greedy MMR selection and the diversity filter.

Both kernels are data-dependent loops over similarity values, the only inner
loops in the package that grow with index size. Each exists twice: a numba
``@njit`` build and a pure-numpy fallback. The fallback is selected by
setting the ``ONTOLOGX_DISABLE_NUMBA`` environment variable (any non-empty
value other than ``0``) before import, or automatically when numba cannot be
imported. ``benchmarks/bench_kernels.py`` compares the two.

Given identical inputs the two builds select identical indices: the
arithmetic is the same IEEE double operations in the same order, and ties
break toward the lowest index in both.
"""

from __future__ import annotations

import os
import warnings

import numpy as np

__all__ = ["mmr_order", "diverse_order", "using_numba", "NUMBA_ENV_FLAG"]

NUMBA_ENV_FLAG = "ONTOLOGX_DISABLE_NUMBA"


def _numba_requested() -> bool:
    value = os.environ.get(NUMBA_ENV_FLAG, "")
    return value in ("", "0")


def _mmr_order_py(query_sims, pairwise, lam, k):
    n = query_sims.shape[0]
    k = min(k, n)
    out = np.empty(k, dtype=np.int64)
    if k == 0:
        return out
    available = np.ones(n, dtype=bool)
    max_to_selected = np.full(n, -np.inf)
    for round_no in range(k):
        if round_no == 0:
            scores = query_sims.copy()
        else:
            scores = lam * query_sims - (1.0 - lam) * max_to_selected
        scores[~available] = -np.inf
        best = int(np.argmax(scores))
        out[round_no] = best
        available[best] = False
        max_to_selected = np.maximum(max_to_selected, pairwise[best])
    return out


def _diverse_order_py(embeddings, order, threshold, n_target):
    n = order.shape[0]
    accepted = np.empty(min(n_target, n), dtype=np.int64)
    count = 0
    for idx in order:
        if count == accepted.shape[0]:
            break
        if count == 0:
            accepted[count] = idx
            count += 1
            continue
        sims = embeddings[accepted[:count]] @ embeddings[idx]
        if np.all(1.0 - sims >= threshold):
            accepted[count] = idx
            count += 1
    return accepted[:count]


_impl_mmr = _mmr_order_py
_impl_diverse = _diverse_order_py
_using_numba = False

if _numba_requested():
    try:
        from numba import njit

        @njit(cache=True)
        def _mmr_order_jit(query_sims, pairwise, lam, k):  # pragma: no cover
            n = query_sims.shape[0]
            if k > n:
                k = n
            out = np.empty(k, dtype=np.int64)
            if k == 0:
                return out
            available = np.ones(n, dtype=np.bool_)
            max_to_selected = np.full(n, -np.inf)
            for round_no in range(k):
                best = -1
                best_score = -np.inf
                for i in range(n):
                    if not available[i]:
                        continue
                    if round_no == 0:
                        score = query_sims[i]
                    else:
                        score = lam * query_sims[i] - (1.0 - lam) * max_to_selected[i]
                    if score > best_score:
                        best_score = score
                        best = i
                out[round_no] = best
                available[best] = False
                for i in range(n):
                    if pairwise[best, i] > max_to_selected[i]:
                        max_to_selected[i] = pairwise[best, i]
            return out

        @njit(cache=True)
        def _diverse_order_jit(embeddings, order, threshold, n_target):  # pragma: no cover
            n = order.shape[0]
            limit = n_target if n_target < n else n
            accepted = np.empty(limit, dtype=np.int64)
            count = 0
            dim = embeddings.shape[1]
            for oi in range(n):
                if count == limit:
                    break
                idx = order[oi]
                ok = True
                for j in range(count):
                    sim = 0.0
                    for d in range(dim):
                        sim += embeddings[accepted[j], d] * embeddings[idx, d]
                    if 1.0 - sim < threshold:
                        ok = False
                        break
                if ok:
                    accepted[count] = idx
                    count += 1
            return accepted[:count]

        _impl_mmr = _mmr_order_jit
        _impl_diverse = _diverse_order_jit
        _using_numba = True
    except ImportError:  # pragma: no cover
        warnings.warn("numba unavailable, falling back to pure-numpy kernels")


def using_numba() -> bool:
    return _using_numba


def mmr_order(
    query_sims: np.ndarray, pairwise: np.ndarray, lam: float, k: int
) -> np.ndarray:
    """Greedy MMR pick order over precomputed similarities.

    ``query_sims[i]`` is the candidate-to-query similarity, ``pairwise[i, j]``
    the candidate-to-candidate similarity. The first pick maximises query
    similarity alone; each later pick maximises
    ``lam * sim_to_query - (1 - lam) * max(sim to already selected)``.
    Ties break toward the lower index. Returns at most ``k`` indices.
    """
    query_sims = np.ascontiguousarray(query_sims, dtype=np.float64)
    pairwise = np.ascontiguousarray(pairwise, dtype=np.float64)
    n = query_sims.shape[0]
    if pairwise.shape != (n, n):
        raise ValueError(f"pairwise must be ({n}, {n}), got {pairwise.shape}")
    return _impl_mmr(query_sims, pairwise, float(lam), int(max(k, 0)))


def diverse_order(
    embeddings: np.ndarray, order: np.ndarray, threshold: float, n_target: int
) -> np.ndarray:
    """Walk ``order`` greedily, keeping rows of ``embeddings`` (assumed
    L2-normalised) whose cosine distance to everything already kept is at
    least ``threshold``. The first candidate is always kept. Stops after
    ``n_target`` acceptances; returns the accepted row indices in walk order.
    """
    embeddings = np.ascontiguousarray(embeddings, dtype=np.float64)
    order = np.ascontiguousarray(order, dtype=np.int64)
    if embeddings.ndim != 2:
        raise ValueError("embeddings must be a 2-d array")
    return _impl_diverse(embeddings, order, float(threshold), int(max(n_target, 0)))
