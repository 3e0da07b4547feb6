"""Compiled inner loops for the stochastic embedding engines.

Kernels are single-threaded per call (reproducibility) and release the GIL,
so independent embedding jobs can run concurrently from Python threads.
Randomness comes from an inline splitmix64 stream seeded per call; nothing
touches global RNG state.
"""

from __future__ import annotations

import numpy as np
from numba import njit

U64 = np.uint64
_GAMMA = U64(0x9E3779B97F4A7C15)
_MIX1 = U64(0xBF58476D1CE4E5B9)
_MIX2 = U64(0x94D049BB133111EB)
_INV53 = 1.0 / 9007199254740992.0  # 2**-53


@njit(cache=True, inline="always")
def _next_uniform(state):
    """Advance splitmix64; return (state, uniform in [0, 1))."""
    state = state + _GAMMA
    z = state
    z = (z ^ (z >> U64(30))) * _MIX1
    z = (z ^ (z >> U64(27))) * _MIX2
    z = z ^ (z >> U64(31))
    return state, (z >> U64(11)) * _INV53


@njit(cache=True, inline="always")
def _sigmoid(x):
    if x > 30.0:
        return 1.0
    if x < -30.0:
        return 0.0
    return 1.0 / (1.0 + np.exp(-x))


@njit(cache=True, inline="always")
def _draw_alias(state, prob, alias):
    """One draw from an alias table; returns (state, index)."""
    n = prob.shape[0]
    state, u1 = _next_uniform(state)
    state, u2 = _next_uniform(state)
    idx = int(u1 * n)
    if idx >= n:
        idx = n - 1
    if u2 >= prob[idx]:
        idx = alias[idx]
    return state, idx


@njit(cache=True, inline="always")
def _sgns_pair(tvecs, cvecs, i, j, noise_prob, noise_alias, negatives, lr,
               state, work):
    """One skip-gram-with-negative-sampling update for pair (i -> j).

    Accumulates the input-vector gradient in ``work`` and applies it after
    the negatives, mirroring the classic word2vec update order.
    """
    d = tvecs.shape[1]
    for c in range(d):
        work[c] = 0.0
    for t in range(negatives + 1):
        if t == 0:
            node = j
            label = 1.0
        else:
            state, node = _draw_alias(state, noise_prob, noise_alias)
            if node == j:
                continue
            label = 0.0
        f = 0.0
        for c in range(d):
            f += tvecs[i, c] * cvecs[node, c]
        g = (label - _sigmoid(f)) * lr
        for c in range(d):
            work[c] += g * cvecs[node, c]
        for c in range(d):
            cvecs[node, c] += g * tvecs[i, c]
    for c in range(d):
        tvecs[i, c] += work[c]
    return state


@njit(cache=True, nogil=True)
def train_edge_sampling(src, dst, tvecs, cvecs, noise_prob, noise_alias,
                        n_samples, negatives, lr0, seed):
    """SGNS over uniformly sampled directed edges (src[e] -> dst[e]).

    Pass ``cvecs is tvecs`` to tie the two vector sets (first-order
    objective).  The learning rate decays linearly to 1e-4 of ``lr0``.
    """
    state = U64(seed)
    state, _ = _next_uniform(state)  # decorrelate small seeds
    n_edges = src.shape[0]
    work = np.empty(tvecs.shape[1], dtype=np.float64)
    floor = lr0 * 1e-4
    for s in range(n_samples):
        lr = lr0 * (1.0 - s / n_samples)
        if lr < floor:
            lr = floor
        state, u = _next_uniform(state)
        e = int(u * n_edges)
        if e >= n_edges:
            e = n_edges - 1
        state = _sgns_pair(tvecs, cvecs, src[e], dst[e], noise_prob,
                           noise_alias, negatives, lr, state, work)


@njit(cache=True, inline="always")
def _has_edge_csr(indptr, indices, u, v):
    lo = indptr[u]
    hi = indptr[u + 1]
    while lo < hi:
        mid = (lo + hi) // 2
        if indices[mid] < v:
            lo = mid + 1
        else:
            hi = mid
    return lo < indptr[u + 1] and indices[lo] == v


@njit(cache=True, nogil=True)
def generate_walks(indptr, indices, starts, walk_length, p, q, max_degree, seed):
    """Second-order biased random walks (return bias 1/p, in-out bias 1/q).

    Steps from a node with no neighbors terminate the walk; remaining slots
    are padded with -1 (isolated starts yield length-1 walks).
    """
    state = U64(seed)
    state, _ = _next_uniform(state)
    n_walks = starts.shape[0]
    walks = np.full((n_walks, walk_length), -1, dtype=np.int64)
    weights = np.empty(max_degree, dtype=np.float64)
    uniform_bias = p == 1.0 and q == 1.0
    for w in range(n_walks):
        cur = starts[w]
        walks[w, 0] = cur
        deg = indptr[cur + 1] - indptr[cur]
        if deg == 0 or walk_length < 2:
            continue
        state, u = _next_uniform(state)
        k = int(u * deg)
        if k >= deg:
            k = deg - 1
        prev = cur
        cur = indices[indptr[cur] + k]
        walks[w, 1] = cur
        for step in range(2, walk_length):
            beg = indptr[cur]
            deg = indptr[cur + 1] - beg
            if uniform_bias:
                state, u = _next_uniform(state)
                k = int(u * deg)
                if k >= deg:
                    k = deg - 1
            else:
                total = 0.0
                for t in range(deg):
                    x = indices[beg + t]
                    if x == prev:
                        wt = 1.0 / p
                    elif _has_edge_csr(indptr, indices, prev, x):
                        wt = 1.0
                    else:
                        wt = 1.0 / q
                    weights[t] = wt
                    total += wt
                state, u = _next_uniform(state)
                r = u * total
                acc = 0.0
                k = deg - 1
                for t in range(deg):
                    acc += weights[t]
                    if r < acc:
                        k = t
                        break
            prev = cur
            cur = indices[beg + k]
            walks[w, step] = cur
    return walks


@njit(cache=True, nogil=True)
def train_skipgram(walks, tvecs, cvecs, noise_prob, noise_alias, window,
                   negatives, epochs, lr0, total_centers, seed):
    """SGNS over a walk corpus with word2vec-style shrunk windows.

    For each center token a window size is drawn uniformly from 1..window;
    the learning rate decays linearly over ``total_centers`` center visits.
    """
    state = U64(seed)
    state, _ = _next_uniform(state)
    n_walks, length = walks.shape
    work = np.empty(tvecs.shape[1], dtype=np.float64)
    floor = lr0 * 1e-4
    processed = 0
    for _ in range(epochs):
        for w in range(n_walks):
            for pos in range(length):
                center = walks[w, pos]
                if center < 0:
                    break
                lr = lr0 * (1.0 - processed / total_centers)
                if lr < floor:
                    lr = floor
                processed += 1
                state, u = _next_uniform(state)
                b = 1 + int(u * window)
                if b > window:
                    b = window
                lo = pos - b
                if lo < 0:
                    lo = 0
                hi = pos + b
                if hi > length - 1:
                    hi = length - 1
                for cpos in range(lo, hi + 1):
                    if cpos == pos:
                        continue
                    context = walks[w, cpos]
                    if context < 0:
                        break
                    state = _sgns_pair(tvecs, cvecs, center, context,
                                       noise_prob, noise_alias, negatives,
                                       lr, state, work)


def build_alias_table(weights: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Vose alias tables for O(1) draws from a discrete distribution."""
    w = np.asarray(weights, dtype=np.float64)
    total = w.sum()
    if total <= 0:
        raise ValueError("alias table needs positive total weight")
    n = w.shape[0]
    prob = w * (n / total)
    alias = np.arange(n, dtype=np.int64)
    small = [i for i in range(n) if prob[i] < 1.0]
    large = [i for i in range(n) if prob[i] >= 1.0]
    while small and large:
        s = small.pop()
        l = large.pop()
        alias[s] = l
        prob[l] = prob[l] - (1.0 - prob[s])
        if prob[l] < 1.0:
            small.append(l)
        else:
            large.append(l)
    for i in small:
        prob[i] = 1.0
    for i in large:
        prob[i] = 1.0
    return prob, alias
