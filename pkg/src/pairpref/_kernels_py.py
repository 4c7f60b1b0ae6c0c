"""Pure-Python reference for the compiled kernels in ``_kernels.pyx``.

Both implementations perform the same floating-point operations in the
same order and return bit-identical results.
"""
import heapq
from math import e, log, sqrt

import numpy as np


def lil_ucb_pulls(probs, uniforms, double_eps, beta, omega):
    """Run LiL'UCB pulls over flat arms.

    Parameters
    ----------
    probs : float64 array, shape (A,)
        Loss probability of each arm; a pull with uniform ``u`` loses when
        ``u < probs[a]`` and earns reward ``1`` otherwise.
    uniforms : float64 array, shape (budget,)
        One uniform per pull. The first ``A`` initialise every arm once.
    double_eps, beta, omega : float
        Confidence-radius parameters.

    Returns
    -------
    counts, rewards : int64 arrays, shape (A,)
    """
    probs = np.ascontiguousarray(probs, dtype=np.float64)
    uniforms = np.ascontiguousarray(uniforms, dtype=np.float64)
    n_arms = probs.shape[0]
    budget = uniforms.shape[0]
    counts = [0] * n_arms
    rewards = [0] * n_arms
    scale = (1.0 + beta) * (1.0 + sqrt(double_eps))
    grow = 1.0 + double_eps
    p = probs.tolist()
    u = uniforms.tolist()

    def index(a):
        n = counts[a]
        inner = log(grow * n) / omega
        if inner < e:
            inner = e
        return rewards[a] / n + scale * sqrt(2.0 * grow * log(inner) / n)

    heap = []
    for a in range(min(n_arms, budget)):
        counts[a] = 1
        rewards[a] = 0 if u[a] < p[a] else 1
        heap.append((-index(a), a))
    heapq.heapify(heap)
    for t in range(n_arms, budget):
        a = heap[0][1]
        counts[a] += 1
        if not u[t] < p[a]:
            rewards[a] += 1
        heapq.heapreplace(heap, (-index(a), a))
    return np.array(counts, dtype=np.int64), np.array(rewards, dtype=np.int64)
