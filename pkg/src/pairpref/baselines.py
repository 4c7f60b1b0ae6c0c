"""Comparison algorithms that treat every unordered pair as an independent arm.

Arms are the ``K (K + 1) / 2`` pairs ``(i, j)`` with ``i <= j``, numbered
in row-major upper-triangle order. Reward is ``1 - loss``, so the best arm
has the smallest ``L[i, j]``.
"""
from __future__ import annotations

import math

import numpy as np

from . import kernels

LIL_EPS = 0.01
LIL_BETA = 1.0
LIL_DELTA = 0.1


class ArmIndex:
    """Bijection between unordered pairs ``i <= j`` and flat ids in ``[0, K(K+1)/2)``."""

    def __init__(self, K: int):
        if K < 1:
            raise ValueError("K must be positive")
        self.K = K
        self.n_arms = K * (K + 1) // 2
        self.rows, self.cols = np.triu_indices(K)

    def pair_to_arm(self, i: int, j: int) -> int:
        i, j = min(i, j), max(i, j)
        if not 0 <= i <= j < self.K:
            raise ValueError(f"pair ({i}, {j}) out of range for K={self.K}")
        # rows before i contribute K, K-1, ..., K-i+1 arms
        return i * self.K - i * (i - 1) // 2 + (j - i)

    def arm_to_pair(self, a: int) -> tuple:
        if not 0 <= a < self.n_arms:
            raise ValueError(f"arm {a} out of range")
        return int(self.rows[a]), int(self.cols[a])


def _best_arm(rewards, counts) -> int:
    # unsampled arms count as the worst possible (loss 1, reward 0)
    means = np.divide(rewards, counts, out=np.zeros(len(counts)), where=counts > 0)
    return int(np.argmax(means))


def naive_uniform(oracle, K: int, budget: int) -> tuple:
    """Spread ``budget`` evenly over all pairs; return the empirical best pair and queries."""
    if budget < 1:
        raise ValueError("budget must be positive")
    arms = ArmIndex(K)
    base, extra = divmod(budget, arms.n_arms)
    counts = np.full(arms.n_arms, base, dtype=np.int64)
    counts[:extra] += 1
    losses = oracle.sample_many(arms.rows, arms.cols, counts)
    a = _best_arm(counts - losses, counts)
    return arms.arm_to_pair(a), int(counts.sum())


def lil_ucb_radius(n, eps: float = LIL_EPS, beta: float = LIL_BETA, omega: float = LIL_DELTA / 5):
    """Anytime confidence radius after ``n`` pulls (outer log floored at 1)."""
    n = np.asarray(n, dtype=float)
    inner = np.maximum(np.log((1 + eps) * n) / omega, math.e)
    return (1 + beta) * (1 + math.sqrt(eps)) * np.sqrt(2 * (1 + eps) * np.log(inner) / n)


def lil_ucb(oracle, K: int, budget: int, delta: float = LIL_DELTA, eps: float = LIL_EPS,
            beta: float = LIL_BETA, backend: str | None = None) -> tuple:
    """LiL'UCB over pair-arms; spends the whole budget and returns the empirical best pair."""
    arms = ArmIndex(K)
    if budget < arms.n_arms:
        raise ValueError(f"budget {budget} below one pull per arm ({arms.n_arms})")
    impl = kernels if backend is None else kernels.get(backend)
    probs = oracle.probabilities[arms.rows, arms.cols]
    u = oracle.coupled_uniforms(budget)
    counts, rewards = impl.lil_ucb_pulls(probs, u, eps, beta, delta / 5)
    oracle.record(arms.rows, arms.cols, counts)
    return arms.arm_to_pair(_best_arm(rewards, counts)), int(counts.sum())


def pairwise_se(oracle, K: int, eps: float, delta: float, round_cap: int,
                budget: int | None = None) -> tuple:
    """Successive elimination with every surviving pair sampled once per round.

    Stops on a single survivor, when the radius drops to ``eps / 2`` (every
    survivor is then ``eps``-optimal), at ``round_cap`` rounds, or when the
    next round would exceed ``budget``.
    """
    if eps <= 0 or not 0 < delta < 1:
        raise ValueError("need eps > 0 and delta in (0, 1)")
    if round_cap < 1:
        raise ValueError("round_cap must be positive")
    arms = ArmIndex(K)
    n = arms.n_arms
    if n == 1:
        return (0, 0), 0
    alive = np.ones(n, dtype=bool)
    rewards = np.zeros(n, dtype=np.int64)
    used = 0
    t = 0
    while t < round_cap:
        live = np.flatnonzero(alive)
        if live.size == 1:
            break
        if budget is not None and used + live.size > budget:
            break
        rewards[live] += 1 - oracle.sample_many(arms.rows[live], arms.cols[live], 1)
        used += live.size
        t += 1
        rad = math.sqrt(math.log(4 * n * t * t / delta) / (2 * t))
        mean = rewards[live] / t
        alive[live[mean + rad < mean.max() - rad]] = False
        if rad <= eps / 2:
            break
    live = np.flatnonzero(alive)
    a = int(live[np.argmax(rewards[live])]) if t else 0
    return arms.arm_to_pair(a), used
