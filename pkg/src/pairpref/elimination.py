"""Successive elimination over principal submatrices.

Each candidate ``k`` names the square matrix on ``base + [k]``. All
candidates share the block on ``base``; that block is sampled once per
round and the samples are reused by every surviving candidate. Candidates
are dropped when their estimated smallest singular value falls clearly
below the leader's, with the margin given by a matrix Bernstein radius.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import InsufficientSamplesError
from .linalg import batched_sigma_min, index_set

log = logging.getLogger(__name__)


class SampleTable:
    """Bernoulli sample counts and sums for a symmetric ``p x p`` matrix.

    Entry ``(i, j)`` and ``(j, i)`` are the same unordered pair and share
    one count/sum.
    """

    def __init__(self, p: int):
        if p < 1:
            raise ValueError("side must be positive")
        self.p = p
        self.counts = np.zeros((p, p), dtype=np.int64)
        self.sums = np.zeros((p, p), dtype=np.int64)

    def add(self, i: int, j: int, n: int, h: int) -> None:
        if not 0 <= h <= n:
            raise ValueError("sum of binary samples must lie in [0, n]")
        self.counts[i, j] += n
        self.sums[i, j] += h
        if i != j:
            self.counts[j, i] += n
            self.sums[j, i] += h

    @classmethod
    def from_arrays(cls, counts, sums) -> "SampleTable":
        counts = np.asarray(counts, dtype=np.int64)
        sums = np.asarray(sums, dtype=np.int64)
        if counts.shape != sums.shape or counts.ndim != 2 or counts.shape[0] != counts.shape[1]:
            raise ValueError("counts and sums must be equal-shaped square arrays")
        if np.any(counts != counts.T) or np.any(sums != sums.T):
            raise ValueError("tables must be symmetric")
        if np.any(sums < 0) or np.any(sums > counts):
            raise ValueError("need 0 <= H <= n")
        t = cls(counts.shape[0])
        t.counts[...] = counts
        t.sums[...] = sums
        return t


def estimate_matrix(table: SampleTable) -> np.ndarray:
    if np.any(table.counts == 0):
        raise InsufficientSamplesError("every entry needs at least one sample")
    return table.sums / table.counts


def bernstein_radius(min_count, inv_count_sum, p: int, delta_t: float):
    """Matrix Bernstein deviation bound on ``||P_hat - P||_2``.

    ``min_count`` is the smallest per-entry count, ``inv_count_sum`` the sum
    of reciprocal counts over all ``p * p`` ordered entries. Works
    elementwise on arrays.
    """
    lg = np.log(2.0 * p / np.asarray(delta_t, dtype=float))
    return 2.0 * lg / (3.0 * min_count) + np.sqrt(0.5 * lg * inv_count_sum)


def confidence_radius(table: SampleTable, delta_t: float) -> float:
    if not 0.0 < delta_t < 1.0:
        raise ValueError("delta_t must lie in (0, 1)")
    if np.any(table.counts == 0):
        raise InsufficientSamplesError("every entry needs at least one sample")
    c = table.counts
    return float(bernstein_radius(c.min(), np.sum(1.0 / c), table.p, delta_t))


def delta_schedule(t: int, m: int, delta: float) -> float:
    """Per-round, per-candidate failure budget; sums to ``delta`` over all rounds."""
    return 6.0 * delta / (math.pi**2 * m * t * t)


@dataclass
class EliminationState:
    """Outcome of one elimination run.

    ``survivors`` are candidate indices still in play; ``rounds`` counts
    completed elimination rounds; ``capped`` is set when the run stopped on
    ``round_cap`` or on the query budget rather than on a single survivor.
    """

    candidates: list
    survivors: list
    rounds: int
    delta: float
    winner: int
    capped: bool = False
    queries: int = 0
    sigma_hat: dict = field(default_factory=dict)
    eliminated_at: dict = field(default_factory=dict)


#: Upper bound on speculative draws held in memory per block.
MAX_BLOCK_DRAWS = 1 << 21
MAX_BLOCK_ROUNDS = 8192


def successive_elimination(
    base_set,
    candidates,
    oracle,
    delta: float,
    round_cap: int,
    query_budget: int | None = None,
) -> EliminationState:
    """Find the candidate whose principal submatrix has the largest smallest singular value.

    With probability at least ``1 - delta`` the true maximiser is never
    eliminated. The run stops when one candidate is left, after
    ``round_cap`` elimination rounds, or when the next sampling pass would
    exceed ``query_budget``; in the last two cases the empirical leader is
    returned (smallest index on ties).

    Rounds are evaluated in blocks: the next ``B`` sampling passes are drawn
    speculatively, the estimates after each pass are computed at once, and
    only the passes up to the first round that eliminates something are
    committed to the oracle. Uncommitted draws are never looked at, so the
    procedure is statistically identical to running round by round.
    """
    if not candidates:
        raise ValueError("need at least one candidate")
    if not 0.0 < delta < 1.0:
        raise ValueError("delta must lie in (0, 1)")
    if round_cap < 1:
        raise ValueError("round_cap must be positive")
    k_total = oracle.size
    base = list(index_set(base_set, k_total))
    cands = sorted(index_set(candidates, k_total))
    if set(base) & set(cands):
        raise ValueError("candidates must be disjoint from the base set")

    q = len(base)
    p = q + 1
    m = len(cands)
    cand_arr = np.array(cands, dtype=np.intp)
    base_arr = np.array(base, dtype=np.intp)

    # shared block: unordered pairs a <= c inside the base
    sa, sc = np.triu_indices(q)
    n_shared = sa.size
    shared_i, shared_j = base_arr[sa], base_arr[sc]
    shared_counts = np.zeros(n_shared, dtype=np.int64)
    shared_sums = np.zeros(n_shared, dtype=np.int64)
    # per candidate: (base[0], k), ..., (base[q-1], k), (k, k)
    cand_rows = np.concatenate([np.broadcast_to(base_arr, (m, q)), cand_arr[:, None]], axis=1)
    cand_cols = np.broadcast_to(cand_arr[:, None], (m, p))
    cand_counts = np.zeros((m, p), dtype=np.int64)
    cand_sums = np.zeros((m, p), dtype=np.int64)
    # ordered-entry multiplicity of each unordered entry, for the reciprocal sum
    shared_mult = np.where(sa == sc, 1.0, 2.0)
    cand_mult = np.append(np.full(q, 2.0), 1.0)

    alive = np.ones(m, dtype=bool)
    eliminated_at = {}
    sigma = np.zeros(m)
    used = 0
    t = 0  # sampling passes committed so far
    block = 16
    capped = False

    def stack(sh_est, cd_est):
        # sh_est (..., n_shared), cd_est (..., n_live, p) -> (..., n_live, p, p)
        shape = cd_est.shape[:-1] + (p, p)
        est = np.empty(shape)
        if q:
            blk = np.zeros(sh_est.shape[:-1] + (q, q))
            blk[..., sa, sc] = sh_est
            blk[..., sc, sa] = sh_est
            est[..., :q, :q] = blk[..., None, :, :]
        est[..., :, q] = cd_est
        est[..., q, :] = cd_est
        return est

    while True:
        live = np.flatnonzero(alive)
        n_live = live.size
        if t >= 1 and n_live <= 1:
            break
        cost = n_shared + p * n_live
        rounds = block
        if t >= 1:
            # passes t+1 .. round_cap are followed by an elimination test;
            # pass round_cap+1 is the last one taken before stopping
            rounds = min(rounds, round_cap + 1 - t)
        else:
            rounds = 1 if m == 1 else min(rounds, round_cap + 1)
        rounds = max(1, min(rounds, MAX_BLOCK_DRAWS // max(cost, 1), MAX_BLOCK_ROUNDS))
        if query_budget is not None:
            affordable = (query_budget - used) // cost
            if affordable < 1:
                if t == 0:
                    raise ValueError(f"query budget {query_budget} below one sampling pass ({cost})")
                capped = True
                break
            rounds = min(rounds, affordable)

        ii = np.concatenate([shared_i, cand_rows[live].ravel()])
        jj = np.concatenate([shared_j, cand_cols[live].ravel()])
        draws = oracle.draw_block(ii, jj, rounds)
        cum = np.cumsum(draws, axis=0)
        steps = np.arange(1, rounds + 1)
        sh_n = shared_counts[None, :] + steps[:, None]
        sh_h = shared_sums[None, :] + cum[:, :n_shared]
        cd_n = cand_counts[live][None, :, :] + steps[:, None, None]
        cd_h = cand_sums[live][None, :, :] + cum[:, n_shared:].reshape(rounds, n_live, p)

        # rounds in this block that run an elimination test
        test_rounds = [b for b in range(rounds) if t + b + 1 <= round_cap and m > 1]
        commit = rounds
        drops = None
        if test_rounds:
            nb = len(test_rounds)
            tb = np.array(test_rounds)
            est = stack(sh_h[tb] / sh_n[tb], cd_h[tb] / cd_n[tb])
            s_hat = batched_sigma_min(est)  # (nb, n_live)
            inv_sum = np.sum(cand_mult / cd_n[tb], axis=2)
            min_n = cd_n[tb].min(axis=2)
            if q:
                inv_sum = inv_sum + np.sum(shared_mult / sh_n[tb], axis=1)[:, None]
                min_n = np.minimum(min_n, sh_n[tb].min(axis=1)[:, None])
            delta_t = delta_schedule((t + tb + 1).astype(float), m, delta)
            alpha = bernstein_radius(min_n, inv_sum, p, delta_t[:, None])
            lead = np.argmax(s_hat, axis=1)
            s_max = s_hat[np.arange(nb), lead][:, None]
            a_lead = alpha[np.arange(nb), lead][:, None]
            drop_all = s_max - s_hat >= a_lead + alpha
            hit = np.flatnonzero(drop_all.any(axis=1))
            if hit.size:
                first = int(hit[0])
                commit = int(tb[first]) + 1
                drops = drop_all[first]
                sigma[live] = s_hat[first]
            else:
                sigma[live] = s_hat[-1]

        # commit passes 1..commit of this block
        c = commit - 1
        oracle.record(ii, jj, commit)
        used += cost * commit
        shared_counts[:] = sh_n[c]
        shared_sums[:] = sh_h[c]
        cand_counts[live] = cd_n[c]
        cand_sums[live] = cd_h[c]
        t += commit
        if drops is not None:
            for k in live[drops]:
                eliminated_at[cands[k]] = t
            alive[live[drops]] = False
            block = 16
        else:
            block = min(2 * block, MAX_BLOCK_ROUNDS)
        if m == 1:
            break
        if t > round_cap:
            capped = bool(alive.sum() > 1)
            break

    live = np.flatnonzero(alive)
    if live.size > 1 or m == 1:
        est = stack(shared_sums / np.maximum(shared_counts, 1), cand_sums[live] / cand_counts[live])
        s_hat = batched_sigma_min(est)
        sigma[live] = s_hat
        winner = cands[int(live[np.argmax(s_hat)])]
    else:
        winner = cands[int(live[0])]
    if capped:
        log.debug("elimination stopped after %d passes with %d survivors", t, live.size)
    return EliminationState(
        candidates=cands,
        survivors=[cands[k] for k in live],
        rounds=min(t, round_cap) if m > 1 else 0,
        delta=delta,
        winner=winner,
        capped=capped,
        queries=used,
        sigma_hat={cands[k]: float(sigma[k]) for k in range(m)},
        eliminated_at=eliminated_at,
    )


def run_se(base_set, candidates, oracle, delta: float, round_cap: int) -> int:
    """Index of the candidate with the largest estimated smallest singular value."""
    return successive_elimination(base_set, candidates, oracle, delta, round_cap).winner
