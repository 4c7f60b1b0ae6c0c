"""Exact completion of a low-rank SPSD loss matrix from a deterministic oracle.

Columns are scanned left to right. A column joins the selected set when the
principal block on ``selected + [c]`` is non-degenerate, which for an SPSD
matrix is equivalent to the column being independent of those already
selected. Only the diagonal entry ``(c, c)`` is needed for the test; the
rest of the column is fetched only on acceptance. The matrix is then
rebuilt with a Nystrom extension over the selected columns.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .linalg import PINV_TOL, nystrom_extend, sigma_min
from .model import DeterministicOracle, optimal_pair

#: Acceptance threshold on the smallest singular value for float inputs.
DEFAULT_SIGMA_THRESH = 1e-10


@dataclass
class PlansResult:
    l_hat: np.ndarray
    selected: list
    queries: int
    #: one ``(column, sigma_min, accepted)`` tuple per tested column
    log: list = field(default_factory=list)


class _CachedOracle:
    """Memoises entries so repeated reads do not hit the oracle again."""

    def __init__(self, oracle: DeterministicOracle):
        self.oracle = oracle
        self.values = {}

    def __call__(self, i: int, j: int) -> float:
        key = (i, j) if i <= j else (j, i)
        v = self.values.get(key)
        if v is None:
            v = self.values[key] = self.oracle.query(*key)
        return v

    @property
    def calls(self) -> int:
        return len(self.values)


def run_plans(
    oracle: DeterministicOracle,
    rank_cap: int | None = None,
    sigma_thresh: float = DEFAULT_SIGMA_THRESH,
    tol: float = PINV_TOL,
) -> PlansResult:
    """Adaptive column selection plus Nystrom imputation.

    Parameters
    ----------
    oracle : DeterministicOracle
        Exact access to a K x K SPSD matrix.
    rank_cap : int, optional
        Stop as soon as this many columns have been selected. Without it the
        scan runs over every column, which still recovers an exactly low-rank
        matrix with the same query bound.
    sigma_thresh : float
        A column is accepted when the smallest singular value of the grown
        principal block exceeds this value. Raise it for matrices that are
        only approximately low rank.

    Returns
    -------
    PlansResult
        For an exactly rank-r input the reconstruction equals the input and
        at most ``K (r + 1)`` distinct entries are queried.
    """
    if rank_cap is not None and rank_cap < 1:
        raise ValueError("rank_cap must be a positive integer")
    if sigma_thresh < 0:
        raise ValueError("sigma_thresh must be non-negative")
    k = oracle.size
    entry = _CachedOracle(oracle)
    l_hat = np.zeros((k, k))

    def fetch_column(c):
        for i in range(k):
            l_hat[i, c] = l_hat[c, i] = entry(i, c)

    fetch_column(0)
    selected = [0]
    log = []
    for c in range(1, k):
        l_hat[c, c] = entry(c, c)
        idx = selected + [c]
        s = sigma_min(l_hat[np.ix_(idx, idx)])
        accepted = s > sigma_thresh and (rank_cap is None or len(selected) < rank_cap)
        log.append((c, s, accepted))
        if accepted:
            selected.append(c)
            fetch_column(c)
        # tested after the column body: with rank_cap=1 the diagonal (1, 1) is still read
        if rank_cap is not None and len(selected) >= rank_cap:
            break
    selected_arr = np.array(selected)
    c_block = l_hat[:, selected_arr]
    w_block = c_block[selected_arr, :]
    l_out = nystrom_extend(c_block, w_block, tol)
    return PlansResult(l_out, selected, entry.calls, log)


def recommend_pair(result: PlansResult) -> tuple:
    return optimal_pair(result.l_hat)
