"""Low-rank completion from a stochastic (Bernoulli) oracle.

Column selection grows the selected set one column at a time with
successive elimination over principal submatrices. The selected columns
are then estimated by repeated sampling and the full matrix is imputed
with a Nystrom extension of the estimates.

Two drivers are provided: :func:`run_rplans`, which sizes the estimation
phase from an accuracy target ``eps`` and failure probability ``delta``,
and :func:`run_rplans_budget`, which splits a fixed query budget between
selection and estimation.
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .elimination import successive_elimination
from .errors import SingularMatrixError
from .linalg import PINV_TOL, c1_c2_constants, norm, nystrom_extend, pinv
from .model import StochasticOracle, optimal_pair

log = logging.getLogger(__name__)

DEFAULT_ROUND_CAP = 20_000
MIN_PILOT = 30


@dataclass
class NystromFactors:
    selected: list
    c_hat: np.ndarray
    w_hat: np.ndarray
    c_counts: np.ndarray
    w_counts: np.ndarray


@dataclass
class RPlansResult:
    l_hat: np.ndarray
    pair: tuple
    value_hat: float
    queries: int
    selection_queries: int
    estimation_queries: int
    pilot_queries: int
    factors: NystromFactors
    m1: int = 0
    m2: int = 0
    c1: float = float("nan")
    c2: float = float("nan")
    capped: bool = False
    taylor_ratio: float = float("nan")
    se_states: list = field(default_factory=list)

    @property
    def selected(self) -> list:
        return self.factors.selected

    def to_dict(self) -> dict:
        return {
            "pair": [int(self.pair[0]), int(self.pair[1])],
            "value_hat": float(self.value_hat),
            "queries": int(self.queries),
            "selected": [int(c) for c in self.selected],
            "selection_queries": int(self.selection_queries),
            "estimation_queries": int(self.estimation_queries),
            "m1": int(self.m1),
            "m2": int(self.m2),
            "capped": bool(self.capped),
        }


def _ceil(x: float) -> int:
    # absorb rounding noise so an exact integer does not round up
    r = round(x)
    if abs(x - r) <= 1e-9 * max(1.0, abs(x)):
        return int(r)
    return int(math.ceil(x))


def sample_counts(c1: float, c2: float, K: int, r: int, eps: float, delta: float) -> tuple:
    """Per-entry sample counts ``(m1, m2)`` for the column and principal blocks."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    if not 0 < delta < 2 * r:
        raise ValueError("delta must lie in (0, 2r) so that the log terms are positive")
    if c1 <= 0 or c2 <= 0:
        raise ValueError("constants must be positive")
    m1 = 100.0 * c1 * math.log(2.0 * K * r / delta) * max(r**2.5 / eps, r**2 / eps**2)
    m2 = 200.0 * c2 * math.log(2.0 * r / delta) * max(r**3 / eps, r**5 / eps**2)
    return _ceil(m1), _ceil(m2)


def w_deviation_bound(m: int, r: int, delta: float) -> float:
    """High-probability bound on ``||W_hat - W||_2`` after ``m`` samples per entry."""
    lg = math.log(2.0 * r / delta)
    return 2.0 * r * lg / (3.0 * m) + math.sqrt(r * lg / (2.0 * m))


class _ColumnSampler:
    """Counts and sums for the unordered entries of the selected columns."""

    def __init__(self, oracle: StochasticOracle, selected):
        self.oracle = oracle
        self.selected = list(selected)
        k = oracle.size
        sel = np.array(self.selected)
        ii = np.repeat(np.arange(k), len(sel))
        jj = np.tile(sel, k)
        lo, hi = np.minimum(ii, jj), np.maximum(ii, jj)
        # one entry per unordered pair; (c_a, c_b) appears in two columns
        keys = np.unique(lo * k + hi)
        self.lo, self.hi = keys // k, keys % k
        self.in_w = np.isin(self.lo, sel) & np.isin(self.hi, sel)
        self.counts = np.zeros(keys.size, dtype=np.int64)
        self.sums = np.zeros(keys.size, dtype=np.int64)
        self._pos = {int(key): n for n, key in enumerate(keys)}
        self._k = k

    @property
    def n_c_only(self) -> int:
        return int((~self.in_w).sum())

    @property
    def n_w(self) -> int:
        return int(self.in_w.sum())

    def top_up(self, target) -> int:
        """Sample each entry until it has at least ``target`` draws; return queries spent."""
        extra = np.maximum(np.broadcast_to(target, self.counts.shape) - self.counts, 0)
        if extra.sum() == 0:
            return 0
        h = self.oracle.sample_many(self.lo, self.hi, extra)
        self.counts += extra
        self.sums += h
        return int(extra.sum())

    def factors(self) -> NystromFactors:
        k, sel = self._k, self.selected
        c_hat = np.empty((k, len(sel)))
        c_counts = np.empty((k, len(sel)), dtype=np.int64)
        for b, c in enumerate(sel):
            for i in range(k):
                n = self._pos[min(i, c) * k + max(i, c)]
                c_hat[i, b] = self.sums[n] / self.counts[n]
                c_counts[i, b] = self.counts[n]
        idx = np.array(sel)
        return NystromFactors(sel, c_hat, c_hat[idx].copy(), c_counts, c_counts[idx].copy())


def _select_columns(oracle, K, r, delta, round_cap, shares=None):
    selected = [0]
    remaining = list(range(1, K))
    states = []
    for phase in range(r - 1):
        budget = None if shares is None else shares[phase]
        cap = round_cap
        if budget is not None:
            first_pass = len(selected) * (len(selected) + 1) // 2 + (len(selected) + 1) * len(remaining)
            if budget < first_pass:
                # not even one pass affordable: take the next column unseen
                log.warning("selection share %d below one sampling pass (%d)", budget, first_pass)
                selected.append(remaining.pop(0))
                continue
            cap = max(1, min(round_cap, budget // first_pass))
        st = successive_elimination(selected, remaining, oracle, delta / (2 * r), cap, budget)
        states.append(st)
        selected.append(st.winner)
        remaining.remove(st.winner)
    return selected, states


def _plug_in_constants(f: NystromFactors):
    try:
        return c1_c2_constants(f.w_hat, f.c_hat)
    except SingularMatrixError:
        return math.inf, math.inf


def _finish(oracle, sampler, selection_queries, pilot_queries, delta, states, **extra):
    f = sampler.factors()
    l_hat = nystrom_extend(f.c_hat, f.w_hat, PINV_TOL)
    i, j, v = optimal_pair(l_hat)
    queries = oracle.stats.total_calls
    r = len(f.selected)
    m_w = int(f.w_counts.min())
    ratio = norm(pinv(f.w_hat), "two") * w_deviation_bound(m_w, r, delta)
    if ratio > 0.5:
        log.warning("principal block estimate may be too noisy for a stable inverse "
                    "(||W^-1|| * deviation bound = %.3g > 1/2)", ratio)
    return RPlansResult(
        l_hat=l_hat,
        pair=(i, j),
        value_hat=v,
        queries=queries,
        selection_queries=selection_queries,
        estimation_queries=queries - selection_queries,
        pilot_queries=pilot_queries,
        factors=f,
        taylor_ratio=ratio,
        se_states=states,
        **extra,
    )


def run_rplans(
    oracle: StochasticOracle,
    K: int,
    r: int,
    eps: float,
    delta: float,
    round_cap: int = DEFAULT_ROUND_CAP,
    max_samples_per_entry: int | None = None,
    pilot_samples: int = MIN_PILOT,
) -> RPlansResult:
    """Accuracy-driven run: aims for ``||L_hat - C W^-1 C^T||_max <= eps`` w.p. ``1 - delta``.

    Column 0 is always selected first; each further column comes from
    successive elimination with failure budget ``delta / (2 r)``. The
    per-entry counts depend on the unknown blocks through two constants,
    which are evaluated on a pilot estimate (``pilot_samples`` draws per
    entry). ``max_samples_per_entry`` caps both counts; ``capped`` on the
    result reports whether the cap bit.
    """
    if oracle.size != K:
        raise ValueError(f"oracle has size {oracle.size}, expected K={K}")
    if not 1 <= r <= K:
        raise ValueError(f"need 1 <= r <= K, got r={r}, K={K}")
    if eps <= 0 or not 0 < delta < 1:
        raise ValueError("need eps > 0 and delta in (0, 1)")
    start = oracle.stats.total_calls
    if start:
        raise ValueError("pass a fresh oracle; query accounting starts at zero")
    selected, states = _select_columns(oracle, K, r, delta, round_cap)
    selection_queries = oracle.stats.total_calls

    sampler = _ColumnSampler(oracle, selected)
    pilot_queries = sampler.top_up(pilot_samples)
    c1, c2 = _plug_in_constants(sampler.factors())
    if math.isinf(c1):
        if max_samples_per_entry is None:
            raise SingularMatrixError("pilot principal block is singular; set max_samples_per_entry")
        m1 = m2 = max_samples_per_entry
        capped = True
    else:
        m1, m2 = sample_counts(c1, c2, K, r, eps, delta)
        capped = False
        if max_samples_per_entry is not None and max(m1, m2) > max_samples_per_entry:
            capped = True
            m1 = min(m1, max_samples_per_entry)
            m2 = min(m2, max_samples_per_entry)
    # principal-block entries are also column entries: they need both counts
    target = np.where(sampler.in_w, max(m1, m2), m1)
    sampler.top_up(target)
    return _finish(oracle, sampler, selection_queries, pilot_queries, delta, states,
                   m1=m1, m2=m2, c1=c1, c2=c2, capped=capped)


def run_rplans_budget(
    oracle: StochasticOracle,
    K: int,
    r: int,
    budget: int,
    split: float = 0.5,
    round_cap: int = DEFAULT_ROUND_CAP,
    delta: float = 0.1,
    eps: float = 0.1,
) -> RPlansResult:
    """Budget-driven run that never spends more than ``budget`` queries.

    At most ``split * budget`` goes to the ``r - 1`` selection phases in
    equal shares. The rest is spent on the selected columns: a pilot pass,
    then per-entry counts in the ratio of the two sample-count formulas at
    the pilot's plug-in constants (``eps`` and ``delta`` only set that ratio).
    """
    if oracle.size != K:
        raise ValueError(f"oracle has size {oracle.size}, expected K={K}")
    if not 1 <= r <= K:
        raise ValueError(f"need 1 <= r <= K, got r={r}, K={K}")
    if budget < K * r:
        raise ValueError(f"budget {budget} below the minimum K*r = {K * r}")
    if not 0.0 <= split < 1.0:
        raise ValueError("split must lie in [0, 1)")
    if oracle.stats.total_calls:
        raise ValueError("pass a fresh oracle; query accounting starts at zero")

    n_entries = K * r - r * (r - 1) // 2
    selection_share = min(int(split * budget), budget - n_entries)
    shares = [selection_share // (r - 1)] * (r - 1) if r > 1 else []
    selected, states = _select_columns(oracle, K, r, delta, round_cap, shares)
    selection_queries = oracle.stats.total_calls

    sampler = _ColumnSampler(oracle, selected)
    remaining = budget - selection_queries
    pilot = max(MIN_PILOT, budget // (10 * K * r))
    pilot = max(1, min(pilot, remaining // n_entries))
    pilot_queries = sampler.top_up(pilot)
    remaining -= pilot_queries

    c1, c2 = _plug_in_constants(sampler.factors())
    if math.isinf(c1):
        ratio = 1.0
    else:
        m1, m2 = sample_counts(c1, c2, K, r, eps, delta)
        ratio = m2 / m1
    # a noisy pilot can inflate the ratio without bound; the principal block
    # never takes more than half of the estimation share
    w_weight = min(max(1.0, ratio), max(1.0, sampler.n_c_only / sampler.n_w))
    total = pilot_queries + remaining
    n_c = int(total // (sampler.n_c_only + sampler.n_w * w_weight))
    n_w = int(n_c * w_weight)
    target = np.where(sampler.in_w, n_w, n_c)
    # spend what is left of the estimation share after the pilot
    need = np.maximum(target - sampler.counts, 0).sum()
    if need > remaining:
        # columns already over target from the pilot; give the rest to the principal block
        target = np.where(sampler.in_w, sampler.counts + remaining // sampler.n_w, sampler.counts)
    sampler.top_up(target)
    assert oracle.stats.total_calls <= budget
    return _finish(oracle, sampler, selection_queries, pilot_queries, delta, states,
                   m1=n_c, m2=n_w, c1=c1, c2=c2)
