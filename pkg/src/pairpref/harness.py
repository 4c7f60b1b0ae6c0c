"""Experiment harness: synthetic models, rating ingestion, budget sweeps, and
Monte Carlo checks of the concentration bounds used by the algorithms."""
from __future__ import annotations

import csv
import io
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass

import numpy as np

from .baselines import lil_ucb, naive_uniform, pairwise_se
from .elimination import bernstein_radius, successive_elimination
from .errors import DataFormatError
from .linalg import PINV_TOL, batched_sigma_min, nystrom_extend, singular_values
from .model import (
    PopulationModel,
    check_loss_matrix,
    optimal_pair,
    stochastic_oracle,
)
from .rng import derive_seed, make_rng
from .rplans import DEFAULT_ROUND_CAP, run_rplans_budget

MAX_REDRAWS = 100
ALGORITHMS = ("rplans", "naive", "lilucb", "se")
SWEEP_HEADER = ["algorithm", "K", "r", "budget", "rep", "seed", "error", "queries", "wall_ms"]
SE_EPS = 0.01
SE_DELTA = 0.1


def gen_synthetic(K: int, r: int, seed: int) -> np.ndarray:
    """Random rank-``r`` SPSD loss matrix with maximum entry exactly one.

    Draws ``A`` uniform on ``[0, 1]^{K x r}`` and returns ``A A^T`` scaled
    by its largest entry. For ``r >= 2``, draws whose smallest entry sits on
    the diagonal are rejected, so the best pair is two distinct items. With
    ``r = 1`` the smallest entry is always ``min(a)^2`` on the diagonal, so
    the first draw is returned as is.
    """
    if not 1 <= r <= K:
        raise ValueError(f"need 1 <= r <= K, got r={r}, K={K}")
    if K < 2:
        raise ValueError("need at least two items")
    for attempt in range(MAX_REDRAWS):
        a = make_rng(seed, attempt).random((K, r))
        l = a @ a.T
        l = 0.5 * (l + l.T)
        l = l / l.max()
        i, j, _ = optimal_pair(l)
        if i != j or r == 1:
            return l
    raise RuntimeError(f"no draw with an off-diagonal minimum in {MAX_REDRAWS} attempts")


def gen_population_model(K: int, r: int, seed: int) -> PopulationModel:
    """Random mixture: Dirichlet(1) weights and uniform like-probabilities."""
    if not 1 <= r <= K:
        raise ValueError(f"need 1 <= r <= K, got r={r}, K={K}")
    rng = make_rng(seed)
    p = rng.dirichlet(np.ones(r))
    p = p / p.sum()
    p[-1] = 1.0 - p[:-1].sum()
    return PopulationModel(p=p, u=rng.random((r, K)))


def ingest_ratings(ratings, groups, labels=None) -> PopulationModel:
    """Mixture model from binary ratings (users x items) and a group label per user.

    Component ``k`` has weight equal to its share of users and
    like-probabilities equal to its members' mean ratings. Components
    follow ``labels`` when given, otherwise the sorted distinct labels.
    """
    x = np.asarray(ratings)
    g = np.asarray(groups)
    if x.ndim != 2 or x.shape[0] < 1:
        raise DataFormatError("ratings must be a non-empty users x items matrix")
    if g.shape != (x.shape[0],):
        raise DataFormatError(f"need one group label per user ({x.shape[0]}), got {g.shape}")
    if not np.all((x == 0) | (x == 1)):
        raise DataFormatError("ratings must be 0 or 1")
    labels = sorted(set(g.tolist())) if labels is None else list(labels)
    p, u = [], []
    for lab in labels:
        members = g == lab
        n = int(members.sum())
        if n == 0:
            raise ValueError(f"group {lab!r} has no users")
        p.append(n / g.size)
        u.append(x[members].mean(axis=0))
    if not np.all(np.isin(g, labels)):
        raise ValueError("some users carry a label outside the given label list")
    return PopulationModel(p=np.array(p), u=np.array(u, dtype=float))


# -- sweeps ---------------------------------------------------------------


@dataclass(frozen=True)
class SweepConfig:
    l: np.ndarray
    algos: tuple
    budgets: tuple
    reps: int
    seed: int
    r: int
    workers: int = 1
    split: float = 0.5
    record_timing: bool = False

    def __post_init__(self):
        if self.reps < 1:
            raise ValueError("reps must be at least 1")
        if not self.budgets or any(b <= a for a, b in zip(self.budgets, self.budgets[1:])):
            raise ValueError("budgets must be non-empty and strictly increasing")
        unknown = [a for a in self.algos if a not in ALGORITHMS]
        if unknown or not self.algos:
            raise ValueError(f"unknown algorithm(s) {unknown}; choose from {', '.join(ALGORITHMS)}")


@dataclass(frozen=True)
class SweepRecord:
    algorithm: str
    K: int
    r: int
    budget: int
    rep: int
    seed: int
    error: float
    queries: int
    wall_ms: float


def run_algorithm(algo: str, l, r: int, budget: int, seed: int, split: float = 0.5) -> tuple:
    """Run one algorithm on a fresh oracle; returns ``(pair, queries)``."""
    K = l.shape[0]
    oracle = stochastic_oracle(l, make_rng(seed))
    if algo == "rplans":
        res = run_rplans_budget(oracle, K, r, budget, split=split, round_cap=DEFAULT_ROUND_CAP)
        return res.pair, res.queries
    if algo == "naive":
        return naive_uniform(oracle, K, budget)
    if algo == "lilucb":
        return lil_ucb(oracle, K, budget)
    if algo == "se":
        return pairwise_se(oracle, K, SE_EPS, SE_DELTA, round_cap=budget, budget=budget)
    raise ValueError(f"unknown algorithm {algo!r}")


def pair_error(l, pair) -> float:
    """Loss gap of ``pair`` over the best pair; never negative."""
    _, _, best = optimal_pair(l)
    return max(0.0, float(l[pair[0], pair[1]]) - best)


def _run_cell(args) -> SweepRecord:
    algo, l, r, budget, rep, seed, split, timing = args
    t0 = time.perf_counter()
    pair, queries = run_algorithm(algo, l, r, budget, seed, split)
    ms = (time.perf_counter() - t0) * 1e3 if timing else 0.0
    return SweepRecord(algo, l.shape[0], r, budget, rep, seed, pair_error(l, pair), queries, round(ms, 3))


def run_sweep(config: SweepConfig) -> list:
    """All (algorithm, budget, repetition) cells, sorted in that order.

    Each cell's seed depends only on the master seed and the cell's labels,
    so results do not depend on ``workers``.
    """
    l = check_loss_matrix(config.l)
    cells = [
        (algo, l, config.r, b, rep, derive_seed(config.seed, algo, b, rep), config.split, config.record_timing)
        for algo in config.algos
        for b in config.budgets
        for rep in range(config.reps)
    ]
    if config.workers > 1:
        with ProcessPoolExecutor(config.workers) as pool:
            records = list(pool.map(_run_cell, cells))
    else:
        records = [_run_cell(c) for c in cells]
    order = {a: n for n, a in enumerate(config.algos)}
    return sorted(records, key=lambda s: (order[s.algorithm], s.budget, s.rep))


def sweep_csv(records) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SWEEP_HEADER)
    for rec in records:
        d = asdict(rec)
        d["error"] = repr(float(d["error"]))
        w.writerow([d[k] for k in SWEEP_HEADER])
    return buf.getvalue()


def median_errors(records) -> dict:
    """``{(algorithm, budget): median error}``."""
    groups = {}
    for rec in records:
        groups.setdefault((rec.algorithm, rec.budget), []).append(rec.error)
    return {k: float(np.median(v)) for k, v in groups.items()}


# -- Monte Carlo checks ---------------------------------------------------


def validate_bernstein(p: int, n: int, delta: float, trials: int, seed: int) -> dict:
    """Coverage of the matrix Bernstein radius for ``n`` samples per entry.

    A fixed random symmetric ``p x p`` probability matrix is estimated
    ``trials`` times. Reports how often the spectral error and the error in
    the smallest singular value exceed the radius, and how often Weyl's
    inequality ``|s_min(P_hat) - s_min(P)| <= ||P_hat - P||_2`` fails.
    """
    if min(p, n, trials) < 1 or not 0 < delta < 1:
        raise ValueError("need positive p, n, trials and delta in (0, 1)")
    rng = make_rng(seed)
    a = rng.random((p, p))
    prob = np.triu(a) + np.triu(a, 1).T
    radius = float(bernstein_radius(n, p * p / n, p, delta))
    iu = np.triu_indices(p)
    s_true = singular_values(prob)[-1]
    spec_bad = smin_bad = weyl_bad = 0
    for _ in range(trials):
        h = rng.binomial(n, prob[iu])
        est = np.zeros((p, p))
        est[iu] = h / n
        est = est + np.triu(est, 1).T
        dev = float(np.linalg.norm(est - prob, 2))
        ds = abs(singular_values(est)[-1] - s_true)
        spec_bad += dev > radius
        smin_bad += ds > radius
        weyl_bad += ds > dev + 1e-12
    spec_frac = spec_bad / trials
    smin_frac = smin_bad / trials
    return {
        "p": p,
        "n": n,
        "delta": delta,
        "trials": trials,
        "seed": seed,
        "radius": radius,
        "spectral_violation_fraction": spec_frac,
        "sigma_min_violation_fraction": float(smin_frac),
        "weyl_violations": int(weyl_bad),
        "pass": bool(spec_frac <= delta and smin_frac <= delta and weyl_bad == 0),
    }


def se_scenario() -> tuple:
    """Shared 2 x 2 block plus five candidates whose 3 x 3 blocks have well separated
    smallest singular values. Returns ``(matrix, base, candidates, best)``."""
    m = np.zeros((7, 7))
    m[:2, :2] = [[0.95, 0.05], [0.05, 0.95]]
    for k, d in zip(range(2, 7), (0.87, 0.65, 0.43, 0.21, 0.0)):
        m[k, k] = d
        m[:2, k] = m[k, :2] = 0.02
    return m, [0, 1], [2, 3, 4, 5, 6], 2


def validate_se(delta: float, trials: int, seed: int, round_cap: int = 200_000) -> dict:
    """Fraction of seeded elimination runs that return the true best candidate."""
    if trials < 1 or not 0 < delta < 1:
        raise ValueError("need trials >= 1 and delta in (0, 1)")
    m, base, cands, best = se_scenario()
    s_true = [float(singular_values(m[np.ix_(base + [k], base + [k])])[-1]) for k in cands]
    correct = rounds = 0
    for t in range(trials):
        oracle = stochastic_oracle(m, make_rng(seed, t))
        st = successive_elimination(base, cands, oracle, delta, round_cap)
        correct += st.winner == best
        rounds += st.rounds
    return {
        "delta": delta,
        "trials": trials,
        "seed": seed,
        "sigma_min": s_true,
        "best": best,
        "correct": int(correct),
        "correct_fraction": correct / trials,
        "mean_rounds": rounds / trials,
        "pass": bool(correct / trials >= 1 - delta),
    }


def best_columns(l, r: int) -> list:
    """Column 0, then greedily the column whose principal block has the
    largest smallest singular value; the exact counterpart of the noisy
    selection phase."""
    sel = [0]
    for _ in range(r - 1):
        rest = [k for k in range(l.shape[0]) if k not in sel]
        stack = np.stack([l[np.ix_(sel + [k], sel + [k])] for k in rest])
        sel.append(rest[int(np.argmax(batched_sigma_min(stack)))])
    return sel


def validate_nystrom_noise(K: int, r: int, m_list, trials: int, seed: int, exact: bool = False) -> dict:
    """Max-norm error of the extension built from ``m`` samples per selected entry.

    Columns are chosen on the noiseless matrix (see :func:`best_columns`),
    so only estimation noise is measured. With ``exact`` the estimates are the true entries.
    """
    m_list = [int(m) for m in m_list]
    if not m_list or min(m_list) < 1 or trials < 1:
        raise ValueError("need positive sample counts and trials")
    l = gen_synthetic(K, r, seed)
    sel = best_columns(l, r)
    c_true = l[:, sel]
    rng = make_rng(seed, 1)
    medians = []
    rows = []
    for m in m_list:
        errs = []
        for _ in range(trials):
            if exact:
                c = c_true
            else:
                c = rng.binomial(m, c_true) / m
                # principal-block entries are shared between columns
                w = c[sel]
                w = np.triu(w) + np.triu(w, 1).T
                c[sel] = w
            errs.append(float(np.abs(nystrom_extend(c, c[sel], PINV_TOL) - l).max()))
        med = float(np.median(errs))
        medians.append(med)
        rows.append({"m": m, "median_error": med, "max_error": float(max(errs))})
    slope = float("nan")
    if len(m_list) > 1 and min(medians) > 0:
        slope = float(np.polyfit(np.log(m_list), np.log(medians), 1)[0])
    return {"K": K, "r": r, "trials": trials, "seed": seed, "exact": exact,
            "selected": [int(s) for s in sel], "results": rows, "slope": slope}
