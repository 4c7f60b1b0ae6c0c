"""Population preference models, the loss matrix, and query oracles.

A population is a mixture of ``r`` sub-populations. Sub-population ``k``
occurs with probability ``p[k]`` and likes item ``i`` with probability
``u[k, i]``. Showing the pair ``(i, j)`` earns a reward of one when the
user likes either item, so the probability of *no* reward is

    L[i, j] = sum_k p[k] (1 - u[k, i]) (1 - u[k, j])

which is symmetric, positive semi-definite and of rank at most ``r``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

from .errors import DataFormatError, DimensionError
from .linalg import as_matrix, read_matrix_csv

SYM_TOL = 1e-12
PSD_TOL = 1e-10


@dataclass(frozen=True)
class PopulationModel:
    """Mixture weights ``p`` (length r) and like-probabilities ``u`` (r x K)."""

    p: np.ndarray
    u: np.ndarray

    def __post_init__(self):
        p = np.asarray(self.p, dtype=np.float64)
        u = np.asarray(self.u, dtype=np.float64)
        if p.ndim != 1 or p.size < 1:
            raise DataFormatError("p must be a non-empty vector")
        if u.ndim != 2 or u.shape[0] != p.size:
            raise DataFormatError(f"u must have one row per component; got {u.shape} for r={p.size}")
        if u.shape[1] < 2:
            raise DataFormatError("need at least two items")
        if not (np.all(np.isfinite(p)) and np.all(np.isfinite(u))):
            raise DataFormatError("non-finite model parameters")
        if np.any(p < 0) or abs(p.sum() - 1.0) > 1e-12:
            raise DataFormatError("p must be a probability vector")
        if np.any(u < 0) or np.any(u > 1):
            raise DataFormatError("like-probabilities must lie in [0, 1]")
        p.setflags(write=False)
        u.setflags(write=False)
        object.__setattr__(self, "p", p)
        object.__setattr__(self, "u", u)

    @property
    def r(self) -> int:
        return self.p.size

    @property
    def K(self) -> int:
        return self.u.shape[1]

    def to_dict(self) -> dict:
        return {"p": self.p.tolist(), "u": self.u.tolist()}

    @classmethod
    def from_dict(cls, d) -> "PopulationModel":
        if not isinstance(d, dict) or "p" not in d or "u" not in d:
            raise DataFormatError('model JSON must be an object with keys "p" and "u"')
        u = d["u"]
        if not isinstance(u, list) or not u or len({len(row) for row in u}) != 1:
            raise DataFormatError("u must be a list of equal-length arrays")
        try:
            return cls(np.asarray(d["p"], dtype=float), np.asarray(u, dtype=float))
        except (TypeError, ValueError) as exc:
            if isinstance(exc, DataFormatError):
                raise
            raise DataFormatError(str(exc)) from exc


def load_model(path) -> PopulationModel:
    try:
        with open(path) as fh:
            d = json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise DataFormatError(f"cannot read model from {path}: {exc}") from exc
    return PopulationModel.from_dict(d)


def save_model(path, model: PopulationModel) -> None:
    with open(path, "w") as fh:
        json.dump(model.to_dict(), fh)
        fh.write("\n")


def build_loss_matrix(model: PopulationModel) -> np.ndarray:
    v = 1.0 - model.u  # (r, K)
    l = (v.T * model.p) @ v
    l = 0.5 * (l + l.T)
    # rounding can push entries a hair outside [0, 1]
    return np.clip(l, 0.0, 1.0)


def build_reward_matrix(l) -> np.ndarray:
    """Probability of a reward for each pair: ``1 - L``."""
    return 1.0 - as_matrix(l)


def check_loss_matrix(l, rank: int | None = None) -> np.ndarray:
    """Validate a loss matrix and return it as an array.

    Checks symmetry, entries in [0, 1], positive semi-definiteness and,
    when ``rank`` is given, that the numerical rank does not exceed it.
    """
    a = as_matrix(l)
    if a.shape[0] != a.shape[1]:
        raise DimensionError(f"loss matrix must be square, got {a.shape}")
    if np.max(np.abs(a - a.T)) > SYM_TOL:
        raise DataFormatError("loss matrix is not symmetric")
    if np.any(a < 0) or np.any(a > 1):
        raise DataFormatError("loss matrix entries must lie in [0, 1]")
    if np.linalg.eigvalsh(a)[0] < -PSD_TOL:
        raise DataFormatError("loss matrix is not positive semi-definite")
    if rank is not None and rank < a.shape[0]:
        s = np.linalg.svd(a, compute_uv=False)
        if s[rank] > 1e-9 * max(s[0], np.finfo(float).tiny):
            raise DataFormatError(f"loss matrix has numerical rank above {rank}")
    return a


def load_loss_matrix(path) -> np.ndarray:
    """Loss matrix from a CSV file, or built from a model JSON file."""
    if str(path).endswith(".json"):
        return build_loss_matrix(load_model(path))
    return check_loss_matrix(read_matrix_csv(path))


def optimal_pair(l) -> tuple:
    """Unordered pair ``(i, j)``, ``i <= j``, with the smallest loss.

    The diagonal is included. Ties go to the lexicographically first pair.
    """
    a = as_matrix(l)
    iu, ju = np.triu_indices(a.shape[0])
    k = int(np.argmin(a[iu, ju]))  # argmin returns the first minimum
    i, j = int(iu[k]), int(ju[k])
    return i, j, float(a[i, j])


def simulate_round(model: PopulationModel, i: int, j: int, rng: np.random.Generator) -> int:
    """One stochastic round: hidden sub-population, two likes, reward = either."""
    z = rng.choice(model.r, p=model.p)
    yi = rng.random() < model.u[z, i]
    yj = rng.random() < model.u[z, j]
    return int(yi or yj)


def simulate_rounds(model: PopulationModel, i: int, j: int, n: int, rng: np.random.Generator) -> np.ndarray:
    """``n`` independent rounds of :func:`simulate_round`, vectorised."""
    z = rng.choice(model.r, size=n, p=model.p)
    yi = rng.random(n) < model.u[z, i]
    yj = rng.random(n) < model.u[z, j]
    return (yi | yj).astype(np.int64)


@dataclass
class OracleStats:
    """Query tallies per unordered pair (upper triangle of ``counts``)."""

    size: int
    counts: np.ndarray = field(init=False, repr=False)
    total_calls: int = 0

    def __post_init__(self):
        self.counts = np.zeros((self.size, self.size), dtype=np.int64)

    def add(self, i, j, n=1) -> None:
        i = np.asarray(i)
        j = np.asarray(j)
        lo = np.minimum(i, j)
        hi = np.maximum(i, j)
        n = np.broadcast_to(np.asarray(n, dtype=np.int64), lo.shape)
        np.add.at(self.counts, (lo, hi), n)
        self.total_calls += int(n.sum())

    def count(self, i: int, j: int) -> int:
        return int(self.counts[min(i, j), max(i, j)])

    @property
    def per_pair(self) -> dict:
        iu, ju = np.nonzero(self.counts)
        return {(int(a), int(b)): int(self.counts[a, b]) for a, b in zip(iu, ju)}

    def to_dict(self) -> dict:
        return {
            "total_calls": self.total_calls,
            "distinct_pairs": int(np.count_nonzero(self.counts)),
            "per_pair": [[i, j, n] for (i, j), n in sorted(self.per_pair.items())],
        }


class _Oracle:
    def __init__(self, l):
        a = as_matrix(l)
        if a.shape[0] != a.shape[1]:
            raise DimensionError(f"oracle matrix must be square, got {a.shape}")
        a = a.copy()
        a.setflags(write=False)
        self._l = a
        self.stats = OracleStats(a.shape[0])

    @property
    def size(self) -> int:
        return self._l.shape[0]

    def _check(self, i, j):
        k = self.size
        if not (0 <= i < k and 0 <= j < k):
            raise DimensionError(f"pair ({i}, {j}) out of range for K={k}")

    def _entries(self, i, j) -> np.ndarray:
        i = np.asarray(i, dtype=np.intp)
        j = np.asarray(j, dtype=np.intp)
        if i.size and (min(i.min(), j.min()) < 0 or max(i.max(), j.max()) >= self.size):
            raise DimensionError("pair index out of range")
        # unordered pair: always read the upper triangle
        return self._l[np.minimum(i, j), np.maximum(i, j)]


class DeterministicOracle(_Oracle):
    """Reveals ``L[i, j]`` exactly; every call is counted."""

    def query(self, i: int, j: int) -> float:
        self._check(i, j)
        self.stats.add(i, j)
        return float(self._l[min(i, j), max(i, j)])


class StochasticOracle(_Oracle):
    """Answers each query with a fresh ``Bernoulli(L[i, j])`` draw.

    Owns its random stream and its statistics; use one handle per thread.
    """

    def __init__(self, l, rng: np.random.Generator):
        a = as_matrix(l)
        if np.any(a < 0) or np.any(a > 1):
            raise DataFormatError("oracle probabilities must lie in [0, 1]")
        super().__init__(a)
        self.rng = rng

    def query(self, i: int, j: int) -> int:
        self._check(i, j)
        self.stats.add(i, j)
        return int(self.rng.random() < self._l[min(i, j), max(i, j)])

    def sample(self, i: int, j: int, n: int) -> int:
        """Sum of ``n`` independent draws for pair ``(i, j)``."""
        self._check(i, j)
        if n <= 0:
            return 0
        self.stats.add(i, j, n)
        return int(self.rng.binomial(n, self._l[min(i, j), max(i, j)]))

    def sample_many(self, i, j, n=1) -> np.ndarray:
        """Vectorised :meth:`sample` over arrays of pairs and counts."""
        probs = self._entries(i, j)
        n = np.broadcast_to(np.asarray(n, dtype=np.int64), probs.shape)
        if np.any(n < 0):
            raise ValueError("negative sample count")
        self.stats.add(i, j, n)
        return self.rng.binomial(n, probs)

    def draw_block(self, i, j, rounds: int) -> np.ndarray:
        """Speculative draws: ``rounds`` Bernoulli samples for each listed pair.

        Nothing is recorded. Callers commit the prefix of rounds they
        actually use through :meth:`record` and discard the rest unseen,
        which leaves the distribution of committed samples unchanged.
        """
        probs = self._entries(i, j)
        return (self.rng.random((rounds, probs.size)) < probs).astype(np.int64)

    def coupled_uniforms(self, n: int) -> np.ndarray:
        """Raw uniforms for simulator fast paths.

        A fast path that draws ``u`` here and decides a pull's outcome as
        ``u < L[i, j]`` must report its pulls through :meth:`record`.
        """
        return self.rng.random(n)

    def record(self, i, j, n=1) -> None:
        self.stats.add(i, j, n)

    @property
    def probabilities(self) -> np.ndarray:
        """Read-only view of ``L``; only simulator fast paths should touch it."""
        return self._l


def deterministic_oracle(l) -> DeterministicOracle:
    return DeterministicOracle(l)


def stochastic_oracle(l, rng: np.random.Generator) -> StochasticOracle:
    return StochasticOracle(l, rng)
