import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pairpref import kernels
from pairpref import _kernels_py

compiled = pytest.mark.skipif(kernels.BACKEND != "cython", reason="compiled kernels not built")


def _reference(probs, uniforms, eps, beta, omega):
    """Naive O(A) argmax per pull, no heap."""
    import math

    a_n = len(probs)
    counts = np.zeros(a_n, dtype=np.int64)
    rewards = np.zeros(a_n, dtype=np.int64)

    def index(a):
        n = counts[a]
        inner = max(math.log((1 + eps) * n) / omega, math.e)
        return rewards[a] / n + (1 + beta) * (1 + math.sqrt(eps)) * math.sqrt(2 * (1 + eps) * math.log(inner) / n)

    for a in range(min(a_n, len(uniforms))):
        counts[a] = 1
        rewards[a] = 0 if uniforms[a] < probs[a] else 1
    for t in range(a_n, len(uniforms)):
        idx = [index(a) for a in range(a_n)]
        a = int(np.argmax(idx))  # first maximum = smallest arm on ties
        counts[a] += 1
        rewards[a] += 0 if uniforms[t] < probs[a] else 1
    return counts, rewards


@given(st.integers(0, 2**32 - 1), st.integers(1, 12), st.integers(0, 300))
def test_python_kernel_matches_argmax_reference(seed, arms, extra):
    rng = np.random.default_rng(seed)
    p = rng.random(arms)
    u = rng.random(arms + extra)
    got = _kernels_py.lil_ucb_pulls(p, u, 0.01, 1.0, 0.02)
    want = _reference(p, u, 0.01, 1.0, 0.02)
    np.testing.assert_array_equal(got[0], want[0])
    np.testing.assert_array_equal(got[1], want[1])


@compiled
@given(st.integers(0, 2**32 - 1), st.integers(1, 200), st.integers(0, 5000))
def test_compiled_bit_identical(seed, arms, extra):
    rng = np.random.default_rng(seed)
    # coarse probabilities produce many exact index ties
    p = rng.integers(0, 4, arms) / 4.0
    u = rng.random(arms + extra)
    a = kernels.get("cython").lil_ucb_pulls(p, u, 0.01, 1.0, 0.02)
    b = kernels.get("python").lil_ucb_pulls(p, u, 0.01, 1.0, 0.02)
    np.testing.assert_array_equal(a[0], b[0])
    np.testing.assert_array_equal(a[1], b[1])


def test_budget_below_arm_count():
    c, r = _kernels_py.lil_ucb_pulls(np.array([0.1, 0.2, 0.3]), np.array([0.5, 0.05]), 0.01, 1.0, 0.02)
    np.testing.assert_array_equal(c, [1, 1, 0])
    np.testing.assert_array_equal(r, [1, 0, 0])


def test_pulls_sum_to_budget():
    rng = np.random.default_rng(0)
    c, r = kernels.lil_ucb_pulls(rng.random(50), rng.random(5000), 0.01, 1.0, 0.02)
    assert c.sum() == 5000 and np.all(r <= c)


def test_get_unknown_backend():
    with pytest.raises(ValueError):
        kernels.get("fortran")


def test_env_var_forces_fallback():
    import os
    import subprocess
    import sys

    env = dict(os.environ, PAIRPREF_PURE_PYTHON="1")
    out = subprocess.run([sys.executable, "-c", "from pairpref import kernels; print(kernels.BACKEND)"],
                         capture_output=True, text=True, env=env)
    assert out.stdout.strip() == "python"
