import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from pairpref.baselines import ArmIndex, lil_ucb, lil_ucb_radius, naive_uniform, pairwise_se
from pairpref.harness import gen_synthetic, pair_error
from pairpref.model import stochastic_oracle
from pairpref.rng import make_rng


def _oracle(l, seed):
    return stochastic_oracle(np.asarray(l, dtype=float), make_rng(seed))


def _two_arms(gap):
    # K=2 has arms (0,0), (0,1), (1,1); make (0,1) best and the others equal
    lo = 0.5 - gap / 2
    return np.array([[0.5 + gap / 2, lo], [lo, 0.5 + gap / 2]])


class TestArmIndex:
    @given(st.integers(1, 60))
    def test_roundtrip(self, k):
        arms = ArmIndex(k)
        ids = [arms.pair_to_arm(i, j) for i in range(k) for j in range(i, k)]
        assert ids == list(range(k * (k + 1) // 2))
        for a in ids:
            assert arms.pair_to_arm(*arms.arm_to_pair(a)) == a

    def test_order_insensitive(self):
        assert ArmIndex(5).pair_to_arm(3, 1) == ArmIndex(5).pair_to_arm(1, 3) == 7

    def test_bounds(self):
        with pytest.raises(ValueError):
            ArmIndex(3).arm_to_pair(6)
        with pytest.raises(ValueError):
            ArmIndex(3).pair_to_arm(0, 3)


class TestNaive:
    def test_even_split(self):
        o = _oracle(np.full((2, 2), 0.5), 0)
        _, q = naive_uniform(o, 2, 30)
        assert q == 30
        assert o.stats.per_pair == {(0, 0): 10, (0, 1): 10, (1, 1): 10}

    def test_leftover_to_first_pairs(self):
        o = _oracle(np.full((3, 3), 0.5), 0)
        naive_uniform(o, 3, 14)
        assert [o.stats.count(i, j) for i in range(3) for j in range(i, 3)] == [3, 3, 2, 2, 2, 2]

    def test_budget_below_pairs(self):
        o = _oracle(np.full((4, 4), 0.5), 0)
        pair, q = naive_uniform(o, 4, 3)
        assert q == 3 and len(o.stats.per_pair) == 3
        # unsampled pairs count as worst; ties break lexicographically
        assert pair in {(0, 0), (0, 1), (0, 2)}

    def test_zero_entry_found(self):
        l = np.ones((5, 5))
        l[1, 3] = l[3, 1] = 0.0
        wins = sum(naive_uniform(_oracle(l, s), 5, 300)[0] == (1, 3) for s in range(100))
        assert wins >= 99


class TestLilUcb:
    def test_radius_formula(self):
        n = 50
        inner = max(np.log(1.01 * n) / 0.02, np.e)
        expected = 2 * 1.1 * np.sqrt(2 * 1.01 * np.log(inner) / n)
        assert lil_ucb_radius(n) == pytest.approx(expected, rel=1e-14)

    def test_identical_arms(self):
        o = _oracle(np.full((3, 3), 0.4), 1)
        pair, q = lil_ucb(o, 3, 500)
        assert q == 500 == o.stats.total_calls
        assert 0 <= pair[0] <= pair[1] < 3

    def test_gap_half(self):
        l = _two_arms(0.5)
        wins = sum(lil_ucb(_oracle(l, s), 2, 10_000)[0] == (0, 1) for s in range(100))
        assert wins >= 95

    def test_pulls_concentrate_on_best(self):
        l = _two_arms(0.3)
        o = _oracle(l, 3)
        lil_ucb(o, 2, 100_000)
        counts = o.stats.per_pair
        assert counts[(0, 1)] > 100_000 / 3

    def test_insufficient_budget(self):
        with pytest.raises(ValueError):
            lil_ucb(_oracle(np.full((3, 3), 0.4), 1), 3, 5)


class TestPairwiseSe:
    def test_single_arm(self):
        o = _oracle([[0.3]], 0)
        assert pairwise_se(o, 1, 0.1, 0.1, 100) == ((0, 0), 0)

    def test_gap_half(self):
        l = _two_arms(0.5)
        wins = sum(pairwise_se(_oracle(l, s), 2, 0.01, 0.1, 10**6)[0] == (0, 1) for s in range(100))
        assert wins >= 90

    def test_sample_complexity_scales_inverse_square(self):
        gaps = [0.4, 0.2, 0.1]
        q = [np.median([pairwise_se(_oracle(_two_arms(g), s), 2, 1e-3, 0.1, 10**7)[1] for s in range(20)])
             for g in gaps]
        slope = np.polyfit(np.log(gaps), np.log(q), 1)[0]
        assert -2.5 <= slope <= -1.5

    def test_budget_respected(self):
        l = gen_synthetic(10, 2, 0)
        o = _oracle(l, 0)
        _, q = pairwise_se(o, 10, 0.001, 0.1, 10**6, budget=1234)
        assert q == o.stats.total_calls <= 1234


class TestErrorMetric:
    @pytest.mark.parametrize("algo", ["naive", "lilucb", "se"])
    def test_non_negative(self, algo):
        l = gen_synthetic(12, 2, 1)
        for s in range(5):
            o = _oracle(l, s)
            if algo == "naive":
                pair, q = naive_uniform(o, 12, 2000)
            elif algo == "lilucb":
                pair, q = lil_ucb(o, 12, 2000)
            else:
                pair, q = pairwise_se(o, 12, 0.05, 0.1, 10**6, budget=2000)
            assert pair_error(l, pair) >= 0 and q <= 2000
