"""Mask binarization, differential key bits, agreement rate, and reward."""

import itertools

import numpy as np
import pytest

from fd2k import keygen
from fd2k.keygen import FeatureMask, Key
from fd2k.signals import SignalFrame


def mask(bits):
    return FeatureMask(np.array(bits, dtype=np.int8))


def key(bits, owner="A", ts_index=1):
    return Key(np.array(bits, dtype=np.int8), owner=owner, ts_index=ts_index)


class TestTypes:
    def test_mask_rejects_non_binary(self):
        with pytest.raises(ValueError):
            mask([0, 2])

    def test_mask_utilization(self):
        assert mask([1, 0, 1, 1]).utilization == 0.75

    def test_key_rejects_bad_owner(self):
        with pytest.raises(ValueError):
            key([0, 1], owner="X")

    def test_key_rejects_bad_ts(self):
        with pytest.raises(ValueError):
            key([0, 1], ts_index=0)

    def test_key_as_line(self):
        assert key([1, 0, 1], owner="B", ts_index=7).as_line() == "B,7,101"


class TestBinarize:
    def test_boundary_inclusive(self):
        out = keygen.binarize(np.array([0.5, 0.49]), 0.5)
        assert np.array_equal(out.bits, [1, 0])

    def test_all_zero_action(self):
        out = keygen.binarize(np.zeros(4), 0.5)
        assert np.array_equal(out.bits, [0, 0, 0, 0])

    def test_all_one_action(self):
        out = keygen.binarize(np.ones(4), 0.5)
        assert np.array_equal(out.bits, [1, 1, 1, 1])

    def test_lambda_range_enforced(self):
        with pytest.raises(ValueError):
            keygen.binarize(np.array([0.5]), 0.0)
        with pytest.raises(ValueError):
            keygen.binarize(np.array([0.5]), 1.0)


class TestGenerateKey:
    def test_first_ts_convention(self):
        # with no previous sample the first comparison is against P(1)
        # itself, so the tie rule makes bit 1 whenever the mask allows
        fr = SignalFrame(1, np.array([1.0, 2.0, 3.0]))
        k = keygen.generate_key(fr.values, mask([1, 1, 1]), None, owner="A", ts_index=1)
        assert np.array_equal(k.bits, [1, 1, 1])

    def test_mask_gates_every_bit(self):
        fr = SignalFrame(1, np.array([9.0, 1.0, 7.0]))
        k = keygen.generate_key(fr.values, mask([0, 0, 0]), None, owner="A", ts_index=1)
        assert np.array_equal(k.bits, [0, 0, 0])

    def test_prev_sample_feeds_first_bit(self):
        fr = SignalFrame(2, np.array([3.0, 2.0, 5.0]))
        k = keygen.generate_key(fr.values, mask([1, 1, 1]), 4.0, owner="A", ts_index=2)
        assert np.array_equal(k.bits, [0, 0, 1])

    def test_tie_yields_one(self):
        fr = SignalFrame(2, np.array([4.0, 4.0]))
        k = keygen.generate_key(fr.values, mask([1, 1]), 4.0, owner="A", ts_index=2)
        assert np.array_equal(k.bits, [1, 1])

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            keygen.generate_key(
                np.array([1.0, 2.0]), mask([1, 1, 1]), None, owner="A", ts_index=1
            )

    def test_owner_and_ts_carried(self):
        k = keygen.generate_key(
            np.array([1.0, 2.0]), mask([1, 1]), None, owner="E", ts_index=9
        )
        assert k.owner == "E"
        assert k.ts_index == 9


class TestKar:
    def test_identical(self):
        assert keygen.kar(key([1, 0, 1, 1]), key([1, 0, 1, 1], owner="B")) == 1.0

    def test_complementary(self):
        assert keygen.kar(key([1, 0, 1, 0]), key([0, 1, 0, 1], owner="B")) == 0.0

    def test_one_differing_bit(self):
        assert keygen.kar(key([1, 0, 1, 1]), key([1, 0, 0, 1], owner="B")) == 0.75

    def test_symmetric(self):
        rng = np.random.default_rng(3)
        for _ in range(20):
            a = key(rng.integers(0, 2, 8))
            b = key(rng.integers(0, 2, 8), owner="B")
            assert keygen.kar(a, b) == keygen.kar(b, a)

    def test_invariant_under_common_permutation(self):
        rng = np.random.default_rng(4)
        bits_a = rng.integers(0, 2, 10)
        bits_b = rng.integers(0, 2, 10)
        base = keygen.kar(key(bits_a), key(bits_b, owner="B"))
        for _ in range(5):
            perm = rng.permutation(10)
            assert keygen.kar(key(bits_a[perm]), key(bits_b[perm], owner="B")) == base

    def test_length_mismatch(self):
        with pytest.raises(ValueError):
            keygen.kar(key([1, 0]), key([1, 0, 1], owner="B"))


class TestReward:
    def test_direct_evaluation(self):
        r = keygen.reward(
            key([1, 0, 1, 0]),
            key([1, 0, 1, 0], owner="B"),
            mask([1, 1, 0, 0]),
            mask([1, 0, 0, 0]),
        )
        assert r == 1.375

    def test_mismatch_drops_bonus(self):
        r = keygen.reward(
            key([1, 0, 1, 0]),
            key([1, 0, 1, 1], owner="B"),
            mask([1, 1, 1, 1]),
            mask([1, 1, 1, 1]),
        )
        assert r == 0.75

    def test_maximum(self):
        r = keygen.reward(
            key([1, 1, 0, 1]),
            key([1, 1, 0, 1], owner="B"),
            mask([1, 1, 1, 1]),
            mask([1, 1, 1, 1]),
        )
        assert r == 2.0

    def test_bounds_and_max_condition(self):
        rng = np.random.default_rng(5)
        for _ in range(100):
            ka = rng.integers(0, 2, 4)
            kb = rng.integers(0, 2, 4)
            ma = rng.integers(0, 2, 4)
            mb = rng.integers(0, 2, 4)
            r = keygen.reward(key(ka), key(kb, owner="B"), mask(ma), mask(mb))
            assert 0.0 <= r <= 2.0
            if r == 2.0:
                assert np.array_equal(ka, kb)
                assert ma.sum() == mb.sum() == 4


def oracle_key_bits(values, mask_bits, prev_sample):
    """Straight-line transcription of the per-bit key rule."""
    bits = []
    for m in range(len(values)):
        if m == 0:
            prev = values[0] if prev_sample is None else prev_sample
        else:
            prev = values[m - 1]
        bits.append(1 if mask_bits[m] == 1 and values[m] >= prev else 0)
    return bits


def oracle_reward(ka, kb, ma, mb):
    m = len(ka)
    kar_v = sum(1 for x, y in zip(ka, kb) if x == y) / m
    phi = 1.0 if kar_v == 1.0 else 0.0
    return kar_v + phi * (sum(ma) + sum(mb)) / (2 * m)


class TestBruteForceOracle:
    # every mask x every ordering of a 4-sample frame, compared against the
    # straight-line oracle above, plus the reward over all mask pairs

    def test_generate_key_exhaustive(self):
        base = [1.0, 2.0, 3.0, 4.0]
        for m_len in (2, 3, 4):
            for masks in itertools.product((0, 1), repeat=m_len):
                fmask = mask(list(masks))
                for perm in itertools.permutations(base[:m_len]):
                    values = np.array(perm)
                    for prev in (None, 0.5, 2.0, 4.0):
                        got = keygen.generate_key(
                            values, fmask, prev, owner="A", ts_index=1 if prev is None else 2
                        )
                        want = oracle_key_bits(list(perm), list(masks), prev)
                        assert got.bits.tolist() == want

    def test_reward_exhaustive(self):
        m_len = 3
        words = list(itertools.product((0, 1), repeat=m_len))
        for ka in words:
            for kb in words:
                for ma in words:
                    for mb in words:
                        got = keygen.reward(
                            key(list(ka)),
                            key(list(kb), owner="B"),
                            mask(list(ma)),
                            mask(list(mb)),
                        )
                        assert got == oracle_reward(ka, kb, ma, mb)


class TestWriteKeys:
    def test_file_format(self, tmp_path):
        path = tmp_path / "keys.txt"
        keys = [key([1, 0], ts_index=1), key([0, 1], owner="B", ts_index=1)]
        keygen.write_keys(path, keys)
        assert path.read_text() == "A,1,10\nB,1,01\n"
