"""Tests for the encode/interleave/map transmit chain."""

import numpy as np
import pytest

from arqcomb.combiner import LLR_CLAMP
from arqcomb.decoder import siso_decode
from arqcomb.tx import (
    CodeConfig,
    Interleaver,
    conv_encode,
    deinterleave,
    interleave,
    make_interleaver,
    map_frame,
)

from helpers import reference_encode


class TestConvEncode:
    def test_all_zero_input(self):
        out = conv_encode(np.zeros(64, dtype=np.uint8))
        assert out.size == 2 * (64 + 4)
        assert not out.any()

    def test_single_one_first_pair(self):
        out = conv_encode(np.array([1], dtype=np.uint8))
        assert (out[0], out[1]) == (1, 1)
        np.testing.assert_array_equal(out, reference_encode([1]))

    def test_frame_length(self):
        rng = np.random.default_rng(0)
        info = rng.integers(0, 2, 512, dtype=np.uint8)
        assert conv_encode(info).size == 1032

    def test_matches_reference_encoder(self):
        rng = np.random.default_rng(7)
        for _ in range(10):
            info = rng.integers(0, 2, 40, dtype=np.uint8)
            np.testing.assert_array_equal(conv_encode(info), reference_encode(info))

    def test_rejects_short_generator(self):
        with pytest.raises(ValueError):
            CodeConfig(generators=(0o7, 0o23))


class TestInterleaver:
    def test_identity_permutation(self):
        il = Interleaver(permutation=np.arange(16), seed=0, spread=0)
        x = np.arange(16.0)
        np.testing.assert_array_equal(interleave(x, il), x)

    def test_roundtrip(self):
        il = make_interleaver(1032, seed=3)
        rng = np.random.default_rng(1)
        x = rng.standard_normal(1032)
        np.testing.assert_array_equal(deinterleave(interleave(x, il), il), x)

    def test_deterministic_across_builds(self):
        a = make_interleaver(1032, seed=5)
        b = make_interleaver(1032, seed=5)
        np.testing.assert_array_equal(a.permutation, b.permutation)
        assert a.spread == b.spread

    def test_spread_property_holds_at_16(self):
        il = make_interleaver(1032, seed=0)
        assert il.spread == 16
        perm = il.permutation
        s = il.spread
        for offset in range(1, s):
            gaps = np.abs(perm[offset:] - perm[:-offset])
            assert gaps.min() >= s

    def test_length_mismatch(self):
        il = make_interleaver(64, seed=0, spread=4)
        with pytest.raises(ValueError):
            interleave(np.zeros(65), il)


class TestMapFrame:
    def test_gray_map_origin(self):
        frame = map_frame(np.array([0, 0], dtype=np.uint8), 1)
        np.testing.assert_allclose(frame.symbols, [[(1 + 1j) / np.sqrt(2)]])

    def test_frame_dimensions(self):
        bits = np.zeros(1032, dtype=np.uint8)
        assert map_frame(bits, 2).symbols.shape == (2, 258)
        assert map_frame(bits, 4).symbols.shape == (4, 129)

    def test_unit_energy_exact(self):
        rng = np.random.default_rng(2)
        frame = map_frame(rng.integers(0, 2, 1032, dtype=np.uint8), 2)
        np.testing.assert_array_equal(np.abs(frame.symbols) ** 2, np.ones((2, 258)))

    def test_antenna_major_order(self):
        # channel use 0 carries antenna 0 then antenna 1 bit pairs
        bits = np.array([0, 0, 1, 1, 0, 1, 1, 0], dtype=np.uint8)
        frame = map_frame(bits, 2)
        s = np.sqrt(2)
        np.testing.assert_allclose(frame.symbols[0, 0], (1 + 1j) / s)
        np.testing.assert_allclose(frame.symbols[1, 0], (-1 - 1j) / s)
        np.testing.assert_allclose(frame.symbols[0, 1], (1 - 1j) / s)
        np.testing.assert_allclose(frame.symbols[1, 1], (-1 + 1j) / s)

    def test_rejects_indivisible(self):
        with pytest.raises(ValueError):
            map_frame(np.zeros(10, dtype=np.uint8), 4)


class TestGenieRoundTrip:
    def test_perfect_llrs_decode_to_input(self):
        rng = np.random.default_rng(11)
        for _ in range(5):
            info = rng.integers(0, 2, 512, dtype=np.uint8)
            code = conv_encode(info)
            llrs = LLR_CLAMP * (1.0 - 2.0 * code.astype(float))
            result = siso_decode(llrs)
            np.testing.assert_array_equal(result.info_bits, info)
