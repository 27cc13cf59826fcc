"""Tests for the max-log SISO decoder."""

import numpy as np
import pytest

from arqcomb.decoder import siso_decode
from arqcomb.tx import conv_encode

from helpers import all_codewords, ml_decode


class TestSisoDecode:
    def test_strong_all_zero_input(self):
        llrs = np.full(1032, 50.0)
        result = siso_decode(llrs)
        assert not result.info_bits.any()
        assert (result.extrinsic > 0).all()
        assert (result.info_app > 0).all()

    def test_matches_exhaustive_ml(self):
        info_words, codewords = all_codewords(12)
        rng = np.random.default_rng(17)
        for _ in range(100):
            llrs = rng.normal(0.0, 3.0, size=codewords.shape[1])
            expected = ml_decode(llrs, info_words, codewords)
            np.testing.assert_array_equal(siso_decode(llrs).info_bits, expected)

    def test_corrects_single_flipped_bit(self):
        rng = np.random.default_rng(23)
        info = rng.integers(0, 2, 64, dtype=np.uint8)
        code = conv_encode(info)
        llrs = 10.0 * (1.0 - 2.0 * code.astype(float))
        llrs[37] = -llrs[37]
        result = siso_decode(llrs)
        np.testing.assert_array_equal(result.info_bits, info)

    def test_extrinsic_plus_apriori_is_app(self):
        # exact decomposition: nothing (clamps, scaling) between APP and extrinsic
        rng = np.random.default_rng(5)
        llrs = rng.normal(0.0, 2.0, size=200)
        result = siso_decode(llrs)
        np.testing.assert_array_equal(result.extrinsic, result.code_app - llrs)

    def test_scale_covariance(self):
        rng = np.random.default_rng(8)
        llrs = rng.normal(0.0, 1.5, size=120)
        base = siso_decode(llrs)
        scaled = siso_decode(3.0 * llrs)
        np.testing.assert_allclose(scaled.code_app, 3.0 * base.code_app, rtol=1e-12)
        np.testing.assert_allclose(scaled.info_app, 3.0 * base.info_app, rtol=1e-12)
        np.testing.assert_array_equal(scaled.info_bits, base.info_bits)

    def test_rejects_bad_length(self):
        with pytest.raises(ValueError):
            siso_decode(np.zeros(7))
        with pytest.raises(ValueError):
            siso_decode(np.zeros(6))  # three stages cannot hold info + tail
