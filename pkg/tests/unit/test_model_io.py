"""
Unit Tests for Patch Model Files
================================
"""

import struct

import numpy as np
import pytest

from src.core.patches.gaussian import MarginalModel, PatchModel
from src.core.patches.model_io import (
    ModelFormatError,
    decode_model,
    encode_model,
    load_model,
    save_model,
)


@pytest.mark.unit
class TestModelFiles:
    """Test persistence of conditional and marginal models."""

    @pytest.mark.parametrize("fixture", ["conditional_model", "marginal_model"])
    def test_save_load_save_byte_identical(self, request, tmp_path, fixture):
        model = request.getfixturevalue(fixture)
        first = tmp_path / "a.evgm"
        second = tmp_path / "b.evgm"
        save_model(model, first)
        loaded = load_model(first)
        assert type(loaded) is type(model)
        save_model(loaded, second)
        assert first.read_bytes() == second.read_bytes()

    def test_conditional_factors_recomputed(self, conditional_model):
        loaded = decode_model(encode_model(conditional_model))
        assert isinstance(loaded, PatchModel)
        for offset in conditional_model.offsets():
            a = conditional_model.factors(offset).cholesky
            b = loaded.factors(offset).cholesky
            assert a.tobytes() == b.tobytes()

    def test_kind_tags(self, conditional_model, marginal_model):
        assert encode_model(conditional_model)[6] == 1
        assert encode_model(marginal_model)[6] == 2

    def test_marginal_layout(self):
        model = MarginalModel(1, 1, np.full((1, 1, 1), 0.25), np.full((1, 1, 1), 0.5))
        data = encode_model(model)
        assert data[:7] == b"EVGM" + struct.pack("<HB", 1, 2)
        assert struct.unpack("<2I2d", data[7:]) == (1, 1, 0.25, 0.5)

    def test_bad_magic(self, marginal_model):
        with pytest.raises(ModelFormatError, match="bad magic"):
            decode_model(b"EVLN" + encode_model(marginal_model)[4:])

    def test_truncated_payload(self, conditional_model):
        data = encode_model(conditional_model)
        with pytest.raises(ModelFormatError, match="truncated payload"):
            decode_model(data[:-8])

    def test_trailing_bytes(self, marginal_model):
        data = encode_model(marginal_model)
        with pytest.raises(ModelFormatError, match="trailing bytes") as exc:
            decode_model(data + b"\x01")
        assert exc.value.offset == len(data)

    def test_unknown_kind(self, marginal_model):
        data = bytearray(encode_model(marginal_model))
        data[6] = 9
        with pytest.raises(ModelFormatError, match="unknown model kind 9"):
            decode_model(bytes(data))

    def test_short_header(self):
        with pytest.raises(ModelFormatError, match="truncated header"):
            decode_model(b"EVG")

    def test_missing_file(self, tmp_path):
        with pytest.raises(ModelFormatError, match="cannot read"):
            load_model(tmp_path / "absent.evgm")
