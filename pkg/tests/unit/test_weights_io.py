"""
Unit Tests for Weight Files
===========================
"""

import struct

import numpy as np
import pytest

from src.core.nn.weights_io import (
    WeightFormatError,
    decode_network,
    encode_network,
    load_weights,
    save_weights,
)
from tests.utils.data_generators import random_networks


@pytest.mark.unit
class TestWeightFiles:
    """Test the bit-exact network format."""

    def test_save_load_save_byte_identical(self, tmp_path, digit_net):
        first = tmp_path / "a.evln"
        second = tmp_path / "b.evln"
        save_weights(digit_net, first)
        save_weights(load_weights(first), second)
        assert first.read_bytes() == second.read_bytes()

    def test_loaded_network_predicts_identically(self, tmp_path, tiny_cnn, rng):
        path = tmp_path / "tiny.evln"
        save_weights(tiny_cnn, path)
        batch = rng.uniform(size=(4, 1, 8, 8))
        assert load_weights(path).forward(batch).tobytes() == tiny_cnn.forward(batch).tobytes()

    def test_all_layer_kinds_survive(self):
        for name, net in random_networks(4, seed=2):
            decoded = decode_network(encode_network(net))
            assert decoded.describe() == net.describe(), name

    def test_header_layout(self, tiny_cnn):
        data = encode_network(tiny_cnn)
        assert data[:4] == b"EVLN"
        assert struct.unpack("<HH", data[4:8]) == (1, len(tiny_cnn.layers))
        assert struct.unpack("<B3I", data[8:21]) == (3, 1, 8, 8)

    def test_bad_magic(self, tiny_cnn):
        data = b"XXXX" + encode_network(tiny_cnn)[4:]
        with pytest.raises(WeightFormatError, match="bad magic") as exc:
            decode_network(data)
        assert exc.value.offset == 0

    def test_truncated_file(self, tmp_path, tiny_cnn):
        path = tmp_path / "cut.evln"
        data = encode_network(tiny_cnn)
        path.write_bytes(data[: len(data) - 3])
        with pytest.raises(WeightFormatError, match="truncated file"):
            load_weights(path)

    def test_trailing_bytes(self, tiny_cnn):
        data = encode_network(tiny_cnn)
        with pytest.raises(WeightFormatError, match="trailing bytes") as exc:
            decode_network(data + b"\x00\x00")
        assert exc.value.offset == len(data)

    def test_unknown_layer_tag(self, tiny_cnn):
        data = bytearray(encode_network(tiny_cnn))
        data[21] = 99
        with pytest.raises(WeightFormatError, match="unknown layer kind tag 99"):
            decode_network(bytes(data))

    def test_unsupported_version(self, tiny_cnn):
        data = bytearray(encode_network(tiny_cnn))
        data[4:6] = struct.pack("<H", 2)
        with pytest.raises(WeightFormatError, match="unsupported version 2"):
            decode_network(bytes(data))

    def test_missing_file(self, tmp_path):
        with pytest.raises(WeightFormatError, match="cannot read"):
            load_weights(tmp_path / "absent.evln")

    def test_weights_stored_as_little_endian_f64(self, tiny_cnn):
        data = encode_network(tiny_cnn)
        conv = tiny_cnn.layers[0]
        start = 21 + 2 + 16
        stored = np.frombuffer(data[start : start + conv.weight.nbytes], dtype="<f8")
        np.testing.assert_array_equal(stored, conv.weight.reshape(-1))
