"""
Weight Files
============

Bit-exact binary network format.

Layout (all integers little-endian)::

    "EVLN" | u16 version=1 | u16 layer count
    u8 input rank | rank x u32 input extents
    per layer:
        u8 kind tag | u8 extent count | extents as u32
        weights as f64 (product of extents) | biases as f64 (one per output)

Conv2D extents are (out, in, kh, kw), Dense (in, out), MaxPool2D
(window, stride); parameter-free layers have no extents.
"""

from typing import List, Tuple
from pathlib import Path
import struct

import numpy as np

from src.config.logging import get_logger
from src.core.nn.layers import Conv2D, Dense, Layer, MaxPool2D, NetworkError, make_layer
from src.core.nn.network import Network
from src.models.schemas import LayerKind

logger = get_logger(__name__)

MAGIC = b"EVLN"
VERSION = 1
_F64 = np.dtype("<f8")


class WeightFormatError(NetworkError):
    """Exception raised when a weight file cannot be decoded."""

    def __init__(self, message: str, offset: int) -> None:
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


def encode_network(net: Network) -> bytes:
    """Serialize a network to bytes."""
    parts: List[bytes] = [MAGIC, struct.pack("<HH", VERSION, len(net.layers))]
    parts.append(struct.pack("<B", len(net.input_shape)))
    parts.append(struct.pack(f"<{len(net.input_shape)}I", *net.input_shape))
    for layer in net.layers:
        extents: Tuple[int, ...] = ()
        if isinstance(layer, (Conv2D, Dense)):
            extents = tuple(int(d) for d in layer.weight.shape)
        elif isinstance(layer, MaxPool2D):
            extents = (layer.window, layer.stride)
        parts.append(struct.pack("<BB", int(layer.kind), len(extents)))
        parts.append(struct.pack(f"<{len(extents)}I", *extents))
        if isinstance(layer, (Conv2D, Dense)):
            parts.append(layer.weight.astype(_F64).tobytes())
            parts.append(layer.bias.astype(_F64).tobytes())
    return b"".join(parts)


class _Reader:
    def __init__(self, data: bytes) -> None:
        self.data = data
        self.offset = 0

    def take(self, size: int, what: str) -> bytes:
        if self.offset + size > len(self.data):
            raise WeightFormatError(f"truncated file reading {what}", self.offset)
        chunk = self.data[self.offset : self.offset + size]
        self.offset += size
        return chunk

    def unpack(self, fmt: str, what: str) -> Tuple[int, ...]:
        return struct.unpack(fmt, self.take(struct.calcsize(fmt), what))

    def floats(self, count: int, what: str) -> np.ndarray:
        return np.frombuffer(self.take(8 * count, what), dtype=_F64).astype(np.float64)


def decode_network(data: bytes) -> Network:
    """Decode bytes produced by :func:`encode_network`."""
    reader = _Reader(data)
    if reader.take(4, "magic") != MAGIC:
        raise WeightFormatError("bad magic, expected b'EVLN'", 0)
    version, count = reader.unpack("<HH", "header")
    if version != VERSION:
        raise WeightFormatError(f"unsupported version {version}", 4)
    (rank,) = reader.unpack("<B", "input rank")
    input_shape = reader.unpack(f"<{rank}I", "input extents")

    layers: List[Layer] = []
    for index in range(count):
        start = reader.offset
        tag, n_ext = reader.unpack("<BB", f"layer {index} header")
        try:
            kind = LayerKind(tag)
        except ValueError:
            raise WeightFormatError(f"unknown layer kind tag {tag}", start) from None
        extents = reader.unpack(f"<{n_ext}I", f"layer {index} extents")
        try:
            if kind in (LayerKind.CONV2D, LayerKind.DENSE):
                expected = 4 if kind == LayerKind.CONV2D else 2
                if n_ext != expected:
                    raise WeightFormatError(
                        f"{kind.name} needs {expected} extents, got {n_ext}", start
                    )
                size = int(np.prod(extents))
                weight = reader.floats(size, f"layer {index} weights").reshape(extents)
                out = extents[0] if kind == LayerKind.CONV2D else extents[1]
                bias = reader.floats(out, f"layer {index} biases")
                layers.append(make_layer(kind, [weight, bias]))
            elif kind == LayerKind.MAXPOOL2D:
                if n_ext != 2:
                    raise WeightFormatError("MaxPool2D needs (window, stride)", start)
                layers.append(MaxPool2D(*extents))
            else:
                if n_ext != 0:
                    raise WeightFormatError(f"{kind.name} takes no extents", start)
                layers.append(make_layer(kind))
        except WeightFormatError:
            raise
        except NetworkError as e:
            raise WeightFormatError(str(e), start) from e

    if reader.offset != len(data):
        raise WeightFormatError(f"{len(data) - reader.offset} trailing bytes", reader.offset)
    try:
        return Network(layers, input_shape)
    except NetworkError as e:
        raise WeightFormatError(f"inconsistent layer shapes: {e}", reader.offset) from e


def save_weights(net: Network, path: Path) -> None:
    """Write a network to ``path``."""
    path = Path(path)
    payload = encode_network(net)
    path.write_bytes(payload)
    logger.info("Weights saved", path=str(path), bytes=len(payload), layers=len(net.layers))


def load_weights(path: Path) -> Network:
    """Read a network; nothing is returned unless the whole file decodes."""
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as e:
        raise WeightFormatError(f"cannot read {path}: {e}", 0) from e
    net = decode_network(data)
    logger.info("Weights loaded", path=str(path), layers=len(net.layers))
    return net
