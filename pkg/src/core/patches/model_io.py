"""
Patch Model Files
=================

Binary persistence for patch models (little-endian)::

    "EVGM" | u16 version=1 | u8 kind (1 conditional, 2 marginal)
    conditional: u32 k | u32 l | u32 channels | f64 ridge | f64 mean[d] | f64 covariance[d*d]
    marginal:    u32 k | u32 channels | f64 mean[c*k*k] | f64 variance[c*k*k]

Conditional factors are recomputed on load; the computation is deterministic so
save -> load -> save reproduces the same bytes.
"""

from typing import Union
from pathlib import Path
import struct

import numpy as np

from src.config.logging import get_logger
from src.core.patches.gaussian import MarginalModel, PatchModel, PatchModelError

logger = get_logger(__name__)

MAGIC = b"EVGM"
VERSION = 1
KIND_CONDITIONAL = 1
KIND_MARGINAL = 2
_F64 = np.dtype("<f8")

AnyModel = Union[PatchModel, MarginalModel]


class ModelFormatError(PatchModelError):
    """Exception raised when a patch-model file cannot be decoded."""

    def __init__(self, message: str, offset: int) -> None:
        super().__init__(f"{message} at offset {offset}")
        self.offset = offset


def encode_model(model: AnyModel) -> bytes:
    if isinstance(model, PatchModel):
        return b"".join(
            [
                MAGIC,
                struct.pack("<HB", VERSION, KIND_CONDITIONAL),
                struct.pack("<3I", model.k, model.l, model.channels),
                struct.pack("<d", model.ridge),
                model.mean.astype(_F64).tobytes(),
                model.covariance.astype(_F64).tobytes(),
            ]
        )
    return b"".join(
        [
            MAGIC,
            struct.pack("<HB", VERSION, KIND_MARGINAL),
            struct.pack("<2I", model.k, model.channels),
            model.mean.astype(_F64).tobytes(),
            model.variance.astype(_F64).tobytes(),
        ]
    )


def decode_model(data: bytes) -> AnyModel:
    if len(data) < 7:
        raise ModelFormatError("truncated header", len(data))
    if data[:4] != MAGIC:
        raise ModelFormatError("bad magic, expected b'EVGM'", 0)
    version, kind = struct.unpack("<HB", data[4:7])
    if version != VERSION:
        raise ModelFormatError(f"unsupported version {version}", 4)
    offset = 7

    def floats(count: int) -> np.ndarray:
        nonlocal offset
        end = offset + 8 * count
        if end > len(data):
            raise ModelFormatError("truncated payload", offset)
        values = np.frombuffer(data[offset:end], dtype=_F64).astype(np.float64)
        offset = end
        return values

    if kind == KIND_CONDITIONAL:
        if len(data) < offset + 20:
            raise ModelFormatError("truncated conditional header", offset)
        k, l, channels = struct.unpack("<3I", data[offset : offset + 12])  # noqa: E741
        (ridge,) = struct.unpack("<d", data[offset + 12 : offset + 20])
        offset += 20
        dim = channels * l * l
        mean = floats(dim)
        covariance = floats(dim * dim).reshape(dim, dim)
        if offset != len(data):
            raise ModelFormatError(f"{len(data) - offset} trailing bytes", offset)
        return PatchModel(k, l, channels, mean, covariance, ridge)
    if kind == KIND_MARGINAL:
        if len(data) < offset + 8:
            raise ModelFormatError("truncated marginal header", offset)
        k, channels = struct.unpack("<2I", data[offset : offset + 8])
        offset += 8
        mean = floats(channels * k * k).reshape(channels, k, k)
        variance = floats(channels * k * k).reshape(channels, k, k)
        if offset != len(data):
            raise ModelFormatError(f"{len(data) - offset} trailing bytes", offset)
        return MarginalModel(k, channels, mean, variance)
    raise ModelFormatError(f"unknown model kind {kind}", 6)


def save_model(model: AnyModel, path: Path) -> None:
    path = Path(path)
    payload = encode_model(model)
    path.write_bytes(payload)
    logger.info("Patch model saved", path=str(path), bytes=len(payload), kind=type(model).__name__)


def load_model(path: Path) -> AnyModel:
    path = Path(path)
    try:
        data = path.read_bytes()
    except OSError as e:
        raise ModelFormatError(f"cannot read {path}: {e}", 0) from e
    return decode_model(data)
