"""
Datasets
========

MNIST IDX ingestion and the in-memory labelled image container used by
training, patch-model fitting and the labs.
"""

from typing import Iterator, List, Optional, Tuple
from dataclasses import dataclass
from pathlib import Path
import gzip
import struct

import numpy as np

from src.config.logging import get_logger

logger = get_logger(__name__)

IDX_IMAGES_MAGIC = 0x00000803
IDX_LABELS_MAGIC = 0x00000801

MNIST_FILES = {
    "train": ("train-images-idx3-ubyte", "train-labels-idx1-ubyte"),
    "test": ("t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte"),
}


class DatasetFormatError(Exception):
    """Exception raised when an IDX file is missing or malformed."""

    def __init__(self, message: str, path: Path, offset: int = 0) -> None:
        super().__init__(f"{path}: {message} (offset {offset})")
        self.path = path
        self.offset = offset


class TrainingError(Exception):
    """Exception raised when training cannot proceed."""

    pass


@dataclass
class Dataset:
    """Labelled images, shape (N, C, H, W) float64 with int64 labels."""

    images: np.ndarray
    labels: np.ndarray

    def __post_init__(self) -> None:
        self.images = np.asarray(self.images, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.images.ndim < 2:
            raise TrainingError(f"images need a leading sample axis, got {self.images.shape}")
        if self.labels.shape != (self.images.shape[0],):
            raise TrainingError(
                f"{self.labels.shape} labels for {self.images.shape[0]} images"
            )

    def __len__(self) -> int:
        return int(self.images.shape[0])

    def subset(self, count: int, start: int = 0) -> "Dataset":
        return Dataset(self.images[start : start + count], self.labels[start : start + count])

    def batches(
        self, size: int, rng: Optional[np.random.Generator] = None
    ) -> Iterator[Tuple[np.ndarray, np.ndarray]]:
        """Minibatches in order, or shuffled when an RNG is given."""
        order = np.arange(len(self)) if rng is None else rng.permutation(len(self))
        for start in range(0, len(self), size):
            idx = order[start : start + size]
            yield self.images[idx], self.labels[idx]


def _read_bytes(path: Path) -> bytes:
    path = Path(path)
    if not path.exists():
        gz = path.with_name(path.name + ".gz")
        if gz.exists():
            path = gz
        else:
            raise DatasetFormatError("file not found", path, 0)
    opener = gzip.open if path.suffix == ".gz" else open
    try:
        with opener(path, "rb") as fh:  # type: ignore[operator]
            return fh.read()  # type: ignore[no-any-return]
    except OSError as e:
        raise DatasetFormatError(f"cannot read file: {e}", path, 0) from e


def _parse_header(data: bytes, path: Path, magic: int, ndim: int) -> List[int]:
    header_len = 4 + 4 * ndim
    if len(data) < 4:
        raise DatasetFormatError("truncated magic number", path, len(data))
    (found,) = struct.unpack(">I", data[:4])
    if found != magic:
        raise DatasetFormatError(f"bad magic 0x{found:08x}, expected 0x{magic:08x}", path, 0)
    if len(data) < header_len:
        raise DatasetFormatError("truncated dimension header", path, len(data))
    dims = list(struct.unpack(f">{ndim}I", data[4:header_len]))
    expected = header_len + int(np.prod(dims))
    if len(data) != expected:
        raise DatasetFormatError(
            f"payload holds {len(data) - header_len} bytes, dimensions {dims} need "
            f"{expected - header_len}",
            path,
            min(len(data), expected),
        )
    return dims


def read_idx_images(path: Path) -> np.ndarray:
    """Read an IDX3 unsigned-byte image file as (N, 1, H, W) float64 in [0, 1]."""
    path = Path(path)
    data = _read_bytes(path)
    n, h, w = _parse_header(data, path, IDX_IMAGES_MAGIC, 3)
    pixels = np.frombuffer(data, dtype=np.uint8, offset=16).reshape(n, 1, h, w)
    return pixels.astype(np.float64) / 255.0


def read_idx_labels(path: Path) -> np.ndarray:
    """Read an IDX1 unsigned-byte label file."""
    path = Path(path)
    data = _read_bytes(path)
    _parse_header(data, path, IDX_LABELS_MAGIC, 1)
    return np.frombuffer(data, dtype=np.uint8, offset=8).astype(np.int64)


def write_idx_images(images: np.ndarray, path: Path) -> None:
    """Write (N, 1, H, W) images in [0, 1] as an IDX3 file (used for fixtures and subsets)."""
    arr = np.asarray(images)
    n, _, h, w = arr.shape
    pixels = np.clip(np.floor(arr[:, 0] * 255.0 + 0.5), 0, 255).astype(np.uint8)
    Path(path).write_bytes(struct.pack(">4I", IDX_IMAGES_MAGIC, n, h, w) + pixels.tobytes())


def write_idx_labels(labels: np.ndarray, path: Path) -> None:
    arr = np.asarray(labels, dtype=np.uint8)
    Path(path).write_bytes(struct.pack(">2I", IDX_LABELS_MAGIC, arr.shape[0]) + arr.tobytes())


def load_mnist(data_dir: Path, split: str = "train", limit: Optional[int] = None) -> Dataset:
    """Load an MNIST split from a directory of (optionally gzipped) IDX files."""
    if split not in MNIST_FILES:
        raise ValueError(f"split must be one of {sorted(MNIST_FILES)}, got {split!r}")
    image_name, label_name = MNIST_FILES[split]
    data_dir = Path(data_dir)
    images = read_idx_images(data_dir / image_name)
    labels = read_idx_labels(data_dir / label_name)
    if images.shape[0] != labels.shape[0]:
        raise DatasetFormatError(
            f"{images.shape[0]} images but {labels.shape[0]} labels", data_dir / label_name, 8
        )
    dataset = Dataset(images, labels)
    if limit is not None:
        dataset = dataset.subset(limit)
    logger.info("Loaded MNIST split", split=split, images=len(dataset), directory=str(data_dir))
    return dataset
