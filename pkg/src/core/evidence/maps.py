"""
Evidence Maps
=============

Per-pixel weight-of-evidence accumulator, window traversal helpers and the
plain-text grid format used for golden files.

Text format::

    # method=<m> class=<c> k=<k> l=<l> S=<S> seed=<seed>
    # height=<H> width=<W> forward=<f> backward=<b>
    # we
    <H rows of W values, 17 significant digits>
    # counts
    <H rows of W integers>
"""

from typing import Any, Dict, List, Tuple
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy import stats

Window = Tuple[int, int]


class EvidenceError(Exception):
    """Exception raised for invalid explanation requests or map files."""

    pass


def window_positions(height: int, width: int, k: int) -> List[Window]:
    """Top-left corners of every stride-1 k x k window, row-major."""
    if k < 1 or k > min(height, width):
        raise EvidenceError(f"window size {k} does not fit a {height}x{width} image")
    return [(top, left) for top in range(height - k + 1) for left in range(width - k + 1)]


def window_counts(height: int, width: int, k: int) -> np.ndarray:
    """Number of windows covering each pixel; depends only on (H, W, k)."""
    def cover(n: int) -> np.ndarray:
        idx = np.arange(n)
        return np.minimum(idx, n - k) - np.maximum(idx - k + 1, 0) + 1

    window_positions(height, width, k)
    return np.outer(cover(height), cover(width)).astype(np.int64)


@dataclass
class EvidenceMap:
    """WE accumulator with overlap counts; the explanation is ``we / counts``."""

    we: np.ndarray
    counts: np.ndarray
    class_index: int
    method: str
    config: Dict[str, Any] = field(default_factory=dict)
    forward_passes: int = 0
    backward_passes: int = 0

    def __post_init__(self) -> None:
        self.we = np.asarray(self.we, dtype=np.float64)
        self.counts = np.asarray(self.counts, dtype=np.int64)
        if self.we.ndim != 2 or self.we.shape != self.counts.shape:
            raise EvidenceError(f"we {self.we.shape} and counts {self.counts.shape} must match")

    @property
    def shape(self) -> Tuple[int, int]:
        return int(self.we.shape[0]), int(self.we.shape[1])

    def values(self) -> np.ndarray:
        """Output map; pixels covered by no window are 0."""
        out = np.zeros_like(self.we)
        np.divide(self.we, self.counts, out=out, where=self.counts > 0)
        return out

    def header(self) -> str:
        cfg = self.config
        return (
            f"# method={self.method} class={self.class_index} k={cfg.get('k', 0)} "
            f"l={cfg.get('l', 0)} S={cfg.get('S', 0)} seed={cfg.get('seed', 0)}"
        )

    def to_text(self) -> str:
        h, w = self.shape
        lines = [
            self.header(),
            f"# height={h} width={w} forward={self.forward_passes} backward={self.backward_passes}",
            "# we",
        ]
        lines.extend(" ".join(format(float(v), ".17g") for v in row) for row in self.we)
        lines.append("# counts")
        lines.extend(" ".join(str(int(v)) for v in row) for row in self.counts)
        return "\n".join(lines) + "\n"

    def save_text(self, path: Path) -> None:
        Path(path).write_text(self.to_text(), encoding="ascii")

    @classmethod
    def from_text(cls, text: str) -> "EvidenceMap":
        lines = text.splitlines()
        try:
            meta = _parse_pairs(lines[0]) | _parse_pairs(lines[1])
            h, w = int(meta["height"]), int(meta["width"])
            if lines[2] != "# we" or lines[3 + h] != "# counts":
                raise EvidenceError("missing '# we' or '# counts' section")
            we = np.array([[float(v) for v in line.split()] for line in lines[3 : 3 + h]])
            counts = np.array([[int(v) for v in line.split()] for line in lines[4 + h : 4 + 2 * h]])
        except (IndexError, KeyError, ValueError) as e:
            raise EvidenceError(f"malformed evidence grid: {e}") from e
        if we.shape != (h, w) or counts.shape != (h, w):
            raise EvidenceError(f"grid shape does not match header {h}x{w}")
        config = {key: int(meta[key]) for key in ("k", "l", "S", "seed")}
        return cls(
            we,
            counts,
            int(meta["class"]),
            meta["method"],
            config,
            int(meta.get("forward", 0)),
            int(meta.get("backward", 0)),
        )

    @classmethod
    def load_text(cls, path: Path) -> "EvidenceMap":
        return cls.from_text(Path(path).read_text(encoding="ascii"))


def _parse_pairs(line: str) -> Dict[str, str]:
    if not line.startswith("#"):
        raise EvidenceError(f"expected a header line, got {line!r}")
    return dict(item.split("=", 1) for item in line[1:].split())


def map_correlation(a: EvidenceMap, b: EvidenceMap) -> float:
    """Pearson correlation of two maps' values; scale-free, so log-odds and
    probability-scale maps can be compared."""
    va, vb = a.values().ravel(), b.values().ravel()
    if va.shape != vb.shape:
        raise EvidenceError(f"maps have different shapes {a.shape} and {b.shape}")
    if np.ptp(va) == 0 or np.ptp(vb) == 0:
        return 0.0
    return float(stats.pearsonr(va, vb)[0])

