"""
Lab Reporting
=============

Histogram binning and CSV writers shared by the numerical labs. Every CSV
starts with a ``# seed=<seed>`` line, then a header row, then one row per
case; floats are written with 17 significant digits so files are
byte-identical across runs with the same seed.
"""

from typing import Any, Iterable, Optional, Sequence, Tuple
from pathlib import Path
import csv

import numpy as np

from src.config.logging import get_logger

logger = get_logger(__name__)


class LabError(Exception):
    """Exception raised for invalid lab requests."""

    pass


def format_value(value: Any) -> str:
    if isinstance(value, (bool, np.bool_)):
        return "true" if value else "false"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    return str(value)


def histogram(
    values: Sequence[float], bins: int = 10, value_range: Optional[Tuple[float, float]] = None
) -> Tuple[np.ndarray, np.ndarray]:
    """Equal-width histogram; a degenerate range is widened to one unit above it."""
    data = np.asarray(values, dtype=np.float64)
    if data.size == 0:
        raise LabError("empty case list")
    lo, hi = value_range if value_range is not None else (float(data.min()), float(data.max()))
    if hi <= lo:
        hi = lo + 1.0
    counts, edges = np.histogram(data, bins=bins, range=(lo, hi))
    return counts.astype(np.int64), edges


def error_histogram(errors: Sequence[float], bins: int = 10) -> Tuple[np.ndarray, np.ndarray]:
    """Histogram of approximation errors over [0, max error].

    All-zero errors land in the lowest bin.
    """
    data = np.asarray(errors, dtype=np.float64)
    if data.size == 0:
        raise LabError("empty case list")
    return histogram(data, bins, (0.0, float(data.max())))


def write_csv(
    path: Path, header: Sequence[str], rows: Iterable[Sequence[Any]], seed: int
) -> Path:
    """Write a seeded CSV table."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    count = 0
    with path.open("w", encoding="ascii", newline="") as handle:
        handle.write(f"# seed={seed}\n")
        writer = csv.writer(handle, lineterminator="\n")
        writer.writerow(header)
        for row in rows:
            writer.writerow([format_value(v) for v in row])
            count += 1
    logger.debug("CSV written", path=str(path), rows=count)
    return path


def write_histogram_csv(path: Path, counts: np.ndarray, edges: np.ndarray, seed: int) -> Path:
    """Bin table with its edges: ``bin,lower,upper,count``."""
    rows = [
        (i, float(edges[i]), float(edges[i + 1]), int(counts[i])) for i in range(len(counts))
    ]
    return write_csv(path, ("bin", "lower", "upper", "count"), rows, seed)
