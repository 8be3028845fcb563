"""
Pydantic Models and Schemas
===========================

Configuration objects passed into the explanation, training and lab entry
points, and the result records they return. Invariants live in validators so
every surface (library calls, CLI) rejects bad parameters the same way.
"""

from typing import Optional, List, Dict, Any, Tuple
from enum import Enum
from pathlib import Path

from pydantic import BaseModel, Field, field_validator, model_validator, ConfigDict


# Enums
class Method(str, Enum):
    """Attribution methods."""

    ORIGINAL = "original"
    EFFICIENT = "efficient"
    GRADIENT = "gradient"
    SALIENCY = "saliency"
    SAMPLED_MEAN = "sampled_mean"


class Sampling(str, Enum):
    """Window distribution used to marginalize a patch."""

    CONDITIONAL = "conditional"
    MARGINAL = "marginal"


class TransformKind(str, Enum):
    """Image transforms applied before explaining."""

    NONE = "none"
    ROT90 = "rot90"
    ROT180 = "rot180"
    ROT270 = "rot270"
    FLIPH = "fliph"
    CROP = "crop"


class LayerKind(int, Enum):
    """Layer kinds; values are the tags used in weight files."""

    CONV2D = 1
    MAXPOOL2D = 2
    DENSE = 3
    RELU = 4
    SIGMOID = 5
    SOFTMAX = 6
    FLATTEN = 7


# Explanation
class ExplainConfig(BaseModel):
    """Parameters of a single explanation run."""

    k: int = Field(4, ge=1, description="Inner window side")
    l: int = Field(8, ge=1, description="Outer patch side")  # noqa: E741
    samples: int = Field(10, ge=1, description="Samples per window (S)")
    batch_size: int = Field(160, ge=1, description="Forward batch size (m)")
    seed: int = Field(0, ge=0, description="Base seed; window i uses seed + i")
    eps: float = Field(1e-6, gt=0.0, lt=0.5, description="Probability clamp for log-odds")
    method: Method = Field(Method.EFFICIENT, description="Attribution method")
    sampling: Sampling = Field(Sampling.MARGINAL, description="Window distribution")
    threads: int = Field(1, ge=1, description="Workers for window-parallel methods")

    model_config = ConfigDict(frozen=True)

    @model_validator(mode="after")
    def validate_window(self) -> "ExplainConfig":
        """The window must fit inside its outer patch."""
        if self.k > self.l:
            raise ValueError(f"window size k={self.k} exceeds outer patch size l={self.l}")
        return self

    def header(self) -> Dict[str, Any]:
        """Fields recorded in evidence-map headers."""
        return {
            "method": self.method.value,
            "k": self.k,
            "l": self.l,
            "S": self.samples,
            "seed": self.seed,
        }


class Transform(BaseModel):
    """Image transform; crop carries its rectangle."""

    kind: TransformKind = TransformKind.NONE
    crop: Optional[Tuple[int, int, int, int]] = Field(
        None, description="(x, y, w, h) when kind is crop"
    )

    @model_validator(mode="after")
    def validate_crop(self) -> "Transform":
        if self.kind == TransformKind.CROP:
            if self.crop is None:
                raise ValueError("crop transform requires (x, y, w, h)")
            x, y, w, h = self.crop
            if x < 0 or y < 0 or w < 1 or h < 1:
                raise ValueError(f"invalid crop rectangle {self.crop}")
        return self

    @classmethod
    def parse(cls, text: str) -> "Transform":
        """Parse ``none``, ``rot90``, ..., ``crop(x,y,w,h)``."""
        text = text.strip().lower()
        if text.startswith("crop"):
            inner = text[4:].strip()
            if not (inner.startswith("(") and inner.endswith(")")):
                raise ValueError(f"malformed crop transform: {text!r}")
            parts = [p.strip() for p in inner[1:-1].split(",")]
            if len(parts) != 4:
                raise ValueError(f"crop needs 4 integers, got {text!r}")
            x, y, w, h = (int(p) for p in parts)
            return cls(kind=TransformKind.CROP, crop=(x, y, w, h))
        return cls(kind=TransformKind(text))


class RunConfig(BaseModel):
    """Resolved command-line configuration."""

    subcommand: str
    weights: Optional[Path] = None
    patch_model: Optional[Path] = None
    dataset: Optional[Path] = None
    image: Optional[Path] = None
    output_dir: Path = Path("./out")
    explain: ExplainConfig = Field(default_factory=ExplainConfig)
    transform: Transform = Field(default_factory=Transform)

    @model_validator(mode="after")
    def validate_inputs_exist(self) -> "RunConfig":
        """Referenced input paths must exist before execution."""
        for name in ("weights", "patch_model", "dataset", "image"):
            path = getattr(self, name)
            if path is not None and not Path(path).exists():
                raise ValueError(f"{name} path does not exist: {path}")
        return self

    def prepare_output(self) -> Path:
        self.output_dir.mkdir(parents=True, exist_ok=True)
        return self.output_dir


# Training
class TrainConfig(BaseModel):
    """Minibatch SGD parameters."""

    epochs: int = Field(3, ge=0)
    learning_rate: float = Field(0.05, ge=0.0)
    batch_size: int = Field(32, ge=1)
    seed: int = Field(0, ge=0)


class EpochRecord(BaseModel):
    epoch: int
    loss: float
    train_accuracy: float
    test_accuracy: Optional[float] = None


class TrainReport(BaseModel):
    """Accuracy log produced by training."""

    epochs: List[EpochRecord] = Field(default_factory=list)
    test_accuracy: Optional[float] = Field(None, ge=0.0, le=1.0)
    train_accuracy: float = Field(0.0, ge=0.0, le=1.0)


# Patch models
class FitConfig(BaseModel):
    """Patch-model fitting parameters."""

    k: int = Field(4, ge=1)
    l: int = Field(8, ge=1)  # noqa: E741
    ridge: Optional[float] = Field(None, ge=0.0, description="Absolute ridge; default is scaled")
    ridge_scale: float = Field(1e-4, ge=0.0)
    sampling: Sampling = Sampling.MARGINAL

    @model_validator(mode="after")
    def validate_window(self) -> "FitConfig":
        if self.k >= self.l:
            raise ValueError(f"window size k={self.k} must be smaller than outer size l={self.l}")
        return self


# Explanation report
class ExplainReport(BaseModel):
    """Summary printed and stored next to explanation artifacts."""

    method: Method
    class_index: int
    predicted_class: int
    probability: float = Field(..., ge=0.0, le=1.0)
    forward_passes: int = Field(..., ge=0)
    backward_passes: int = Field(0, ge=0)
    wall_clock_ms: float = Field(..., ge=0.0)
    outputs: Dict[str, str] = Field(default_factory=dict)


class BenchRow(BaseModel):
    """One row of the timing table."""

    method: Method
    forward_passes: int
    backward_passes: int
    batches: int
    wall_clock_ms: float
    speedup: float


# Labs
class MeanComparison(BaseModel):
    """Arithmetic mean vs normalized geometric mean for one case."""

    case: str
    am: float = Field(..., ge=0.0, le=1.0)
    ngm: float = Field(..., ge=0.0, le=1.0)
    error: float = Field(..., ge=0.0, le=1.0)
    std_error: float = Field(0.0, ge=0.0)
    samples: int = Field(..., ge=1)


class BoundCheck(BaseModel):
    """Monte-Carlo check of an expectation-propagation bound."""

    name: str
    mus: List[float]
    sigmas: List[float]
    estimate: float = Field(..., description="Monte-Carlo E[h(x)]")
    std_error: float = Field(..., ge=0.0)
    at_mean: float = Field(..., description="h(E[x])")
    gap: float = Field(..., description="|E[h(x)] - h(E[x])|")
    lower: float
    upper: float
    expected_gap: Optional[float] = None
    samples: int = Field(..., ge=1)
    passed: bool

    @field_validator("sigmas")
    @classmethod
    def validate_sigmas(cls, v: List[float]) -> List[float]:
        if any(s < 0 for s in v):
            raise ValueError("standard deviations must be non-negative")
        return v


class FluctuationPoint(BaseModel):
    """Sample-count fluctuation of the arithmetic-mean estimate."""

    samples: int
    mean_abs_diff: float
    std_across_seeds: float
    ngm: float
