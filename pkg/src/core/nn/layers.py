"""
Network Layers
==============

Layer implementations for the minimal CNN engine. Every layer works on a
batch (leading axis N) of float64 arrays and exposes forward/backward passes.

Conv2D and Dense contract each sample with its own matrix product (stacked
``np.matmul``), so a sample's result never depends on the batch it travels in.
"""

from typing import Any, Dict, List, Tuple, Optional
from abc import ABC, abstractmethod

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view
from scipy.special import expit

from src.models.schemas import LayerKind

Shape = Tuple[int, ...]
Cache = Any
ParamGrads = Dict[str, np.ndarray]


class NetworkError(Exception):
    """Exception raised for invalid networks, inputs or layer configurations."""

    pass


class Layer(ABC):
    """Abstract base class for layers."""

    kind: LayerKind

    @abstractmethod
    def output_shape(self, input_shape: Shape) -> Shape:
        """Per-sample output shape for a per-sample input shape."""
        pass

    @abstractmethod
    def forward(self, x: np.ndarray) -> Tuple[np.ndarray, Cache]:
        """Forward pass over a batch; returns output and backward cache."""
        pass

    @abstractmethod
    def backward(self, grad_out: np.ndarray, cache: Cache) -> Tuple[np.ndarray, ParamGrads]:
        """Backward pass; returns input gradient and parameter gradients."""
        pass

    def params(self) -> Dict[str, np.ndarray]:
        return {}

    def copy(self) -> "Layer":
        return self

    def __repr__(self) -> str:
        return f"{type(self).__name__}()"


class Conv2D(Layer):
    """Valid-padding, stride-1 2D convolution (cross-correlation)."""

    kind = LayerKind.CONV2D

    def __init__(self, weight: np.ndarray, bias: np.ndarray) -> None:
        weight = np.ascontiguousarray(weight, dtype=np.float64)
        bias = np.ascontiguousarray(bias, dtype=np.float64)
        if weight.ndim != 4:
            raise NetworkError(f"Conv2D weight must be (out, in, kh, kw), got {weight.shape}")
        if bias.shape != (weight.shape[0],):
            raise NetworkError(
                f"Conv2D bias shape {bias.shape} does not match {weight.shape[0]} output channels"
            )
        self.weight = weight
        self.bias = bias

    @property
    def out_channels(self) -> int:
        return int(self.weight.shape[0])

    @property
    def in_channels(self) -> int:
        return int(self.weight.shape[1])

    @property
    def kernel(self) -> Tuple[int, int]:
        return int(self.weight.shape[2]), int(self.weight.shape[3])

    def output_shape(self, input_shape: Shape) -> Shape:
        if len(input_shape) != 3:
            raise NetworkError(f"Conv2D expects (channels, h, w) input, got {input_shape}")
        c, h, w = input_shape
        kh, kw = self.kernel
        if c != self.in_channels:
            raise NetworkError(f"Conv2D expects {self.in_channels} input channels, got {c}")
        if h < kh or w < kw:
            raise NetworkError(f"Conv2D kernel {kh}x{kw} larger than input {h}x{w}")
        return (self.out_channels, h - kh + 1, w - kw + 1)

    def _columns(self, x: np.ndarray) -> np.ndarray:
        n, c, h, w = x.shape
        kh, kw = self.kernel
        ho, wo = h - kh + 1, w - kw + 1
        windows = sliding_window_view(x, (kh, kw), axis=(2, 3))  # (n, c, ho, wo, kh, kw)
        return np.ascontiguousarray(windows.transpose(0, 2, 3, 1, 4, 5)).reshape(
            n, ho * wo, c * kh * kw
        )

    def forward(self, x: np.ndarray) -> Tuple[np.ndarray, Cache]:
        n, _, h, w = x.shape
        kh, kw = self.kernel
        ho, wo = h - kh + 1, w - kw + 1
        cols = self._columns(x)
        kernel_matrix = self.weight.reshape(self.out_channels, -1).T
        out = np.matmul(cols, kernel_matrix) + self.bias  # (n, ho*wo, out)
        out = np.ascontiguousarray(out.transpose(0, 2, 1)).reshape(n, self.out_channels, ho, wo)
        return out, (cols, x.shape)

    def backward(self, grad_out: np.ndarray, cache: Cache) -> Tuple[np.ndarray, ParamGrads]:
        cols, in_shape = cache
        n, c, h, w = in_shape
        kh, kw = self.kernel
        ho, wo = h - kh + 1, w - kw + 1
        g = np.ascontiguousarray(grad_out.reshape(n, self.out_channels, ho * wo).transpose(0, 2, 1))

        kernel_matrix = self.weight.reshape(self.out_channels, -1)
        grad_weight = np.zeros_like(kernel_matrix)
        for i in range(n):
            grad_weight += g[i].T @ cols[i]
        grad_bias = g.sum(axis=(0, 1))

        grad_cols = np.matmul(g, kernel_matrix).reshape(n, ho, wo, c, kh, kw)
        grad_in = np.zeros(in_shape, dtype=np.float64)
        for di in range(kh):
            for dj in range(kw):
                patch = grad_cols[:, :, :, :, di, dj].transpose(0, 3, 1, 2)
                grad_in[:, :, di : di + ho, dj : dj + wo] += patch
        return grad_in, {"weight": grad_weight.reshape(self.weight.shape), "bias": grad_bias}

    def params(self) -> Dict[str, np.ndarray]:
        return {"weight": self.weight, "bias": self.bias}

    def copy(self) -> "Conv2D":
        return Conv2D(self.weight.copy(), self.bias.copy())

    def __repr__(self) -> str:
        return f"Conv2D({self.in_channels}->{self.out_channels}, {self.kernel[0]}x{self.kernel[1]})"


class MaxPool2D(Layer):
    """Non-overlapping 2x2 max pooling; ties route to the first row-major maximum."""

    kind = LayerKind.MAXPOOL2D

    def __init__(self, window: int = 2, stride: int = 2) -> None:
        if window != 2 or stride != 2:
            raise NetworkError(
                f"MaxPool2D supports window=2, stride=2 only (got window={window}, stride={stride})"
            )
        self.window = window
        self.stride = stride

    def output_shape(self, input_shape: Shape) -> Shape:
        if len(input_shape) != 3:
            raise NetworkError(f"MaxPool2D expects (channels, h, w) input, got {input_shape}")
        c, h, w = input_shape
        if h < 2 or w < 2:
            raise NetworkError(f"MaxPool2D input {h}x{w} smaller than the pooling window")
        return (c, h // 2, w // 2)

    def forward(self, x: np.ndarray) -> Tuple[np.ndarray, Cache]:
        n, c, h, w = x.shape
        ho, wo = h // 2, w // 2
        blocks = (
            x[:, :, : 2 * ho, : 2 * wo]
            .reshape(n, c, ho, 2, wo, 2)
            .transpose(0, 1, 2, 4, 3, 5)
            .reshape(n, c, ho, wo, 4)
        )
        arg = np.argmax(blocks, axis=-1)
        out = np.take_along_axis(blocks, arg[..., None], axis=-1)[..., 0]
        return out, (arg, x.shape)

    def backward(self, grad_out: np.ndarray, cache: Cache) -> Tuple[np.ndarray, ParamGrads]:
        arg, in_shape = cache
        n, c, h, w = in_shape
        ho, wo = h // 2, w // 2
        routed = np.zeros((n, c, ho, wo, 4), dtype=np.float64)
        np.put_along_axis(routed, arg[..., None], grad_out[..., None], axis=-1)
        grad_in = np.zeros(in_shape, dtype=np.float64)
        blocks = routed.reshape(n, c, ho, wo, 2, 2).transpose(0, 1, 2, 4, 3, 5)
        grad_in[:, :, : 2 * ho, : 2 * wo] = blocks.reshape(n, c, 2 * ho, 2 * wo)
        return grad_in, {}

    def __repr__(self) -> str:
        return "MaxPool2D(2x2)"


class Dense(Layer):
    """Fully connected layer, y = x W + b with W of shape (in, out)."""

    kind = LayerKind.DENSE

    def __init__(self, weight: np.ndarray, bias: np.ndarray) -> None:
        weight = np.ascontiguousarray(weight, dtype=np.float64)
        bias = np.ascontiguousarray(bias, dtype=np.float64)
        if weight.ndim != 2:
            raise NetworkError(f"Dense weight must be (in, out), got {weight.shape}")
        if bias.shape != (weight.shape[1],):
            raise NetworkError(
                f"Dense bias shape {bias.shape} does not match {weight.shape[1]} outputs"
            )
        self.weight = weight
        self.bias = bias

    @property
    def in_features(self) -> int:
        return int(self.weight.shape[0])

    @property
    def out_features(self) -> int:
        return int(self.weight.shape[1])

    def output_shape(self, input_shape: Shape) -> Shape:
        if len(input_shape) != 1 or input_shape[0] != self.in_features:
            raise NetworkError(
                f"Dense expects a flat input of {self.in_features} features, got {input_shape}"
            )
        return (self.out_features,)

    def forward(self, x: np.ndarray) -> Tuple[np.ndarray, Cache]:
        out = np.matmul(x[:, None, :], self.weight)[:, 0, :] + self.bias
        return out, x

    def backward(self, grad_out: np.ndarray, cache: Cache) -> Tuple[np.ndarray, ParamGrads]:
        x = cache
        grad_in = np.matmul(grad_out[:, None, :], self.weight.T)[:, 0, :]
        return grad_in, {"weight": x.T @ grad_out, "bias": grad_out.sum(axis=0)}

    def params(self) -> Dict[str, np.ndarray]:
        return {"weight": self.weight, "bias": self.bias}

    def copy(self) -> "Dense":
        return Dense(self.weight.copy(), self.bias.copy())

    def __repr__(self) -> str:
        return f"Dense({self.in_features}->{self.out_features})"


class ReLU(Layer):
    kind = LayerKind.RELU

    def output_shape(self, input_shape: Shape) -> Shape:
        return input_shape

    def forward(self, x: np.ndarray) -> Tuple[np.ndarray, Cache]:
        return np.maximum(x, 0.0), x > 0.0

    def backward(self, grad_out: np.ndarray, cache: Cache) -> Tuple[np.ndarray, ParamGrads]:
        return grad_out * cache, {}


class Sigmoid(Layer):
    kind = LayerKind.SIGMOID

    def output_shape(self, input_shape: Shape) -> Shape:
        return input_shape

    def forward(self, x: np.ndarray) -> Tuple[np.ndarray, Cache]:
        y = expit(x)
        return y, y

    def backward(self, grad_out: np.ndarray, cache: Cache) -> Tuple[np.ndarray, ParamGrads]:
        y = cache
        return grad_out * y * (1.0 - y), {}


class Softmax(Layer):
    """Row softmax with per-row max subtraction."""

    kind = LayerKind.SOFTMAX

    def output_shape(self, input_shape: Shape) -> Shape:
        if len(input_shape) != 1:
            raise NetworkError(f"Softmax expects a flat input, got {input_shape}")
        return input_shape

    def forward(self, x: np.ndarray) -> Tuple[np.ndarray, Cache]:
        y = softmax_rows(x)
        return y, y

    def backward(self, grad_out: np.ndarray, cache: Cache) -> Tuple[np.ndarray, ParamGrads]:
        y = cache
        inner = np.sum(grad_out * y, axis=1, keepdims=True)
        return y * (grad_out - inner), {}


class Flatten(Layer):
    kind = LayerKind.FLATTEN

    def output_shape(self, input_shape: Shape) -> Shape:
        return (int(np.prod(input_shape)),)

    def forward(self, x: np.ndarray) -> Tuple[np.ndarray, Cache]:
        return x.reshape(x.shape[0], -1), x.shape

    def backward(self, grad_out: np.ndarray, cache: Cache) -> Tuple[np.ndarray, ParamGrads]:
        return grad_out.reshape(cache), {}


def softmax_rows(z: np.ndarray) -> np.ndarray:
    """Numerically stable softmax over the last axis."""
    shifted = z - np.max(z, axis=-1, keepdims=True)
    e = np.exp(shifted)
    return e / np.sum(e, axis=-1, keepdims=True)


def make_layer(kind: LayerKind, params: Optional[List[np.ndarray]] = None) -> Layer:
    """Build a layer from its kind tag and (weight, bias) arrays."""
    if kind == LayerKind.CONV2D:
        if not params or len(params) != 2:
            raise NetworkError("Conv2D needs weight and bias")
        return Conv2D(params[0], params[1])
    if kind == LayerKind.DENSE:
        if not params or len(params) != 2:
            raise NetworkError("Dense needs weight and bias")
        return Dense(params[0], params[1])
    if kind == LayerKind.MAXPOOL2D:
        return MaxPool2D()
    simple: Dict[LayerKind, type] = {
        LayerKind.RELU: ReLU,
        LayerKind.SIGMOID: Sigmoid,
        LayerKind.SOFTMAX: Softmax,
        LayerKind.FLATTEN: Flatten,
    }
    return simple[kind]()  # type: ignore[no-any-return]
