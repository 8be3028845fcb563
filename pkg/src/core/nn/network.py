"""
Network
=======

Ordered layer stack with shape checking at construction, forward inference,
pre-softmax logits, and exact reverse-mode gradients with respect to the
input and to every weight.
"""

from typing import Any, Dict, List, Sequence, Tuple, Union

import numpy as np

from src.config.logging import get_logger
from src.core.nn.layers import Layer, NetworkError, Shape, Softmax, softmax_rows

logger = get_logger(__name__)


class Network:
    """Decision function f built from an ordered list of layers.

    Weights are treated as immutable once built; every method here is
    read-only on the network and may be called from several threads.
    """

    def __init__(self, layers: Sequence[Layer], input_shape: Sequence[int]) -> None:
        if not layers:
            raise NetworkError("network needs at least one layer")
        self.layers: List[Layer] = list(layers)
        self.input_shape: Shape = tuple(int(d) for d in input_shape)
        if any(d < 1 for d in self.input_shape):
            raise NetworkError(f"input extents must be positive, got {self.input_shape}")

        softmax_at = [i for i, layer in enumerate(self.layers) if isinstance(layer, Softmax)]
        if len(softmax_at) > 1 or (softmax_at and softmax_at[0] != len(self.layers) - 1):
            raise NetworkError("Softmax may appear at most once and only as the final layer")

        shapes: List[Shape] = [self.input_shape]
        for i, layer in enumerate(self.layers):
            try:
                shapes.append(layer.output_shape(shapes[-1]))
            except NetworkError as e:
                raise NetworkError(f"layer {i} ({layer!r}): {e}") from e
        self.shapes = shapes
        if len(shapes[-1]) != 1:
            raise NetworkError(f"network output must be a flat vector, got {shapes[-1]}")
        self.class_count = int(shapes[-1][0])
        logger.debug("network built", layers=len(self.layers), classes=self.class_count)

    @property
    def has_softmax(self) -> bool:
        return isinstance(self.layers[-1], Softmax)

    def _check_batch(self, batch: np.ndarray) -> np.ndarray:
        batch = np.asarray(batch, dtype=np.float64)
        if batch.ndim != len(self.input_shape) + 1 or batch.shape[1:] != self.input_shape:
            expected = ", ".join(map(str, self.input_shape))
            raise NetworkError(f"batch shape {batch.shape} does not match (m, {expected})")
        if not np.all(np.isfinite(batch)):
            raise NetworkError("input contains non-finite values")
        return batch

    def _check_image(self, x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=np.float64)
        if x.shape != self.input_shape:
            raise NetworkError(f"image shape {x.shape} does not match {self.input_shape}")
        return x

    def _check_class(self, c: int) -> int:
        if not 0 <= int(c) < self.class_count:
            raise NetworkError(f"class index {c} out of range [0, {self.class_count})")
        return int(c)

    def _run(self, x: np.ndarray, layers: Sequence[Layer]) -> Tuple[np.ndarray, List[Any]]:
        caches: List[Any] = []
        for layer in layers:
            x, cache = layer.forward(x)
            caches.append(cache)
        return x, caches

    def forward(self, batch: np.ndarray) -> np.ndarray:
        """Class probabilities for a batch, shape (m, class_count)."""
        out, _ = self._run(self._check_batch(batch), self.layers)
        return out

    def logits(self, batch: np.ndarray) -> np.ndarray:
        """Activations of the last layer before the final Softmax."""
        layers = self.layers[:-1] if self.has_softmax else self.layers
        out, _ = self._run(self._check_batch(batch), layers)
        return out

    def activations(self, batch: np.ndarray) -> List[np.ndarray]:
        """Output of every layer in order, for the activation-statistics lab."""
        x = self._check_batch(batch)
        outputs: List[np.ndarray] = []
        for layer in self.layers:
            x, _ = layer.forward(x)
            outputs.append(x)
        return outputs

    def predict(self, x: np.ndarray) -> Tuple[int, np.ndarray]:
        """Predicted class and probability vector for a single image."""
        probs = self.forward(self._check_image(x)[None])[0]
        return int(np.argmax(probs)), probs

    def _backward(
        self, grad: np.ndarray, caches: List[Any]
    ) -> Tuple[np.ndarray, List[Dict[str, np.ndarray]]]:
        """Backpropagate through the first len(caches) layers."""
        param_grads: List[Dict[str, np.ndarray]] = [{} for _ in caches]
        for i in range(len(caches) - 1, -1, -1):
            grad, param_grads[i] = self.layers[i].backward(grad, caches[i])
        return grad, param_grads

    def input_gradient(self, x: np.ndarray, c: int) -> np.ndarray:
        """Exact gradient of P(c|x) with respect to every input element."""
        c = self._check_class(c)
        batch = self._check_batch(self._check_image(x)[None])
        out, caches = self._run(batch, self.layers)
        seed = np.zeros_like(out)
        seed[0, c] = 1.0
        grad, _ = self._backward(seed, caches)
        return grad[0]

    def param_gradient(
        self, x: np.ndarray, target: Union[int, np.ndarray]
    ) -> Tuple[float, List[Dict[str, np.ndarray]]]:
        """Mean cross-entropy loss against one-hot targets and its weight gradients.

        Accepts a single image with an integer class, or a batch with an
        integer label array.
        """
        x = np.asarray(x, dtype=np.float64)
        if x.shape == self.input_shape:
            x = x[None]
        batch = self._check_batch(x)
        labels = np.atleast_1d(np.asarray(target, dtype=np.int64))
        if labels.shape != (batch.shape[0],):
            raise NetworkError(f"{labels.shape[0]} targets for {batch.shape[0]} images")
        for label in labels:
            self._check_class(int(label))

        n = batch.shape[0]
        rows = np.arange(n)
        if self.has_softmax:
            z, caches = self._run(batch, self.layers[:-1])
            probs = softmax_rows(z)
            grad = probs.copy()
            grad[rows, labels] -= 1.0
            grad /= n
            clipped = np.clip(probs[rows, labels], 1e-300, 1.0)
            loss = float(-np.mean(np.log(clipped)))
            _, param_grads = self._backward(grad, caches)
            param_grads.append({})
        else:
            out, caches = self._run(batch, self.layers)
            clipped = np.clip(out[rows, labels], 1e-300, None)
            loss = float(-np.mean(np.log(clipped)))
            grad = np.zeros_like(out)
            grad[rows, labels] = -1.0 / (n * clipped)
            _, param_grads = self._backward(grad, caches)
        return loss, param_grads

    def copy(self) -> "Network":
        return Network([layer.copy() for layer in self.layers], self.input_shape)

    def describe(self) -> str:
        return " -> ".join(repr(layer) for layer in self.layers)

    def __repr__(self) -> str:
        return f"Network(input={self.input_shape}, classes={self.class_count}, {self.describe()})"
