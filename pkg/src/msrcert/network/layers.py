"""Layer kinds of the portable weight manifest.

All layers work on batches; shapes below are per example. Weight tensors are
stored row-major:

- Dense: ``kernel`` (units, in_features), ``bias`` (units). The input is flattened.
- Conv2D: ``kernel`` (filters, kh, kw, in_channels), ``bias`` (filters). Valid padding,
  stride 1; a 2-D input ``(h, w)`` is a single channel image.
- LSTM: ``input_kernel`` (4H, input_size), ``recurrent_kernel`` (4H, H), ``bias`` (4H),
  gate blocks in the order input, forget, cell, output. Returns the last hidden state.
"""

from typing import Callable, Dict, Optional, Tuple

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

from ..base import AffineLayer, Layer, Shape
from ..exceptions import ModelValidationError
from ..models import LayerKind, LayerManifest


def sigmoid(z: np.ndarray) -> np.ndarray:
    return 0.5 * (1.0 + np.tanh(0.5 * z))


def sigmoid_grad(z: np.ndarray) -> np.ndarray:
    s = sigmoid(z)
    return s * (1.0 - s)


def relu(z: np.ndarray) -> np.ndarray:
    return np.maximum(z, 0.0)


def tanh_grad(z: np.ndarray) -> np.ndarray:
    t = np.tanh(z)
    return 1.0 - t * t


ACTIVATION_FUNCTIONS: Dict[LayerKind, Callable[[np.ndarray], np.ndarray]] = {
    LayerKind.RELU: relu,
    LayerKind.SIGMOID: sigmoid,
    LayerKind.TANH: np.tanh,
}

ACTIVATION_GRADIENTS: Dict[LayerKind, Callable[[np.ndarray], np.ndarray]] = {
    LayerKind.RELU: lambda z: (z > 0).astype(np.float64),
    LayerKind.SIGMOID: sigmoid_grad,
    LayerKind.TANH: tanh_grad,
}


def _tensor(manifest: LayerManifest, name: str, shape: Tuple[int, ...]) -> np.ndarray:
    values = manifest.weights.get(name)
    if values is None:
        raise ModelValidationError(f"{manifest.kind.value} layer is missing weight tensor '{name}'")
    expected = int(np.prod(shape))
    if len(values) != expected:
        raise ModelValidationError(
            f"{manifest.kind.value} weight '{name}' has {len(values)} values, expected {expected} for shape {shape}"
        )
    return np.array(values, dtype=np.float64).reshape(shape)


def _int_param(manifest: LayerManifest, name: str, default: Optional[int] = None) -> int:
    value = manifest.params.get(name, default)
    if value is None:
        raise ModelValidationError(f"{manifest.kind.value} layer is missing parameter '{name}'")
    if not isinstance(value, int) or isinstance(value, bool) or value < 1:
        raise ModelValidationError(f"{manifest.kind.value} parameter '{name}' must be a positive integer, got {value!r}")
    return value


def _flat(values: np.ndarray) -> list:
    return [float(v) for v in np.ravel(values)]


class DenseLayer(AffineLayer):
    kind = LayerKind.DENSE

    def __init__(self, kernel: np.ndarray, bias: np.ndarray):
        self.kernel = np.asarray(kernel, dtype=np.float64)
        self.bias = np.asarray(bias, dtype=np.float64)
        if self.kernel.ndim != 2 or self.bias.shape != (self.kernel.shape[0],):
            raise ModelValidationError("Dense kernel must be (units, in_features) with a matching bias")

    @property
    def units(self) -> int:
        return self.kernel.shape[0]

    @property
    def in_features(self) -> int:
        return self.kernel.shape[1]

    def describe(self) -> str:
        return f"Dense({self.in_features}->{self.units})"

    def output_shape(self, input_shape: Shape) -> Shape:
        if int(np.prod(input_shape)) != self.in_features:
            raise ValueError(f"expects {self.in_features} inputs, receives shape {tuple(input_shape)}")
        return (self.units,)

    def forward(self, x: np.ndarray) -> np.ndarray:
        return x.reshape(x.shape[0], -1) @ self.kernel.T + self.bias

    def affine(self, input_shape: Shape) -> Tuple[np.ndarray, np.ndarray]:
        return self.kernel, self.bias

    def to_manifest(self) -> LayerManifest:
        return LayerManifest(
            kind=self.kind,
            params={"in_features": self.in_features, "units": self.units},
            weights={"kernel": _flat(self.kernel), "bias": _flat(self.bias)},
        )

    @classmethod
    def from_manifest(cls, manifest: LayerManifest) -> "DenseLayer":
        units = _int_param(manifest, "units")
        in_features = _int_param(manifest, "in_features")
        return cls(_tensor(manifest, "kernel", (units, in_features)), _tensor(manifest, "bias", (units,)))


class Conv2DLayer(AffineLayer):
    kind = LayerKind.CONV2D

    def __init__(self, kernel: np.ndarray, bias: np.ndarray):
        self.kernel = np.asarray(kernel, dtype=np.float64)
        self.bias = np.asarray(bias, dtype=np.float64)
        if self.kernel.ndim != 4 or self.bias.shape != (self.kernel.shape[0],):
            raise ModelValidationError("Conv2D kernel must be (filters, kh, kw, in_channels) with a matching bias")
        self._index_maps: Dict[Shape, np.ndarray] = {}

    @property
    def filters(self) -> int:
        return self.kernel.shape[0]

    @property
    def kernel_size(self) -> Tuple[int, int]:
        return self.kernel.shape[1], self.kernel.shape[2]

    @property
    def in_channels(self) -> int:
        return self.kernel.shape[3]

    def describe(self) -> str:
        kh, kw = self.kernel_size
        return f"Conv2D({self.filters}x{kh}x{kw})"

    @staticmethod
    def _as_image_shape(input_shape: Shape) -> Tuple[int, int, int]:
        if len(input_shape) == 2:
            return input_shape[0], input_shape[1], 1
        if len(input_shape) == 3:
            return tuple(input_shape)
        raise ValueError(f"expects a (h, w) or (h, w, c) input, receives shape {tuple(input_shape)}")

    def output_shape(self, input_shape: Shape) -> Shape:
        h, w, c = self._as_image_shape(input_shape)
        kh, kw = self.kernel_size
        if c != self.in_channels:
            raise ValueError(f"expects {self.in_channels} channel(s), receives {c}")
        if kh > h or kw > w:
            raise ValueError(f"kernel {kh}x{kw} does not fit input {h}x{w}")
        return (h - kh + 1, w - kw + 1, self.filters)

    def forward(self, x: np.ndarray) -> np.ndarray:
        h, w, c = self._as_image_shape(x.shape[1:])
        images = x.reshape(x.shape[0], h, w, c)
        windows = sliding_window_view(images, self.kernel_size, axis=(1, 2))
        # windows: (B, h', w', c, kh, kw)
        return np.einsum("bpqcij,fijc->bpqf", windows, self.kernel) + self.bias

    def index_map(self, input_shape: Shape) -> np.ndarray:
        """``(out_size, in_size)`` map from dense-matrix entries to flat kernel indices, -1 where zero."""
        key = tuple(input_shape)
        if key not in self._index_maps:
            h, w, c = self._as_image_shape(input_shape)
            kh, kw = self.kernel_size
            oh, ow, nf = self.output_shape(input_shape)
            mapping = np.full((oh * ow * nf, h * w * c), -1, dtype=np.int64)
            for p in range(oh):
                for q in range(ow):
                    for f in range(nf):
                        row = (p * ow + q) * nf + f
                        for i in range(kh):
                            for j in range(kw):
                                for ch in range(c):
                                    col = ((p + i) * w + (q + j)) * c + ch
                                    mapping[row, col] = ((f * kh + i) * kw + j) * c + ch
            self._index_maps[key] = mapping
        return self._index_maps[key]

    def affine(self, input_shape: Shape) -> Tuple[np.ndarray, np.ndarray]:
        mapping = self.index_map(input_shape)
        flat_kernel = self.kernel.ravel()
        weight = np.where(mapping >= 0, flat_kernel[np.maximum(mapping, 0)], 0.0)
        oh, ow, _ = self.output_shape(input_shape)
        return weight, np.tile(self.bias, oh * ow)

    def to_manifest(self) -> LayerManifest:
        kh, kw = self.kernel_size
        return LayerManifest(
            kind=self.kind,
            params={"filters": self.filters, "kernel_size": [kh, kw], "in_channels": self.in_channels},
            weights={"kernel": _flat(self.kernel), "bias": _flat(self.bias)},
        )

    @classmethod
    def from_manifest(cls, manifest: LayerManifest) -> "Conv2DLayer":
        filters = _int_param(manifest, "filters")
        in_channels = _int_param(manifest, "in_channels", default=1)
        kernel_size = manifest.params.get("kernel_size")
        if (
            not isinstance(kernel_size, (list, tuple)) or len(kernel_size) != 2
            or not all(isinstance(k, int) and k >= 1 for k in kernel_size)
        ):
            raise ModelValidationError(f"Conv2D parameter 'kernel_size' must be two positive integers, got {kernel_size!r}")
        kh, kw = kernel_size
        return cls(
            _tensor(manifest, "kernel", (filters, kh, kw, in_channels)),
            _tensor(manifest, "bias", (filters,)),
        )


class ActivationLayer(Layer):
    def __init__(self, kind: LayerKind):
        if kind not in ACTIVATION_FUNCTIONS:
            raise ModelValidationError(f"{kind} is not an activation")
        self.kind = kind
        self.fn = ACTIVATION_FUNCTIONS[kind]

    def output_shape(self, input_shape: Shape) -> Shape:
        return tuple(input_shape)

    def forward(self, x: np.ndarray) -> np.ndarray:
        return self.fn(x)

    def to_manifest(self) -> LayerManifest:
        return LayerManifest(kind=self.kind)


class FlattenLayer(AffineLayer):
    kind = LayerKind.FLATTEN

    def output_shape(self, input_shape: Shape) -> Shape:
        return (int(np.prod(input_shape)),)

    def forward(self, x: np.ndarray) -> np.ndarray:
        return x.reshape(x.shape[0], -1)

    def affine(self, input_shape: Shape) -> Tuple[np.ndarray, np.ndarray]:
        size = int(np.prod(input_shape))
        return np.eye(size), np.zeros(size)

    def to_manifest(self) -> LayerManifest:
        return LayerManifest(kind=self.kind)


class LSTMLayer(Layer):
    kind = LayerKind.LSTM

    def __init__(self, input_kernel: np.ndarray, recurrent_kernel: np.ndarray, bias: np.ndarray):
        self.input_kernel = np.asarray(input_kernel, dtype=np.float64)
        self.recurrent_kernel = np.asarray(recurrent_kernel, dtype=np.float64)
        self.bias = np.asarray(bias, dtype=np.float64)
        four_h = self.input_kernel.shape[0]
        if four_h % 4 or self.recurrent_kernel.shape != (four_h, four_h // 4) or self.bias.shape != (four_h,):
            raise ModelValidationError("LSTM weights must be (4H, in), (4H, H) and (4H,)")

    @property
    def hidden_size(self) -> int:
        return self.recurrent_kernel.shape[1]

    @property
    def input_size(self) -> int:
        return self.input_kernel.shape[1]

    def describe(self) -> str:
        return f"LSTM({self.input_size}->{self.hidden_size})"

    def gate_slices(self) -> Tuple[slice, slice, slice, slice]:
        """Row blocks of the input, forget, cell and output gates."""
        h = self.hidden_size
        return slice(0, h), slice(h, 2 * h), slice(2 * h, 3 * h), slice(3 * h, 4 * h)

    def output_shape(self, input_shape: Shape) -> Shape:
        if len(input_shape) != 2 or input_shape[1] != self.input_size:
            raise ValueError(f"expects a (timesteps, {self.input_size}) sequence, receives shape {tuple(input_shape)}")
        return (self.hidden_size,)

    def step(self, x_t: np.ndarray, h: np.ndarray, c: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        """One timestep for a batch; returns the new ``(h, c)``."""
        pre = x_t @ self.input_kernel.T + h @ self.recurrent_kernel.T + self.bias
        si, sf, sg, so = self.gate_slices()
        i = sigmoid(pre[:, si])
        f = sigmoid(pre[:, sf])
        g = np.tanh(pre[:, sg])
        o = sigmoid(pre[:, so])
        c_next = f * c + i * g
        return o * np.tanh(c_next), c_next

    def forward(self, x: np.ndarray) -> np.ndarray:
        batch = x.shape[0]
        h = np.zeros((batch, self.hidden_size))
        c = np.zeros((batch, self.hidden_size))
        for t in range(x.shape[1]):
            h, c = self.step(x[:, t, :], h, c)
        return h

    def to_manifest(self) -> LayerManifest:
        return LayerManifest(
            kind=self.kind,
            params={"input_size": self.input_size, "hidden_size": self.hidden_size},
            weights={
                "input_kernel": _flat(self.input_kernel),
                "recurrent_kernel": _flat(self.recurrent_kernel),
                "bias": _flat(self.bias),
            },
        )

    @classmethod
    def from_manifest(cls, manifest: LayerManifest) -> "LSTMLayer":
        input_size = _int_param(manifest, "input_size")
        hidden = _int_param(manifest, "hidden_size")
        return cls(
            _tensor(manifest, "input_kernel", (4 * hidden, input_size)),
            _tensor(manifest, "recurrent_kernel", (4 * hidden, hidden)),
            _tensor(manifest, "bias", (4 * hidden,)),
        )


def layer_from_manifest(manifest: LayerManifest) -> Layer:
    if manifest.kind is LayerKind.DENSE:
        return DenseLayer.from_manifest(manifest)
    if manifest.kind is LayerKind.CONV2D:
        return Conv2DLayer.from_manifest(manifest)
    if manifest.kind is LayerKind.LSTM:
        return LSTMLayer.from_manifest(manifest)
    if manifest.kind is LayerKind.FLATTEN:
        return FlattenLayer()
    return ActivationLayer(manifest.kind)
