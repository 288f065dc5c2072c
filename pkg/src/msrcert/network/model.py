"""Layered classifiers loaded from a JSON weight manifest."""

import json
import logging
from dataclasses import dataclass
from pathlib import Path
from typing import List, Sequence, Tuple, Union

import numpy as np
from pydantic import ValidationError

from ..base import Layer, Shape
from ..exceptions import CompositionError, InputFileError, ModelValidationError, ParseError
from ..models import ModelManifest
from .layers import layer_from_manifest


logger = logging.getLogger(__name__)

# Examples evaluated per forward call when a caller hands over a large batch.
PREDICT_CHUNK = 4096


@dataclass(frozen=True)
class Prediction:
    """Logits of one input plus the arg-max class and its softmax probability."""
    logits: np.ndarray

    @property
    def class_index(self) -> int:
        return int(np.argmax(self.logits))

    @property
    def confidence(self) -> float:
        return float(softmax(self.logits[None, :])[0, self.class_index])


def softmax(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=-1, keepdims=True)
    exp = np.exp(shifted)
    return exp / exp.sum(axis=-1, keepdims=True)


class NetworkModel:
    """An ordered sequence of layers over a fixed ``(length, dim)`` input."""

    def __init__(self, layers: Sequence[Layer], input_shape: Tuple[int, int], num_classes: int):
        if not layers:
            raise ModelValidationError("A model needs at least one layer")
        self.layers: List[Layer] = list(layers)
        self.input_shape: Tuple[int, int] = (int(input_shape[0]), int(input_shape[1]))
        self.num_classes = int(num_classes)
        self.shapes: List[Shape] = self._infer_shapes()

    def _infer_shapes(self) -> List[Shape]:
        shapes: List[Shape] = [self.input_shape]
        previous = "input"
        for position, layer in enumerate(self.layers):
            name = f"#{position} {layer.describe()}"
            try:
                shapes.append(tuple(layer.output_shape(shapes[-1])))
            except ValueError as e:
                raise CompositionError(
                    f"Layer {name} cannot follow {previous} (shape {shapes[-1]}): {e}",
                    first=previous, second=name,
                ) from None
            previous = name
        final = shapes[-1]
        if len(final) != 1 or final[0] != self.num_classes:
            raise ModelValidationError(
                f"Last layer produces shape {final}, expected ({self.num_classes},) logits"
            )
        return shapes

    @property
    def length(self) -> int:
        return self.input_shape[0]

    @property
    def dim(self) -> int:
        return self.input_shape[1]

    def forward(self, xs: np.ndarray) -> np.ndarray:
        """Logits for a batch ``(B, length, dim)``."""
        out = np.asarray(xs, dtype=np.float64)
        if out.shape[1:] != self.input_shape:
            raise ModelValidationError(f"Expected inputs of shape (B, {self.length}, {self.dim}), got {out.shape}")
        for layer in self.layers:
            out = layer.forward(out)
        return out.reshape(out.shape[0], self.num_classes)

    def to_manifest(self) -> ModelManifest:
        return ModelManifest(
            input_shape=self.input_shape,
            num_classes=self.num_classes,
            layers=[layer.to_manifest() for layer in self.layers],
        )

    def summary(self) -> str:
        return " -> ".join(layer.describe() for layer in self.layers)


def predict_logits(model: NetworkModel, xs: np.ndarray) -> np.ndarray:
    """Batched forward pass in chunks of :data:`PREDICT_CHUNK`."""
    xs = np.asarray(xs, dtype=np.float64)
    if len(xs) <= PREDICT_CHUNK:
        return model.forward(xs)
    return np.concatenate([model.forward(xs[i:i + PREDICT_CHUNK]) for i in range(0, len(xs), PREDICT_CHUNK)])


def forward(model: NetworkModel, x: np.ndarray) -> Prediction:
    """Evaluate one ``(length, dim)`` input."""
    return Prediction(logits=model.forward(np.asarray(x, dtype=np.float64)[None])[0])


def model_from_manifest(manifest: ModelManifest) -> NetworkModel:
    layers = [layer_from_manifest(layer) for layer in manifest.layers]
    return NetworkModel(layers, manifest.input_shape, manifest.num_classes)


def load_model(path: Union[str, Path]) -> NetworkModel:
    path = Path(path)
    try:
        raw = path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise InputFileError(f"Model file not found: {path}", path=str(path)) from None
    except UnicodeDecodeError as e:
        raise ParseError.from_decode_error(path, e) from None
    except OSError as e:
        raise InputFileError(f"Cannot read model file {path}: {e}", path=str(path)) from None
    try:
        document = json.loads(raw)
    except json.JSONDecodeError as e:
        raise ParseError(f"invalid JSON: {e.msg}", path=str(path), line=e.lineno) from None
    try:
        manifest = ModelManifest.model_validate(document)
    except ValidationError as e:
        raise ModelValidationError(f"{path}: {e}") from None
    model = model_from_manifest(manifest)
    logger.info(f"Loaded model {model.summary()} with input {model.input_shape} from {path}")
    return model


def save_model(model: NetworkModel, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(model.to_manifest().model_dump_json(indent=2), encoding="utf-8")
    logger.debug(f"Saved model manifest to {path}")
    return path
