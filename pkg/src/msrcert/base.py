"""Abstract base classes for network layers and perturbation domains."""

from abc import ABC, abstractmethod
from typing import Tuple

import numpy as np

from .models import LayerKind, LayerManifest


Shape = Tuple[int, ...]


class Layer(ABC):
    """A network layer operating on batches: input ``(B, *input_shape)``."""

    kind: LayerKind

    @abstractmethod
    def output_shape(self, input_shape: Shape) -> Shape:
        """Shape produced for one example of ``input_shape``; ValueError if incompatible."""
        pass

    @abstractmethod
    def forward(self, x: np.ndarray) -> np.ndarray:
        """Apply the layer to a batch."""
        pass

    @abstractmethod
    def to_manifest(self) -> LayerManifest:
        pass

    def describe(self) -> str:
        return self.kind.value


class AffineLayer(Layer):
    """A layer that is an affine map of its flattened input."""

    @abstractmethod
    def affine(self, input_shape: Shape) -> Tuple[np.ndarray, np.ndarray]:
        """Return ``(W, b)`` with ``flat(out) = W @ flat(in) + b``."""
        pass


class InputDomain(ABC):
    """A set of admissible inputs ``z`` over which affine forms are concretized."""

    @property
    @abstractmethod
    def size(self) -> int:
        pass

    @abstractmethod
    def minimize(self, coeffs: np.ndarray) -> np.ndarray:
        """Per row ``a`` of ``coeffs``, a lower bound of ``min_z a @ z`` over the domain."""
        pass

    def maximize(self, coeffs: np.ndarray) -> np.ndarray:
        return -self.minimize(-coeffs)

    @abstractmethod
    def sample(self, count: int, rng: np.random.Generator) -> np.ndarray:
        """Draw ``count`` points of the domain (rows)."""
        pass
