"""Input domains over which linear bounds are concretized."""

from dataclasses import dataclass, field
from typing import List, Tuple

import numpy as np

from ..base import InputDomain
from ..exceptions import PropagationError
from ..models import Norm


# Rejection rounds before L2 samples fall back to clipping into the unit box.
MAX_REJECTION_ROUNDS = 50


@dataclass(frozen=True)
class PerturbationSpec:
    """Which words may move (``indices``, 0-based), under which norm and how far."""
    indices: Tuple[int, ...]
    norm: Norm
    epsilon: float

    def __post_init__(self):
        indices = tuple(int(i) for i in self.indices)
        if not indices:
            raise PropagationError("A perturbation needs at least one word index")
        if len(set(indices)) != len(indices) or any(i < 0 for i in indices):
            raise PropagationError(f"Perturbation indices must be distinct and non-negative, got {list(indices)}")
        if not np.isfinite(self.epsilon) or self.epsilon < 0:
            raise PropagationError(f"Perturbation radius must be finite and >= 0, got {self.epsilon}")
        object.__setattr__(self, "indices", tuple(sorted(indices)))
        object.__setattr__(self, "norm", Norm(self.norm))

    def check_length(self, length: int) -> None:
        if self.indices[-1] >= length:
            raise PropagationError(f"Word index {self.indices[-1]} is outside a text of length {length}")

    def free_coordinates(self, dim: int) -> np.ndarray:
        """Flat input coordinates of the perturbed words."""
        return np.concatenate([np.arange(i * dim, (i + 1) * dim) for i in self.indices])

    def with_epsilon(self, epsilon: float) -> "PerturbationSpec":
        return PerturbationSpec(self.indices, self.norm, epsilon)


def _box_minimum(coeffs: np.ndarray, lower: np.ndarray, upper: np.ndarray) -> np.ndarray:
    return np.where(coeffs >= 0, coeffs * lower, coeffs * upper).sum(axis=-1)


@dataclass(frozen=True)
class Box(InputDomain):
    """Axis-aligned box ``[lower, upper]``."""
    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "lower", np.asarray(self.lower, dtype=np.float64).ravel())
        object.__setattr__(self, "upper", np.asarray(self.upper, dtype=np.float64).ravel())
        if self.lower.shape != self.upper.shape or np.any(self.lower > self.upper):
            raise PropagationError("Box bounds must have equal shape with lower <= upper")

    @property
    def size(self) -> int:
        return self.lower.size

    def minimize(self, coeffs: np.ndarray) -> np.ndarray:
        return _box_minimum(np.atleast_2d(coeffs), self.lower, self.upper)

    def sample(self, count: int, rng: np.random.Generator) -> np.ndarray:
        return rng.uniform(self.lower, self.upper, size=(count, self.size))


@dataclass(frozen=True)
class PerturbationBall(InputDomain):
    """Norm ball of radius ``epsilon`` around ``center`` intersected with the unit box."""
    center: np.ndarray
    epsilon: float
    norm: Norm
    box: Box = field(init=False, repr=False)

    def __post_init__(self):
        center = np.asarray(self.center, dtype=np.float64).ravel()
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "norm", Norm(self.norm))
        lower = np.clip(center - self.epsilon, 0.0, 1.0)
        upper = np.clip(center + self.epsilon, 0.0, 1.0)
        object.__setattr__(self, "box", Box(np.minimum(lower, center), np.maximum(upper, center)))

    @property
    def size(self) -> int:
        return self.center.size

    def minimize(self, coeffs: np.ndarray) -> np.ndarray:
        coeffs = np.atleast_2d(coeffs)
        box_bound = self.box.minimize(coeffs)
        if self.norm is Norm.LINF:
            return box_bound
        ball_bound = coeffs @ self.center - self.epsilon * np.linalg.norm(coeffs, axis=1)
        return np.maximum(ball_bound, box_bound)

    def contains(self, points: np.ndarray, atol: float = 1e-12) -> np.ndarray:
        points = np.atleast_2d(points)
        diff = points - self.center
        dist = np.linalg.norm(diff, axis=1) if self.norm is Norm.L2 else np.abs(diff).max(axis=1)
        in_box = np.all((points >= -atol) & (points <= 1 + atol), axis=1)
        return in_box & (dist <= self.epsilon + atol)

    def sample(self, count: int, rng: np.random.Generator) -> np.ndarray:
        """Uniform points of the domain.

        L2 samples are drawn uniformly in the ball and rejected outside the box; after
        :data:`MAX_REJECTION_ROUNDS` rounds the remainder is clipped into the box, which
        keeps them inside the ball.
        """
        if self.norm is Norm.LINF:
            return self.box.sample(count, rng)
        n = self.size
        accepted: List[np.ndarray] = []
        remaining = count
        for _ in range(MAX_REJECTION_ROUNDS):
            if remaining == 0:
                break
            candidates = self._ball_points(remaining * 2, rng)
            inside = candidates[np.all((candidates >= 0) & (candidates <= 1), axis=1)][:remaining]
            accepted.append(inside)
            remaining -= len(inside)
        if remaining:
            accepted.append(np.clip(self._ball_points(remaining, rng), 0.0, 1.0))
        return np.concatenate(accepted, axis=0) if accepted else np.empty((0, n))

    def _ball_points(self, count: int, rng: np.random.Generator) -> np.ndarray:
        n = self.size
        directions = rng.normal(size=(count, n))
        directions /= np.maximum(np.linalg.norm(directions, axis=1, keepdims=True), 1e-300)
        radii = self.epsilon * rng.uniform(size=(count, 1)) ** (1.0 / n)
        return self.center + radii * directions
