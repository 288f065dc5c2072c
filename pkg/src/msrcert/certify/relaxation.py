"""Linear lower/upper bounds of ReLU, Sigmoid and Tanh over a pre-activation interval.

For every neuron with pre-activation ``y`` in ``[l, u]`` the relaxation returns two
lines with ``lower_slope*y + lower_intercept <= f(y) <= upper_slope*y + upper_intercept``.

The lines only move outwards when the interval grows: for ``[l, u]`` inside ``[l', u']``
the lines of ``[l', u']`` enclose those of ``[l, u]`` on ``[l, u]``. Bounds propagated
with them are therefore monotone in the perturbation radius.

ReLU uses the triangle upper chord and a zero lower line on unstable neurons. The
S-shaped activations are convex below 0 and concave above: the upper line is the chord
when it is sound and the tangent at ``u`` otherwise; the lower line is its mirror image,
the chord or the tangent at ``l``.
"""

from dataclasses import dataclass
from typing import Callable, Tuple

import numpy as np

from ..exceptions import PropagationError
from ..models import ACTIVATION_KINDS, LayerKind
from ..network.layers import ACTIVATION_FUNCTIONS, ACTIVATION_GRADIENTS


@dataclass(frozen=True)
class AffineBound:
    """``slope * y + intercept`` for a single neuron."""
    slope: float
    intercept: float

    def __call__(self, y: float) -> float:
        return self.slope * y + self.intercept


@dataclass(frozen=True)
class Relaxation:
    """Per-neuron relaxation lines, all arrays of the same shape."""
    lower_slope: np.ndarray
    lower_intercept: np.ndarray
    upper_slope: np.ndarray
    upper_intercept: np.ndarray


def _relu(lower: np.ndarray, upper: np.ndarray) -> Relaxation:
    active = lower >= 0
    inactive = upper <= 0
    mixed = ~(active | inactive)
    width = np.where(mixed, upper - lower, 1.0)
    chord_slope = np.where(mixed, upper / width, 0.0)

    upper_slope = np.where(active, 1.0, np.where(mixed, chord_slope, 0.0))
    upper_intercept = np.where(mixed, -chord_slope * lower, 0.0)
    lower_slope = np.where(active, 1.0, 0.0)
    return Relaxation(lower_slope, np.zeros_like(lower), upper_slope, upper_intercept)


def _tangent(fn: Callable, grad: Callable, point: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    slope = grad(point)
    return slope, fn(point) - slope * point


def _chord(fn: Callable, lower: np.ndarray, upper: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    width = np.where(upper > lower, upper - lower, 1.0)
    slope = np.where(upper > lower, (fn(upper) - fn(lower)) / width, 0.0)
    return slope, fn(lower) - slope * lower


def _upper_s_shaped(fn: Callable, grad: Callable, lower: np.ndarray, upper: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Steepest sound line through ``(upper, fn(upper))``.

    That is the chord when its slope does not exceed ``grad(upper)`` and the tangent
    at ``upper`` otherwise.
    """
    convex = upper <= 0
    concave = lower >= 0
    chord_slope, chord_intercept = _chord(fn, lower, upper)
    end_slope, end_intercept = _tangent(fn, grad, upper)

    use_chord = convex | (~concave & (chord_slope <= end_slope))
    slope = np.where(use_chord, chord_slope, end_slope)
    intercept = np.where(use_chord, chord_intercept, end_intercept)
    return slope, intercept


def _s_shaped(kind: LayerKind, lower: np.ndarray, upper: np.ndarray) -> Relaxation:
    fn = ACTIVATION_FUNCTIONS[kind]
    grad = ACTIVATION_GRADIENTS[kind]
    upper_slope, upper_intercept = _upper_s_shaped(fn, grad, lower, upper)
    # f(x) = 2 f(0) - f(-x): the lower line is the mirrored upper line of [-u, -l]
    offset = 2.0 * float(fn(np.zeros(1))[0])
    mirror_slope, mirror_intercept = _upper_s_shaped(fn, grad, -upper, -lower)
    lower_slope, lower_intercept = mirror_slope, offset - mirror_intercept

    point = lower == upper
    if point.any():
        tangent_slope, tangent_intercept = _tangent(fn, grad, lower)
        upper_slope = np.where(point, tangent_slope, upper_slope)
        upper_intercept = np.where(point, tangent_intercept, upper_intercept)
        lower_slope = np.where(point, tangent_slope, lower_slope)
        lower_intercept = np.where(point, tangent_intercept, lower_intercept)
    return Relaxation(lower_slope, lower_intercept, upper_slope, upper_intercept)


def relax(kind: LayerKind, lower: np.ndarray, upper: np.ndarray) -> Relaxation:
    """Vectorized relaxation of an activation over elementwise intervals."""
    lower = np.asarray(lower, dtype=np.float64)
    upper = np.asarray(upper, dtype=np.float64)
    if np.any(lower > upper):
        raise PropagationError("Pre-activation interval has lower > upper")
    if kind is LayerKind.RELU:
        return _relu(lower, upper)
    if kind in ACTIVATION_KINDS:
        return _s_shaped(kind, lower, upper)
    raise PropagationError(f"No linear relaxation for layer kind {kind}")


def relax_activation(kind: LayerKind, l: float, u: float) -> Tuple[AffineBound, AffineBound]:
    """Lower and upper lines of ``kind`` on ``[l, u]``."""
    if l > u:
        raise PropagationError(f"Invalid interval [{l}, {u}]: lower exceeds upper")
    r = relax(LayerKind(kind), np.array([l]), np.array([u]))
    return (
        AffineBound(float(r.lower_slope[0]), float(r.lower_intercept[0])),
        AffineBound(float(r.upper_slope[0]), float(r.upper_intercept[0])),
    )


def interval_image(kind: LayerKind, lower: np.ndarray, upper: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """Exact image interval of a monotone activation."""
    fn = ACTIVATION_FUNCTIONS[LayerKind(kind)]
    return fn(np.asarray(lower, dtype=np.float64)), fn(np.asarray(upper, dtype=np.float64))
