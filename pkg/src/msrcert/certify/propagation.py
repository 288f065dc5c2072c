"""Backward linear bound propagation through feed-forward networks.

A network is compiled into alternating stages ``y_1 = A_0 z``, ``h_k = act_k(y_k)``,
``y_{k+1} = A_k h_k`` where every ``A`` is an affine map. Consecutive affine layers
(Dense, Conv2D, Flatten) are merged; an identity map is inserted between two
activations. Bounds of each pre-activation are obtained by substituting relaxation
lines backwards down to the input domain, whose extrema give concrete intervals.
"""

import logging
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numpy as np

from ..base import AffineLayer, InputDomain, Layer, Shape
from ..exceptions import PropagationError
from ..models import ACTIVATION_KINDS, LayerKind
from ..network.layers import LSTMLayer
from ..network.model import NetworkModel
from .domains import PerturbationBall, PerturbationSpec
from .relaxation import Relaxation, relax


logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class LinearBoundPair:
    """Affine lower/upper bounds of a set of rows in the domain coordinates ``z``.

    ``A_L @ z + b_L <= value <= A_U @ z + b_U`` for every admissible ``z``;
    ``lower``/``upper`` are the concretized intervals.
    """
    A_L: np.ndarray
    b_L: np.ndarray
    A_U: np.ndarray
    b_U: np.ndarray
    lower: np.ndarray
    upper: np.ndarray

    def __len__(self) -> int:
        return len(self.lower)


@dataclass
class CompiledNetwork:
    """Affine maps ``(W, b)`` interleaved with activation kinds: ``len(affine) == len(activations) + 1``."""
    affine: List[Tuple[np.ndarray, np.ndarray]]
    activations: List[LayerKind]

    def restrict_input(self, x_flat: np.ndarray, free: np.ndarray) -> "CompiledNetwork":
        """Fold the fixed coordinates of ``x_flat`` into the first bias; keep ``free`` as inputs."""
        W, b = self.affine[0]
        fixed = np.ones(W.shape[1], dtype=bool)
        fixed[free] = False
        first = (W[:, free], b + W[:, fixed] @ x_flat[fixed])
        return CompiledNetwork([first] + self.affine[1:], list(self.activations))


def compile_layers(layers: Sequence[Layer], input_shape: Shape) -> CompiledNetwork:
    """Merge a feed-forward layer list into a :class:`CompiledNetwork`."""
    affine: List[Tuple[np.ndarray, np.ndarray]] = []
    activations: List[LayerKind] = []
    pending: Optional[Tuple[np.ndarray, np.ndarray]] = None
    shape = tuple(input_shape)

    for layer in layers:
        if isinstance(layer, AffineLayer):
            W, b = layer.affine(shape)
            if pending is None:
                pending = (W, b)
            else:
                pending = (W @ pending[0], W @ pending[1] + b)
        elif layer.kind in ACTIVATION_KINDS:
            if pending is None:
                size = int(np.prod(shape))
                pending = (np.eye(size), np.zeros(size))
            affine.append(pending)
            activations.append(layer.kind)
            pending = None
        elif isinstance(layer, LSTMLayer):
            raise PropagationError("LSTM layers are bounded by propagate_bounds_lstm, not propagate_bounds")
        else:
            raise PropagationError(f"Unsupported layer kind for bound propagation: {layer.kind}")
        shape = tuple(layer.output_shape(shape))

    if pending is None:
        size = int(np.prod(shape))
        pending = (np.eye(size), np.zeros(size))
    affine.append(pending)
    return CompiledNetwork(affine, activations)


def _backward(
    network: CompiledNetwork,
    stage: int,
    C: np.ndarray,
    relaxations: List[Relaxation],
) -> Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray]:
    """Lines of ``C @ y`` where ``y`` is the output of affine map ``stage``.

    Returns ``(A_L, b_L, A_U, b_U)`` over the network input.
    """
    W, b = network.affine[stage]
    lam_L = C @ W
    lam_U = lam_L.copy()
    const_L = C @ b
    const_U = const_L.copy()
    for k in range(stage - 1, -1, -1):
        r = relaxations[k]
        pos, neg = np.maximum(lam_L, 0.0), np.minimum(lam_L, 0.0)
        const_L = const_L + pos @ r.lower_intercept + neg @ r.upper_intercept
        lam_L = pos * r.lower_slope + neg * r.upper_slope
        pos, neg = np.maximum(lam_U, 0.0), np.minimum(lam_U, 0.0)
        const_U = const_U + pos @ r.upper_intercept + neg @ r.lower_intercept
        lam_U = pos * r.upper_slope + neg * r.lower_slope

        W, b = network.affine[k]
        const_L = const_L + lam_L @ b
        const_U = const_U + lam_U @ b
        lam_L = lam_L @ W
        lam_U = lam_U @ W
    return lam_L, const_L, lam_U, const_U


def _concretize(lines: Tuple[np.ndarray, np.ndarray, np.ndarray, np.ndarray], domain: InputDomain) -> LinearBoundPair:
    A_L, b_L, A_U, b_U = lines
    lower = domain.minimize(A_L) + b_L
    upper = domain.maximize(A_U) + b_U
    # rounding can flip degenerate intervals by an ulp
    lower = np.minimum(lower, upper)
    return LinearBoundPair(A_L=A_L, b_L=b_L, A_U=A_U, b_U=b_U, lower=lower, upper=upper)


def bound_network(network: CompiledNetwork, domain: InputDomain, C: Optional[np.ndarray] = None) -> LinearBoundPair:
    """Bounds of ``C @ output`` (identity when ``C`` is None) over ``domain``."""
    relaxations: List[Relaxation] = []
    for stage, kind in enumerate(network.activations):
        size = network.affine[stage][0].shape[0]
        pre = _concretize(_backward(network, stage, np.eye(size), relaxations), domain)
        relaxations.append(relax(kind, pre.lower, pre.upper))
    last = len(network.activations)
    if C is None:
        C = np.eye(network.affine[last][0].shape[0])
    return _concretize(_backward(network, last, np.atleast_2d(C), relaxations), domain)


def _input_problem(model: NetworkModel, x: np.ndarray, spec: PerturbationSpec) -> Tuple[CompiledNetwork, PerturbationBall]:
    x = np.asarray(x, dtype=np.float64)
    if x.shape != model.input_shape:
        raise PropagationError(f"Input of shape {x.shape} does not match model input {model.input_shape}")
    spec.check_length(model.length)
    free = spec.free_coordinates(model.dim)
    x_flat = x.ravel()
    network = compile_layers(model.layers, model.input_shape).restrict_input(x_flat, free)
    return network, PerturbationBall(x_flat[free], spec.epsilon, spec.norm)


def propagate_bounds(model: NetworkModel, x: np.ndarray, spec: PerturbationSpec) -> LinearBoundPair:
    """Per-logit intervals over ``Ball(x, spec.epsilon)`` restricted to the words in ``spec.indices``."""
    network, domain = _input_problem(model, x, spec)
    return bound_network(network, domain)


def bound_rows(model: NetworkModel, x: np.ndarray, spec: PerturbationSpec, C: np.ndarray) -> LinearBoundPair:
    """Bounds of linear combinations ``C @ logits`` over the perturbation ball."""
    network, domain = _input_problem(model, x, spec)
    return bound_network(network, domain, C)


def margin_rows(num_classes: int, predicted: int) -> Tuple[np.ndarray, List[int]]:
    """Rows ``e_c - e_j`` for every ``j != c`` and the list of those ``j``."""
    others = [j for j in range(num_classes) if j != predicted]
    C = np.zeros((len(others), num_classes))
    C[:, predicted] = 1.0
    C[np.arange(len(others)), others] = -1.0
    return C, others
