"""Bounds for networks that start with an LSTM layer.

The recurrence is bounded with intervals: gate pre-activations take the exact extrema
of the input projection over each perturbed word's ball plus interval arithmetic on the
hidden state, gate activations are monotone, and the products ``f*c``, ``i*g`` and
``o*tanh(c)`` use interval products. The final hidden-state box is handed to the
linear propagation of the feed-forward tail.
"""

import logging
from typing import Optional, Tuple

import numpy as np

from ..exceptions import PropagationError
from ..models import LayerKind
from ..network.layers import LSTMLayer
from ..network.model import NetworkModel
from .domains import Box, PerturbationBall, PerturbationSpec
from .propagation import LinearBoundPair, bound_network, compile_layers
from .relaxation import interval_image


logger = logging.getLogger(__name__)

Interval = Tuple[np.ndarray, np.ndarray]


def interval_product(a: Interval, b: Interval) -> Interval:
    corners = np.stack([a[0] * b[0], a[0] * b[1], a[1] * b[0], a[1] * b[1]])
    return corners.min(axis=0), corners.max(axis=0)


def _matvec(W: np.ndarray, v: Interval) -> Interval:
    pos, neg = np.maximum(W, 0.0), np.minimum(W, 0.0)
    return pos @ v[0] + neg @ v[1], pos @ v[1] + neg @ v[0]


def _input_projection(lstm: LSTMLayer, x_t: np.ndarray, epsilon: Optional[float], spec: PerturbationSpec) -> Interval:
    if epsilon is None:
        exact = lstm.input_kernel @ x_t
        return exact, exact
    ball = PerturbationBall(x_t, epsilon, spec.norm)
    return ball.minimize(lstm.input_kernel), ball.maximize(lstm.input_kernel)


def hidden_state_bounds(lstm: LSTMLayer, x: np.ndarray, spec: PerturbationSpec) -> Interval:
    """Interval of the final hidden state when the words in ``spec`` move."""
    hidden = lstm.hidden_size
    h: Interval = (np.zeros(hidden), np.zeros(hidden))
    c: Interval = (np.zeros(hidden), np.zeros(hidden))
    free = set(spec.indices)
    si, sf, sg, so = lstm.gate_slices()
    for t in range(x.shape[0]):
        projected = _input_projection(lstm, x[t], spec.epsilon if t in free else None, spec)
        recurrent = _matvec(lstm.recurrent_kernel, h)
        pre_lo = projected[0] + recurrent[0] + lstm.bias
        pre_hi = projected[1] + recurrent[1] + lstm.bias

        i = interval_image(LayerKind.SIGMOID, pre_lo[si], pre_hi[si])
        f = interval_image(LayerKind.SIGMOID, pre_lo[sf], pre_hi[sf])
        g = interval_image(LayerKind.TANH, pre_lo[sg], pre_hi[sg])
        o = interval_image(LayerKind.SIGMOID, pre_lo[so], pre_hi[so])

        kept = interval_product(f, c)
        written = interval_product(i, g)
        c = (kept[0] + written[0], kept[1] + written[1])
        h = interval_product(o, interval_image(LayerKind.TANH, c[0], c[1]))
    return h


def propagate_bounds_lstm(model: NetworkModel, x: np.ndarray, spec: PerturbationSpec) -> LinearBoundPair:
    """Per-logit intervals for an LSTM-headed model; linear lines are over the hidden state."""
    return bound_rows_lstm(model, x, spec, None)


def bound_rows_lstm(
    model: NetworkModel,
    x: np.ndarray,
    spec: PerturbationSpec,
    C: Optional[np.ndarray],
) -> LinearBoundPair:
    lstm = model.layers[0]
    if not isinstance(lstm, LSTMLayer):
        raise PropagationError(f"Expected an LSTM first layer, found {lstm.describe()}")
    x = np.asarray(x, dtype=np.float64)
    if x.shape != model.input_shape:
        raise PropagationError(f"Input of shape {x.shape} does not match model input {model.input_shape}")
    spec.check_length(model.length)

    h_lower, h_upper = hidden_state_bounds(lstm, x, spec)
    tail = compile_layers(model.layers[1:], model.shapes[1])
    return bound_network(tail, Box(np.minimum(h_lower, h_upper), h_upper), C)
