"""Certified lower bounds of the maximum safe radius by bisection on the ball radius."""

import logging
from dataclasses import dataclass
from typing import Dict, Optional, Sequence, Tuple

import numpy as np

from ..config import config
from ..embedding import box_diameter
from ..exceptions import ConfigError
from ..models import CertificationRecord, Norm
from ..network.layers import LSTMLayer
from ..network.model import NetworkModel, forward
from .domains import PerturbationSpec
from .lstm import bound_rows_lstm
from .propagation import bound_rows, margin_rows


logger = logging.getLogger(__name__)

# The search interval extends past the diameter so a fully robust input reports normalized > 1.
SEARCH_HEADROOM = 1.01


@dataclass(frozen=True)
class CertificationResult:
    eps_lower: float
    normalized: float
    margins: Dict[int, float]
    bisection_steps: int
    predicted_class: int
    indices: Tuple[int, ...]
    norm: Norm
    diameter: float

    def to_record(self, text_id: int) -> CertificationRecord:
        return CertificationRecord(
            text_id=text_id,
            indices=list(self.indices),
            norm=self.norm,
            eps_lower=self.eps_lower,
            normalized=self.normalized,
            bisection_steps=self.bisection_steps,
            predicted_class=self.predicted_class,
        )


def margin_lower_bounds(model: NetworkModel, x: np.ndarray, spec: PerturbationSpec, predicted: int) -> Dict[int, float]:
    """Lower bound of ``logit_c - logit_j`` for every ``j != c`` over the ball."""
    C, others = margin_rows(model.num_classes, predicted)
    if not others:
        return {}
    if isinstance(model.layers[0], LSTMLayer):
        bounds = bound_rows_lstm(model, x, spec, C)
    else:
        bounds = bound_rows(model, x, spec, C)
    return {j: float(v) for j, v in zip(others, bounds.lower)}


def verify_radius(model: NetworkModel, x: np.ndarray, spec: PerturbationSpec) -> bool:
    """True iff every margin of the predicted class stays positive over ``Ball(x, spec.epsilon)``."""
    if spec.epsilon == 0:
        return True
    predicted = forward(model, x).class_index
    margins = margin_lower_bounds(model, x, spec, predicted)
    return all(v > 0 for v in margins.values())


def _top_tied(logits: np.ndarray) -> bool:
    if logits.size < 2:
        return False
    top = np.sort(logits)[-2:]
    return bool(top[0] == top[1])


def certify_lower_bound(
    model: NetworkModel,
    x: np.ndarray,
    indices: Sequence[int],
    norm: Norm,
    tol: float = config.tol,
    max_steps: Optional[int] = None,
) -> CertificationResult:
    """Largest verified radius for the words in ``indices``.

    ``tol`` is relative to the diameter: the search stops once the bracket is narrower
    than ``tol * diameter`` or after ``max_steps`` bisections.
    """
    if tol <= 0:
        raise ConfigError(f"tol must be positive, got {tol}")
    max_steps = config.bisection_cap if max_steps is None else max_steps
    norm = Norm(norm)
    x = np.asarray(x, dtype=np.float64)
    spec = PerturbationSpec(tuple(indices), norm, 0.0)
    spec.check_length(model.length)
    diam = box_diameter(norm, len(spec.indices), model.dim)
    prediction = forward(model, x)
    predicted = prediction.class_index

    def result(eps: float, steps: int, margins: Dict[int, float]) -> CertificationResult:
        return CertificationResult(
            eps_lower=eps, normalized=eps / diam, margins=margins, bisection_steps=steps,
            predicted_class=predicted, indices=spec.indices, norm=norm, diameter=diam,
        )

    exact_margins = {j: float(prediction.logits[predicted] - prediction.logits[j])
                     for j in range(model.num_classes) if j != predicted}
    if _top_tied(prediction.logits):
        logger.debug(f"Tied top logits at indices {list(spec.indices)}: radius 0")
        return result(0.0, 0, exact_margins)

    hi = diam * SEARCH_HEADROOM
    steps = 1
    margins = margin_lower_bounds(model, x, spec.with_epsilon(hi), predicted)
    if all(v > 0 for v in margins.values()):
        return result(hi, steps, margins)

    lo, lo_margins = 0.0, exact_margins
    while hi - lo > tol * diam and steps < max_steps:
        mid = 0.5 * (lo + hi)
        steps += 1
        mid_margins = margin_lower_bounds(model, x, spec.with_epsilon(mid), predicted)
        if all(v > 0 for v in mid_margins.values()):
            lo, lo_margins = mid, mid_margins
        else:
            hi = mid
        logger.debug(f"bisection step {steps}: [{lo:.6g}, {hi:.6g}]")
    return result(lo, steps, lo_margins)
