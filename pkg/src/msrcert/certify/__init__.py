"""Certified lower bounds of the maximum safe radius."""

from .domains import Box, PerturbationBall, PerturbationSpec
from .lstm import propagate_bounds_lstm
from .propagation import LinearBoundPair, bound_rows, compile_layers, propagate_bounds
from .radius import CertificationResult, certify_lower_bound, verify_radius
from .relaxation import AffineBound, relax, relax_activation
from .saliency import SaliencyMap, saliency

__all__ = [
    "Box",
    "PerturbationBall",
    "PerturbationSpec",
    "propagate_bounds_lstm",
    "LinearBoundPair",
    "bound_rows",
    "compile_layers",
    "propagate_bounds",
    "CertificationResult",
    "certify_lower_bound",
    "verify_radius",
    "AffineBound",
    "relax",
    "relax_activation",
    "SaliencyMap",
    "saliency",
]
