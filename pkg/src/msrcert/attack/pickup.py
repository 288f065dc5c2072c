"""Distance-based sampling weights over a word's neighborhood."""

import numpy as np

from ..embedding import NeighborSet
from ..exceptions import AttackError


def pickup_weights(distances: np.ndarray) -> np.ndarray:
    """Weight of each neighbor: ``(S - d_i) / ((k - 1) * S)`` with ``S`` the distance sum.

    Closer neighbors weigh more and the weights sum to 1. All-zero distances give
    uniform weights.
    """
    distances = np.asarray(distances, dtype=np.float64)
    k = distances.size
    if k < 2:
        raise AttackError(f"Pickup weights need a neighborhood of at least 2 words, got {k}")
    total = distances.sum()
    if total <= 0:
        return np.full(k, 1.0 / k)
    return (total - distances) / ((k - 1) * total)


def pickup_score(original: str, candidate: str, neighborhood: NeighborSet) -> float:
    """Probability of replacing ``original`` by ``candidate`` within ``neighborhood``."""
    if neighborhood.center_token != original:
        raise AttackError(f"Neighborhood is centered on {neighborhood.center_token!r}, not {original!r}")
    tokens = neighborhood.tokens
    if candidate not in tokens:
        raise AttackError(f"{candidate!r} is not in the neighborhood of {original!r}")
    return float(pickup_weights(neighborhood.distances)[tokens.index(candidate)])
