"""Per-word saliency: the certified radius of every word perturbed on its own."""

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Dict, List, Optional, Sequence

import numpy as np

from ..config import config
from ..models import Norm
from ..network.model import NetworkModel
from .radius import CertificationResult, certify_lower_bound


logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class SaliencyMap:
    """Certified radius per word; ``ranking`` lists words from most to least salient."""
    results: Dict[int, CertificationResult]
    ranking: List[int]

    @property
    def scores(self) -> Dict[int, float]:
        return {i: r.eps_lower for i, r in self.results.items()}

    @property
    def normalized(self) -> Dict[int, float]:
        return {i: r.normalized for i, r in self.results.items()}

    @property
    def most_salient(self) -> int:
        return self.ranking[0]


def saliency(
    model: NetworkModel,
    x: np.ndarray,
    norm: Norm,
    tol: float = config.tol,
    positions: Optional[Sequence[int]] = None,
    threads: Optional[int] = None,
) -> SaliencyMap:
    """Certify each word in ``positions`` (every word by default) as a singleton set.

    Small radii mark words whose perturbation changes the prediction soonest; the
    ranking is ascending by radius, ties by position.
    """
    positions = list(range(model.length)) if positions is None else sorted(int(p) for p in positions)
    workers = max(1, min(threads or config.threads, len(positions) or 1))

    def run(position: int) -> CertificationResult:
        return certify_lower_bound(model, x, [position], norm, tol)

    if workers == 1:
        certified = [run(p) for p in positions]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            certified = list(pool.map(run, positions))

    results = dict(zip(positions, certified))
    ranking = sorted(positions, key=lambda p: (results[p].eps_lower, p))
    logger.debug(f"Saliency ranking {ranking}")
    return SaliencyMap(results=results, ranking=ranking)
