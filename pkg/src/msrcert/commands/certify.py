import asyncio
import logging
from typing import Any, Dict, List, Optional, Tuple

from ..certify.radius import certify_lower_bound
from ..config import config
from ..core import mcp, register_command
from ..models import CertificationRecord, Norm, RunConfig
from ..reports import build_document
from ..texts import TextInstance
from .common import Inputs, emit, index_sets, inputs_from_config, load_inputs, parallel_map, single_text


logger = logging.getLogger(__name__)


def certify_texts(
    inputs: Inputs,
    norm: Norm,
    indices: Optional[List[int]] = None,
    tol: float = config.tol,
    texts: Optional[List[TextInstance]] = None,
) -> List[CertificationRecord]:
    """One record per (text, index set), in text order."""
    texts = inputs.texts if texts is None else texts
    jobs: List[Tuple[TextInstance, Tuple[int, ...]]] = [
        (text, indices_) for text in texts for indices_ in index_sets(text, indices, inputs.model.length)
    ]

    def run(job: Tuple[TextInstance, Tuple[int, ...]]) -> CertificationRecord:
        text, indices_ = job
        result = certify_lower_bound(inputs.model, text.embedded, indices_, norm, tol)
        logger.info(
            f"Text {text.text_id} indices {list(indices_)}: eps_lower {result.eps_lower:.6g} "
            f"(normalized {result.normalized:.4f}, {result.bisection_steps} steps)"
        )
        return result.to_record(text.text_id)

    return parallel_map(run, jobs)


def run_certify(run_config: RunConfig) -> Dict[str, Any]:
    inputs = inputs_from_config(run_config)
    records = certify_texts(inputs, run_config.norm, run_config.indices, run_config.tol)
    return build_document("certify", records)


@register_command("certify")
def certify_command(run_config: RunConfig) -> int:
    return emit(run_certify(run_config), run_config)


@mcp.tool()
async def certify_text(
    embedding: str,
    model: str,
    text: str,
    indices: Optional[List[int]] = None,
    norm: str = "l2",
    tol: float = config.tol,
) -> Dict[str, Any]:
    """Certified lower bound of the maximum safe radius of one text.

    Perturbs the words at the 0-based ``indices`` together; without indices every word
    is certified on its own. Returns one record per index set.
    """
    def work() -> Dict[str, Any]:
        inputs = load_inputs(embedding, model)
        instance = single_text(inputs, text)
        records = certify_texts(inputs, Norm(norm), indices, tol, texts=[instance])
        return build_document("certify", records)

    return await asyncio.to_thread(work)
