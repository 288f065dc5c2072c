import asyncio
import logging
from typing import Any, Dict, List, Optional

from ..certify.saliency import saliency
from ..config import config
from ..core import mcp, register_command
from ..models import Norm, RunConfig, SaliencyRecord, WordSaliency
from ..reports import build_document
from ..texts import TextInstance
from .common import Inputs, emit, inputs_from_config, load_inputs, parallel_map, single_text


logger = logging.getLogger(__name__)


def saliency_record(inputs: Inputs, text: TextInstance, norm: Norm, tol: float, threads: Optional[int] = None) -> SaliencyRecord:
    result = saliency(inputs.model, text.embedded, norm, tol, positions=text.positions, threads=threads)
    words = [
        WordSaliency(index=p, token=text.tokens[p], eps_lower=r.eps_lower, normalized=r.normalized)
        for p, r in sorted(result.results.items())
    ]
    predicted = next(iter(result.results.values())).predicted_class
    if result.ranking:
        logger.info(f"Text {text.text_id}: most salient word {text.tokens[result.most_salient]!r}")
    return SaliencyRecord(
        text_id=text.text_id, norm=norm, predicted_class=predicted, words=words, ranking=result.ranking,
    )


def saliency_texts(inputs: Inputs, norm: Norm, tol: float = config.tol, texts: Optional[List[TextInstance]] = None) -> List[SaliencyRecord]:
    texts = inputs.texts if texts is None else texts
    # texts run in parallel, so each saliency map stays on one worker
    return parallel_map(lambda text: saliency_record(inputs, text, norm, tol, threads=1), texts)


def run_saliency(run_config: RunConfig) -> Dict[str, Any]:
    inputs = inputs_from_config(run_config)
    return build_document("saliency", saliency_texts(inputs, run_config.norm, run_config.tol))


@register_command("saliency")
def saliency_command(run_config: RunConfig) -> int:
    return emit(run_saliency(run_config), run_config)


@mcp.tool()
async def saliency_text(
    embedding: str,
    model: str,
    text: str,
    norm: str = "l2",
    tol: float = config.tol,
) -> Dict[str, Any]:
    """Certified radius of every word of one text and the saliency ranking (most salient first)."""
    def work() -> Dict[str, Any]:
        inputs = load_inputs(embedding, model)
        instance = single_text(inputs, text)
        return build_document("saliency", [saliency_record(inputs, instance, Norm(norm), tol)])

    return await asyncio.to_thread(work)
