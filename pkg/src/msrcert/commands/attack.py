import asyncio
from typing import Any, Dict, Optional

from pydantic import ValidationError

from ..attack.search import attack_many, mcts_search, text_seed
from ..config import config
from ..core import mcp, register_command
from ..exceptions import ConfigError
from ..models import AttackSettings, RunConfig
from ..reports import build_document
from .common import emit, inputs_from_config, load_inputs, single_text


def run_attack(run_config: RunConfig) -> Dict[str, Any]:
    inputs = inputs_from_config(run_config)
    results = attack_many(inputs.texts, inputs.model, inputs.store, inputs.lexicon, run_config.attack_settings())
    records = [result.to_record(text.text_id) for text, result in zip(inputs.texts, results)]
    return build_document("attack", records)


@register_command("attack")
def attack_command(run_config: RunConfig) -> int:
    return emit(run_attack(run_config), run_config)


@mcp.tool()
async def attack_text(
    embedding: str,
    model: str,
    text: str,
    lexicon: Optional[str] = None,
    norm: str = "l2",
    sims: int = config.sims,
    alpha: float = config.alpha,
    neighbors: int = config.neighbor_limit,
    budget: float = config.budget_fraction,
    depth: int = config.depth,
    sampling: str = "pickup",
    seed: int = config.seed,
) -> Dict[str, Any]:
    """Upper bound of the maximum safe radius of one text from real word substitutions.

    Runs a Monte Carlo tree search over sets of up to ``depth`` words, replacing each with
    one of its ``neighbors`` nearest embedding neighbors (optionally restricted to tokens
    with a compatible tag in ``lexicon``). Every class-changing substitution is listed.
    """
    try:
        settings = AttackSettings(
            norm=norm, sims=sims, alpha=alpha, neighbor_limit=neighbors,
            budget_fraction=budget, depth=depth, sampling=sampling, seed=seed,
        )
    except ValidationError as e:
        raise ConfigError(f"Invalid attack settings: {e}") from None

    def work() -> Dict[str, Any]:
        inputs = load_inputs(embedding, model, lexicon=lexicon)
        instance = single_text(inputs, text)
        result = mcts_search(
            instance, inputs.model, inputs.store, inputs.lexicon, settings,
            seed=text_seed(settings.seed, instance.text_id),
        )
        return build_document("attack", [result.to_record(instance.text_id)])

    return await asyncio.to_thread(work)
