import asyncio
import json
import logging
import sys
from typing import Any, Dict

from pydantic import ValidationError

from ..core import mcp, register_command
from ..exceptions import ConfigError
from ..models import FixtureConfig, RunConfig
from ..network.fixtures import train_fixture, write_corpus


logger = logging.getLogger(__name__)


def run_gen_fixtures(run_config: RunConfig) -> Dict[str, Any]:
    """Train a fixture model and write its corpus; returns a manifest of the written files."""
    bundle = train_fixture(run_config.fixture, seed=run_config.seed)
    paths = write_corpus(bundle, run_config.output)
    return {
        "architecture": bundle.config.architecture,
        "dim": bundle.config.dim,
        "length": bundle.config.length,
        "seed": bundle.seed,
        "accuracy": bundle.accuracy,
        "files": {name: str(path) for name, path in sorted(paths.items())},
    }


@register_command("gen-fixtures")
def gen_fixtures_command(run_config: RunConfig) -> int:
    manifest = run_gen_fixtures(run_config)
    sys.stdout.write(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return 0


@mcp.tool()
async def generate_fixtures(
    output_dir: str,
    dim: int = 5,
    length: int = 5,
    architecture: str = "dense",
    polarity_words: int = 10,
    num_texts: int = 200,
    iterations: int = 400,
    seed: int = 0,
) -> Dict[str, Any]:
    """Train a small classifier on the synthetic polarity task and write its corpus.

    Writes the embedding, weight manifest, texts, labels and POS lexicon into ``output_dir``,
    ready to be passed to the certify, attack and saliency tools.
    """
    try:
        run_config = RunConfig(
            command="gen-fixtures",
            output=output_dir,
            seed=seed,
            fixture=FixtureConfig(
                dim=dim, length=length, architecture=architecture,
                polarity_words=polarity_words, num_texts=num_texts, iterations=iterations,
            ),
        )
    except ValidationError as e:
        raise ConfigError(f"Invalid fixture configuration: {e}") from None
    return await asyncio.to_thread(run_gen_fixtures, run_config)
