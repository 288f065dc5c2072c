"""Input loading and report output shared by the command modules."""

import logging
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Any, Callable, Dict, List, Optional, Sequence, Tuple, TypeVar, Union

from ..attack.lexicon import PosLexicon, load_lexicon
from ..config import config
from ..embedding import UNKNOWN_TOKEN, EmbeddingStore, load_embedding, normalize
from ..exceptions import ConfigError
from ..models import RunConfig
from ..network.model import NetworkModel, load_model
from ..reports import write_report
from ..texts import TextInstance, embed_tokens, parse_texts


logger = logging.getLogger(__name__)

T = TypeVar("T")
R = TypeVar("R")


@dataclass(frozen=True)
class Inputs:
    """Model plus the normalized embedding it reads, with optional texts and lexicon."""
    model: NetworkModel
    store: EmbeddingStore
    texts: List[TextInstance]
    lexicon: Optional[PosLexicon] = None


def load_store(embedding: Union[str, Path], model: NetworkModel) -> EmbeddingStore:
    """Load and normalize an embedding of the model's dimension; adds ``<unk>`` when missing."""
    store = normalize(load_embedding(embedding, model.dim))
    if UNKNOWN_TOKEN not in store:
        logger.warning(f"Embedding has no {UNKNOWN_TOKEN} token; adding it at the origin")
        store = store.with_token(UNKNOWN_TOKEN)
    return store


def load_inputs(
    embedding: Union[str, Path],
    model: Union[str, Path],
    texts: Optional[Union[str, Path]] = None,
    lexicon: Optional[Union[str, Path]] = None,
) -> Inputs:
    network = load_model(model)
    logger.info(f"Loaded model {network.summary()}")
    store = load_store(embedding, network)
    instances = parse_texts(texts, store, network.length) if texts is not None else []
    return Inputs(
        model=network,
        store=store,
        texts=instances,
        lexicon=load_lexicon(lexicon) if lexicon is not None else None,
    )


def inputs_from_config(run_config: RunConfig) -> Inputs:
    return load_inputs(run_config.embedding, run_config.model, run_config.texts, run_config.lexicon)


def single_text(inputs: Inputs, text: str) -> TextInstance:
    """Embed one whitespace-tokenized text against the loaded store."""
    words = text.split()
    if not words:
        raise ConfigError("text must contain at least one word")
    return embed_tokens(words, inputs.store, inputs.model.length)


def index_sets(text: TextInstance, indices: Optional[Sequence[int]], length: int) -> List[Tuple[int, ...]]:
    """Index sets certified for ``text``.

    Explicit ``indices`` give one set; without them every real word is its own set.
    A set touching a padding position is skipped with a warning.
    """
    if indices is None:
        return [(p,) for p in text.positions]
    out_of_range = [i for i in indices if i >= length]
    if out_of_range:
        raise ConfigError(f"indices {out_of_range} out of range for model length {length}")
    padded = [i for i in indices if i not in text.positions]
    if padded:
        logger.warning(f"Text {text.text_id}: indices {padded} fall on padding, skipped")
        return []
    return [tuple(sorted(indices))]


def parallel_map(fn: Callable[[T], R], items: Sequence[T], threads: Optional[int] = None) -> List[R]:
    """Map ``fn`` over ``items`` on up to ``MSRCERT_THREADS`` workers; results keep input order."""
    workers = max(1, min(threads or config.threads, len(items) or 1))
    if workers == 1:
        return [fn(item) for item in items]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(fn, items))


def emit(document: Dict[str, Any], run_config: RunConfig) -> int:
    """Write the report to ``--out`` or stdout."""
    text = write_report(document, run_config.output, run_config.format)
    if run_config.output is None:
        sys.stdout.write(text)
        sys.stdout.flush()
    return 0
