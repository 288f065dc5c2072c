"""Input texts: tokenization, vocabulary mapping, padding and embedding."""

import logging
from dataclasses import dataclass
from pathlib import Path
from typing import List, Mapping, Tuple, Union

import numpy as np

from .embedding import PAD_TOKEN, UNKNOWN_TOKEN, EmbeddingStore
from .exceptions import InputFileError, ParseError, VocabularyError


logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class TextInstance:
    """One text fixed to the model length ``m``.

    ``tokens`` has ``m`` entries with :data:`PAD_TOKEN` at padding positions, whose id
    is ``-1`` and whose embedding is the zero vector.
    """
    text_id: int
    tokens: Tuple[str, ...]
    ids: Tuple[int, ...]
    embedded: np.ndarray

    @property
    def mask(self) -> np.ndarray:
        """True at real (non-padding) positions."""
        return np.array([i >= 0 for i in self.ids], dtype=bool)

    @property
    def positions(self) -> List[int]:
        """Word positions that may be certified or attacked."""
        return [p for p, i in enumerate(self.ids) if i >= 0]

    @property
    def text(self) -> str:
        return " ".join(t for t in self.tokens if t != PAD_TOKEN)

    def substituted(self, replacements: Mapping[int, np.ndarray]) -> np.ndarray:
        """Embedded copy with the rows at the given positions replaced."""
        x = self.embedded.copy()
        for position, vector in replacements.items():
            x[position] = vector
        return x


def embed_tokens(words: List[str], store: EmbeddingStore, length: int, text_id: int = 0) -> TextInstance:
    """Map lowercased words to the vocabulary and pad or truncate them to ``length``."""
    if len(words) > length:
        logger.warning(f"Text {text_id} has {len(words)} words, truncated to {length}")
        words = words[:length]
    tokens: List[str] = []
    ids: List[int] = []
    for word in words:
        token = word.lower()
        if token not in store:
            if UNKNOWN_TOKEN not in store:
                raise VocabularyError(
                    f"Text {text_id}: token {token!r} is out of vocabulary and the store has no {UNKNOWN_TOKEN}"
                )
            token = UNKNOWN_TOKEN
        tokens.append(token)
        ids.append(store.lookup(token))
    embedded = np.zeros((length, store.dim))
    if ids:
        embedded[: len(ids)] = store.vectors[ids]
    padding = length - len(tokens)
    embedded.setflags(write=False)
    return TextInstance(
        text_id=text_id,
        tokens=tuple(tokens) + (PAD_TOKEN,) * padding,
        ids=tuple(ids) + (-1,) * padding,
        embedded=embedded,
    )


def parse_texts(path: Union[str, Path], store: EmbeddingStore, length: int) -> List[TextInstance]:
    """Read one whitespace-tokenized text per line; blank lines are skipped."""
    path = Path(path)
    try:
        raw = path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise InputFileError(f"Text file not found: {path}", path=str(path)) from None
    except UnicodeDecodeError as e:
        raise ParseError.from_decode_error(path, e) from None
    except OSError as e:
        raise InputFileError(f"Cannot read text file {path}: {e}", path=str(path)) from None

    instances: List[TextInstance] = []
    for line in raw.splitlines():
        words = line.split()
        if not words:
            continue
        instances.append(embed_tokens(words, store, length, text_id=len(instances)))
    if not instances:
        raise ParseError("no texts found", path=str(path))
    logger.info(f"Parsed {len(instances)} texts from {path}")
    return instances
