"""Word embeddings: loading, min-max normalization, diameters and neighbor queries."""

import logging
import math
from dataclasses import dataclass, field, replace
from pathlib import Path
from typing import Dict, List, Optional, Tuple, Union

import numpy as np

from .exceptions import InputFileError, ParseError, VocabularyError
from .models import Norm


logger = logging.getLogger(__name__)

UNKNOWN_TOKEN = "<unk>"
PAD_TOKEN = "<pad>"


@dataclass(frozen=True)
class EmbeddingStore:
    """Vocabulary plus a |W| x d vector matrix.

    ``norm_min``/``norm_max`` are set by :func:`normalize` and record the per-dimension
    range the vectors were scaled with; ``degenerate`` flags dimensions with an empty range.
    """
    tokens: Tuple[str, ...]
    vectors: np.ndarray
    dim: int
    norm_min: Optional[np.ndarray] = None
    norm_max: Optional[np.ndarray] = None
    degenerate: Optional[np.ndarray] = None
    index: Dict[str, int] = field(default=None, repr=False, compare=False)

    def __post_init__(self):
        vectors = np.array(self.vectors, dtype=np.float64).reshape(len(self.tokens), self.dim)
        vectors.setflags(write=False)
        object.__setattr__(self, "vectors", vectors)
        if self.index is None:
            index: Dict[str, int] = {}
            for i, token in enumerate(self.tokens):
                if token in index:
                    raise VocabularyError(f"Duplicate token {token!r} in embedding vocabulary")
                index[token] = i
            object.__setattr__(self, "index", index)

    def __len__(self) -> int:
        return len(self.tokens)

    def __contains__(self, token: str) -> bool:
        return token in self.index

    @property
    def is_normalized(self) -> bool:
        return self.norm_min is not None

    @property
    def diameter_l2(self) -> float:
        """L2 diameter of the bounding box of the vocabulary."""
        if len(self.tokens) == 0:
            return 0.0
        return float(np.linalg.norm(self.vectors.max(axis=0) - self.vectors.min(axis=0)))

    @property
    def diameter_linf(self) -> float:
        """L-infinity diameter of the bounding box of the vocabulary."""
        if len(self.tokens) == 0:
            return 0.0
        return float(np.max(self.vectors.max(axis=0) - self.vectors.min(axis=0)))

    def lookup(self, token: str) -> int:
        try:
            return self.index[token]
        except KeyError:
            raise VocabularyError(f"Token {token!r} is not in the embedding vocabulary") from None

    def vector(self, token: str) -> np.ndarray:
        return self.vectors[self.lookup(token)]

    def with_token(self, token: str, vector: Optional[np.ndarray] = None) -> "EmbeddingStore":
        """Return a copy of the store with one extra token (zero vector by default)."""
        if token in self.index:
            return self
        row = np.zeros(self.dim) if vector is None else np.asarray(vector, dtype=np.float64)
        if row.shape != (self.dim,):
            raise VocabularyError(f"Vector for {token!r} must have {self.dim} entries")
        return replace(
            self,
            tokens=self.tokens + (token,),
            vectors=np.vstack([self.vectors, row[None, :]]),
            index=None,
        )


@dataclass(frozen=True)
class NeighborSet:
    """The ``limit`` closest tokens to ``center_token``, ascending by distance."""
    center_token: str
    neighbors: List[Tuple[str, float]]
    norm: Norm
    limit: int

    def __len__(self) -> int:
        return len(self.neighbors)

    @property
    def tokens(self) -> List[str]:
        return [token for token, _ in self.neighbors]

    @property
    def distances(self) -> np.ndarray:
        return np.array([distance for _, distance in self.neighbors], dtype=np.float64)

    def distance_to(self, token: str) -> float:
        for candidate, distance in self.neighbors:
            if candidate == token:
                return distance
        raise VocabularyError(f"Token {token!r} is not a neighbor of {self.center_token!r}")

    def restrict(self, keep: List[str]) -> "NeighborSet":
        """Neighbors whose token is in ``keep``, order preserved."""
        allowed = set(keep)
        return replace(self, neighbors=[(t, d) for t, d in self.neighbors if t in allowed])


def load_embedding(path: Union[str, Path], dim: int) -> EmbeddingStore:
    """Parse a whitespace-separated ``token v1 ... vd`` file into an unnormalized store."""
    if dim <= 0:
        raise ParseError(f"Embedding dimension must be positive, got {dim}", path=str(path))
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except FileNotFoundError:
        raise InputFileError(f"Embedding file not found: {path}", path=str(path)) from None
    except UnicodeDecodeError as e:
        raise ParseError.from_decode_error(path, e) from None
    except OSError as e:
        raise InputFileError(f"Cannot read embedding file {path}: {e}", path=str(path)) from None

    tokens: List[str] = []
    rows: List[List[float]] = []
    seen: Dict[str, int] = {}
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        parts = stripped.split()
        if len(parts) != dim + 1:
            raise ParseError(
                f"expected a token and {dim} values, found {len(parts) - 1} values",
                path=str(path), line=lineno,
            )
        token = parts[0]
        if token in seen:
            raise VocabularyError(
                f"{path}:{lineno}: duplicate token {token!r} (first seen on line {seen[token]})"
            )
        try:
            values = [float(v) for v in parts[1:]]
        except ValueError:
            raise ParseError(f"non-numeric value for token {token!r}", path=str(path), line=lineno) from None
        if not all(math.isfinite(v) for v in values):
            raise ParseError(f"non-finite value for token {token!r}", path=str(path), line=lineno)
        seen[token] = lineno
        tokens.append(token)
        rows.append(values)

    vectors = np.array(rows, dtype=np.float64).reshape(len(rows), dim)
    logger.info(f"Loaded {len(tokens)} embedding vectors of dimension {dim} from {path}")
    return EmbeddingStore(tokens=tuple(tokens), vectors=vectors, dim=dim)


def normalize(store: EmbeddingStore) -> EmbeddingStore:
    """Min-max scale every dimension into [0, 1].

    Dimensions where every word has the same value map to 0 and are flagged degenerate.
    """
    if len(store) == 0:
        logger.warning("Normalizing an empty embedding store")
        zeros = np.zeros(store.dim)
        return replace(store, norm_min=zeros, norm_max=zeros, degenerate=np.ones(store.dim, dtype=bool))
    if len(store) < 2:
        logger.warning("Normalizing a single-word vocabulary: every dimension is degenerate")

    lo = store.vectors.min(axis=0)
    hi = store.vectors.max(axis=0)
    span = hi - lo
    degenerate = span <= 0.0
    if degenerate.any():
        logger.warning(f"{int(degenerate.sum())} degenerate embedding dimension(s) mapped to 0")
    safe_span = np.where(degenerate, 1.0, span)
    scaled = np.where(degenerate, 0.0, (store.vectors - lo) / safe_span)
    return replace(
        store,
        vectors=np.clip(scaled, 0.0, 1.0),
        norm_min=lo,
        norm_max=hi,
        degenerate=degenerate,
        index=store.index,
    )


def distances_from(store: EmbeddingStore, vector: np.ndarray, norm: Norm) -> np.ndarray:
    """Distance from ``vector`` to every row of the store."""
    diff = store.vectors - np.asarray(vector, dtype=np.float64)[None, :]
    if norm is Norm.L2:
        return np.sqrt(np.sum(diff * diff, axis=1))
    return np.max(np.abs(diff), axis=1)


def nearest_neighbors(store: EmbeddingStore, token: str, n: int, norm: Norm) -> NeighborSet:
    """The ``n`` closest distinct tokens, ties broken by vocabulary order."""
    if n <= 0:
        raise VocabularyError(f"Neighbor count must be positive, got {n}")
    center = store.lookup(token)
    distances = distances_from(store, store.vectors[center], Norm(norm))
    order = np.argsort(distances, kind="stable")
    neighbors: List[Tuple[str, float]] = []
    for i in order:
        if i == center:
            continue
        neighbors.append((store.tokens[i], float(distances[i])))
        if len(neighbors) == n:
            break
    return NeighborSet(center_token=token, neighbors=neighbors, norm=Norm(norm), limit=n)


def box_diameter(norm: Norm, index_count: int, dim: int) -> float:
    """Diameter of the unit box spanned by ``index_count`` words of dimension ``dim``."""
    if Norm(norm) is Norm.LINF:
        return 1.0
    return math.sqrt(index_count * dim)


def diameter(store: EmbeddingStore, norm: Norm, index_count: int) -> float:
    """Diameter of the normalized input sub-space over ``index_count`` words."""
    return box_diameter(norm, index_count, store.dim)
