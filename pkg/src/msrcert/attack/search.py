"""Monte Carlo tree search for class-changing word substitutions.

Each tree vertex names a set of positions; simulating it draws replacement words for
all of those positions from their filtered neighborhoods and evaluates the model on the
batch of perturbed texts. The smallest distance of a substitution that changes the
prediction is an upper bound of the maximum safe radius.
"""

import itertools
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple, Union

import numpy as np

from ..config import config
from ..embedding import PAD_TOKEN, UNKNOWN_TOKEN, EmbeddingStore, box_diameter, nearest_neighbors
from ..exceptions import AttackError
from ..models import AttackRecord, AttackSettings, Norm, SubstitutionEntry, SubstitutionRecordModel
from ..network.model import NetworkModel, forward, predict_logits, softmax
from ..texts import TextInstance
from .lexicon import PosLexicon, filter_substitution
from .pickup import pickup_weights
from .tree import SearchTree, TreeVertex, backpropagate, expand, select


logger = logging.getLogger(__name__)

SeedLike = Union[int, np.random.SeedSequence, np.random.Generator]


@dataclass(frozen=True)
class SubstitutionRecord:
    """A perturbed text the model classifies differently from the original."""
    replaced: Tuple[Tuple[int, str, str], ...]
    distance: float
    new_class: int
    confidence_drop: float

    @property
    def indices(self) -> Tuple[int, ...]:
        return tuple(i for i, _, _ in self.replaced)

    def to_model(self) -> SubstitutionRecordModel:
        return SubstitutionRecordModel(
            replaced=[SubstitutionEntry(index=i, original=o, replacement=r) for i, o, r in self.replaced],
            distance=self.distance,
            new_class=self.new_class,
            confidence_drop=self.confidence_drop,
        )


@dataclass(frozen=True)
class CandidateSet:
    """Admissible replacements of one position with their sampling weights."""
    position: int
    original: str
    tokens: Tuple[str, ...]
    vectors: np.ndarray
    weights: np.ndarray

    def __len__(self) -> int:
        return len(self.tokens)


@dataclass
class AttackResult:
    successes: List[SubstitutionRecord]
    upper_bound: float
    normalized_upper_bound: float
    explored_fraction: float
    per_text_hit: bool
    per_word_hit_rate: float
    predicted_class: int
    norm: Norm
    iterations: int = 0

    @property
    def best(self) -> Optional[SubstitutionRecord]:
        return self.successes[0] if self.successes else None

    def to_record(self, text_id: int) -> AttackRecord:
        return AttackRecord(
            text_id=text_id,
            predicted_class=self.predicted_class,
            norm=self.norm,
            upper_bound=self.upper_bound,
            normalized_upper_bound=self.normalized_upper_bound,
            explored_fraction=self.explored_fraction,
            per_text_hit=self.per_text_hit,
            per_word_hit_rate=self.per_word_hit_rate,
            substitutions=[s.to_model() for s in self.successes],
        )


@dataclass
class AttackContext:
    """What every simulation of one text shares."""
    text: TextInstance
    model: NetworkModel
    settings: AttackSettings
    candidates: Dict[int, CandidateSet]
    predicted_class: int
    base_confidence: float
    found: Dict[Tuple[Tuple[int, str, str], ...], SubstitutionRecord] = field(default_factory=dict)


def candidate_sets(
    text: TextInstance,
    store: EmbeddingStore,
    lexicon: Optional[PosLexicon],
    settings: AttackSettings,
) -> Dict[int, CandidateSet]:
    """Filtered L2 neighborhoods of every attackable position."""
    sets: Dict[int, CandidateSet] = {}
    for position in text.positions:
        original = text.tokens[position]
        neighborhood = nearest_neighbors(store, original, settings.neighbor_limit, Norm.L2)
        keep = [
            token for token in neighborhood.tokens
            if token not in (UNKNOWN_TOKEN, PAD_TOKEN) and filter_substitution(original, token, lexicon)
        ]
        filtered = neighborhood.restrict(keep)
        if len(filtered) == 0:
            logger.debug(f"Text {text.text_id}: no admissible replacement for {original!r} at {position}")
            sets[position] = CandidateSet(position, original, (), np.empty((0, store.dim)), np.empty(0))
            continue
        if len(filtered) == 1 or settings.sampling == "uniform":
            weights = np.full(len(filtered), 1.0 / len(filtered))
        else:
            weights = pickup_weights(filtered.distances)
        sets[position] = CandidateSet(
            position=position,
            original=original,
            tokens=tuple(filtered.tokens),
            vectors=np.stack([store.vector(t) for t in filtered.tokens]),
            weights=weights,
        )
    return sets


def _distance(deltas: np.ndarray, norm: Norm) -> np.ndarray:
    """Norm of the concatenated per-word changes, ``deltas`` of shape ``(B, k, d)``."""
    flat = deltas.reshape(deltas.shape[0], -1)
    if norm is Norm.L2:
        return np.linalg.norm(flat, axis=1)
    return np.abs(flat).max(axis=1)


def _evaluate(ctx: AttackContext, positions: Sequence[int], choices: np.ndarray) -> Tuple[List[SubstitutionRecord], float]:
    """Run the model on every row of ``choices`` (candidate indices per position)."""
    sets = [ctx.candidates[p] for p in positions]
    batch = np.repeat(ctx.text.embedded[None], len(choices), axis=0)
    for column, cs in enumerate(sets):
        batch[:, cs.position] = cs.vectors[choices[:, column]]
    logits = predict_logits(ctx.model, batch)
    probs = softmax(logits)
    classes = np.argmax(logits, axis=1)
    drops = ctx.base_confidence - probs[:, ctx.predicted_class]
    deltas = batch[:, list(positions)] - ctx.text.embedded[list(positions)][None]
    distances = _distance(deltas, ctx.settings.norm)

    records: Dict[Tuple[Tuple[int, str, str], ...], SubstitutionRecord] = {}
    for row in np.flatnonzero(classes != ctx.predicted_class):
        if distances[row] <= 0:
            continue
        replaced = tuple(
            (cs.position, cs.original, cs.tokens[choices[row, column]]) for column, cs in enumerate(sets)
        )
        if replaced in records:
            continue
        record = ctx.found.get(replaced)
        if record is None:
            record = SubstitutionRecord(
                replaced=replaced,
                distance=float(distances[row]),
                new_class=int(classes[row]),
                confidence_drop=float(drops[row]),
            )
            ctx.found[replaced] = record
        records[replaced] = record
    return list(records.values()), float(drops.max())


def _combinations(sizes: Sequence[int]) -> np.ndarray:
    return np.array(list(itertools.product(*[range(k) for k in sizes])), dtype=np.int64).reshape(-1, len(sizes))


def simulate(
    vertex: Union[TreeVertex, Sequence[int]],
    ctx: AttackContext,
    rng: np.random.Generator,
) -> Tuple[List[SubstitutionRecord], float]:
    """Draw ``sims`` substitutions of the vertex's positions and evaluate them.

    Positions without an admissible replacement keep their word. When the number of
    distinct substitutions is at most ``sims`` every one is evaluated once instead.
    Returns the class-changing records and the largest drop in the original class's
    confidence (0 when nothing could be substituted).
    """
    indices = vertex.index_set if isinstance(vertex, TreeVertex) else tuple(sorted(vertex))
    positions = [p for p in indices if len(ctx.candidates[p]) > 0]
    if not positions:
        return [], 0.0
    sizes = [len(ctx.candidates[p]) for p in positions]
    sims = ctx.settings.sims
    if math.prod(sizes) <= sims:
        choices = _combinations(sizes)
    else:
        choices = np.stack(
            [rng.choice(len(ctx.candidates[p]), size=sims, p=ctx.candidates[p].weights) for p in positions],
            axis=1,
        )
    return _evaluate(ctx, positions, choices)


def attack_context(
    text: TextInstance,
    model: NetworkModel,
    store: EmbeddingStore,
    lexicon: Optional[PosLexicon],
    settings: AttackSettings,
) -> AttackContext:
    if settings.neighbor_limit < 2:
        raise AttackError(f"neighbor_limit must be at least 2, got {settings.neighbor_limit}")
    prediction = forward(model, text.embedded)
    return AttackContext(
        text=text,
        model=model,
        settings=settings,
        candidates=candidate_sets(text, store, lexicon, settings),
        predicted_class=prediction.class_index,
        base_confidence=prediction.confidence,
    )


def _result(ctx: AttackContext, explored: float, iterations: int) -> AttackResult:
    successes = sorted(ctx.found.values(), key=lambda r: (r.distance, r.replaced))
    dim = ctx.model.dim
    norm = ctx.settings.norm
    if successes:
        best = successes[0]
        upper = best.distance
        normalized = upper / box_diameter(norm, len(best.replaced), dim)
    else:
        upper = box_diameter(norm, 1, dim)
        normalized = 1.0
    positions = ctx.text.positions
    single_hits = {r.replaced[0][0] for r in successes if len(r.replaced) == 1}
    per_word = len(single_hits) / len(positions) if positions else 0.0
    return AttackResult(
        successes=successes,
        upper_bound=upper,
        normalized_upper_bound=normalized,
        explored_fraction=min(1.0, explored),
        per_text_hit=bool(successes),
        per_word_hit_rate=per_word,
        predicted_class=ctx.predicted_class,
        norm=norm,
        iterations=iterations,
    )


def mcts_search(
    text: TextInstance,
    model: NetworkModel,
    store: EmbeddingStore,
    lexicon: Optional[PosLexicon],
    settings: AttackSettings,
    seed: Optional[SeedLike] = None,
) -> AttackResult:
    """Search substitutions of up to ``settings.depth`` words.

    Runs select, expand, simulate and backpropagate until the visited share of the fully
    expanded tree reaches ``budget_fraction`` or ``max_iterations`` is hit. Every child
    is simulated once when its parent is expanded; leaves that cannot be expanded are
    simulated again. Deterministic in ``seed`` (``settings.seed`` by default).
    """
    ctx = attack_context(text, model, store, lexicon, settings)
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(settings.seed if seed is None else seed)
    tree = SearchTree(positions=tuple(text.positions), alpha=settings.alpha, max_depth=settings.depth)
    total = tree.total_vertices()
    visited = 0
    iteration = 0

    while iteration < settings.max_iterations and total > 0 and visited / total < settings.budget_fraction:
        iteration += 1
        leaf = select(tree)
        if not leaf.expanded:
            children = expand(leaf, text, settings.depth)
            if children:
                for child in children:
                    _, q = simulate(child, ctx, rng)
                    backpropagate(child, q)
                    visited += 1
                continue
        if leaf.is_root:
            break
        _, q = simulate(leaf, ctx, rng)
        backpropagate(leaf, q)

    logger.debug(
        f"Text {text.text_id}: {iteration} iterations, {visited}/{total} vertices, {len(ctx.found)} successes"
    )
    return _result(ctx, visited / total if total else 1.0, iteration)


def exhaustive_search(
    text: TextInstance,
    model: NetworkModel,
    store: EmbeddingStore,
    lexicon: Optional[PosLexicon],
    settings: AttackSettings,
) -> AttackResult:
    """Evaluate every substitution of 1 to ``settings.depth`` words over the filtered neighborhoods."""
    ctx = attack_context(text, model, store, lexicon, settings)
    attackable = [p for p in text.positions if len(ctx.candidates[p]) > 0]
    for size in range(1, settings.depth + 1):
        for positions in itertools.combinations(attackable, size):
            sizes = [len(ctx.candidates[p]) for p in positions]
            _evaluate(ctx, positions, _combinations(sizes))
    return _result(ctx, 1.0, 0)


def replay(record: SubstitutionRecord, text: TextInstance, model: NetworkModel, store: EmbeddingStore) -> int:
    """Class predicted for ``text`` with the record's substitutions applied."""
    x = text.substituted({i: store.vector(r) for i, _, r in record.replaced})
    return forward(model, x).class_index


def text_seed(seed: int, text_id: int) -> np.random.SeedSequence:
    """Independent stream per text derived from the run seed."""
    return np.random.SeedSequence([seed, text_id])


def attack_many(
    texts: Sequence[TextInstance],
    model: NetworkModel,
    store: EmbeddingStore,
    lexicon: Optional[PosLexicon],
    settings: AttackSettings,
    threads: Optional[int] = None,
) -> List[AttackResult]:
    """Attack every text with its own seed; results follow input order."""
    workers = max(1, min(threads or config.threads, len(texts) or 1))

    def run(text: TextInstance) -> AttackResult:
        result = mcts_search(text, model, store, lexicon, settings, seed=text_seed(settings.seed, text.text_id))
        logger.info(
            f"Text {text.text_id}: upper bound {result.upper_bound:.4f} "
            f"({len(result.successes)} substitutions, explored {result.explored_fraction:.2f})"
        )
        return result

    if workers == 1:
        return [run(t) for t in texts]
    with ThreadPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(run, texts))
