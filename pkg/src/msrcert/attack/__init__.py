"""Upper bounds of the maximum safe radius from real word substitutions."""

from .lexicon import PosLexicon, filter_substitution, load_lexicon
from .pickup import pickup_score, pickup_weights
from .search import (
    AttackContext,
    AttackResult,
    SubstitutionRecord,
    attack_context,
    attack_many,
    exhaustive_search,
    mcts_search,
    replay,
    simulate,
    text_seed,
)
from .tree import SearchTree, TreeVertex, backpropagate, expand, select, uct_score

__all__ = [
    "PosLexicon",
    "filter_substitution",
    "load_lexicon",
    "pickup_score",
    "pickup_weights",
    "AttackContext",
    "AttackResult",
    "SubstitutionRecord",
    "attack_context",
    "attack_many",
    "exhaustive_search",
    "mcts_search",
    "replay",
    "simulate",
    "text_seed",
    "SearchTree",
    "TreeVertex",
    "backpropagate",
    "expand",
    "select",
    "uct_score",
]
