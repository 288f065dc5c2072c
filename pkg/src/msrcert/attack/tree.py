"""Search tree over sets of word positions.

The root perturbs nothing; a vertex at depth ``k`` perturbs the ``k`` positions on its
path, each at most once.
"""

import math
from dataclasses import dataclass, field
from typing import Iterator, List, Optional, Tuple

from ..config import config
from ..texts import TextInstance


@dataclass(eq=False)
class TreeVertex:
    word_index: Optional[int]
    parent: Optional["TreeVertex"] = None
    children: List["TreeVertex"] = field(default_factory=list)
    visits: int = 0
    value: float = 0.0
    depth: int = 0
    expanded: bool = False

    @property
    def is_root(self) -> bool:
        return self.parent is None

    @property
    def index_set(self) -> Tuple[int, ...]:
        """Positions perturbed at this vertex, ascending."""
        indices = []
        vertex: Optional[TreeVertex] = self
        while vertex is not None and vertex.word_index is not None:
            indices.append(vertex.word_index)
            vertex = vertex.parent
        return tuple(sorted(indices))

    def path(self) -> List[int]:
        """Positions from the root down to this vertex."""
        indices: List[int] = []
        vertex: Optional[TreeVertex] = self
        while vertex is not None and vertex.word_index is not None:
            indices.append(vertex.word_index)
            vertex = vertex.parent
        return indices[::-1]


@dataclass
class SearchTree:
    positions: Tuple[int, ...]
    alpha: float = config.alpha
    max_depth: int = config.depth
    root: TreeVertex = field(default_factory=lambda: TreeVertex(word_index=None))

    def vertices(self) -> Iterator[TreeVertex]:
        """All vertices, root first, depth-first in child order."""
        stack = [self.root]
        while stack:
            vertex = stack.pop()
            yield vertex
            stack.extend(reversed(vertex.children))

    def visited_count(self) -> int:
        return sum(1 for v in self.vertices() if not v.is_root and v.visits > 0)

    def total_vertices(self) -> int:
        """Vertices below the root of the fully expanded tree: sum of p!/(p-j)! for j <= depth."""
        p = len(self.positions)
        total, level = 0, 1
        for j in range(min(self.max_depth, p)):
            level *= p - j
            total += level
        return total


def uct_score(vertex: TreeVertex, alpha: float) -> float:
    """``Q/N + alpha * sqrt(2 ln N_parent / N)``; unvisited vertices score infinity."""
    if vertex.visits == 0:
        return math.inf
    parent_visits = vertex.parent.visits if vertex.parent is not None else vertex.visits
    exploration = math.sqrt(2.0 * math.log(max(parent_visits, 1)) / vertex.visits)
    return vertex.value / vertex.visits + alpha * exploration


def select(tree: SearchTree) -> TreeVertex:
    """Descend from the root along the best UCT child until a leaf; ties go to the lowest position."""
    vertex = tree.root
    while vertex.children:
        vertex = max(vertex.children, key=lambda c: (uct_score(c, tree.alpha), -c.word_index))
    return vertex


def expand(vertex: TreeVertex, text: TextInstance, max_depth: Optional[int] = None) -> List[TreeVertex]:
    """Attach one child per non-padding position of ``text`` not yet on the vertex's path."""
    vertex.expanded = True
    if max_depth is not None and vertex.depth >= max_depth:
        return []
    taken = set(vertex.index_set)
    vertex.children = [
        TreeVertex(word_index=p, parent=vertex, depth=vertex.depth + 1)
        for p in text.positions if p not in taken
    ]
    return vertex.children


def backpropagate(vertex: TreeVertex, q_update: float) -> None:
    """Count a visit and max-merge ``q_update`` from ``vertex`` up to the root."""
    current: Optional[TreeVertex] = vertex
    while current is not None:
        current.visits += 1
        current.value = max(current.value, q_update)
        current = current.parent
