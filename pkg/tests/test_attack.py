#!/usr/bin/env python3
"""
Attack tests: pickup sampling, POS filtering, the search tree and the
Monte Carlo tree search against exhaustive enumeration and certification.
"""

import logging
import math

import numpy as np
import pytest

from msrcert.attack.lexicon import PosLexicon, filter_substitution, load_lexicon
from msrcert.attack.pickup import pickup_score, pickup_weights
from msrcert.attack.search import (
    attack_context,
    attack_many,
    candidate_sets,
    exhaustive_search,
    mcts_search,
    replay,
    simulate,
    text_seed,
)
from msrcert.attack.tree import SearchTree, TreeVertex, backpropagate, expand, select, uct_score
from msrcert.certify.radius import certify_lower_bound
from msrcert.embedding import box_diameter, nearest_neighbors
from msrcert.exceptions import AttackError, ParseError
from msrcert.models import AttackSettings, FixtureConfig, Norm
from msrcert.network.fixtures import train_fixture
from msrcert.network.layers import DenseLayer
from msrcert.network.model import NetworkModel, forward
from msrcert.texts import embed_tokens

from .test_utils import make_store, random_mlp, random_store, write_lines

logger = logging.getLogger(__name__)

EXHAUSTIVE = AttackSettings(budget_fraction=1.0, depth=2, neighbor_limit=4, sims=1000)


def exhaustible_instance(seed: int):
    rng = np.random.default_rng(seed)
    store = random_store(rng, 5, 2)
    words = [store.tokens[i] for i in rng.integers(0, 5, size=3)]
    text = embed_tokens(words, store, 3)
    model = random_mlp(rng, 3, 2, hidden=(4,))
    return text, model, store


@pytest.fixture(scope="module")
def fixture_bundle():
    return train_fixture(FixtureConfig(num_texts=60), seed=1)


class TestPickup:
    """Distance-based sampling weights."""

    def test_two_neighbors(self):
        """Test pickup weights of a two-word neighborhood."""
        np.testing.assert_allclose(pickup_weights(np.array([1.0, 3.0])), [0.75, 0.25])

    def test_equal_distances_are_uniform(self):
        """Test that equidistant neighbors are sampled uniformly."""
        np.testing.assert_allclose(pickup_weights(np.full(7, 0.4)), np.full(7, 1 / 7))

    def test_zero_distances_are_uniform(self):
        """Test that an all-zero neighborhood falls back to uniform weights."""
        np.testing.assert_allclose(pickup_weights(np.zeros(3)), np.full(3, 1 / 3))

    def test_single_neighbor_rejected(self):
        """Test that a one-word neighborhood is an attack error."""
        with pytest.raises(AttackError):
            pickup_weights(np.array([0.5]))

    def test_random_neighborhoods(self):
        """Test that weights form a non-increasing distribution."""
        rng = np.random.default_rng(0)
        for _ in range(100):
            k = int(rng.integers(2, 51))
            distances = np.sort(rng.uniform(0.01, 3.0, size=k))
            weights = pickup_weights(distances)
            assert abs(weights.sum() - 1.0) <= 1e-9
            assert np.all(weights >= 0)
            assert np.all(np.diff(weights) <= 0)

    def test_score_within_neighborhood(self):
        """Test pickup scores inside and outside a neighborhood."""
        store = make_store(["a", "b", "c"], [[0.0, 0.0], [0.1, 0.0], [0.3, 0.0]], normalized=False)
        neighborhood = nearest_neighbors(store, "a", 2, Norm.L2)
        assert pickup_score("a", "b", neighborhood) == pytest.approx(0.75)
        with pytest.raises(AttackError):
            pickup_score("b", "c", neighborhood)


class TestLexicon:
    """POS compatibility of substitutions."""

    @pytest.fixture
    def lexicon(self):
        return PosLexicon(
            tags={"movie": "NOUN", "film": "NOUN", "good": "ADJ"},
            compatible_pairs=frozenset({("NOUN", "ADJ")}),
        )

    def test_same_tag(self, lexicon):
        """Test that words with the same tag may replace each other."""
        assert filter_substitution("movie", "film", lexicon)

    def test_declared_pair(self, lexicon):
        """Test a declared compatible tag pair."""
        assert filter_substitution("movie", "good", lexicon)

    def test_pairs_are_directed(self, lexicon):
        """Test that compatibility only holds in the declared direction."""
        assert not filter_substitution("good", "movie", lexicon)

    def test_untagged_candidate(self, lexicon):
        """Test that an untagged replacement is rejected."""
        assert not filter_substitution("movie", "popcorn", lexicon)

    def test_no_lexicon_admits_everything(self):
        """Test that no lexicon means no filtering."""
        assert filter_substitution("movie", "popcorn", None)

    def test_load(self, tmp_path):
        """Test loading tags and compatibility lines."""
        path = write_lines(tmp_path / "lex.tsv", ["#compat NOUN ADJ", "# comment", "movie\tNOUN", "good\tADJ"])
        lexicon = load_lexicon(path)
        assert len(lexicon) == 2
        assert lexicon.compatible("NOUN", "ADJ")

    def test_conflicting_tags(self, tmp_path):
        """Test that a token tagged twice fails on the second line."""
        path = write_lines(tmp_path / "lex.tsv", ["movie\tNOUN", "movie\tVERB"])
        with pytest.raises(ParseError) as excinfo:
            load_lexicon(path)
        assert excinfo.value.line == 2

    def test_malformed_line(self, tmp_path):
        """Test that a line without a tab is rejected."""
        path = write_lines(tmp_path / "lex.tsv", ["movie NOUN"])
        with pytest.raises(ParseError):
            load_lexicon(path)


class TestSearchTree:
    """Selection, expansion and backpropagation."""

    @pytest.fixture
    def text(self):
        store = make_store(["a", "b", "c"], np.eye(3))
        return embed_tokens(["a", "b", "c"], store, 3)

    def test_uct_score(self):
        """Test the UCT score of a visited leaf."""
        parent = TreeVertex(word_index=None, visits=2)
        leaf = TreeVertex(word_index=0, parent=parent, visits=1, value=0.5, depth=1)
        assert uct_score(leaf, 0.5) == pytest.approx(0.5 + 0.5 * math.sqrt(2 * math.log(2)))
        assert uct_score(leaf, 0.5) == pytest.approx(1.0887, abs=1e-4)

    def test_unvisited_first(self, text):
        """Test that selection prefers unvisited children."""
        tree = SearchTree(positions=(0, 1, 2))
        expand(tree.root, text)
        tree.root.visits = 3
        for child in tree.root.children[:2]:
            child.visits, child.value = 1, 0.9
        assert select(tree) is tree.root.children[2]

    def test_ties_go_to_lowest_position(self, text):
        """Test that equal scores select the lowest word index."""
        tree = SearchTree(positions=(0, 1, 2))
        expand(tree.root, text)
        tree.root.visits = 3
        for child in tree.root.children:
            child.visits, child.value = 1, 0.2
        assert select(tree).word_index == 0

    def test_expand(self, text):
        """Test children of the root and of deeper vertices."""
        root = TreeVertex(word_index=None)
        children = expand(root, text)
        assert [c.word_index for c in children] == [0, 1, 2]
        grandchildren = expand(children[1], text)
        assert [c.word_index for c in grandchildren] == [0, 2]
        assert [c.word_index for c in expand(grandchildren[1], text)] == [0]
        assert grandchildren[1].index_set == (1, 2)
        assert grandchildren[1].path() == [1, 2]

    def test_depth_cap(self, text):
        """Test that expansion stops at the maximum depth."""
        root = TreeVertex(word_index=None)
        child = expand(root, text, max_depth=1)[0]
        assert expand(child, text, max_depth=1) == []
        assert child.expanded

    def test_all_padding_text(self):
        """Test that a text of padding has nothing to expand."""
        store = make_store(["a", "b"], np.eye(2))
        assert expand(TreeVertex(word_index=None), embed_tokens([], store, 3)) == []

    def test_backpropagate_max_merges(self):
        """Test that backpropagation keeps the best value seen."""
        root = TreeVertex(word_index=None)
        parent = TreeVertex(word_index=0, parent=root, value=0.2, visits=1, depth=1)
        child = TreeVertex(word_index=1, parent=parent, depth=2)
        backpropagate(child, 0.4)
        assert parent.value == 0.4
        assert (root.visits, parent.visits, child.visits) == (1, 2, 1)
        backpropagate(child, 0.1)
        assert parent.value == 0.4

    def test_root_only(self):
        """Test backpropagation from the root itself."""
        root = TreeVertex(word_index=None)
        backpropagate(root, 0.3)
        assert (root.visits, root.value) == (1, 0.3)

    def test_total_vertices(self):
        """Test the vertex count of full trees."""
        assert SearchTree(positions=(0, 1, 2), max_depth=2).total_vertices() == 9
        assert SearchTree(positions=(0, 1, 2, 3, 4), max_depth=3).total_vertices() == 5 + 20 + 60


class TestSimulate:
    """Sampling and evaluation of substitutions."""

    def test_single_candidate_flip(self):
        """Test a one-word substitution that flips the class."""
        store = make_store(["good", "bad"], [[1.0], [0.0]])
        text = embed_tokens(["good"], store, 1)
        model = NetworkModel([DenseLayer(np.array([[1.0], [0.0]]), np.array([0.0, 0.5]))], (1, 1), 2)
        ctx = attack_context(text, model, store, None, AttackSettings(sims=50, neighbor_limit=2))
        records, q = simulate([0], ctx, np.random.default_rng(0))
        assert len(records) == 1
        assert records[0].replaced == ((0, "good", "bad"),)
        assert records[0].distance == pytest.approx(1.0)
        assert q > 0

    def test_constant_model(self):
        """Test that a constant model yields no substitutions."""
        store = random_store(np.random.default_rng(1), 6, 2)
        text = embed_tokens(list(store.tokens[:3]), store, 3)
        model = NetworkModel([DenseLayer(np.zeros((2, 6)), np.array([1.0, 0.0]))], (3, 2), 2)
        ctx = attack_context(text, model, store, None, AttackSettings(sims=20))
        records, q = simulate([0, 2], ctx, np.random.default_rng(0))
        assert records == []
        assert q <= 0

    def test_candidates_exclude_special_tokens(self):
        """Test that the unknown token never becomes a candidate."""
        store = random_store(np.random.default_rng(2), 4, 2).with_token("<unk>")
        text = embed_tokens(["w0", "zzz"], store, 2)
        sets = candidate_sets(text, store, None, AttackSettings(neighbor_limit=10))
        assert "<unk>" not in sets[0].tokens
        assert len(sets[0]) == 3
        assert sets[0].weights.sum() == pytest.approx(1.0)

    def test_uniform_sampling(self):
        """Test uniform candidate weights."""
        store = random_store(np.random.default_rng(3), 5, 2)
        text = embed_tokens(["w0"], store, 1)
        sets = candidate_sets(text, store, None, AttackSettings(sampling="uniform"))
        np.testing.assert_allclose(sets[0].weights, np.full(4, 0.25))

    def test_lexicon_filters_candidates(self):
        """Test that the lexicon removes incompatible candidates."""
        store = random_store(np.random.default_rng(4), 4, 2)
        lexicon = PosLexicon(tags={"w0": "N", "w1": "N", "w2": "V"})
        text = embed_tokens(["w0"], store, 1)
        sets = candidate_sets(text, store, lexicon, AttackSettings())
        assert sets[0].tokens == ("w1",)


class TestMCTSSearch:
    """End-to-end substitution search."""

    @pytest.mark.parametrize("seed", range(10))
    def test_matches_exhaustive_search(self, seed):
        """Test that a full budget finds the same substitution as enumeration."""
        text, model, store = exhaustible_instance(seed)
        searched = mcts_search(text, model, store, None, EXHAUSTIVE, seed=seed)
        enumerated = exhaustive_search(text, model, store, None, EXHAUSTIVE)
        assert searched.per_text_hit == enumerated.per_text_hit
        assert searched.upper_bound == pytest.approx(enumerated.upper_bound, rel=1e-12)
        if enumerated.best is not None:
            assert searched.best.replaced == enumerated.best.replaced
        assert searched.explored_fraction == 1.0

    def test_no_boundary_reports_diameter(self):
        """Test the upper bound when no substitution changes the class."""
        store = random_store(np.random.default_rng(5), 6, 3)
        text = embed_tokens(["w0", "w1"], store, 2)
        model = NetworkModel([DenseLayer(np.zeros((2, 6)), np.array([1.0, 0.0]))], (2, 3), 2)
        result = mcts_search(text, model, store, None, AttackSettings(sims=10))
        assert not result.per_text_hit
        assert result.upper_bound == pytest.approx(box_diameter(Norm.L2, 1, 3))
        assert result.normalized_upper_bound == 1.0
        assert result.per_word_hit_rate == 0.0

    def test_deterministic(self):
        """Test that the same seed gives the same search."""
        text, model, store = exhaustible_instance(3)
        settings = AttackSettings(sims=5, neighbor_limit=4, budget_fraction=0.6)
        first = mcts_search(text, model, store, None, settings, seed=text_seed(7, 0))
        second = mcts_search(text, model, store, None, settings, seed=text_seed(7, 0))
        assert first.successes == second.successes
        assert first.upper_bound == second.upper_bound
        assert first.iterations == second.iterations

    def test_records_replay(self, fixture_bundle):
        """Test that every reported substitution replays to a new class."""
        store = fixture_bundle.store
        for text_id, line in enumerate(fixture_bundle.texts[:8]):
            text = embed_tokens(line.split(), store, 5, text_id=text_id)
            result = mcts_search(text, fixture_bundle.model, store, None, AttackSettings(sims=200))
            for record in result.successes:
                new_class = replay(record, text, fixture_bundle.model, store)
                assert new_class == record.new_class
                assert new_class != result.predicted_class

    def test_upper_bound_dominates_certified_radius(self, fixture_bundle):
        """Test that certified radii stay below attack upper bounds."""
        store = fixture_bundle.store
        model = fixture_bundle.model
        checked = 0
        for text_id, line in enumerate(fixture_bundle.texts[:10]):
            text = embed_tokens(line.split(), store, 5, text_id=text_id)
            result = mcts_search(text, model, store, None, AttackSettings(sims=200, depth=2))
            if result.best is None:
                continue
            certified = certify_lower_bound(model, text.embedded, result.best.indices, Norm.L2)
            assert certified.eps_lower <= result.upper_bound
            checked += 1
        assert checked > 0
        logger.info(f"✓ Lower bound below upper bound on {checked} texts")

    def test_attack_many_keeps_order_and_seeds(self, fixture_bundle):
        """Test that thread count does not change per-text results."""
        store = fixture_bundle.store
        texts = [embed_tokens(line.split(), store, 5, text_id=i) for i, line in enumerate(fixture_bundle.texts[:4])]
        settings = AttackSettings(sims=30, seed=11)
        pooled = attack_many(texts, fixture_bundle.model, store, None, settings, threads=3)
        single = attack_many(texts, fixture_bundle.model, store, None, settings, threads=1)
        assert [r.upper_bound for r in pooled] == [r.upper_bound for r in single]
        for text, result in zip(texts, pooled):
            assert result.predicted_class == forward(fixture_bundle.model, text.embedded).class_index

    def test_record_model(self, fixture_bundle):
        """Test conversion of a search result into a report record."""
        store = fixture_bundle.store
        text = embed_tokens(fixture_bundle.texts[0].split(), store, 5)
        record = mcts_search(text, fixture_bundle.model, store, None, AttackSettings(sims=100)).to_record(0)
        assert record.per_text_hit == bool(record.substitutions)
        assert 0.0 <= record.explored_fraction <= 1.0
