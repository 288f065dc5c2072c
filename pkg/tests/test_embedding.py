#!/usr/bin/env python3
"""
Embedding tests: parsing, normalization, diameters, neighbor queries
and text embedding.
"""

import logging
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from msrcert.embedding import (
    PAD_TOKEN,
    UNKNOWN_TOKEN,
    box_diameter,
    diameter,
    load_embedding,
    nearest_neighbors,
    normalize,
)
from msrcert.exceptions import InputFileError, ParseError, VocabularyError
from msrcert.models import Norm
from msrcert.texts import embed_tokens, parse_texts

from .test_utils import make_store, write_embedding_file, write_lines

logger = logging.getLogger(__name__)


class TestLoadEmbedding:
    """Parsing the ``token v1 ... vd`` format."""

    def test_three_words(self, tmp_path):
        """Test parsing a three-word embedding."""
        path = write_embedding_file(tmp_path / "emb.txt", {"a": [0, 1], "b": [1, 0], "c": [0.5, 0.5]})
        store = load_embedding(path, 2)
        assert len(store) == 3
        assert store.dim == 2
        np.testing.assert_array_equal(store.vector("b"), [1.0, 0.0])
        logger.info("✓ Parsed a 3-word embedding")

    def test_arity_error_names_line(self, tmp_path):
        """Test that a short row names its line."""
        path = write_lines(tmp_path / "emb.txt", ["a 0 1", "b 1 0 2"])
        with pytest.raises(ParseError) as excinfo:
            load_embedding(path, 2)
        assert excinfo.value.line == 2
        assert f"{path}:2:" in str(excinfo.value)

    def test_non_numeric_value(self, tmp_path):
        """Test that a non-numeric value is a parse error."""
        path = write_lines(tmp_path / "emb.txt", ["a 0 x"])
        with pytest.raises(ParseError):
            load_embedding(path, 2)

    def test_duplicate_token(self, tmp_path):
        """Test that a repeated token is a vocabulary error."""
        path = write_lines(tmp_path / "emb.txt", ["a 0 1", "a 1 0"])
        with pytest.raises(VocabularyError):
            load_embedding(path, 2)

    def test_empty_file_then_lookup_fails(self, tmp_path):
        """Test lookups in an empty vocabulary."""
        path = tmp_path / "emb.txt"
        path.write_text("", encoding="utf-8")
        store = load_embedding(path, 2)
        assert len(store) == 0
        with pytest.raises(VocabularyError):
            store.lookup("a")

    def test_missing_file(self, tmp_path):
        """Test the error for a missing embedding file."""
        with pytest.raises(InputFileError) as excinfo:
            load_embedding(tmp_path / "missing.txt", 2)
        assert excinfo.value.exit_code == 3


class TestNormalize:
    """Min-max scaling and diameters."""

    def test_two_points(self):
        """Test normalization of two points."""
        store = normalize(make_store(["a", "b"], [[0.0, 2.0], [1.0, 0.0]], normalized=False))
        np.testing.assert_allclose(store.vectors, [[0.0, 1.0], [1.0, 0.0]])
        assert store.diameter_l2 == pytest.approx(math.sqrt(2))
        assert store.diameter_linf == pytest.approx(1.0)

    def test_degenerate_dimension_maps_to_zero(self):
        """Test that a constant dimension maps to zero."""
        store = normalize(make_store(["a", "b"], [[3.0, 0.0], [3.0, 1.0]], normalized=False))
        assert store.degenerate.tolist() == [True, False]
        np.testing.assert_array_equal(store.vectors[:, 0], [0.0, 0.0])

    @settings(max_examples=50, deadline=None)
    @given(arrays(np.float64, (6, 3), elements=st.floats(-100, 100, allow_nan=False)))
    def test_idempotent_and_in_unit_box(self, vectors):
        """Test that normalization lands in the unit box and is idempotent."""
        once = normalize(make_store([f"w{i}" for i in range(6)], vectors, normalized=False))
        twice = normalize(once)
        assert np.all(once.vectors >= 0.0) and np.all(once.vectors <= 1.0)
        np.testing.assert_allclose(twice.vectors, once.vectors, atol=1e-12)

    def test_diameters(self):
        """Test box and vocabulary diameters."""
        assert box_diameter(Norm.LINF, 3, 50) == 1.0
        assert box_diameter(Norm.L2, 1, 50) == pytest.approx(7.071, abs=1e-3)
        assert box_diameter(Norm.L2, 4, 25) == pytest.approx(10.0)
        store = make_store(["a", "b"], [[0.0, 1.0], [1.0, 0.0]])
        assert diameter(store, Norm.L2, 2) == pytest.approx(2.0)

    def test_box_diameter_is_corner_distance(self):
        """Test the L2 diameter against opposite corners."""
        rng = np.random.default_rng(0)
        corners = rng.integers(0, 2, size=(200, 4 * 25)).astype(float)
        best = max(np.linalg.norm(corners[i] - (1 - corners[i])) for i in range(len(corners)))
        assert best == pytest.approx(box_diameter(Norm.L2, 4, 25))


class TestNearestNeighbors:
    """Sorted neighbor queries with stable tie-breaking."""

    @pytest.fixture
    def store(self):
        return make_store(["a", "b", "c"], [[0.0, 0.0], [0.0, 0.1], [1.0, 1.0]], normalized=False)

    def test_nearest_of_two(self, store):
        """Test the single nearest neighbor."""
        result = nearest_neighbors(store, "a", 1, Norm.L2)
        assert result.tokens == ["b"]
        assert result.distances[0] == pytest.approx(0.1)

    def test_clamped_to_vocabulary(self, store):
        """Test that k is clamped to the vocabulary size."""
        result = nearest_neighbors(store, "a", 5, Norm.L2)
        assert result.tokens == ["b", "c"]
        assert result.distances[1] == pytest.approx(math.sqrt(2))

    def test_hundred_words(self):
        """Test neighbor order over a hundred words."""
        rng = np.random.default_rng(3)
        store = make_store([f"w{i}" for i in range(100)], rng.uniform(size=(100, 4)))
        result = nearest_neighbors(store, "w7", 1000, Norm.L2)
        assert len(result) == 99
        assert "w7" not in result.tokens
        assert np.all(np.diff(result.distances) >= 0)

    def test_ties_follow_vocabulary_order(self):
        """Test that equal distances keep vocabulary order."""
        store = make_store(["a", "x", "y"], [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]], normalized=False)
        assert nearest_neighbors(store, "a", 2, Norm.LINF).tokens == ["x", "y"]

    def test_unknown_token(self, store):
        """Test neighbors of a word outside the vocabulary."""
        with pytest.raises(VocabularyError):
            nearest_neighbors(store, "zzz", 1, Norm.L2)


class TestTexts:
    """Tokenization, padding and the unknown token."""

    @pytest.fixture
    def store(self):
        store = make_store(["good", "movie", "bad"], [[1.0, 0.0], [0.0, 1.0], [0.2, 0.3]])
        return store.with_token(UNKNOWN_TOKEN)

    def test_padding(self, store):
        """Test lowercasing and padding of a short text."""
        text = embed_tokens(["Good", "movie"], store, 4)
        assert text.tokens == ("good", "movie", PAD_TOKEN, PAD_TOKEN)
        assert text.positions == [0, 1]
        np.testing.assert_array_equal(text.embedded[2:], 0.0)

    def test_out_of_vocabulary(self, store):
        """Test that unknown words map to the unknown token."""
        text = embed_tokens(["awful"], store, 2)
        assert text.tokens[0] == UNKNOWN_TOKEN

    def test_truncation_warns(self, store, caplog):
        """Test that truncating a long text logs a warning."""
        with caplog.at_level(logging.WARNING):
            text = embed_tokens(["good", "bad", "movie"], store, 2)
        assert text.tokens == ("good", "bad")
        assert "truncated" in caplog.text

    def test_missing_unknown_token(self):
        """Test an unknown word without an unknown token."""
        store = make_store(["good", "bad"], [[1.0], [0.0]])
        with pytest.raises(VocabularyError):
            embed_tokens(["awful"], store, 1)

    def test_parse_texts_skips_blank_lines(self, store, tmp_path):
        """Test that blank lines do not become texts."""
        path = write_lines(tmp_path / "texts.txt", ["good movie", "", "bad"])
        texts = parse_texts(path, store, 3)
        assert [t.text_id for t in texts] == [0, 1]
        assert texts[1].text == "bad"

    def test_parse_empty_file(self, store, tmp_path):
        """Test that a file without texts is a parse error."""
        path = tmp_path / "texts.txt"
        path.write_text("\n\n", encoding="utf-8")
        with pytest.raises(ParseError):
            parse_texts(path, store, 3)
