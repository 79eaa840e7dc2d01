import random

import numpy as np
import pytest

from depkit import ScoreTable, assign_labels, cle_decode, enumerate_trees, validate
from depkit.errors import TreeValidationError
from depkit.mst import tree_score


def _random_table(rng: np.random.Generator, n: int) -> ScoreTable:
    return ScoreTable(n, rng.normal(size=(n + 1, n + 1)))


def test_single_token():
    table = ScoreTable(1, np.array([[0.0, 5.0], [1.0, 0.0]]))
    assert cle_decode(table) == [0]
    assert cle_decode(table, single_root=False) == [0]


def test_two_token_example():
    table = ScoreTable.from_mappings(2, {(0, 1): 1, (0, 2): 1, (1, 2): 5, (2, 1): 0})
    assert cle_decode(table, single_root=True) == [0, 1]
    assert tree_score(table, [0, 1]) == 6


def test_single_root_changes_the_answer_when_it_must():
    # unrestricted optimum is two root children; restricted must pick one
    table = ScoreTable.from_mappings(
        2, {(0, 1): 5, (0, 2): 5, (1, 2): 0, (2, 1): 0}
    )
    assert cle_decode(table, single_root=False) == [0, 0]
    restricted = cle_decode(table, single_root=True)
    assert restricted.count(0) == 1
    assert tree_score(table, restricted) == 5.0


def test_zero_tokens_is_error():
    with pytest.raises(TreeValidationError):
        cle_decode(ScoreTable(0, np.zeros((1, 1))))


def test_optimality_against_enumeration():
    rng = np.random.default_rng(42)
    for n in range(2, 7):
        trees_sr = np.array(enumerate_trees(n, single_root=True))
        trees_mr = np.array(enumerate_trees(n, single_root=False))
        deps = np.arange(1, n + 1)
        for _ in range(100):
            table = _random_table(rng, n)
            for single, trees in ((True, trees_sr), (False, trees_mr)):
                got = cle_decode(table, single_root=single)
                assert validate(got, single_root=single).ok
                best = table.arc[trees, deps].sum(axis=1).max()
                assert tree_score(table, got) == pytest.approx(best, abs=1e-9)


def test_output_always_a_tree():
    rng = np.random.default_rng(3)
    for _ in range(400):
        n = int(rng.integers(1, 13))
        got = cle_decode(_random_table(rng, n), single_root=False)
        assert validate(got).ok
        got = cle_decode(_random_table(rng, n), single_root=True)
        assert validate(got, single_root=True).ok


def test_score_shift_invariance():
    rng = np.random.default_rng(8)
    for _ in range(50):
        n = int(rng.integers(2, 9))
        arc = rng.normal(size=(n + 1, n + 1))
        base = cle_decode(ScoreTable(n, arc))
        shifted = cle_decode(ScoreTable(n, arc + 17.5))
        assert base == shifted


def test_decode_is_deterministic_under_ties():
    n = 3
    arc = np.zeros((n + 1, n + 1))  # every tree ties
    first = cle_decode(ScoreTable(n, arc))
    for _ in range(5):
        assert cle_decode(ScoreTable(n, arc)) == first
    # ties break toward the lower head index
    assert first == [0, 1, 1]


def test_assign_labels_argmax_and_tie_break():
    table = ScoreTable.from_mappings(
        1,
        {(0, 1): 1.0},
        rel_scores={(0, 1, "nsubj"): 2.0, (0, 1, "obj"): 1.0},
        rel_vocab=("nsubj", "obj"),
    )
    assert assign_labels([0], table) == ["nsubj"]

    tie = ScoreTable.from_mappings(
        1,
        {(0, 1): 1.0},
        rel_scores={(0, 1, "a"): 1.0, (0, 1, "b"): 1.0},
        rel_vocab=("a", "b"),
    )
    assert assign_labels([0], tie) == ["a"]


def test_assign_labels_empty_vocab_is_error():
    table = ScoreTable(1, np.zeros((2, 2)))
    with pytest.raises(TreeValidationError):
        assign_labels([0], table)


def test_assign_labels_achieves_per_arc_max():
    rng = np.random.default_rng(15)
    vocab = ("a", "b", "c", "d")
    for _ in range(100):
        n = int(rng.integers(1, 8))
        rel = rng.normal(size=(n + 1, n + 1, len(vocab)))
        table = ScoreTable(n, rng.normal(size=(n + 1, n + 1)), vocab, rel)
        heads = cle_decode(table)
        labels = assign_labels(heads, table)
        for d, (h, lab) in enumerate(zip(heads, labels), start=1):
            assert rel[h, d, vocab.index(lab)] == rel[h, d].max()
