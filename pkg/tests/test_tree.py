import random

import pytest

from depkit import DepTree, enumerate_trees, is_projective_arc, validate
from depkit.errors import TreeValidationError

from helpers import any_crossing, dominance_projective, random_tree


def test_deptree_rejects_bad_shapes():
    with pytest.raises(TreeValidationError):
        DepTree([])
    with pytest.raises(TreeValidationError):
        DepTree([0, 3])  # head out of range
    with pytest.raises(TreeValidationError):
        DepTree([1])  # self loop
    with pytest.raises(TreeValidationError):
        DepTree([0, 1], ["root"])  # label count mismatch


def test_validate_examples():
    assert validate([2, 0, 2]).ok
    cyc = validate([2, 1])
    assert not cyc.ok
    assert {(v.kind, v.token) for v in cyc.violations} == {("cycle", 1), ("cycle", 2)}
    multi = validate([0, 0, 1], single_root=True)
    assert {v.kind for v in multi.violations} == {"multi_root"}
    assert validate([0, 0, 1]).ok  # no policy requested


def test_validate_unreachable_vs_cycle():
    # 2 and 3 cycle; 4 hangs off the cycle
    res = validate([0, 3, 2, 2])
    kinds = {v.token: v.kind for v in res.violations}
    assert kinds == {2: "cycle", 3: "cycle", 4: "unreachable"}


def test_validate_out_of_range_and_self_loop():
    res = validate([5, 2])
    assert {(v.kind, v.token) for v in res.violations} == {
        ("out_of_range", 1),
        ("self_loop", 2),
    }


def test_projective_arc_examples():
    assert is_projective_arc([2, 0, 2], 1)
    # arc 3->1 spans token 2 whose head 4 is outside [1,3]
    assert not is_projective_arc([3, 4, 0, 2], 1)
    assert is_projective_arc([3, 4, 0, 2], 3)  # root arc
    with pytest.raises(TreeValidationError):
        is_projective_arc([2, 0], 3)


def test_projective_arc_matches_dominance_oracle():
    rng = random.Random(11)
    for n in range(1, 7):
        for heads in enumerate_trees(n):
            for d in range(1, n + 1):
                assert is_projective_arc(heads, d) == dominance_projective(heads, d)
    for _ in range(300):
        t = random_tree(rng.randint(1, 12), rng)
        for d in range(1, t.n + 1):
            assert is_projective_arc(t.heads, d) == dominance_projective(t.heads, d)


def test_tree_level_projectivity_equals_no_crossing():
    # all arcs projective <=> no two arcs cross, over every tree up to n=6
    for n in range(1, 7):
        for heads in enumerate_trees(n):
            all_proj = all(is_projective_arc(heads, d) for d in range(1, n + 1))
            assert all_proj == (not any_crossing(heads))


def test_enumerate_small_cases():
    assert enumerate_trees(1) == [[0]]
    assert enumerate_trees(2) == [[0, 1], [2, 0]]
    with pytest.raises(TreeValidationError):
        enumerate_trees(0)
    with pytest.raises(TreeValidationError):
        enumerate_trees(8)


def test_enumerate_counts_match_formulas():
    # single-root trees over n tokens: n^(n-1); arborescences: (n+1)^(n-1)
    for n in range(1, 6):
        assert len(enumerate_trees(n)) == n ** (n - 1)
        assert len(enumerate_trees(n, single_root=False)) == (n + 1) ** (n - 1)


def test_enumerated_trees_validate():
    for n in range(1, 6):
        for heads in enumerate_trees(n):
            assert validate(heads, single_root=True).ok
        for heads in enumerate_trees(n, single_root=False):
            assert validate(heads).ok


def test_projective_enumeration_is_filtered_enumeration():
    for n in range(1, 7):
        filtered = [
            h
            for h in enumerate_trees(n)
            if all(is_projective_arc(h, d) for d in range(1, n + 1))
        ]
        assert enumerate_trees(n, projective_only=True) == filtered
