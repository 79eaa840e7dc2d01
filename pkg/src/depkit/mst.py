"""Edge-factored graph decoding: maximum spanning arborescence over an arc
score table (greedy-then-contract), then per-arc relation assignment.

Ties in arc scores break toward the lower head index so decoding is
deterministic run to run, which the speed benchmark relies on.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Mapping, Sequence

import numpy as np

from .errors import TreeValidationError

NEG_INF = float("-inf")


@dataclass
class ScoreTable:
    """Arc scores ``arc[head, dep]`` over tokens 1..n plus root 0, and
    optional relation scores (dense ``rel[head, dep, r]`` or a callable)."""

    n: int
    arc: np.ndarray
    rel_vocab: tuple[str, ...] = ()
    rel: np.ndarray | None = None
    rel_fn: Callable[[int, int], np.ndarray] | None = field(default=None, repr=False)

    def __post_init__(self):
        self.arc = np.asarray(self.arc, dtype=np.float64)
        if self.arc.shape != (self.n + 1, self.n + 1):
            raise TreeValidationError(
                f"arc score matrix must be ({self.n + 1}, {self.n + 1}), got {self.arc.shape}"
            )

    @classmethod
    def from_mappings(
        cls,
        n: int,
        arc_scores: Mapping[tuple[int, int], float],
        rel_scores: Mapping[tuple[int, int, str], float] | None = None,
        rel_vocab: Sequence[str] = (),
    ) -> "ScoreTable":
        arc = np.full((n + 1, n + 1), NEG_INF)
        for (h, d), s in arc_scores.items():
            arc[h, d] = s
        rel = None
        if rel_scores is not None:
            rel = np.full((n + 1, n + 1, len(rel_vocab)), NEG_INF)
            index = {r: k for k, r in enumerate(rel_vocab)}
            for (h, d, r), s in rel_scores.items():
                rel[h, d, index[r]] = s
        return cls(n, arc, tuple(rel_vocab), rel)

    def rel_scores(self, head: int, dep: int) -> np.ndarray:
        if self.rel is not None:
            return self.rel[head, dep]
        if self.rel_fn is not None:
            return self.rel_fn(head, dep)
        raise TreeValidationError("score table has no relation scores")


def _find_cycle(heads: Sequence[int]) -> list[int] | None:
    """Any head cycle among nodes 1..m-1, or None. Node 0 never cycles."""
    m = len(heads)
    color = [0] * m  # 0 unseen, 1 on path, 2 done
    color[0] = 2
    for start in range(1, m):
        if color[start]:
            continue
        path = []
        cur = start
        while color[cur] == 0:
            color[cur] = 1
            path.append(cur)
            cur = heads[cur]
        if color[cur] == 1:
            return path[path.index(cur):]
        for node in path:
            color[node] = 2
    return None


def _solve(score: np.ndarray) -> list[int]:
    """Best head per node for the dense matrix ``score[h, d]`` (root 0).

    Classic recursive contraction: pick each node's best incoming arc; if
    that is a tree, done; otherwise contract one cycle into a supernode,
    solve the smaller problem, and expand. Ties go to the lower head index
    (np.argmax returns the first maximum).
    """
    m = score.shape[0]
    best_head = [0] * m
    for d in range(1, m):
        col = score[:, d].copy()
        col[d] = NEG_INF
        best_head[d] = int(np.argmax(col))

    cycle = _find_cycle(best_head)
    if cycle is None:
        return best_head

    in_cycle = set(cycle)
    outside = [v for v in range(m) if v not in in_cycle]  # keeps 0 at index 0
    cyc = sorted(in_cycle)
    cycle_arc_score = {v: score[best_head[v], v] for v in cyc}

    k = len(outside)
    sub = np.full((k + 1, k + 1), NEG_INF)
    for i, x in enumerate(outside):
        for j, y in enumerate(outside):
            if x != y:
                sub[i, j] = score[x, y]

    # arcs into the supernode: entering the cycle at v costs the score of
    # x->v minus the cycle arc into v that gets displaced
    enter_at = [0] * k
    for i, x in enumerate(outside):
        best = NEG_INF
        for v in cyc:
            cand = score[x, v] - cycle_arc_score[v]
            if cand > best:
                best = cand
                enter_at[i] = v
        sub[i, k] = best

    # arcs out of the supernode: best cycle member as head
    leave_from = [0] * k
    for j, y in enumerate(outside):
        best = NEG_INF
        for v in cyc:
            if score[v, y] > best:
                best = score[v, y]
                leave_from[j] = v
        sub[k, j] = best

    solved = _solve(sub)

    heads = list(best_head)  # cycle arcs stay unless displaced below
    entry = enter_at[solved[k]]
    heads[entry] = outside[solved[k]]
    for j, y in enumerate(outside):
        if y == 0:
            continue
        heads[y] = leave_from[j] if solved[j] == k else outside[solved[j]]
    return heads


def decode_matrix(score: np.ndarray, single_root: bool = True) -> list[int]:
    """Heads 1..n maximising the arc score sum; ``score`` is (n+1, n+1)
    indexed [head, dep]. The matrix is copied, so callers keep theirs."""
    m = score.shape[0]
    if m < 2:
        raise TreeValidationError("need at least one token to decode")
    score = np.array(score, dtype=np.float64, copy=True)
    np.fill_diagonal(score, NEG_INF)
    score[:, 0] = NEG_INF  # the root takes no head
    heads = _solve(score)[1:]
    if not single_root or heads.count(0) == 1:
        return heads
    # restrict to one root child: solve once per candidate, keep the best total
    n = m - 1
    best_heads: list[int] | None = None
    best_total = NEG_INF
    root_row = score[0].copy()
    for r in range(1, n + 1):
        score[0, :] = NEG_INF
        score[0, r] = root_row[r]
        cand = _solve(score)[1:]
        total = sum(score[h, d] for d, h in enumerate(cand, start=1))
        if total > best_total:
            best_total = total
            best_heads = cand
    assert best_heads is not None
    return best_heads


def cle_decode(table: ScoreTable, single_root: bool = True) -> list[int]:
    """Maximum spanning arborescence rooted at 0 over the score table.

    With ``single_root`` the arborescence is additionally constrained to a
    single child of the root (best candidate chosen by re-decoding with the
    other root arcs masked out).
    """
    if table.n < 1:
        raise TreeValidationError("need at least one token to decode")
    if table.n == 1:
        return [0]
    return decode_matrix(table.arc, single_root=single_root)


def tree_score(table: ScoreTable, heads: Sequence[int]) -> float:
    return float(sum(table.arc[h, d] for d, h in enumerate(heads, start=1)))


def assign_labels(heads: Sequence[int], table: ScoreTable) -> list[str]:
    """Best relation per decided arc; ties break toward the first vocabulary
    entry."""
    if not table.rel_vocab:
        raise TreeValidationError("empty relation vocabulary")
    out = []
    for dep, head in enumerate(heads, start=1):
        scores = table.rel_scores(head, dep)
        out.append(table.rel_vocab[int(np.argmax(scores))])
    return out
