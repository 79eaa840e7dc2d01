"""Left-to-right transition parsing: one head-selection action per word.

The state walks the sentence once; at each position ("focus") it picks a
head for that token from the candidates that keep the partial graph acyclic,
so any full rollout yields a tree after the root repair. Because candidates
are unrestricted otherwise, the scheme covers non-projective trees.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Protocol, Sequence

import numpy as np

from .errors import TreeValidationError
from .tree import DepTree


@dataclass(frozen=True)
class L2RState:
    """Partial parse: heads fixed for every token before ``focus``."""

    n: int
    focus: int
    heads: tuple[int, ...]  # heads of tokens 1..focus-1

    @property
    def terminal(self) -> bool:
        return self.focus > self.n


def initial_state(n: int) -> L2RState:
    if n < 1:
        raise TreeValidationError("need at least one token")
    return L2RState(n=n, focus=1, heads=())


def _is_ancestor(state: L2RState, ancestor: int, node: int) -> bool:
    """Does ``node`` reach ``ancestor`` through already-assigned heads?"""
    cur = node
    while 1 <= cur <= len(state.heads):
        cur = state.heads[cur - 1]
        if cur == ancestor:
            return True
    return False


def valid_heads(state: L2RState) -> set[int]:
    """Candidate heads for the focus token.

    Excludes the focus itself and any candidate the focus already dominates
    (attaching there would close a cycle). The root 0 is always allowed.
    """
    if state.terminal:
        raise TreeValidationError("state is terminal")
    out = {0}
    for h in range(1, state.n + 1):
        if h == state.focus:
            continue
        if not _is_ancestor(state, state.focus, h):
            out.add(h)
    return out


def step(state: L2RState, head_choice: int) -> L2RState:
    """Attach the focus token to ``head_choice`` and advance."""
    if head_choice not in valid_heads(state):
        raise TreeValidationError(
            f"head {head_choice} is not a valid choice at focus {state.focus}"
        )
    return L2RState(state.n, state.focus + 1, state.heads + (head_choice,))


def oracle_head(state: L2RState, gold: DepTree) -> int:
    """Gold head of the focus token, or 0 when earlier mistakes made the
    gold head unreachable (never happens on an all-oracle rollout)."""
    g = gold.head_of(state.focus)
    return g if g in valid_heads(state) else 0


class Scorer(Protocol):
    """What the greedy parser needs from a trained model."""

    def arc_scores(self, sentence, dep: int, heads: Sequence[int]) -> np.ndarray: ...

    def best_label(self, sentence, head: int, dep: int) -> str: ...


def greedy_parse(sentence, scorer: Scorer, single_root: bool = True) -> DepTree:
    """Parse by taking the best-scoring valid head at every position.

    Ties break toward the lower head index. When several tokens picked the
    root and ``single_root`` is set, the best-scoring root child keeps it
    and the rest re-attach to that token.
    """
    n = sentence.n
    state = initial_state(n)
    while not state.terminal:
        cands = sorted(valid_heads(state))
        scores = scorer.arc_scores(sentence, state.focus, cands)
        state = step(state, cands[int(np.argmax(scores))])
    heads = list(state.heads)

    root_children = [d for d, h in enumerate(heads, start=1) if h == 0]
    if single_root and len(root_children) > 1:
        # score each candidate as a root child, keep the best one
        best = root_children[
            int(np.argmax([
                scorer.arc_scores(sentence, d, [0])[0] for d in root_children
            ]))
        ]
        for d in root_children:
            if d != best:
                heads[d - 1] = best

    deprels = [scorer.best_label(sentence, heads[d - 1], d) for d in range(1, n + 1)]
    return DepTree(heads, deprels)
