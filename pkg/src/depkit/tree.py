"""Dependency-tree values, validity checking, projectivity, and a small
exhaustive tree enumerator used as a test oracle.

Conventions used throughout the package: tokens are numbered 1..n, head 0 is
the artificial root, and a head assignment is a length-n sequence where entry
i-1 holds the head of token i.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass
from typing import Iterator, Sequence

from .errors import TreeValidationError

ENUM_MAX_TOKENS = 7


@dataclass(frozen=True)
class DepTree:
    """One sentence's dependency structure: heads and relation labels.

    Construction checks shape, head range, and self-loops; connectivity is
    the job of :func:`validate` so that partially broken assignments (e.g.
    raw model output under test) can still be inspected.
    """

    heads: tuple[int, ...]
    deprels: tuple[str, ...]

    def __init__(self, heads: Sequence[int], deprels: Sequence[str] | None = None):
        heads = tuple(int(h) for h in heads)
        n = len(heads)
        if n == 0:
            raise TreeValidationError("a tree needs at least one token")
        if deprels is None:
            deprels = ("_",) * n
        deprels = tuple(str(r) for r in deprels)
        if len(deprels) != n:
            raise TreeValidationError(
                f"{len(deprels)} relation labels for {n} tokens"
            )
        for i, h in enumerate(heads, start=1):
            if not 0 <= h <= n:
                raise TreeValidationError(f"head {h} of token {i} outside 0..{n}")
            if h == i:
                raise TreeValidationError(f"token {i} is its own head")
        object.__setattr__(self, "heads", heads)
        object.__setattr__(self, "deprels", deprels)

    @property
    def n(self) -> int:
        return len(self.heads)

    def head_of(self, token: int) -> int:
        """Head of 1-based ``token``."""
        return self.heads[token - 1]

    def root_children(self) -> list[int]:
        return [i for i, h in enumerate(self.heads, start=1) if h == 0]


@dataclass(frozen=True)
class Violation:
    kind: str  # cycle | unreachable | out_of_range | self_loop | multi_root
    token: int


@dataclass(frozen=True)
class TreeValidity:
    ok: bool
    violations: tuple[Violation, ...]


def validate(heads: Sequence[int], single_root: bool = False) -> TreeValidity:
    """Check whether ``heads`` forms a well-formed dependency tree.

    Every token must reach the artificial root 0; tokens on a head cycle are
    flagged ``cycle`` and tokens whose head chain merely leads into one are
    flagged ``unreachable``. ``multi_root`` is only flagged when the caller
    asks for the single-root policy.
    """
    n = len(heads)
    violations: list[Violation] = []
    for i, h in enumerate(heads, start=1):
        if not 0 <= h <= n:
            violations.append(Violation("out_of_range", i))
        elif h == i:
            violations.append(Violation("self_loop", i))
    if violations:
        return TreeValidity(False, tuple(violations))

    # 0 unvisited, 1 on current path, 2 reaches root, 3 bad (cycle or feeds one)
    state = [0] * (n + 1)
    state[0] = 2
    on_cycle = [False] * (n + 1)
    for start in range(1, n + 1):
        if state[start]:
            continue
        path = []
        cur = start
        while state[cur] == 0:
            state[cur] = 1
            path.append(cur)
            cur = heads[cur - 1]
        if state[cur] == 1:  # closed a cycle within the current path
            cycle_start = path.index(cur)
            for tok in path[cycle_start:]:
                on_cycle[tok] = True
            outcome = 3
        else:
            outcome = state[cur]
        for tok in path:
            state[tok] = outcome

    for tok in range(1, n + 1):
        if state[tok] == 3:
            violations.append(Violation("cycle" if on_cycle[tok] else "unreachable", tok))

    roots = [i for i, h in enumerate(heads, start=1) if h == 0]
    if single_root and len(roots) > 1:
        violations.extend(Violation("multi_root", tok) for tok in roots)

    return TreeValidity(not violations, tuple(violations))


def is_projective_arc(heads: Sequence[int], dep: int) -> bool:
    """True when the arc into 1-based ``dep`` is projective.

    An arc head->dep is projective when every token strictly inside its span
    has its own head inside [min(head, dep), max(head, dep)]; for whole trees
    this is equivalent to the head dominating everything under the arc. Arcs
    from the artificial root count as projective.
    """
    n = len(heads)
    if not 1 <= dep <= n:
        raise TreeValidationError(f"token index {dep} outside 1..{n}")
    h = heads[dep - 1]
    if h == 0:
        return True
    lo, hi = (h, dep) if h < dep else (dep, h)
    return all(lo <= heads[k - 1] <= hi for k in range(lo + 1, hi))


def count_nonprojective_arcs(heads: Sequence[int]) -> int:
    return sum(1 for d in range(1, len(heads) + 1) if not is_projective_arc(heads, d))


def _all_reach_root(heads: Sequence[int]) -> bool:
    n = len(heads)
    for start in range(1, n + 1):
        cur = start
        steps = 0
        while cur != 0:
            cur = heads[cur - 1]
            steps += 1
            if steps > n:
                return False
    return True


def enumerate_trees(
    n: int, projective_only: bool = False, single_root: bool = True
) -> list[list[int]]:
    """All head assignments forming a valid tree over ``n`` tokens.

    Exhaustive generate-and-filter; usable as a brute-force oracle up to
    n = 7. ``single_root`` restricts root 0 to exactly one child (the common
    treebank convention); disabling it yields every spanning arborescence,
    which is the search space of the unrestricted graph decoder.
    """
    if not 1 <= n <= ENUM_MAX_TOKENS:
        raise TreeValidationError(f"enumeration supports 1..{ENUM_MAX_TOKENS} tokens, got {n}")
    out: list[list[int]] = []
    for heads in itertools.product(range(n + 1), repeat=n):
        nroots = heads.count(0)
        if nroots == 0 or (single_root and nroots != 1):
            continue
        if any(h == i for i, h in enumerate(heads, start=1)):
            continue
        if not _all_reach_root(heads):
            continue
        if projective_only and not all(
            is_projective_arc(heads, d) for d in range(1, n + 1)
        ):
            continue
        out.append(list(heads))
    return out


def iter_arcs(heads: Sequence[int]) -> Iterator[tuple[int, int]]:
    """(head, dependent) pairs, root arcs included."""
    for dep, head in enumerate(heads, start=1):
        yield head, dep
