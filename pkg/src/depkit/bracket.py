"""Bracket encoding of dependency trees for sequence-labelling parsing.

Each token carries a label made of four symbol kinds, rendered in the fixed
order ``<`` ``\\``* ``/``* ``>`` (``_`` when empty), plus a relation label:

* ``<``  -- the previous token takes its head somewhere to the right;
* ``\\`` -- one per dependent of this token lying to its left;
* ``/``  -- one per dependent of the previous token lying to its right;
* ``>``  -- this token takes its head somewhere to the left.

Arcs from the artificial root are not written; the root is recovered as the
token left without a head. Decoding matches symbols with two stacks and is
total: ill-formed sequences are repaired (details on :func:`decode`) so a
valid single-rooted tree always comes back.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Sequence

from .errors import ConlluParseError, TreeValidationError
from .tree import DepTree, validate

_BRACKET_RE = re.compile(r"^(<)?(\\*)(/*)(>)?$")


@dataclass(frozen=True)
class BracketLabel:
    """One token's label: bracket symbols plus the relation to its head."""

    has_lt: bool
    k_back: int
    k_fwd: int
    has_gt: bool
    deprel: str = "_"

    def __post_init__(self):
        if self.k_back < 0 or self.k_fwd < 0:
            raise TreeValidationError("bracket symbol counts must be non-negative")

    @property
    def bracket(self) -> str:
        """Canonical rendering; ``_`` for the empty label."""
        s = ("<" if self.has_lt else "") + "\\" * self.k_back + "/" * self.k_fwd + (
            ">" if self.has_gt else ""
        )
        return s or "_"


LabelSequence = Sequence[BracketLabel]


def parse_bracket(s: str, deprel: str = "_") -> BracketLabel:
    """Inverse of :attr:`BracketLabel.bracket`."""
    if s == "_":
        return BracketLabel(False, 0, 0, False, deprel)
    m = _BRACKET_RE.match(s)
    if not m:
        raise TreeValidationError(f"not a canonical bracket string: {s!r}")
    lt, backs, fwds, gt = m.groups()
    return BracketLabel(bool(lt), len(backs), len(fwds), bool(gt), deprel)


def encode(tree: DepTree) -> list[BracketLabel]:
    """Encode a valid tree as one label per token.

    Total on every valid tree, non-projective ones included (only projective
    trees are guaranteed to round-trip through :func:`decode`).
    """
    check = validate(tree.heads)
    if not check.ok:
        raise TreeValidationError(f"cannot encode an invalid tree: {check.violations}")
    n = tree.n
    head = tree.head_of
    labels = []
    for i in range(1, n + 1):
        has_lt = i > 1 and head(i - 1) > i - 1
        k_back = sum(1 for j in range(1, i) if head(j) == i)
        k_fwd = 0 if i == 1 else sum(1 for j in range(i, n + 1) if head(j) == i - 1)
        has_gt = 0 < head(i) < i
        labels.append(BracketLabel(has_lt, k_back, k_fwd, has_gt, tree.deprels[i - 1]))
    return labels


@dataclass(frozen=True)
class DecodeResult:
    tree: DepTree
    repairs: tuple[str, ...]

    @property
    def clean(self) -> bool:
        return not self.repairs


def _find_cycle_from(heads: list[int | None], start: int) -> list[int]:
    """Cycle reached by following heads from ``start`` (which must hit one)."""
    seen: dict[int, int] = {}
    path: list[int] = []
    cur = start
    while cur not in seen:
        seen[cur] = len(path)
        path.append(cur)
        cur = heads[cur]  # type: ignore[assignment]
    return path[seen[cur]:]


def decode(labels: LabelSequence) -> DecodeResult:
    """Decode a label sequence into a tree, repairing ill-formed input.

    Sweep: per token, in symbol order, ``<`` pushes the previous token as a
    dependent awaiting a head on the right; each ``\\`` pops one and attaches
    it here; ``/`` pushes the previous token as a head awaiting dependents on
    the right; ``>`` pops one and takes it as this token's head.

    Repairs (reported in order of application): symbols that would pop an
    empty stack or push token 0 or an already-headed token are dropped;
    leftover stack entries are dropped silently; the first headless token
    becomes the root and any other headless token attaches to it; remaining
    head cycles are broken by re-attaching their lowest-index member to the
    root token. The result always validates under the single-root policy.
    """
    n = len(labels)
    if n == 0:
        raise TreeValidationError("cannot decode an empty label sequence")
    heads: list[int | None] = [None] * (n + 1)  # 1-based; index 0 unused
    repairs: list[str] = []
    awaiting_head: list[int] = []  # dependents that want a head to their right
    awaiting_deps: list[int] = []  # heads that want dependents to their right

    for i in range(1, n + 1):
        lab = labels[i - 1]
        if lab.has_lt:
            d = i - 1
            if d < 1:
                repairs.append(f"dropped '<' at token {i}: no previous token")
            elif heads[d] is not None:
                repairs.append(f"dropped '<' at token {i}: token {d} already headed")
            else:
                awaiting_head.append(d)
        for _ in range(lab.k_back):
            if awaiting_head:
                d = awaiting_head.pop()
                heads[d] = i
            else:
                repairs.append(f"dropped '\\' at token {i}: no pending dependent")
        for _ in range(lab.k_fwd):
            if i - 1 < 1:
                repairs.append(f"dropped '/' at token {i}: no previous token")
            else:
                awaiting_deps.append(i - 1)
        if lab.has_gt:
            if awaiting_deps:
                heads[i] = awaiting_deps.pop()
            else:
                repairs.append(f"dropped '>' at token {i}: no pending head")

    headless = [i for i in range(1, n + 1) if heads[i] is None]
    if headless:
        root = headless[0]
        heads[root] = 0
        for tok in headless[1:]:
            heads[tok] = root
            repairs.append(f"attached headless token {tok} to root token {root}")
    else:
        # every token got a head, so at least one cycle exists: promote the
        # lowest-index member of the first cycle to be the root
        cycle = min(
            (_find_cycle_from(heads, s) for s in range(1, n + 1)), key=min
        )
        root = min(cycle)
        heads[root] = 0
        repairs.append(f"promoted cycle token {root} to root")

    while True:
        stuck = [
            tok
            for tok in range(1, n + 1)
            if not _reaches_root(heads, tok)
        ]
        if not stuck:
            break
        cycle = _find_cycle_from(heads, stuck[0])
        fix = min(cycle)
        heads[fix] = root
        repairs.append(f"re-attached cycle token {fix} to root token {root}")

    deprels = [lab.deprel for lab in labels]
    return DecodeResult(DepTree(heads[1:], deprels), tuple(repairs))


def _reaches_root(heads: list[int | None], tok: int) -> bool:
    cur, steps = tok, 0
    while cur != 0:
        cur = heads[cur]  # type: ignore[assignment]
        steps += 1
        if steps > len(heads):
            return False
    return True


def label_vocabulary(corpus: Iterable[DepTree]) -> list[tuple[str, str]]:
    """Sorted set of (bracket string, relation) pairs seen in a corpus."""
    pairs = {(lab.bracket, lab.deprel) for tree in corpus for lab in encode(tree)}
    return sorted(pairs)


def write_labels(sentences_labels: Sequence[LabelSequence]) -> str:
    """Label file: one ``bracket<TAB>deprel`` line per token, blank line
    between sentences."""
    chunks = []
    for labels in sentences_labels:
        chunks.append("\n".join(f"{lab.bracket}\t{lab.deprel}" for lab in labels))
    return "\n\n".join(chunks) + "\n"


def read_labels(text: str) -> list[list[BracketLabel]]:
    out: list[list[BracketLabel]] = []
    cur: list[BracketLabel] = []
    for line_no, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            if cur:
                out.append(cur)
                cur = []
            continue
        parts = line.split("\t")
        if len(parts) != 2:
            raise ConlluParseError("expected 'bracket<TAB>deprel'", line_no)
        cur.append(parse_bracket(parts[0], parts[1]))
    if cur:
        out.append(cur)
    return out
