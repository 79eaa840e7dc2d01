"""Shared test utilities: random tree generators, brute-force oracles, a
synthetic treebank grammar, fake clocks, and mock energy counters."""

from __future__ import annotations

import random
from typing import Sequence

import numpy as np

from depkit import DepTree, ParetoPoint, Sentence, Token
from depkit.bracket import BracketLabel

RELS = ("det", "amod", "nsubj", "obj", "nmod", "case", "advmod", "punct", "root")


# ---------------------------------------------------------------------------
# random trees


def random_tree(n: int, rng: random.Random, rels: Sequence[str] = RELS) -> DepTree:
    """Random single-root tree, frequently non-projective for n >= 4:
    tokens are attached in random order to already-attached tokens."""
    order = list(range(1, n + 1))
    rng.shuffle(order)
    heads = [0] * n
    attached = [order[0]]
    for tok in order[1:]:
        heads[tok - 1] = rng.choice(attached)
        attached.append(tok)
    return DepTree(heads, [rng.choice(rels) for _ in range(n)])


def random_projective_tree(n: int, rng: random.Random,
                           rels: Sequence[str] = RELS) -> DepTree:
    """Random projective single-root tree by recursive span splitting."""
    heads = [0] * n

    def build(lo: int, hi: int, head: int) -> None:
        if lo > hi:
            return
        m = rng.randint(lo, hi)
        heads[m - 1] = head
        build(lo, m - 1, m)
        build(m + 1, hi, m)

    build(1, n, 0)
    return DepTree(heads, [rng.choice(rels) for _ in range(n)])


def random_label_sequence(n: int, rng: random.Random) -> list[BracketLabel]:
    """Arbitrary (mostly ill-formed) bracket labels for fuzzing the decoder."""
    labels = []
    for _ in range(n):
        labels.append(
            BracketLabel(
                has_lt=rng.random() < 0.4,
                k_back=rng.choice((0, 0, 0, 1, 1, 2, 3)),
                k_fwd=rng.choice((0, 0, 0, 1, 1, 2, 3)),
                has_gt=rng.random() < 0.4,
                deprel=rng.choice(RELS),
            )
        )
    return labels


# ---------------------------------------------------------------------------
# oracles


def dominance_projective(heads: Sequence[int], dep: int) -> bool:
    """Transitive-path oracle: every token inside the arc span must reach
    the arc's head without stepping outside the span."""
    h = heads[dep - 1]
    if h == 0:
        return True
    lo, hi = (h, dep) if h < dep else (dep, h)
    for k in range(lo + 1, hi):
        cur = k
        steps = 0
        while True:
            cur = heads[cur - 1]
            steps += 1
            if cur == h:
                break
            if cur == 0 or not lo <= cur <= hi or steps > len(heads):
                return False
    return True


def arcs_cross(a: tuple[int, int], b: tuple[int, int]) -> bool:
    """Strict interleaving of the two arcs' spans."""
    (l1, r1), (l2, r2) = sorted(a), sorted(b)
    if l1 > l2:
        (l1, r1), (l2, r2) = (l2, r2), (l1, r1)
    return l1 < l2 < r1 < r2


def any_crossing(heads: Sequence[int]) -> bool:
    arcs = [(h, d) for d, h in enumerate(heads, start=1)]
    return any(
        arcs_cross(arcs[i], arcs[j])
        for i in range(len(arcs))
        for j in range(i + 1, len(arcs))
    )


def brute_pareto(points: Sequence[ParetoPoint]) -> list[ParetoPoint]:
    """Quadratic pairwise domination filter (independent of the sweep)."""
    if not points:
        return []
    sx = 1.0 if points[0].orientation[0] == "maximize" else -1.0
    sy = 1.0 if points[0].orientation[1] == "maximize" else -1.0
    X = np.array([sx * p.x for p in points])
    Y = np.array([sy * p.y for p in points])
    keep = []
    for i in range(len(points)):
        dominated = ((X >= X[i]) & (Y >= Y[i]) & ((X > X[i]) | (Y > Y[i]))).any()
        if not dominated:
            keep.append(i)
    keep.sort(key=lambda i: (points[i].x, i))
    return [points[i] for i in keep]


def uas_of(gold: Sequence[Sentence], trees: Sequence[DepTree]) -> float:
    total = ok = 0
    for g, t in zip(gold, trees):
        for i in range(g.n):
            total += 1
            ok += g.heads[i] == t.heads[i]
    return 100.0 * ok / total


def attach_previous_baseline(sent: Sentence) -> DepTree:
    heads = [i - 1 for i in range(1, sent.n + 1)]
    return DepTree(heads, ["dep"] * sent.n)


def attach_root_baseline(sent: Sentence) -> DepTree:
    # head 0 everywhere: not a single-rooted tree, but a valid UAS baseline
    return DepTree([0] * sent.n, ["root"] * sent.n)


# ---------------------------------------------------------------------------
# synthetic treebank


DETS = ["the", "a", "this", "that", "every", "some"]
ADJS = ["big", "small", "red", "old", "new", "quick", "happy", "quiet", "bright", "strange"]
NOUNS = ["dog", "cat", "bird", "horse", "tree", "river", "house", "book",
         "child", "farmer", "story", "door", "garden", "wind"]
VERBS = ["saw", "chased", "found", "liked", "heard", "followed", "watched", "made"]
ADPS = ["in", "on", "near", "behind", "under", "with"]
ADVS = ["quickly", "slowly", "often", "never", "carefully"]


def synth_sentence(rng: random.Random) -> Sentence:
    """One sentence from a small projective grammar with UD-style relations."""
    forms: list[str] = []
    upos: list[str] = []
    heads: list[int | None] = []
    rels: list[str] = []

    def emit(form, pos, head, rel):
        forms.append(form)
        upos.append(pos)
        heads.append(head)
        rels.append(rel)

    def noun_phrase(role: str) -> int:
        start = len(forms) + 1
        emit(rng.choice(DETS), "DET", None, "det")
        for _ in range(rng.choice((0, 0, 1, 1, 2))):
            emit(rng.choice(ADJS), "ADJ", None, "amod")
        emit(rng.choice(NOUNS), "NOUN", None, role)
        noun = len(forms)
        for k in range(start, noun):
            heads[k - 1] = noun
        return noun

    subj = noun_phrase("nsubj")
    emit(rng.choice(VERBS), "VERB", 0, "root")
    verb = len(forms)
    heads[subj - 1] = verb

    obj = None
    if rng.random() < 0.75:
        obj = noun_phrase("obj")
        heads[obj - 1] = verb

    if rng.random() < 0.45:
        emit(rng.choice(ADPS), "ADP", None, "case")
        adp = len(forms)
        pp_noun = noun_phrase("obl" if obj is None or rng.random() < 0.5 else "nmod")
        heads[adp - 1] = pp_noun
        heads[pp_noun - 1] = verb if rels[pp_noun - 1] == "obl" else obj

    if rng.random() < 0.35:
        emit(rng.choice(ADVS), "ADV", verb, "advmod")

    emit(".", "PUNCT", verb, "punct")

    tokens = [
        Token(id=i + 1, form=f, upos=u, head=h, deprel=r)
        for i, (f, u, h, r) in enumerate(zip(forms, upos, heads, rels))
    ]
    return Sentence(tokens)


def synth_corpus(count: int, seed: int) -> list[Sentence]:
    rng = random.Random(seed)
    return [synth_sentence(rng) for _ in range(count)]


# ---------------------------------------------------------------------------
# fakes for the measurement protocol


class FakeClock:
    """Clock returning scripted values (exhausting them is a test bug)."""

    def __init__(self, values: Sequence[float]):
        self.values = list(values)

    def __call__(self) -> float:
        return self.values.pop(0)


class MockEnergyRig:
    """Deterministic clock + sleep + cumulative-microjoule counter.

    The counter integrates ``power_watts`` over the fake time, so a meter
    that sleeps through a baseline window and then runs a task sees exactly
    the configured background and task powers.
    """

    def __init__(self, power_watts: float = 1.0):
        self.t = 0.0
        self.uj = 0.0
        self.power_watts = power_watts
        self.reads = 0

    def clock(self) -> float:
        return self.t

    def sleep(self, seconds: float) -> None:
        self.advance(seconds)

    def advance(self, seconds: float) -> None:
        self.t += seconds
        self.uj += self.power_watts * seconds * 1e6

    def counter(self) -> list[float]:
        self.reads += 1
        return [self.uj]

    def task(self, seconds: float, power_watts: float):
        def run():
            old = self.power_watts
            self.power_watts = power_watts
            self.advance(seconds)
            self.power_watts = old

        return run
