"""Feature-based averaged-perceptron scorers for all three parsing
paradigms, plus training with dev-set early stopping and model files.

One hashed weight vector per model scores everything: arc decisions use a
fixed structural class salt, relation and bracket-label decisions mix the
class identity into the feature ids (see :mod:`depkit.features`). Training
is deterministic for a fixed shuffle seed.
"""

from __future__ import annotations

import random
import struct
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

from . import bracket as bracket_codec
from .conllu import Sentence
from .errors import ModelFormatError, TreeValidationError
from .features import (
    _MIX_A,
    _MIX_B,
    arc_id_tensor,
    combine,
    hash_ids,
    salt,
    token_feature_strings,
)
from .mst import NEG_INF, ScoreTable, assign_labels, cle_decode
from .transition import greedy_parse
from .tree import DepTree

PARADIGMS = ("graph", "transition", "seqlab")

ARC_CLASS = salt("\x00arc")
_REL_PREFIX = "\x01rel="
_LABEL_PREFIX = "\x02lab="
_SEQLAB_SEP = "\t"

MAGIC = b"DPKM"
FORMAT_VERSION = 1


@dataclass
class TrainConfig:
    max_epochs: int = 20
    patience: int = 10
    shuffle_seed: int = 0
    feature_space_bits: int = 22

    def __post_init__(self):
        if self.max_epochs < 1 or self.patience < 1:
            raise TreeValidationError("max_epochs and patience must be >= 1")


def _class_salts(prefix: str, names: Sequence[str]) -> np.ndarray:
    return np.array([salt(prefix + name) for name in names], dtype=np.uint64)


def _combine_matrix(base_ids: np.ndarray, salts: np.ndarray, bits: int) -> np.ndarray:
    """(classes, features) id matrix from base ids and per-class salts."""
    mask = np.uint64((1 << bits) - 1)
    mixed = base_ids.astype(np.uint64)[None, :] * _MIX_A + (
        salts[:, None] * _MIX_B
    )
    return (mixed & mask).astype(np.int64)


@dataclass
class LinearModel:
    """Trained scorer: ``averaged_weights`` drive every decision,
    ``weights`` are the raw final-epoch weights kept for inspection."""

    paradigm: str
    feature_space_bits: int
    label_vocab: list[str]
    weights: np.ndarray
    averaged_weights: np.ndarray
    _salts: np.ndarray = field(init=False, repr=False)

    def __post_init__(self):
        if self.paradigm not in PARADIGMS:
            raise TreeValidationError(f"unknown paradigm {self.paradigm!r}")
        prefix = _LABEL_PREFIX if self.paradigm == "seqlab" else _REL_PREFIX
        self._salts = _class_salts(prefix, self.label_vocab)

    # -- scoring (the transition scorer protocol, also used for graphs) --

    def score(self, base_ids: np.ndarray, class_salt: int = ARC_CLASS) -> float:
        ids = combine(base_ids, class_salt, self.feature_space_bits)
        return float(self.averaged_weights[ids].sum())

    def arc_score(self, sentence, head: int, dep: int) -> float:
        from .features import arc_features

        return self.score(arc_features(sentence, head, dep, self.feature_space_bits))

    def arc_scores(self, sentence, dep: int, heads: Sequence[int]) -> np.ndarray:
        from .features import arc_features

        return np.array(
            [self.arc_score(sentence, h, dep) for h in heads], dtype=np.float64
        )

    def best_label(self, sentence, head: int, dep: int) -> str:
        from .features import arc_features

        base = arc_features(sentence, head, dep, self.feature_space_bits)
        m = _combine_matrix(base, self._salts, self.feature_space_bits)
        return self.label_vocab[int(np.argmax(self.averaged_weights[m].sum(axis=1)))]


class AveragedWeights:
    """Perceptron weights whose average runs over per-instance snapshots.

    ``update`` applies a delta during the current instance, ``finish_instance``
    closes it, and ``averaged`` is the mean of the weight vector as it stood
    after each finished instance.
    """

    def __init__(self, size: int):
        self.w = np.zeros(size, dtype=np.float64)
        self._acc = np.zeros(size, dtype=np.float64)
        self._instances = 0

    def update(self, ids: np.ndarray, delta: float) -> None:
        np.add.at(self.w, ids, delta)
        np.add.at(self._acc, ids, delta * self._instances)

    def finish_instance(self) -> None:
        self._instances += 1

    def averaged(self) -> np.ndarray:
        t = max(self._instances, 1)
        return self.w - self._acc / t


class _TensorScorer:
    """Scorer over a precomputed per-sentence arc-id tensor."""

    def __init__(self, w: np.ndarray, ids: np.ndarray, bits: int,
                 salts: np.ndarray, vocab: Sequence[str]):
        self.w = w
        self.ids = ids
        self.bits = bits
        self.salts = salts
        self.vocab = vocab

    def arc_scores(self, sentence, dep: int, heads: Sequence[int]) -> np.ndarray:
        sel = self.ids[list(heads), dep - 1]
        return self.w[combine(sel, ARC_CLASS, self.bits)].sum(axis=-1)

    def best_label(self, sentence, head: int, dep: int) -> str:
        base = self.ids[head, dep - 1]
        m = _combine_matrix(base, self.salts, self.bits)
        return self.vocab[int(np.argmax(self.w[m].sum(axis=1)))]

    def rel_scores(self, head: int, dep: int) -> np.ndarray:
        base = self.ids[head, dep - 1]
        m = _combine_matrix(base, self.salts, self.bits)
        return self.w[m].sum(axis=1)


def _arc_matrix(w: np.ndarray, ids: np.ndarray, bits: int) -> np.ndarray:
    """(n+1, n+1) arc score matrix from the id tensor (diag/root-col junk
    is masked by the decoder)."""
    n = ids.shape[1]
    scores = w[combine(ids, ARC_CLASS, bits)].sum(axis=-1)
    full = np.full((n + 1, n + 1), NEG_INF)
    full[:, 1:] = scores
    return full


def _parse_graph(w, ids, bits, salts, vocab, single_root) -> DepTree:
    n = ids.shape[1]
    scorer = _TensorScorer(w, ids, bits, salts, vocab)
    table = ScoreTable(n, _arc_matrix(w, ids, bits), tuple(vocab), rel_fn=scorer.rel_scores)
    heads = cle_decode(table, single_root=single_root)
    return DepTree(heads, assign_labels(heads, table))


def _parse_transition(w, ids, bits, salts, vocab, sentence, single_root) -> DepTree:
    scorer = _TensorScorer(w, ids, bits, salts, vocab)
    return greedy_parse(sentence, scorer, single_root=single_root)


def _parse_seqlab(w, token_ids: list[np.ndarray], bits, salts, vocab) -> DepTree:
    labels = []
    for base in token_ids:
        m = _combine_matrix(base, salts, bits)
        name = vocab[int(np.argmax(w[m].sum(axis=1)))]
        br, _, rel = name.partition(_SEQLAB_SEP)
        labels.append(bracket_codec.parse_bracket(br, rel))
    return bracket_codec.decode(labels).tree


def _token_id_list(sentence: Sentence, bits: int) -> list[np.ndarray]:
    forms, upos = sentence.forms, sentence.upos
    return [
        hash_ids(token_feature_strings(forms, upos, i), bits)
        for i in range(1, sentence.n + 1)
    ]


def parse_sentence(model: LinearModel, sentence: Sentence, single_root: bool = True) -> DepTree:
    bits = model.feature_space_bits
    if model.paradigm == "graph":
        ids = arc_id_tensor(sentence.forms, sentence.upos, bits)
        return _parse_graph(model.averaged_weights, ids, bits, model._salts,
                            model.label_vocab, single_root)
    if model.paradigm == "transition":
        ids = arc_id_tensor(sentence.forms, sentence.upos, bits)
        return _parse_transition(model.averaged_weights, ids, bits, model._salts,
                                 model.label_vocab, sentence, single_root)
    return _parse_seqlab(model.averaged_weights, _token_id_list(sentence, bits),
                         bits, model._salts, model.label_vocab)


def parse_corpus(model: LinearModel, sentences: Sequence[Sentence],
                 single_root: bool = True) -> list[DepTree]:
    return [parse_sentence(model, s, single_root) for s in sentences]


# ---------------------------------------------------------------------------
# training


@dataclass
class TrainReport:
    model: LinearModel
    best_epoch: int
    best_dev_las: float
    dev_las_by_epoch: list[float]


def _las_percent(gold: Sequence[DepTree], pred: Sequence[DepTree]) -> float:
    total = correct = 0
    for g, p in zip(gold, pred):
        for i in range(g.n):
            total += 1
            if g.heads[i] == p.heads[i] and g.deprels[i] == p.deprels[i]:
                correct += 1
    return 100.0 * correct / total


@dataclass
class _Prepared:
    sentence: Sentence
    tree: DepTree
    arc_ids: np.ndarray | None = None
    token_ids: list[np.ndarray] | None = None
    gold_label_idx: list[int] | None = None


def _prepare(sentences: Sequence[Sentence], paradigm: str, bits: int,
             label_index: dict[str, int] | None) -> list[_Prepared]:
    out = []
    for s in sentences:
        p = _Prepared(s, s.tree())
        if paradigm in ("graph", "transition"):
            p.arc_ids = arc_id_tensor(s.forms, s.upos, bits)
        else:
            p.token_ids = _token_id_list(s, bits)
            if label_index is not None:
                labels = bracket_codec.encode(p.tree)
                p.gold_label_idx = [
                    label_index[lab.bracket + _SEQLAB_SEP + lab.deprel]
                    for lab in labels
                ]
        out.append(p)
    return out


def _update_graph(aw: AveragedWeights, prep: _Prepared, bits: int,
                  salts: np.ndarray, rel_index: dict[str, int]) -> None:
    ids = prep.arc_ids
    gold = prep.tree
    pred_heads = cle_decode(
        ScoreTable(gold.n, _arc_matrix(aw.w, ids, bits)), single_root=True
    )
    for d in range(1, gold.n + 1):
        g, p = gold.heads[d - 1], pred_heads[d - 1]
        if g != p:
            aw.update(combine(ids[g, d - 1], ARC_CLASS, bits), +1.0)
            aw.update(combine(ids[p, d - 1], ARC_CLASS, bits), -1.0)
    _update_rels(aw, prep, bits, salts, rel_index)


def _update_transition(aw: AveragedWeights, prep: _Prepared, bits: int,
                       salts: np.ndarray, rel_index: dict[str, int]) -> None:
    from .transition import initial_state, oracle_head, step, valid_heads

    ids = prep.arc_ids
    gold = prep.tree
    state = initial_state(gold.n)
    while not state.terminal:
        cands = sorted(valid_heads(state))
        scores = aw.w[combine(ids[cands, state.focus - 1], ARC_CLASS, bits)].sum(axis=-1)
        pred = cands[int(np.argmax(scores))]
        orc = oracle_head(state, gold)
        if pred != orc:
            aw.update(combine(ids[orc, state.focus - 1], ARC_CLASS, bits), +1.0)
            aw.update(combine(ids[pred, state.focus - 1], ARC_CLASS, bits), -1.0)
        state = step(state, orc)
    _update_rels(aw, prep, bits, salts, rel_index)


def _update_rels(aw: AveragedWeights, prep: _Prepared, bits: int,
                 salts: np.ndarray, rel_index: dict[str, int]) -> None:
    ids = prep.arc_ids
    gold = prep.tree
    for d in range(1, gold.n + 1):
        base = ids[gold.heads[d - 1], d - 1]
        m = _combine_matrix(base, salts, bits)
        pred_idx = int(np.argmax(aw.w[m].sum(axis=1)))
        gold_idx = rel_index[gold.deprels[d - 1]]
        if pred_idx != gold_idx:
            aw.update(m[gold_idx], +1.0)
            aw.update(m[pred_idx], -1.0)


def _update_seqlab(aw: AveragedWeights, prep: _Prepared, bits: int,
                   salts: np.ndarray) -> None:
    for base, gold_idx in zip(prep.token_ids, prep.gold_label_idx):
        m = _combine_matrix(base, salts, bits)
        pred_idx = int(np.argmax(aw.w[m].sum(axis=1)))
        if pred_idx != gold_idx:
            aw.update(m[gold_idx], +1.0)
            aw.update(m[pred_idx], -1.0)


def _dev_parse(paradigm: str, w: np.ndarray, prepared: Sequence[_Prepared],
               bits: int, salts: np.ndarray, vocab: list[str]) -> list[DepTree]:
    out = []
    for p in prepared:
        if paradigm == "graph":
            out.append(_parse_graph(w, p.arc_ids, bits, salts, vocab, True))
        elif paradigm == "transition":
            out.append(_parse_transition(w, p.arc_ids, bits, salts, vocab,
                                         p.sentence, True))
        else:
            out.append(_parse_seqlab(w, p.token_ids, bits, salts, vocab))
    return out


def train(
    train_corpus: Sequence[Sentence],
    dev_corpus: Sequence[Sentence],
    paradigm: str,
    config: TrainConfig | None = None,
    progress: Callable[[int, float, float], None] | None = None,
) -> TrainReport:
    """Train one paradigm's scorer with per-epoch dev LAS early stopping.

    Stops after ``patience`` epochs without a new best dev LAS (or at
    ``max_epochs``) and returns the averaged weights of the best epoch.
    """
    if config is None:
        config = TrainConfig()
    if paradigm not in PARADIGMS:
        raise TreeValidationError(f"unknown paradigm {paradigm!r}")
    if not train_corpus or not dev_corpus:
        raise TreeValidationError("training needs non-empty train and dev corpora")

    bits = config.feature_space_bits
    if paradigm == "seqlab":
        pairs = bracket_codec.label_vocabulary(s.tree() for s in train_corpus)
        vocab = [br + _SEQLAB_SEP + rel for br, rel in pairs]
        prefix = _LABEL_PREFIX
    else:
        vocab = sorted({r for s in train_corpus for r in s.deprels})
        prefix = _REL_PREFIX
    if not vocab:
        raise TreeValidationError("empty label vocabulary")
    salts = _class_salts(prefix, vocab)
    index = {name: i for i, name in enumerate(vocab)}

    prepared = _prepare(train_corpus, paradigm, bits, index)
    dev_prepared = _prepare(dev_corpus, paradigm, bits, None)
    dev_gold = [p.tree for p in dev_prepared]

    aw = AveragedWeights(2 ** bits)
    rng = random.Random(config.shuffle_seed)
    order = list(range(len(prepared)))

    best_las = -1.0
    best_epoch = 0
    best_avg: np.ndarray | None = None
    stale = 0
    history: list[float] = []

    for epoch in range(1, config.max_epochs + 1):
        rng.shuffle(order)
        for idx in order:
            prep = prepared[idx]
            if paradigm == "graph":
                _update_graph(aw, prep, bits, salts, index)
            elif paradigm == "transition":
                _update_transition(aw, prep, bits, salts, index)
            else:
                _update_seqlab(aw, prep, bits, salts)
            aw.finish_instance()
        averaged = aw.averaged()
        pred = _dev_parse(paradigm, averaged, dev_prepared, bits, salts, vocab)
        las = _las_percent(dev_gold, pred)
        history.append(las)
        if las > best_las:
            best_las = las
            best_epoch = epoch
            best_avg = averaged
            stale = 0
        else:
            stale += 1
        if progress is not None:
            progress(epoch, las, best_las)
        if stale >= config.patience:
            break

    assert best_avg is not None
    model = LinearModel(paradigm, bits, list(vocab), aw.w.copy(), best_avg)
    return TrainReport(model, best_epoch, best_las, history)


# ---------------------------------------------------------------------------
# model files: magic, version, paradigm, bits, vocabulary, sparse weights


def save_model(model: LinearModel, path: str) -> None:
    """Binary model file; layout documented in the README. Only the averaged
    weights are stored (they drive all decisions)."""
    nz = np.nonzero(model.averaged_weights)[0]
    with open(path, "wb") as fh:
        fh.write(MAGIC)
        fh.write(struct.pack("<I", FORMAT_VERSION))
        p = model.paradigm.encode("utf-8")
        fh.write(struct.pack("<I", len(p)))
        fh.write(p)
        fh.write(struct.pack("<I", model.feature_space_bits))
        fh.write(struct.pack("<I", len(model.label_vocab)))
        for name in model.label_vocab:
            b = name.encode("utf-8")
            fh.write(struct.pack("<I", len(b)))
            fh.write(b)
        fh.write(struct.pack("<Q", len(nz)))
        for i in nz:
            fh.write(struct.pack("<Qd", int(i), float(model.averaged_weights[i])))


def _read_exact(fh, n: int) -> bytes:
    data = fh.read(n)
    if len(data) != n:
        raise ModelFormatError("model file is truncated")
    return data


def load_model(path: str) -> LinearModel:
    with open(path, "rb") as fh:
        if _read_exact(fh, 4) != MAGIC:
            raise ModelFormatError("not a depkit model file (bad magic)")
        (version,) = struct.unpack("<I", _read_exact(fh, 4))
        if version != FORMAT_VERSION:
            raise ModelFormatError(f"unsupported model format version {version}")
        (plen,) = struct.unpack("<I", _read_exact(fh, 4))
        paradigm = _read_exact(fh, plen).decode("utf-8")
        (bits,) = struct.unpack("<I", _read_exact(fh, 4))
        (vlen,) = struct.unpack("<I", _read_exact(fh, 4))
        vocab = []
        for _ in range(vlen):
            (ln,) = struct.unpack("<I", _read_exact(fh, 4))
            vocab.append(_read_exact(fh, ln).decode("utf-8"))
        (count,) = struct.unpack("<Q", _read_exact(fh, 8))
        averaged = np.zeros(2 ** bits, dtype=np.float64)
        for _ in range(count):
            i, wv = struct.unpack("<Qd", _read_exact(fh, 16))
            if i >= averaged.size:
                raise ModelFormatError(f"weight id {i} outside feature space")
            averaged[i] = wv
    return LinearModel(paradigm, bits, vocab, averaged.copy(), averaged)
