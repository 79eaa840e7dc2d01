"""Hashed feature extraction for the linear scorers.

Feature strings are hashed with CRC-32 (stable across runs and platforms,
unlike the salted builtin ``hash``) and masked into the model's feature
space. Relation and tag identities are mixed in afterwards with a second
hash so one weight vector serves every output class.
"""

from __future__ import annotations

import zlib
from typing import Sequence

import numpy as np

ROOT_FORM = "<root>"
ROOT_UPOS = "<root>"
PAD = "<pad>"

_MIX_A = np.uint64(0x9E3779B97F4A7C15)
_MIX_B = np.uint64(0xC2B2AE3D27D4EB4F)

# distance bins: 1, 2, 3, 4, 5-6, 7-10, >10, signed by direction
_BIN_EDGES = ((1, "1"), (2, "2"), (3, "3"), (4, "4"), (6, "5-6"), (10, "7-10"))


def distance_bin(head: int, dep: int) -> str:
    delta = dep - head
    sign = "+" if delta > 0 else "-"
    mag = abs(delta)
    for edge, name in _BIN_EDGES:
        if mag <= edge:
            return sign + name
    return sign + ">10"


def _hash(s: str) -> int:
    return zlib.crc32(s.encode("utf-8"))


def hash_ids(strings: Sequence[str], bits: int) -> np.ndarray:
    mask = (1 << bits) - 1
    return np.fromiter(
        (_hash(s) & mask for s in strings), dtype=np.int64, count=len(strings)
    )


def salt(tag: str) -> int:
    """Stable per-class salt used to mix a label into base feature ids."""
    return _hash(tag)


def combine(base_ids: np.ndarray, class_salt: int, bits: int) -> np.ndarray:
    """Mix a class salt into base feature ids, back into the feature space."""
    mask = np.uint64((1 << bits) - 1)
    # fold the salt product in Python ints: numpy warns on scalar overflow
    salt_term = np.uint64((class_salt * 0xC2B2AE3D27D4EB4F) & 0xFFFFFFFFFFFFFFFF)
    mixed = base_ids.astype(np.uint64) * _MIX_A + salt_term
    return (mixed & mask).astype(np.int64)


def _tok(seq: Sequence[str], i: int, boundary: str = PAD) -> str:
    # i is 1-based; 0 and n+1 fall off the sentence
    if 1 <= i <= len(seq):
        return seq[i - 1]
    return boundary


def arc_feature_strings(
    forms: Sequence[str], upos: Sequence[str], head: int, dep: int
) -> list[str]:
    """Templates for scoring the arc head->dep (head 0 is the root).

    Forms and tags of both endpoints, their conjunctions, the signed binned
    distance, and the surrounding-tag bigrams of each endpoint.
    """
    hf = ROOT_FORM if head == 0 else forms[head - 1]
    hp = ROOT_UPOS if head == 0 else upos[head - 1]
    df = forms[dep - 1]
    dp = upos[dep - 1]
    dist = distance_bin(head, dep)
    hp_prev = PAD if head == 0 else _tok(upos, head - 1)
    hp_next = PAD if head == 0 else _tok(upos, head + 1)
    return [
        f"a:hf={hf}",
        f"a:hp={hp}",
        f"a:df={df}",
        f"a:dp={dp}",
        f"a:hf|df={hf}|{df}",
        f"a:hp|dp={hp}|{dp}",
        f"a:dist={dist}",
        f"a:hp|dp|dist={hp}|{dp}|{dist}",
        f"a:hpbg={hp_prev}|{hp}",
        f"a:hpbg2={hp}|{hp_next}",
        f"a:dpbg={_tok(upos, dep - 1)}|{dp}",
        f"a:dpbg2={dp}|{_tok(upos, dep + 1)}",
    ]


def token_feature_strings(
    forms: Sequence[str], upos: Sequence[str], i: int
) -> list[str]:
    """Window templates for tagging token ``i``: forms and tags at offsets
    -2..+2 plus up-to-3-character prefixes and suffixes of the token."""
    feats = []
    for off in range(-2, 3):
        feats.append(f"t:f{off:+d}={_tok(forms, i + off)}")
        feats.append(f"t:p{off:+d}={_tok(upos, i + off)}")
    form = forms[i - 1]
    for k in range(1, min(3, len(form)) + 1):
        feats.append(f"t:pre{k}={form[:k]}")
        feats.append(f"t:suf{k}={form[-k:]}")
    return feats


def arc_features(sentence, head: int, dep: int, bits: int) -> np.ndarray:
    """Hashed feature ids (< 2**bits) for the arc head->dep of a sentence."""
    return hash_ids(arc_feature_strings(sentence.forms, sentence.upos, head, dep), bits)


def token_features(sentence, i: int, bits: int) -> np.ndarray:
    """Hashed feature ids (< 2**bits) for tagging token ``i`` of a sentence."""
    return hash_ids(token_feature_strings(sentence.forms, sentence.upos, i), bits)


ARC_TEMPLATE_COUNT = 12


def arc_id_tensor(forms: Sequence[str], upos: Sequence[str], bits: int) -> np.ndarray:
    """Hashed ids for every (head, dep) pair: shape (n+1, n, templates).

    Row h, column d-1 holds the ids of arc h->d; the diagonal entries are
    junk (an arc never points at its own head) and must be masked by users.
    """
    n = len(forms)
    out = np.empty((n + 1, n, ARC_TEMPLATE_COUNT), dtype=np.int64)
    for h in range(n + 1):
        for d in range(1, n + 1):
            out[h, d - 1] = hash_ids(arc_feature_strings(forms, upos, h, d), bits)
    return out
