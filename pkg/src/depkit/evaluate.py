"""Attachment-score computation (UAS/LAS) with an optional punctuation
exclusion, reported at two decimals with half-up rounding."""

from __future__ import annotations

import json
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from typing import Sequence

from .conllu import Sentence
from .errors import AlignmentError, TreeValidationError

PUNCT_POLICIES = ("include", "exclude_upos_punct")


def round_half_up(value: float, ndigits: int = 2) -> float:
    quantum = Decimal(1).scaleb(-ndigits)
    return float(Decimal(repr(value)).quantize(quantum, rounding=ROUND_HALF_UP))


@dataclass(frozen=True)
class EvalResult:
    """Percentages kept at full precision; rendering rounds half-up."""

    uas: float
    las: float
    token_count: int
    punct_policy: str

    def render_tsv(self) -> str:
        return f"{round_half_up(self.uas):.2f}\t{round_half_up(self.las):.2f}\t{self.token_count}"

    def render_json(self) -> str:
        return json.dumps(
            {
                "uas": round_half_up(self.uas),
                "las": round_half_up(self.las),
                "tokens": self.token_count,
                "punct_policy": self.punct_policy,
            }
        )


def score(
    gold: Sequence[Sentence],
    pred: Sequence[Sentence],
    punct_policy: str = "include",
) -> EvalResult:
    """UAS/LAS of ``pred`` against ``gold``.

    The corpora must align sentence for sentence and token for token (same
    forms). Under ``exclude_upos_punct``, tokens whose gold UPOS is PUNCT
    leave both numerator and denominator.
    """
    if punct_policy not in PUNCT_POLICIES:
        raise TreeValidationError(f"unknown punctuation policy {punct_policy!r}")
    if len(gold) != len(pred):
        raise AlignmentError(
            f"gold has {len(gold)} sentences, prediction has {len(pred)}"
        )
    total = head_ok = both_ok = 0
    for k, (g, p) in enumerate(zip(gold, pred), start=1):
        if g.n != p.n or g.forms != p.forms:
            name = g.sent_id or f"#{k}"
            raise AlignmentError(f"sentence {name} differs between gold and prediction")
        for gt, pt in zip(g.tokens, p.tokens):
            if punct_policy == "exclude_upos_punct" and gt.upos == "PUNCT":
                continue
            total += 1
            if gt.head == pt.head:
                head_ok += 1
                if gt.deprel == pt.deprel:
                    both_ok += 1
    if total == 0:
        raise TreeValidationError("no tokens left to score")
    return EvalResult(
        uas=100.0 * head_ok / total,
        las=100.0 * both_ok / total,
        token_count=total,
        punct_policy=punct_policy,
    )
