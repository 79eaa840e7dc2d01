"""CoNLL-U reading, writing, and corpus statistics.

The reader keeps everything it does not interpret: comment lines, the four
column values the parsers never touch, multiword-token ranges, and empty
nodes all survive a parse/write round trip byte for byte (modulo nothing:
token lines are re-emitted from their parsed fields, which normalises no
values because all ten columns are stored verbatim).
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

from .errors import ConlluParseError, TreeValidationError
from .tree import DepTree, count_nonprojective_arcs

_NCOLS = 10


@dataclass(frozen=True)
class Token:
    """One syntactic word: the ten CoNLL-U columns with ID/HEAD as ints."""

    id: int
    form: str
    lemma: str = "_"
    upos: str = "_"
    xpos: str = "_"
    feats: str = "_"
    head: int = 0
    deprel: str = "_"
    deps: str = "_"
    misc: str = "_"

    def to_line(self) -> str:
        return "\t".join(
            (
                str(self.id),
                self.form,
                self.lemma,
                self.upos,
                self.xpos,
                self.feats,
                str(self.head),
                self.deprel,
                self.deps,
                self.misc,
            )
        )


@dataclass
class Sentence:
    """One sentence block: tokens plus everything needed to re-emit it.

    ``extras`` holds multiword-token and empty-node lines verbatim, anchored
    to the index of the token they precede (``len(tokens)`` anchors after the
    last token). They are excluded from parsing and statistics.
    """

    tokens: list[Token]
    comments: list[str] = field(default_factory=list)
    extras: list[tuple[int, str]] = field(default_factory=list)

    @property
    def n(self) -> int:
        return len(self.tokens)

    @property
    def sent_id(self) -> str | None:
        for line in self.comments:
            body = line.lstrip("#").strip()
            if body.startswith("sent_id"):
                _, _, value = body.partition("=")
                return value.strip()
        return None

    @property
    def forms(self) -> list[str]:
        return [t.form for t in self.tokens]

    @property
    def upos(self) -> list[str]:
        return [t.upos for t in self.tokens]

    @property
    def heads(self) -> list[int]:
        return [t.head for t in self.tokens]

    @property
    def deprels(self) -> list[str]:
        return [t.deprel for t in self.tokens]

    def tree(self) -> DepTree:
        return DepTree(self.heads, self.deprels)

    def with_tree(self, tree: DepTree) -> "Sentence":
        """Copy of this sentence with HEAD/DEPREL replaced by ``tree``."""
        if tree.n != self.n:
            raise TreeValidationError(
                f"tree has {tree.n} tokens, sentence has {self.n}"
            )
        tokens = [
            replace(tok, head=tree.heads[i], deprel=tree.deprels[i])
            for i, tok in enumerate(self.tokens)
        ]
        return Sentence(tokens, list(self.comments), list(self.extras))


@dataclass(frozen=True)
class TreebankStats:
    sentence_count: int
    token_count: int
    avg_sentence_length: float
    nonprojective_arc_pct: float
    avg_word_length: float


def _is_extra_id(col: str) -> bool:
    # multiword ranges look like "1-2", empty nodes like "1.1"
    return "-" in col or "." in col


def parse_conllu(source: str | Iterable[str]) -> list[Sentence]:
    """Parse CoNLL-U text (a string or an iterable of lines) into sentences.

    Raises :class:`ConlluParseError` with a line number for malformed lines
    and :class:`TreeValidationError` for heads outside 0..n or self-heads.
    """
    if isinstance(source, str):
        source = io.StringIO(source)
    sentences: list[Sentence] = []
    comments: list[str] = []
    tokens: list[Token] = []
    extras: list[tuple[int, str]] = []
    block_start = 1

    def flush(line_no: int) -> None:
        nonlocal comments, tokens, extras
        if not comments and not tokens and not extras:
            return
        if not tokens:
            raise ConlluParseError("sentence block has no token lines", block_start)
        expected = list(range(1, len(tokens) + 1))
        if [t.id for t in tokens] != expected:
            raise TreeValidationError(
                f"token ids are not consecutive 1..{len(tokens)} "
                f"in block ending at line {line_no}"
            )
        n = len(tokens)
        for t in tokens:
            if not 0 <= t.head <= n:
                raise TreeValidationError(
                    f"head {t.head} of token {t.id} outside 0..{n} "
                    f"in block ending at line {line_no}"
                )
            if t.head == t.id:
                raise TreeValidationError(
                    f"token {t.id} is its own head in block ending at line {line_no}"
                )
        sentences.append(Sentence(tokens, comments, extras))
        comments, tokens, extras = [], [], []

    line_no = 0
    for line_no, raw in enumerate(source, start=1):
        line = raw.rstrip("\n").rstrip("\r")
        if not line.strip():
            flush(line_no)
            block_start = line_no + 1
            continue
        if line.startswith("#"):
            if tokens:
                extras.append((len(tokens), line))
            else:
                comments.append(line)
            continue
        cols = line.split("\t")
        if len(cols) != _NCOLS:
            raise ConlluParseError(
                f"expected {_NCOLS} tab-separated columns, found {len(cols)}", line_no
            )
        if _is_extra_id(cols[0]):
            extras.append((len(tokens), line))
            continue
        try:
            tok_id = int(cols[0])
        except ValueError:
            raise ConlluParseError(f"non-numeric token id {cols[0]!r}", line_no) from None
        try:
            head = int(cols[6])
        except ValueError:
            raise ConlluParseError(f"non-numeric head {cols[6]!r}", line_no) from None
        tokens.append(
            Token(
                id=tok_id,
                form=cols[1],
                lemma=cols[2],
                upos=cols[3],
                xpos=cols[4],
                feats=cols[5],
                head=head,
                deprel=cols[7],
                deps=cols[8],
                misc=cols[9],
            )
        )
    flush(line_no + 1)
    return sentences


def write_conllu(sentences: Sequence[Sentence]) -> str:
    """Serialize sentences back to CoNLL-U text (one blank line after each)."""
    out: list[str] = []
    for sent in sentences:
        out.extend(sent.comments)
        by_anchor: dict[int, list[str]] = {}
        for anchor, line in sent.extras:
            by_anchor.setdefault(anchor, []).append(line)
        for idx, tok in enumerate(sent.tokens):
            out.extend(by_anchor.get(idx, ()))
            out.append(tok.to_line())
        out.extend(by_anchor.get(len(sent.tokens), ()))
        out.append("")
    return "\n".join(out) + ("\n" if out else "")


def read_conllu_file(path: str) -> list[Sentence]:
    with open(path, encoding="utf-8") as fh:
        return parse_conllu(fh)


def write_conllu_file(path: str, sentences: Sequence[Sentence]) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(write_conllu(sentences))


def treebank_stats(sentences: Sequence[Sentence]) -> TreebankStats:
    """Corpus-level counts: sentences, tokens, average length, the percentage
    of non-projective arcs (root arcs count as projective, every arc counts
    in the denominator), and average word length in Unicode code points."""
    if not sentences:
        raise TreeValidationError("cannot compute statistics of an empty corpus")
    sent_count = len(sentences)
    token_count = sum(s.n for s in sentences)
    nonproj = sum(count_nonprojective_arcs(s.heads) for s in sentences)
    chars = sum(len(tok.form) for s in sentences for tok in s.tokens)
    return TreebankStats(
        sentence_count=sent_count,
        token_count=token_count,
        avg_sentence_length=token_count / sent_count,
        nonprojective_arc_pct=100.0 * nonproj / token_count,
        avg_word_length=chars / token_count,
    )
