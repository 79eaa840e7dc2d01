import random

import pytest

from depkit import (
    ConlluParseError,
    Sentence,
    Token,
    TreeValidationError,
    parse_conllu,
    treebank_stats,
    write_conllu,
)

from helpers import random_tree

TINY = (
    "1\tHe\t_\tPRON\t_\t_\t2\tnsubj\t_\t_\n"
    "2\tran\t_\tVERB\t_\t_\t0\troot\t_\t_\n"
    "\n"
)


def test_parse_minimal_sentence():
    sents = parse_conllu(TINY)
    assert len(sents) == 1
    assert sents[0].heads == [2, 0]
    assert sents[0].forms == ["He", "ran"]
    assert sents[0].deprels == ["nsubj", "root"]


def test_parse_empty_input():
    assert parse_conllu("") == []
    assert parse_conllu("\n\n") == []


def test_head_out_of_range_is_validation_error():
    bad = TINY.replace("2\tnsubj", "3\tnsubj")
    with pytest.raises(TreeValidationError):
        parse_conllu(bad)


def test_malformed_lines_carry_line_numbers():
    with pytest.raises(ConlluParseError) as e:
        parse_conllu("1\tonly\tthree\n")
    assert e.value.line == 1
    with pytest.raises(ConlluParseError) as e:
        parse_conllu(TINY + "1\tx\t_\t_\t_\t_\tnot_a_head\t_\t_\t_\n\n")
    assert e.value.line == 4
    with pytest.raises(TreeValidationError):
        parse_conllu("1\tx\t_\t_\t_\t_\t1\tdep\t_\t_\n")  # self-headed
    with pytest.raises(TreeValidationError):
        parse_conllu("2\tx\t_\t_\t_\t_\t0\troot\t_\t_\n")  # ids not 1..n
    with pytest.raises(ConlluParseError):
        parse_conllu("# only a comment, no tokens\n\n")


def test_round_trip_identity_minimal():
    sents = parse_conllu(TINY)
    assert write_conllu(sents) == TINY
    assert parse_conllu(write_conllu(sents))[0].heads == [2, 0]


def test_comment_emitted_before_tokens():
    text = "# sent_id = a\n" + TINY
    sents = parse_conllu(text)
    assert sents[0].sent_id == "a"
    out = write_conllu(sents)
    assert out.startswith("# sent_id = a\n1\tHe")
    assert parse_conllu(out)[0].sent_id == "a"


def test_multiword_tokens_and_empty_nodes_preserved():
    text = (
        "# sent_id = mwt\n"
        "1-2\tdel\t_\t_\t_\t_\t_\t_\t_\t_\n"
        "1\tde\t_\tADP\t_\t_\t3\tcase\t_\t_\n"
        "2\tel\t_\tDET\t_\t_\t3\tdet\t_\t_\n"
        "2.1\tnull\t_\t_\t_\t_\t_\t_\t_\t_\n"
        "3\tmar\t_\tNOUN\t_\t_\t0\troot\t_\t_\n"
        "\n"
    )
    sents = parse_conllu(text)
    assert sents[0].n == 3  # ranges and empty nodes skipped for parsing
    assert sents[0].heads == [3, 3, 0]
    assert write_conllu(sents) == text


def test_round_trip_random_corpora():
    rng = random.Random(5)
    forms_pool = ["word", "λέξη", "müde", "словцо", "x'y", "a-b", "😺"]
    corpus = []
    for k in range(1000):
        tree = random_tree(rng.randint(1, 9), rng)
        tokens = [
            Token(
                id=i + 1,
                form=rng.choice(forms_pool),
                upos=rng.choice(["NOUN", "VERB", "_"]),
                head=tree.heads[i],
                deprel=tree.deprels[i],
            )
            for i in range(tree.n)
        ]
        corpus.append(Sentence(tokens, comments=[f"# sent_id = s{k}"]))
    back = parse_conllu(write_conllu(corpus))
    assert len(back) == len(corpus)
    for a, b in zip(corpus, back):
        assert a.forms == b.forms
        assert a.heads == b.heads
        assert a.deprels == b.deprels
        assert a.upos == b.upos
        assert [t.id for t in a.tokens] == [t.id for t in b.tokens]


def _sent(heads, forms=None, upos=None, deprels=None):
    n = len(heads)
    forms = forms or [f"w{i}" for i in range(1, n + 1)]
    upos = upos or ["_"] * n
    deprels = deprels or ["dep"] * n
    return Sentence(
        [
            Token(id=i + 1, form=forms[i], upos=upos[i], head=heads[i], deprel=deprels[i])
            for i in range(n)
        ]
    )


def test_stats_counts_and_lengths():
    s1 = _sent([0, 1, 1])
    s2 = _sent([2, 0, 2, 2, 2])
    st = treebank_stats([s1, s2])
    assert st.sentence_count == 2
    assert st.token_count == 8
    assert st.avg_sentence_length == 4.0


def test_stats_nonprojective_pct():
    # arcs 3->1 and 4->2 cross; the other two arcs are fine: 2 of 4 arcs
    st = treebank_stats([_sent([3, 4, 0, 3])])
    assert st.nonprojective_arc_pct == 50.0
    proj = treebank_stats([_sent([2, 0, 2])])
    assert proj.nonprojective_arc_pct == 0.0


def test_stats_word_lengths_in_code_points():
    st = treebank_stats([_sent([0, 1], forms=["ab", "abcd"])])
    assert st.avg_word_length == 3.0
    # two code points each, regardless of their UTF-8 byte width
    st2 = treebank_stats([_sent([0, 1], forms=["한국", "добрый"[:2]])])
    assert st2.avg_word_length == 2.0


def test_stats_additivity_and_bounds():
    rng = random.Random(9)
    a = [_sent(random_tree(rng.randint(1, 8), rng).heads) for _ in range(30)]
    b = [_sent(random_tree(rng.randint(1, 8), rng).heads) for _ in range(20)]
    st_a, st_b, st_ab = treebank_stats(a), treebank_stats(b), treebank_stats(a + b)
    assert st_ab.token_count == st_a.token_count + st_b.token_count
    assert 0.0 <= st_ab.nonprojective_arc_pct <= 100.0


def test_stats_empty_corpus_is_error():
    with pytest.raises(TreeValidationError):
        treebank_stats([])
