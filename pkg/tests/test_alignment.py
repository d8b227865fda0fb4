import math
import random

import pytest
from hypothesis import given, strategies as st

from oracles import align_oracle
from vocabfix.alignment import (DEL, INS, SMOOTHING_ARITY, SUB, EditCostTable, align_corpus,
                                align_pair, costs_from_alignments, estimate_costs,
                                read_parallel_corpus, write_parallel_corpus)
from vocabfix.errors import InvalidInputError, ParseError
from vocabfix.text import ALPHABET

KIND = {SUB: "sub", INS: "ins", DEL: "del"}


def oracle_for(src, tgt, table):
    return align_oracle(src, tgt, table.sub, table.ins, table.dele)


def as_moves(pair):
    return tuple((KIND[k], a, b) for k, a, b in pair.ops)


def random_int_table(rng, alphabet):
    sub = {(a, b): 0.0 if a == b else float(rng.randint(1, 4)) for a in alphabet for b in alphabet}
    ins = {a: float(rng.randint(1, 4)) for a in alphabet}
    dele = {a: float(rng.randint(1, 4)) for a in alphabet}
    return EditCostTable(sub, ins, dele, 9.0)


def test_identity_alignment():
    pair = align_pair("lucas", "lucas")
    assert pair.cost == 0
    assert pair.units == tuple((c, c) for c in "lucas")


def test_forced_deletion():
    pair = align_pair("luc", "lu")
    assert pair.rendered_units() == ["l", "u", "<DEL>"]
    assert pair.cost == 1


def test_lucas_lookez_matches_oracle():
    unit = EditCostTable.unit()
    pair = align_pair("lucas", "lookez", unit)
    cost, moves = oracle_for("lucas", "lookez", unit)
    assert pair.cost == cost == 5
    assert as_moves(pair) == moves
    assert "".join(t for _, t in pair.units) == "lookez"


def test_join_rendering_attaches_insertions_to_previous_char():
    table = estimate_costs([("luc", "luk"), ("c", "k"), ("a", "a")], rounds=1)
    assert align_pair("luc", "luke", table).rendered_units() == ["l", "u", "k+e"]


def test_unit_cost_tie_break_prefers_late_substitution():
    # both paths cost 2; the backtrace takes the final substitution c->e
    assert align_pair("luc", "luke").rendered_units() == ["l", "u+k", "e"]


def test_leading_insertion_attaches_to_first_char():
    pair = align_pair("ab", "xab")
    assert pair.units[0] == ("a", "xa")
    assert pair.rendered_units() == ["x+a", "b"]


def test_empty_correct_rejected():
    with pytest.raises(InvalidInputError):
        align_pair("", "abc")


def test_random_pairs_match_oracle_with_integer_costs():
    rng = random.Random(5)
    alphabet = "abcde_"
    for _ in range(200):
        table = random_int_table(rng, alphabet)
        src = "".join(rng.choice(alphabet) for _ in range(rng.randint(1, 8)))
        tgt = "".join(rng.choice(alphabet) for _ in range(rng.randint(0, 8)))
        pair = align_pair(src, tgt, table)
        cost, moves = oracle_for(src, tgt, table)
        assert (pair.cost, as_moves(pair)) == (cost, moves)


short = st.text(alphabet="abcd", min_size=1, max_size=8)


@given(short, short)
def test_unit_cost_is_symmetric(a, b):
    assert align_pair(a, b).cost == align_pair(b, a).cost


@given(short, st.text(alphabet="abcd", max_size=8))
def test_units_reproduce_both_sides(a, b):
    pair = align_pair(a, b)
    assert "".join(s for s, _ in pair.units) == a
    assert "".join(t for _, t in pair.units) == b


@given(short)
def test_self_alignment_is_all_identity(a):
    table = estimate_costs([("abca", "abka"), ("dd", "d")], rounds=1)
    pair = align_pair(a, a, table)
    assert all(s == t for s, t in pair.units)
    assert pair.cost == pytest.approx(sum(table.sub(c, c) for c in a))


def test_estimate_costs_hand_count():
    corpus = [("ab", "ab")] * 9 + [("ab", "ac")]
    table = estimate_costs(corpus, rounds=1)
    # b seen 10 times as a source; arity = alphabet + deletion
    assert SMOOTHING_ARITY == len(ALPHABET) + 1
    assert table.sub("b", "c") == pytest.approx(-math.log(2 / (10 + SMOOTHING_ARITY)), abs=1e-12)
    assert table.sub("b", "b") == pytest.approx(-math.log(10 / (10 + SMOOTHING_ARITY)), abs=1e-12)
    assert table.dele("b") == pytest.approx(-math.log(1 / (10 + SMOOTHING_ARITY)), abs=1e-12)
    # 20 events in total; insertions are relative to all events
    assert table.ins("x") == pytest.approx(-math.log(1 / (20 + len(ALPHABET))), abs=1e-12)
    assert table.default_cost == pytest.approx(math.log(SMOOTHING_ARITY))


def test_identical_pairs_make_identity_cheapest():
    table = estimate_costs([("abc", "abc"), ("ca", "ca")], rounds=1)
    for a in "abc":
        others = [table.sub(a, b) for b in ALPHABET if b != a]
        assert table.sub(a, a) < min(others)


def test_identity_is_row_minimum_even_when_rarely_observed():
    table = estimate_costs([("a", "b")] * 5 + [("a", "a")], rounds=1)
    assert table.sub("a", "a") <= min(table.sub("a", b) for b in ALPHABET)


def test_second_round_is_reestimation_fixpoint_step():
    corpus = [("lucas", "lookez"), ("schlaitdorf", "schleiddorf"), ("ab", "ac"), ("ph", "f")]
    one = estimate_costs(corpus, rounds=1)
    two = estimate_costs(corpus, rounds=2)
    assert two == costs_from_alignments(align_corpus(corpus, one))


def test_estimate_costs_is_permutation_stable():
    corpus = [("lucas", "lookez"), ("ab", "ac"), ("ab", "ab"), ("ph", "f")] * 2
    shuffled = corpus[::-1]
    assert estimate_costs(corpus) == estimate_costs(shuffled)


def test_estimate_costs_rejects_empty():
    with pytest.raises(InvalidInputError):
        estimate_costs([])


def test_cost_table_roundtrip(tmp_path):
    table = estimate_costs([("lucas", "lookez"), ("ab", "ac")])
    path = tmp_path / "costs.tsv"
    table.save(path)
    assert EditCostTable.load(path) == table


def test_cost_table_rejects_negative():
    with pytest.raises(InvalidInputError):
        EditCostTable({("a", "b"): -1.0})


def test_parallel_corpus_io(tmp_path):
    path = tmp_path / "c.tsv"
    write_parallel_corpus(path, [("tyne_wear", "tine_where")])
    assert read_parallel_corpus(path) == [("tyne_wear", "tine_where")]
    path.write_text("only one column\n")
    with pytest.raises(ParseError, match="line 1"):
        read_parallel_corpus(path)
