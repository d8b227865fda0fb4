import random

import pytest
from hypothesis import given, strategies as st

from vocabfix.alignment import EditCostTable, align_corpus, align_pair
from vocabfix.errors import InvalidInputError, ParseError
from vocabfix.mappings import (HEADER, NgramMapping, by_source, costs_from_mappings,
                               extract_mappings, load_mappings, save_mappings, window_counts)

UNIT = EditCostTable.unit()


def test_luc_luk_window_counts():
    corpus = [("luc", "luc")] * 8 + [("luc", "luk")] * 2
    maps = {(m.src, m.dst): m for m in extract_mappings(align_corpus(corpus, UNIT))}
    m = maps[("l u c", "l u k")]
    assert (m.joint_count, m.src_count, m.cond_prob) == (2, 10, 0.2)
    assert maps[("l u c", "l u c")].joint_count == 8
    assert maps[("c", "k")].cond_prob == 0.2
    assert maps[("l u", "l u")].cond_prob == 1.0


def test_joint_counts_sum_to_source_count_before_pruning():
    rng = random.Random(2)
    corpus = []
    for _ in range(40):
        a = "".join(rng.choice("abc") for _ in range(rng.randint(1, 6)))
        b = "".join(rng.choice("abcd") for _ in range(rng.randint(0, 6)))
        corpus.append((a, b))
    joint, totals = window_counts(align_corpus(corpus, UNIT))
    sums = {}
    for (src, _), c in joint.items():
        sums[src] = sums.get(src, 0) + c
    assert sums == dict(totals)


def test_single_pair_high_threshold_keeps_certain_mappings():
    out = extract_mappings([align_pair("lucas", "lookez")], min_prob=0.99)
    assert out and all(m.cond_prob == 1.0 for m in out)


def test_identity_mappings_are_retained():
    out = extract_mappings(align_corpus([("ab", "ab")], UNIT))
    assert NgramMapping("a b", "a b", 1, 1) in out


def test_cond_prob_sum_at_most_one_per_source():
    corpus = [("lucas", "lookez"), ("lucas", "lucas"), ("luc", "luke")]
    for group in by_source(extract_mappings(align_corpus(corpus, UNIT))).values():
        assert sum(m.cond_prob for m in group) <= 1 + 1e-12


def test_table_row_roundtrips(tmp_path):
    rows = [NgramMapping("l u c", "l u k+e", 565, 1000), NgramMapping("l u c", "l u <DEL>", 12, 1000)]
    path = tmp_path / "m.tsv"
    save_mappings(path, rows)
    text = path.read_text()
    assert text.splitlines()[0] == HEADER
    assert "l u c\tl u k+e\t565\t1000" in text
    assert load_mappings(path) == rows
    save_mappings(path, load_mappings(path))
    assert path.read_text() == text


def test_empty_collection_roundtrip(tmp_path):
    path = tmp_path / "m.tsv"
    save_mappings(path, [])
    assert path.read_text() == HEADER + "\n"
    assert load_mappings(path) == []


def test_malformed_row_reports_line(tmp_path):
    path = tmp_path / "m.tsv"
    path.write_text(HEADER + "\na\tb\t1\t2\nl u\tl\t1\t2\n")
    with pytest.raises(ParseError, match="line 3"):
        load_mappings(path)


def test_mapping_validation():
    with pytest.raises(InvalidInputError):
        NgramMapping("a b c d e f", "a b c d e f", 1, 1)
    with pytest.raises(InvalidInputError):
        NgramMapping("a", "a", 3, 2)


chars = st.sampled_from("abc'_")


@st.composite
def mappings(draw):
    out = set()
    for _ in range(draw(st.integers(0, 8))):
        n = draw(st.integers(1, 5))
        src = [draw(chars) for _ in range(n)]
        dst = [draw(st.sampled_from(["<DEL>", "a", "k+e", "b", "_"])) for _ in range(n)]
        total = draw(st.integers(1, 50))
        out.add(NgramMapping(" ".join(src), " ".join(dst), draw(st.integers(1, total)), total))
    return sorted(out)


@given(mappings())
def test_random_collections_roundtrip(tmp_path_factory, ms):
    path = tmp_path_factory.mktemp("m") / "m.tsv"
    save_mappings(path, ms)
    assert sorted(load_mappings(path)) == ms


def test_costs_from_mappings_favor_observed_edits():
    corpus = [("ab", "ab")] * 5 + [("ab", "ak")] * 5
    costs = costs_from_mappings(extract_mappings(align_corpus(corpus, UNIT)))
    assert costs.sub("b", "k") < costs.sub("b", "z")
