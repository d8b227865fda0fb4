import random

import pytest
from hypothesis import given, strategies as st

from oracles import word_errors_oracle
from vocabfix.errors import InvalidInputError
from vocabfix.index import UserVocabulary
from vocabfix.metrics import (EvalCounts, EvalReport, diff_keyword_metrics, evaluate,
                              ideal_wer, misrecognized, recall_precision, topk_recall,
                              utterance_counts, wer, word_errors)
from vocabfix.retrieval import CandidateHit, CandidateSet, Fragment

VOCAB = UserVocabulary(["lucas", "schlaitdorf", "wurttemberg", "reilly", "tyne_wear"])

FIXTURE = [
    # (reference, baseline, corrected)
    ("we met lucas today", "we met lucas today", "we met lucas today"),
    ("came from schlaitdorf", "came from schleiddorf", "came from schlaitdorf"),
    ("visit wurttemberg now", "visit wurteenberg now", "visit wurteenberg now"),
    ("an artist's really to fail", "an artist's really to fail", "an artist's reilly to fail"),
    ("hello there", "hello there", "hello there"),
]


def test_wer_examples():
    assert wer("a b c d", "a b c d") == 0
    assert wer("a b c d", "a x c") == 0.5
    assert wer("a", "a b c") == 2.0
    with pytest.raises(InvalidInputError):
        wer("", "a")


def test_wer_matches_oracle():
    rng = random.Random(6)
    for _ in range(1000):
        ref = [rng.choice("abcd") for _ in range(rng.randint(1, 8))]
        hyp = [rng.choice("abcde") for _ in range(rng.randint(0, 8))]
        assert word_errors(ref, hyp) == word_errors_oracle(ref, hyp)


def test_ideal_wer_hand_example():
    ref = "we drove from schlaitdorf to the big city last night"
    base = "we drove from schleiddorf to the bag city last night"
    assert wer(ref, base) == 0.2
    assert ideal_wer(ref, base, VOCAB) == 0.1


def test_ideal_wer_trivial_cases():
    assert ideal_wer("see lucas", "see lucas", VOCAB) == 0
    assert ideal_wer("lucas in tyne wear", "lookez in tiny where", VOCAB) == 0


@given(st.lists(st.sampled_from(["lucas", "tyne", "wear", "a", "b"]), min_size=1, max_size=8),
       st.lists(st.sampled_from(["lucas", "tyne", "wear", "a", "b", "lookez"]), max_size=8))
def test_ideal_never_worse_than_baseline(ref, hyp):
    assert ideal_wer(ref, hyp, VOCAB) <= wer(ref, hyp)


def test_one_of_each_case():
    counts, (rec, prec) = diff_keyword_metrics(*zip(*FIXTURE), VOCAB)
    assert counts.as_tuple() == (1, 1, 1, 1)
    assert (rec, prec) == (0.5, 0.5)
    per = [utterance_counts(r, b, c, VOCAB).as_tuple() for r, b, c in FIXTURE]
    assert per == [(0, 0, 0, 1), (1, 0, 0, 0), (0, 1, 0, 0), (0, 0, 1, 0), (0, 0, 0, 0)]


def test_destroyed_phrase_counts_as_fp_only():
    assert utterance_counts("see lucas", "see lucas", "see lukas", VOCAB).as_tuple() == (0, 0, 1, 0)


def test_unchanged_everything_is_undefined():
    counts, (rec, prec) = diff_keyword_metrics(["see lucas"], ["see lucas"], ["see lucas"], VOCAB)
    assert counts.as_tuple() == (0, 0, 0, 1) and rec is None and prec is None


def test_recall_precision_arithmetic():
    assert recall_precision(EvalCounts(67, 33, 0, 0)) == (0.67, 1.0)


@given(st.integers(0, 50), st.integers(0, 50), st.integers(0, 50))
def test_recall_bounds_and_monotone(better, missed, fp):
    rec, prec = recall_precision(EvalCounts(better, missed, fp))
    for x in (rec, prec):
        assert x is None or 0 <= x <= 1
    more, _ = recall_precision(EvalCounts(better + 1, missed, fp))
    assert rec is None or more >= rec


def cset(*phrases):
    hits = [CandidateHit(i, p, 2, 1.0, (0, 1)) for i, p in enumerate(phrases)]
    return CandidateSet(Fragment("x"), hits)


def test_topk_recall():
    assert topk_recall([]) is None
    assert topk_recall([("lucas", cset("lucas")), ("reilly", cset("reilly", "lucas"))]) == 1.0
    assert topk_recall([("lucas", cset("reilly")), ("reilly", cset())]) == 0.0
    assert topk_recall([("lucas", cset("lucas")), ("reilly", cset())]) == 0.5


def test_misrecognized_positions():
    got = misrecognized("we met lucas in tyne wear", "we met lookez in tiny wear", VOCAB)
    assert got == [(2, 2, "lucas"), (4, 4, "tyne_wear")]


def test_report_tsv():
    report = evaluate(*zip(*FIXTURE), VOCAB)
    assert isinstance(report, EvalReport)
    header, row = report.to_tsv().splitlines()
    assert header.split("\t")[:3] == ["baseline_wer_pct", "spellcheck_wer_pct", "ideal_wer_pct"]
    cells = row.split("\t")
    assert cells[3:6] == ["50.00", "50.00", ""] and cells[6:] == ["1", "1", "1", "1"]
    assert report.ideal_wer <= report.baseline_wer
