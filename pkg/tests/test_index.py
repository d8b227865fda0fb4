import random

import pytest
from hypothesis import given, strategies as st

from vocabfix.errors import InvalidInputError, ParseError
from vocabfix.index import (IndexConfig, Posting, UserVocabulary, build_index, load_index,
                            lookup, save_index)
from vocabfix.mappings import NgramMapping


def random_phrases(rng, n, alphabet="abcdeilnorst"):
    out = set()
    while len(out) < n:
        words = ["".join(rng.choice(alphabet) for _ in range(rng.randint(2, 7)))
                 for _ in range(rng.randint(1, 3))]
        out.add("_".join(words))
    return sorted(out)


def test_original_key_posting():
    index = build_index(UserVocabulary(["schlaitdorf"]))
    assert lookup(index, "sch") == [Posting(0, 0, 3, False)]


def test_misspelled_key_posting():
    mappings = [NgramMapping("a i t", "e i d", 5, 100), NgramMapping("a i t", "a i t", 95, 100)]
    index = build_index(UserVocabulary(["schlaitdorf"]), mappings)
    assert lookup(index, "eid") == [Posting(0, 4, 3, True)]


def test_missing_key_is_empty():
    index = build_index(UserVocabulary(["schlaitdorf"]))
    assert lookup(index, "zzz") == []
    with pytest.raises(InvalidInputError):
        lookup(index, "")


def test_empty_vocabulary_rejected():
    with pytest.raises(InvalidInputError):
        build_index(UserVocabulary([]))


def test_duplicates_rejected_and_deduplicated_from_raw():
    with pytest.raises(InvalidInputError):
        UserVocabulary(["a", "a"])
    assert list(UserVocabulary.from_raw(["Tyne Wear", "tyne  wear", "", "x"])) == ["tyne_wear", "x"]


def test_keys_span_word_boundaries():
    index = build_index(UserVocabulary(["tyne_wear"]))
    assert lookup(index, "e_w") == [Posting(0, 3, 3, False)]


def test_variants_flatten_joins_and_drop_deletions():
    mappings = [NgramMapping("l u c", "l u k+e", 30, 100), NgramMapping("c a s", "<DEL> a s", 20, 100),
                NgramMapping("l u c", "l u c", 70, 100), NgramMapping("c a s", "c a s", 80, 100)]
    index = build_index(UserVocabulary(["lucas"]), mappings)
    assert Posting(0, 0, 3, True) in lookup(index, "luke")
    assert Posting(0, 2, 3, True) in lookup(index, "as")


def test_variant_cap_keeps_most_probable():
    mappings = [NgramMapping("a b", d, c, 100)
                for d, c in [("a b", 50), ("x b", 20), ("y b", 10), ("z b", 8), ("w b", 7), ("v b", 5)]]
    index = build_index(UserVocabulary(["ab"]), mappings, IndexConfig(variants_per_ngram=4))
    keys = {k for k, ps in index.entries.items() if any(p.misspelled for p in ps)}
    assert keys == {"xb", "yb", "zb", "wb"}


def test_min_prob_excludes_rare_variants():
    mappings = [NgramMapping("a b", "x b", 1, 100), NgramMapping("a b", "a b", 99, 100)]
    index = build_index(UserVocabulary(["ab"]), mappings, IndexConfig(min_prob=0.018))
    assert lookup(index, "xb") == []


def test_posting_cap_drops_only_misspelled():
    vocab = UserVocabulary([f"q{c}{d}" for c in "abcdefgh" for d in "abcdefgh"])
    # every phrase gets "zz" as a variant of its last bigram
    mappings = [NgramMapping(f"{c} {d}", "z z", 10, 100) for c in "abcdefgh" for d in "abcdefgh"]
    index = build_index(vocab, mappings, IndexConfig(max_postings=5))
    assert len(lookup(index, "zz")) == 5
    big = build_index(UserVocabulary([f"zz{i}" for i in "0123456789"]), (), IndexConfig(max_postings=3))
    assert len(lookup(big, "zz")) == 10


def test_every_original_ngram_resolvable_on_random_vocab():
    rng = random.Random(3)
    phrases = random_phrases(rng, 1000)
    index = build_index(UserVocabulary(phrases))
    for pid, p in enumerate(phrases):
        for pos in range(len(p)):
            for n in range(2, 6):
                if pos + n <= len(p):
                    assert Posting(pid, pos, n, False) in lookup(index, p[pos:pos + n])


def test_lookup_agrees_with_linear_scan():
    rng = random.Random(4)
    phrases = random_phrases(rng, 150)
    index = build_index(UserVocabulary(phrases))
    for _ in range(300):
        key = "".join(rng.choice("abcdeilnorst_") for _ in range(rng.randint(2, 4)))
        expected = sorted((pid, pos, len(key)) for pid, p in enumerate(phrases)
                          for pos in range(len(p) - len(key) + 1) if p[pos:pos + len(key)] == key)
        got = sorted((q.phrase_id, q.phrase_pos, q.src_len) for q in lookup(index, key))
        assert got == expected


def test_entry_count_upper_bound():
    rng = random.Random(5)
    phrases = random_phrases(rng, 200)
    mappings = [NgramMapping(f"{a} {b}", f"{b} {a}", 30, 100)
                for a in "abcde" for b in "ilnor"]
    cfg = IndexConfig()
    index = build_index(UserVocabulary(phrases), mappings, cfg)
    bound = sum(len(p) for p in phrases) * (cfg.ngram_max - cfg.ngram_min + 1) * (1 + cfg.variants_per_ngram)
    assert index.posting_count() <= bound


def test_rebuild_is_byte_identical(tmp_path):
    phrases = random_phrases(random.Random(6), 50)
    mappings = [NgramMapping("a b", "a p", 10, 100)]
    a, b = tmp_path / "a.tsv", tmp_path / "b.tsv"
    save_index(a, build_index(UserVocabulary(phrases), mappings))
    save_index(b, build_index(UserVocabulary(list(phrases)), list(mappings)))
    assert a.read_bytes() == b.read_bytes()


def test_removing_phrase_removes_exactly_its_postings():
    phrases = random_phrases(random.Random(7), 30)
    full = build_index(UserVocabulary(phrases))
    drop = 11
    rest = build_index(UserVocabulary(phrases[:drop] + phrases[drop + 1:]))

    def remap(pid):
        return pid if pid < drop else pid + 1

    expected = {(k, p) for k, ps in full.entries.items() for p in ps if p.phrase_id != drop}
    got = {(k, p._replace(phrase_id=remap(p.phrase_id))) for k, ps in rest.entries.items() for p in ps}
    assert got == expected


def test_roundtrip_single_and_empty_entries(tmp_path):
    path = tmp_path / "i.tsv"
    index = build_index(UserVocabulary(["a"]))
    save_index(path, index)
    assert load_index(path) == index
    index = build_index(UserVocabulary(["schlaitdorf"]), [NgramMapping("a i t", "e i d", 5, 100)])
    save_index(path, index)
    assert load_index(path) == index


@given(st.lists(st.text(alphabet="abc_", min_size=1, max_size=8), min_size=1, max_size=10, unique=True))
def test_randomized_roundtrip(tmp_path_factory, raw):
    vocab = UserVocabulary.from_raw(raw)
    if len(vocab) == 0:
        return
    index = build_index(vocab, [NgramMapping("a b", "a c", 3, 10)])
    path = tmp_path_factory.mktemp("i") / "i.tsv"
    save_index(path, index)
    assert load_index(path) == index


def test_load_rejects_bad_rows(tmp_path):
    path = tmp_path / "i.tsv"
    save_index(path, build_index(UserVocabulary(["abc"])))
    text = path.read_text()
    path.write_text(text + "ab\t7\t0\t2\t0\n")
    with pytest.raises(ParseError, match="line"):
        load_index(path)
