import pytest
from hypothesis import given, strategies as st

from vocabfix.errors import InvalidInputError
from vocabfix.text import ALPHABET, is_normalized, normalize, tidy, to_display, words


@pytest.mark.parametrize("raw, expected", [
    ("Came from Schleiddorf", "came_from_schleiddorf"),
    ("  rock-n-roll ", "rock_n_roll"),
    ("O'Brien’s café!", "o'brien's_cafe"),
    ("AC/DC", "ac_dc"),
    ("a   b\tc", "a_b_c"),
    ("...", ""),
])
def test_normalize_examples(raw, expected):
    assert normalize(raw) == expected


def test_normalize_rejects_non_latin():
    with pytest.raises(InvalidInputError):
        normalize("москва")


@given(st.text(alphabet="abcXYZ019' -_,.!?/", max_size=30))
def test_normalize_is_idempotent_and_valid(raw):
    out = normalize(raw)
    assert normalize(out) == out
    assert out == "" or is_normalized(out)
    assert set(out) <= set(ALPHABET)


def test_words_and_display():
    assert words("tyne_wear") == ["tyne", "wear"]
    assert words("") == []
    assert to_display("tyne_wear") == "tyne wear"


def test_is_normalized_rejects_bad_underscores():
    for bad in ("_a", "a_", "a__b", "A", "a b", ""):
        assert not is_normalized(bad)


def test_tidy_collapses_underscores():
    assert tidy("_a__b_") == "a_b"
