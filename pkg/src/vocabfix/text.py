"""Text normalization.

Phrases are handled internally as lowercase strings over ``a-z``, ``0-9``,
apostrophe and underscore, where underscore stands for a word space.
"""
from __future__ import annotations

import re
import unicodedata

from .errors import InvalidInputError

ALPHABET = "abcdefghijklmnopqrstuvwxyz0123456789'_"
SPACE = "_"

_VALID = re.compile(r"[a-z0-9']+(?:_[a-z0-9']+)*")
# dashes and slashes separate words; other punctuation is dropped
_SEPARATORS = re.compile(r"[\s_\-‐-―/]+")


def normalize(text: str) -> str:
    """Return the normalized form of ``text``.

    Accents are folded to their base letter, punctuation other than the
    apostrophe is removed and runs of whitespace become a single
    underscore. Characters outside the Latin alphabet raise
    :class:`InvalidInputError`.
    """
    text = unicodedata.normalize("NFKD", text)
    text = text.replace("’", "'").replace("‘", "'")
    out = []
    for ch in text:
        if unicodedata.combining(ch):
            continue
        if _SEPARATORS.fullmatch(ch):
            out.append(" ")
        elif ch.isascii() and (ch.isalnum() or ch == "'"):
            out.append(ch.lower())
        elif unicodedata.category(ch)[0] in "PSZC":
            continue
        else:
            raise InvalidInputError(f"unsupported character {ch!r} in {text!r}")
    return SPACE.join("".join(out).split())


def is_normalized(phrase: str) -> bool:
    return bool(_VALID.fullmatch(phrase))


def check_normalized(phrase: str) -> str:
    if not is_normalized(phrase):
        raise InvalidInputError(f"not a normalized phrase: {phrase!r}")
    return phrase


def to_display(phrase: str) -> str:
    return phrase.replace(SPACE, " ")


def words(phrase: str) -> list[str]:
    return phrase.split(SPACE) if phrase else []


def join_words(tokens) -> str:
    return SPACE.join(tokens)


def tidy(chars: str) -> str:
    """Collapse repeated underscores and strip them from both ends."""
    return SPACE.join(t for t in chars.split(SPACE) if t)
