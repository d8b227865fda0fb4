"""Inverted index from letter n-grams to user-vocabulary phrases.

Keys are the n-grams of every phrase plus their most probable misspelled
variants from the mapping collection. Postings remember where in the phrase
the original n-gram sits so retrieval can check positional consistency.
"""
from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from functools import cached_property
from typing import Iterable, NamedTuple, Sequence

import numpy as np

from .alignment import encode
from .errors import InvalidInputError, ParseError
from .io import atomic_write
from .mappings import MIN_PROB, NgramMapping, by_source
from .text import check_normalized, normalize, to_display

class UserVocabulary:
    """Ordered, duplicate-free list of normalized phrases; ids are positions."""

    def __init__(self, phrases: Iterable[str]):
        self.phrases = [check_normalized(p) for p in phrases]
        seen = set()
        for p in self.phrases:
            if p in seen:
                raise InvalidInputError(f"duplicate phrase {p!r}")
            seen.add(p)
        self._ids = {p: i for i, p in enumerate(self.phrases)}

    @classmethod
    def from_raw(cls, lines: Iterable[str]) -> UserVocabulary:
        """Normalize raw phrases, dropping blanks and later duplicates."""
        out, seen = [], set()
        for line in lines:
            p = normalize(line)
            if p and p not in seen:
                seen.add(p)
                out.append(p)
        return cls(out)

    @classmethod
    def load(cls, path) -> UserVocabulary:
        with open(path, encoding="utf-8") as f:
            lines = f.read().splitlines()
        try:
            return cls.from_raw(lines)
        except InvalidInputError as exc:
            raise ParseError(str(exc), path) from None

    def __len__(self):
        return len(self.phrases)

    def __iter__(self):
        return iter(self.phrases)

    def __getitem__(self, i):
        return self.phrases[i]

    def __contains__(self, phrase):
        return phrase in self._ids

    def __eq__(self, other):
        return isinstance(other, UserVocabulary) and self.phrases == other.phrases

    def id_of(self, phrase: str) -> int | None:
        return self._ids.get(phrase)

    @cached_property
    def encoded(self) -> tuple[np.ndarray, np.ndarray]:
        """(codes padded with -1, lengths) for vectorized scoring."""
        lengths = np.array([len(p) for p in self.phrases], dtype=np.intp)
        codes = np.full((len(self.phrases), max(lengths, default=0)), -1, dtype=np.intp)
        for i, p in enumerate(self.phrases):
            codes[i, :len(p)] = encode(p)
        return codes, lengths


class Posting(NamedTuple):
    phrase_id: int
    phrase_pos: int
    src_len: int
    misspelled: bool


@dataclass(frozen=True)
class IndexConfig:
    ngram_min: int = 2
    ngram_max: int = 5
    min_prob: float = MIN_PROB
    variants_per_ngram: int = 4
    max_postings: int = 200

    def __post_init__(self):
        if not 1 <= self.ngram_min <= self.ngram_max:
            raise InvalidInputError("need 1 <= ngram_min <= ngram_max")
        if not 0 <= self.min_prob < 1:
            raise InvalidInputError("min_prob must be in [0, 1)")
        if self.variants_per_ngram < 0 or self.max_postings < 1:
            raise InvalidInputError("variants_per_ngram >= 0 and max_postings >= 1 required")


@dataclass
class PhraseNgramIndex:
    vocab: UserVocabulary
    entries: dict[str, list[Posting]]
    config: IndexConfig = field(default_factory=IndexConfig)

    def __post_init__(self):
        self.key_lengths = sorted({len(k) for k in self.entries})

    def lookup(self, key: str) -> list[Posting]:
        if not key:
            raise InvalidInputError("empty key")
        return self.entries.get(key, [])

    def __eq__(self, other):
        return (isinstance(other, PhraseNgramIndex) and self.vocab == other.vocab
                and self.entries == other.entries and self.config == other.config)

    @cached_property
    def alphabet(self) -> frozenset[str]:
        return frozenset(ch for p in self.vocab for ch in p)

    def posting_count(self) -> int:
        return sum(len(v) for v in self.entries.values())


def phrase_ngrams(phrase: str, lo: int, hi: int):
    """Yield (position, length, ngram) for every n-gram of ``phrase``."""
    for pos in range(len(phrase)):
        for length in range(lo, min(hi, len(phrase) - pos) + 1):
            yield pos, length, phrase[pos:pos + length]


def build_index(vocab: UserVocabulary, mappings: Sequence[NgramMapping] = (),
                config: IndexConfig | None = None) -> PhraseNgramIndex:
    """Index original n-grams and their misspelled variants for ``vocab``.

    Variant keys flatten joins and drop deletions. Variants shorter than
    ``ngram_min`` are skipped. When a key collects more than
    ``max_postings`` postings, the least probable misspelled ones are
    dropped; original postings are always kept.
    """
    config = config or IndexConfig()
    if len(vocab) == 0:
        raise InvalidInputError("empty vocabulary")
    variants = {}
    for src, group in by_source(mappings).items():
        if not config.ngram_min <= len(src) <= config.ngram_max:
            continue
        keys, seen = [], {src}
        for m in group:
            key = m.dst_text
            if m.cond_prob <= config.min_prob or key in seen:
                continue
            if len(key) < config.ngram_min:
                continue
            seen.add(key)
            keys.append((key, m.cond_prob))
            if len(keys) >= config.variants_per_ngram:
                break
        if keys:
            variants[src] = keys

    # key -> posting -> weight (originals weigh more than any probability)
    raw: dict[str, dict[Posting, float]] = defaultdict(dict)
    for pid, phrase in enumerate(vocab):
        for pos, length, gram in phrase_ngrams(phrase, config.ngram_min, config.ngram_max):
            raw[gram][Posting(pid, pos, length, False)] = 2.0
            raw[gram].pop(Posting(pid, pos, length, True), None)
            for key, prob in variants.get(gram, ()):
                posting = Posting(pid, pos, length, True)
                slot = raw[key]
                if Posting(pid, pos, length, False) in slot:
                    continue
                if slot.get(posting, -1.0) < prob:
                    slot[posting] = prob

    entries = {}
    for key, weighted in raw.items():
        postings = list(weighted)
        if len(postings) > config.max_postings:
            originals = [p for p in postings if not p.misspelled]
            spelled = sorted((p for p in postings if p.misspelled),
                             key=lambda p: (-weighted[p], p))
            keep = max(config.max_postings - len(originals), 0)
            postings = originals + spelled[:keep]
        entries[key] = sorted(postings)
    return PhraseNgramIndex(vocab, dict(sorted(entries.items())), config)


def lookup(index: PhraseNgramIndex, key: str) -> list[Posting]:
    return index.lookup(key)


def save_index(path, index: PhraseNgramIndex) -> None:
    """Write the index as TSV.

    Comment lines carry the build configuration and the phrase table; data
    rows are ``key, phrase_id, phrase_pos, src_len, misspelled`` sorted.
    """
    c = index.config
    lines = [
        f"#config\tngram_min={c.ngram_min}\tngram_max={c.ngram_max}\t"
        f"min_prob={c.min_prob!r}\tvariants_per_ngram={c.variants_per_ngram}\t"
        f"max_postings={c.max_postings}",
    ]
    lines.extend(f"#phrase\t{i}\t{to_display(p)}" for i, p in enumerate(index.vocab))
    lines.append("key\tphrase_id\tphrase_pos\tsrc_len\tmisspelled")
    for key in sorted(index.entries):
        for p in index.entries[key]:
            lines.append(f"{key}\t{p.phrase_id}\t{p.phrase_pos}\t{p.src_len}\t{int(p.misspelled)}")
    atomic_write(path, "\n".join(lines) + "\n")


_CONFIG_TYPES = {"ngram_min": int, "ngram_max": int, "min_prob": float,
                 "variants_per_ngram": int, "max_postings": int}


def load_index(path) -> PhraseNgramIndex:
    config = None
    phrases = []
    entries: dict[str, list[Posting]] = {}
    seen_header = False
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.rstrip("\n")
            parts = line.split("\t")
            try:
                if parts[0] == "#config":
                    kv = dict(item.split("=", 1) for item in parts[1:])
                    config = IndexConfig(**{k: _CONFIG_TYPES[k](v) for k, v in kv.items()})
                elif parts[0] == "#phrase":
                    if int(parts[1]) != len(phrases):
                        raise ValueError("phrase ids must be consecutive")
                    phrases.append(check_normalized(normalize(parts[2])))
                elif not seen_header:
                    if line != "key\tphrase_id\tphrase_pos\tsrc_len\tmisspelled":
                        raise ValueError("missing column header")
                    seen_header = True
                elif line:
                    key, pid, pos, length, flag = parts
                    if flag not in ("0", "1"):
                        raise ValueError(f"bad misspelled flag {flag!r}")
                    posting = Posting(int(pid), int(pos), int(length), flag == "1")
                    if not 0 <= posting.phrase_id < len(phrases):
                        raise ValueError(f"unknown phrase id {pid}")
                    if posting.phrase_pos + posting.src_len > len(phrases[posting.phrase_id]):
                        raise ValueError("posting exceeds phrase length")
                    entries.setdefault(key, []).append(posting)
            except (ValueError, KeyError, IndexError, TypeError) as exc:
                raise ParseError(f"malformed index row: {exc}", path, lineno) from None
    if config is None or not seen_header:
        raise ParseError("missing index header", path)
    return PhraseNgramIndex(UserVocabulary(phrases), entries, config)
