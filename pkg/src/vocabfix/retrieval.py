"""Top-k candidate retrieval for hypothesis fragments.

:func:`retrieve` counts n-gram hits per (phrase, offset bucket) through the
inverted index and filters by phrase coverage. :func:`levenshtein_retrieve`
is the edit-distance baseline that scans every phrase.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .alignment import encode
from .errors import InvalidInputError
from .index import PhraseNgramIndex, UserVocabulary
from .io import atomic_write
from .text import check_normalized, to_display, words


@dataclass(frozen=True)
class Fragment:
    text: str
    utterance_id: str = ""
    word_start: int = 0
    word_end: int | None = None

    def __post_init__(self):
        if self.text:
            check_normalized(self.text)
        if self.word_end is None:
            object.__setattr__(self, "word_end", self.word_start + len(words(self.text)))

    @property
    def fragment_id(self) -> str:
        return f"{self.utterance_id}:{self.word_start}-{self.word_end}"


@dataclass(frozen=True)
class CandidateHit:
    phrase_id: int
    phrase: str
    hit_count: int
    coverage: float
    window: tuple[int, int]


@dataclass
class CandidateSet:
    fragment: Fragment
    candidates: list[CandidateHit] = field(default_factory=list)

    @property
    def phrases(self) -> list[str]:
        return [c.phrase for c in self.candidates]

    def __len__(self):
        return len(self.candidates)

    def __contains__(self, phrase):
        return any(c.phrase == phrase for c in self.candidates)


@dataclass(frozen=True)
class RetrievalConfig:
    top_k: int = 10
    coverage_threshold: float = 0.4
    min_hits: int = 2
    offset_bucket_width: int = 3

    def __post_init__(self):
        if self.top_k < 1:
            raise InvalidInputError("top_k must be >= 1")
        if not 0 <= self.coverage_threshold <= 1:
            raise InvalidInputError("coverage_threshold must be in [0, 1]")
        if self.min_hits < 0 or self.offset_bucket_width < 1:
            raise InvalidInputError("min_hits >= 0 and offset_bucket_width >= 1 required")


def rank_key(hit: CandidateHit):
    return (-hit.hit_count, -hit.coverage, hit.phrase_id)


def retrieve(fragment: Fragment, index: PhraseNgramIndex,
             cfg: RetrievalConfig | None = None) -> CandidateSet:
    cfg = cfg or RetrievalConfig()
    text = fragment.text
    width = cfg.offset_bucket_width
    # (phrase_id, bucket) -> bitmasks of fragment / phrase chars covered
    frag_cov: dict[tuple[int, int], int] = {}
    phrase_cov: dict[tuple[int, int], int] = {}
    for length in index.key_lengths:
        span_bits = (1 << length) - 1
        for i in range(len(text) - length + 1):
            postings = index.entries.get(text[i:i + length])
            if not postings:
                continue
            frag_bits = span_bits << i
            for p in postings:
                key = (p.phrase_id, (i - p.phrase_pos) // width)
                frag_cov[key] = frag_cov.get(key, 0) | frag_bits
                phrase_cov[key] = phrase_cov.get(key, 0) | (((1 << p.src_len) - 1) << p.phrase_pos)

    best: dict[int, CandidateHit] = {}
    best_bucket: dict[int, int] = {}
    for (pid, bucket), frag_bits in frag_cov.items():
        phrase = index.vocab[pid]
        hit = CandidateHit(pid, phrase, frag_bits.bit_count(),
                           phrase_cov[(pid, bucket)].bit_count() / len(phrase),
                           ((frag_bits & -frag_bits).bit_length() - 1, frag_bits.bit_length()))
        if hit.coverage < cfg.coverage_threshold or hit.hit_count < cfg.min_hits:
            continue
        current = best.get(pid)
        if current is None or (rank_key(hit), bucket) < (rank_key(current), best_bucket[pid]):
            best[pid] = hit
            best_bucket[pid] = bucket
    ranked = sorted(best.values(), key=rank_key)
    return CandidateSet(fragment, ranked[:cfg.top_k])


def _semiglobal_distances(codes: np.ndarray, lengths: np.ndarray,
                          frag: np.ndarray) -> np.ndarray:
    """Per phrase, the minimum unit edit distance to any fragment substring.

    ``codes`` is a (phrases, max_len) array padded with -1.
    """
    count, max_len = codes.shape
    m = len(frag)
    # longest phrases first, so the rows still running form a prefix
    order = np.argsort(-lengths, kind="stable")
    codes, lengths = codes[order], lengths[order]
    ar = np.arange(m + 1, dtype=np.int32)
    dist = np.zeros((count, m + 1), dtype=np.int32)
    best = np.zeros(count, dtype=np.int32)
    active = count
    for i in range(1, max_len + 1):
        while active and lengths[active - 1] < i:
            active -= 1
        cur = dist[:active]
        mismatch = codes[:active, i - 1:i] != frag[None, :]
        step = np.empty_like(cur)
        step[:, 0] = cur[:, 0] + 1
        np.minimum(cur[:, :-1] + mismatch, cur[:, 1:] + 1, out=step[:, 1:])
        dist = np.minimum.accumulate(step - ar, axis=1) + ar
        done = lengths[:active] == i
        if done.any():
            best[:active][done] = dist[done].min(axis=1)
    out = np.empty(count, dtype=np.float64)
    out[order] = best
    return out


def _window_distance(phrase: np.ndarray, frag: np.ndarray, lo: int, hi: int):
    """Minimum unit edit distance over windows of length ``lo..hi``.

    Returns (distance, (start, end)) or None when no window fits.
    """
    m = len(frag)
    hi = min(hi, m)
    if lo > hi:
        return None
    starts = m - lo + 1
    s = np.arange(starts)
    ar = np.arange(hi + 1)
    padded = np.concatenate([frag, np.full(hi, -2)])
    window_chars = padded[s[:, None] + np.arange(hi)[None, :]]
    dist = np.tile(ar.astype(float), (starts, 1))
    for ch in phrase:
        mismatch = window_chars != ch
        step = np.empty_like(dist)
        step[:, 0] = dist[:, 0] + 1
        np.minimum(dist[:, :-1] + mismatch, dist[:, 1:] + 1, out=step[:, 1:])
        dist = np.minimum.accumulate(step - ar, axis=1) + ar
    valid = (ar[None, :] >= lo) & (s[:, None] + ar[None, :] <= m)
    dist = np.where(valid, dist, np.inf)
    flat = int(np.argmin(dist))
    start, length = divmod(flat, hi + 1)
    return float(dist[start, length]), (start, start + length)


def levenshtein_retrieve(fragment: Fragment, vocab: UserVocabulary,
                         top_k: int = 10) -> CandidateSet:
    """Rank phrases by length-normalized edit distance to their best window.

    Windows may be 50% shorter or longer than the phrase. The semi-global
    distance is a lower bound that is exact whenever it is below half the
    phrase length, so exact window scans are only run for phrases that could
    still reach the top ``top_k``.
    """
    if len(vocab) == 0:
        raise InvalidInputError("empty vocabulary")
    text = fragment.text
    if not text:
        return CandidateSet(fragment, [])
    frag = encode(text)
    codes, lengths = vocab.encoded
    lower = _semiglobal_distances(codes, lengths, frag)

    scored: list[tuple[float, int, tuple[int, int] | None, float]] = []
    pending = []
    for pid, (d, n) in enumerate(zip(lower.tolist(), lengths.tolist())):
        if d < n / 2:
            scored.append((d / n, pid, None, d))
        else:
            pending.append((d / n, pid))
    scored.sort()
    pending.sort()
    for bound, pid in pending:
        if len(scored) >= top_k and (bound, pid) > scored[top_k - 1][:2]:
            break
        n = int(lengths[pid])
        found = _window_distance(codes[pid, :n], frag, math.ceil(n / 2), (3 * n) // 2)
        if found is None:
            continue
        d, window = found
        scored.append((d / n, pid, window, d))
        scored.sort()

    hits = []
    for score, pid, window, d in scored[:top_k]:
        n = int(lengths[pid])
        if window is None:
            window = _window_distance(codes[pid, :n], frag, math.ceil(n / 2), (3 * n) // 2)[1]
        hits.append(CandidateHit(pid, vocab[pid], 0, min(max(1.0 - score, 0.0), 1.0), window))
    return CandidateSet(fragment, hits)


def format_candidates(sets) -> str:
    lines = ["fragment_id\trank\tphrase\thit_count\tcoverage\twindow"]
    for cs in sets:
        for rank, hit in enumerate(cs.candidates, start=1):
            lines.append(f"{cs.fragment.fragment_id}\t{rank}\t{to_display(hit.phrase)}\t"
                         f"{hit.hit_count}\t{hit.coverage:.6f}\t{hit.window[0]}-{hit.window[1]}")
    return "\n".join(lines) + "\n"


def save_candidates(path, sets) -> None:
    atomic_write(path, format_candidates(sets))
