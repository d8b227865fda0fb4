"""Deterministic tagger: label fragment characters with candidate slots.

Each candidate is aligned in full against its cheapest fragment substring
under noisy-channel edit costs. Candidates whose per-character cost is below
``tau`` are accepted; overlapping acceptances are resolved by cost. The
output follows the per-character labelling contract (0 = no candidate,
1..10 = slot), so a learned tagger can replace this one behind
:class:`Tagger`.
"""
from __future__ import annotations

import functools
from dataclasses import dataclass, field
from typing import Protocol, Sequence

import numpy as np

from .alignment import EditCostTable, encode
from .errors import InvalidInputError
from .retrieval import CandidateSet, Fragment
from .text import SPACE

MAX_SLOTS = 10
EMPTY_SLOT = "<NONE>"


@dataclass(frozen=True)
class MatcherConfig:
    tau: float = 0.6
    snap: bool = True

    def __post_init__(self):
        if not self.tau > 0:
            raise InvalidInputError("tau must be > 0")


@dataclass(frozen=True)
class Acceptance:
    slot: int
    span: tuple[int, int]
    normalized_cost: float


@dataclass
class TaggedFragment:
    fragment: Fragment
    labels: list[int]
    accepted: list[Acceptance]
    candidates: list[str] = field(default_factory=list)
    # (slot, span, normalized cost, reason) for candidates that lost
    rejected: list[tuple[int, tuple[int, int] | None, float, str]] = field(default_factory=list)

    def trace_line(self) -> str:
        spans = ";".join(f"{a.slot}:{a.span[0]}-{a.span[1]}:{a.normalized_cost:.6f}"
                         for a in self.accepted)
        return f"{self.fragment.fragment_id}\t{' '.join(map(str, self.labels))}\t{spans}"


class Tagger(Protocol):
    def __call__(self, fragment: Fragment, candidates: Sequence[str]) -> TaggedFragment:
        ...


def _finish_groups(lengths):
    """Candidate rows grouped by length: {length: row indices}."""
    groups: dict[int, np.ndarray] = {}
    for n in np.unique(lengths):
        groups[int(n)] = np.flatnonzero(lengths == n)
    return groups


def _forward_rows(codes, lengths, frag, sub, ins, dele):
    """Semi-global DP (free start/end in the fragment), batched over candidates.

    Returns the final DP row of every candidate, shape (candidates, m + 1).
    """
    count, max_len = codes.shape
    m = len(frag)
    prefix = np.concatenate([[0.0], np.cumsum(ins[frag])])
    sub_frag = sub[:, frag]
    groups = _finish_groups(lengths)
    dist = np.zeros((count, m + 1))
    out = np.zeros((count, m + 1))
    step = np.empty_like(dist)
    for i in range(1, max_len + 1):
        ch = codes[:, i - 1]
        d = dele[ch][:, None]
        np.add(dist[:, :1], d, out=step[:, :1])
        np.minimum(dist[:, :-1] + sub_frag[ch], dist[:, 1:] + d, out=step[:, 1:])
        step -= prefix
        dist = np.minimum.accumulate(step, axis=1)
        dist += prefix
        rows = groups.get(i)
        if rows is not None:
            out[rows] = dist[rows]
    return out


def _anchored_rows(codes, lengths, targets, sub, ins, dele):
    """Global DP with the alignment start anchored, batched over candidates.

    ``targets`` holds one padded target per candidate; the returned row of
    candidate ``i`` gives its cost against every target prefix.
    """
    count, max_len = codes.shape
    prefix = np.zeros((count, targets.shape[1] + 1))
    np.cumsum(ins[targets], axis=1, out=prefix[:, 1:])
    groups = _finish_groups(lengths)
    dist = prefix.copy()
    out = prefix.copy()
    step = np.empty_like(dist)
    for i in range(1, max_len + 1):
        ch = codes[:, i - 1]
        d = dele[ch][:, None]
        np.add(dist[:, :1], d, out=step[:, :1])
        np.minimum(dist[:, :-1] + sub[ch[:, None], targets], dist[:, 1:] + d, out=step[:, 1:])
        step -= prefix
        dist = np.minimum.accumulate(step, axis=1)
        dist += prefix
        rows = groups.get(i)
        if rows is not None:
            out[rows] = dist[rows]
    return out


def _pad(rows, fill=0):
    width = max((len(r) for r in rows), default=0)
    out = np.full((len(rows), width), fill, dtype=np.intp)
    for i, r in enumerate(rows):
        out[i, :len(r)] = r
    return out


def _encode_all(candidates):
    lengths = np.array([len(c) for c in candidates])
    return _pad([encode(c) for c in candidates], -1), lengths


def _locate(codes, lengths, frag, rows, sub, ins, dele) -> list[tuple[tuple[int, int], float]]:
    """Spans of the optimal rows: earliest best end, then the shortest start."""
    ends = rows.argmin(axis=1)
    rev_codes = _pad([codes[i, :n][::-1] for i, n in enumerate(lengths)], -1)
    back = _anchored_rows(rev_codes, lengths, _pad([frag[:e][::-1] for e in ends]),
                          sub, ins, dele)
    cols = np.arange(back.shape[1])
    back[cols[None, :] > ends[:, None]] = np.inf
    span_lens = back.argmin(axis=1)
    return [((int(e - n), int(e)), float(rows[i, e]))
            for i, (e, n) in enumerate(zip(ends, span_lens))]


def score_windows(candidates: Sequence[str], fragment: Fragment | str,
                  costs: EditCostTable | None = None) -> list[tuple[tuple[int, int], float]]:
    """Best (span, cost) of each candidate against any fragment substring.

    The candidate is aligned in full; the substring is free. Ties prefer the
    earliest end, then the shortest span.
    """
    text = fragment.text if isinstance(fragment, Fragment) else fragment
    if any(not c for c in candidates):
        raise InvalidInputError("candidates must be non-empty")
    if not candidates:
        return []
    costs = costs or EditCostTable.unit()
    sub, ins, dele = costs.dense
    frag = encode(text)
    codes, lengths = _encode_all(candidates)
    rows = _forward_rows(codes, lengths, frag, sub, ins, dele)
    return _locate(codes, lengths, frag, rows, sub, ins, dele)


@functools.lru_cache(maxsize=1)
def _byte_steps() -> tuple[list[int], list[int]]:
    """For every (plus byte, minus byte): net change and lowest prefix sum."""
    net, low = [0] * 65536, [0] * 65536
    for p in range(256):
        for q in range(256):
            if p & q:
                continue
            cur = best = 0
            for i in range(8):
                cur += ((p >> i) & 1) - ((q >> i) & 1)
                best = min(best, cur)
            net[p << 8 | q], low[p << 8 | q] = cur, best
    return net, low


def unit_window_distances(candidates: Sequence[str], text: str) -> list[int]:
    """Unit-cost distance of each candidate to its closest substring of ``text``.

    Bit-parallel over text positions: one integer holds the vertical deltas
    of a DP row, so each candidate character costs a few integer operations.
    """
    m = len(text)
    mask = (1 << m) - 1
    peq: dict[str, int] = {}
    for i, ch in enumerate(text):
        peq[ch] = peq.get(ch, 0) | (1 << i)
    net, low = _byte_steps()
    out = []
    for cand in candidates:
        pv = mv = 0
        for ch in cand:
            eq = peq.get(ch, 0)
            xv = eq | mv
            xh = (((eq & pv) + pv) ^ pv) | eq
            ph = mv | (~(xh | pv) & mask)
            mh = pv & xh
            # column 0 grows by one per candidate character
            ph = ((ph << 1) | 1) & mask
            mh = (mh << 1) & mask
            pv = mh | (~(xv | ph) & mask)
            mv = ph & xv
        # row values are len(cand) plus prefix sums of the deltas
        cur = best = len(cand)
        while pv or mv:
            key = (pv & 255) << 8 | (mv & 255)
            best = min(best, cur + low[key])
            cur += net[key]
            pv >>= 8
            mv >>= 8
        out.append(best)
    return out


def span_costs(candidates: Sequence[str], text: str, spans,
               costs: EditCostTable | None = None) -> list[float]:
    """Full alignment cost of each candidate against its own span of ``text``."""
    if not candidates:
        return []
    costs = costs or EditCostTable.unit()
    sub, ins, dele = costs.dense
    frag = encode(text)
    codes, lengths = _encode_all(candidates)
    rows = _anchored_rows(codes, lengths, _pad([frag[s:e] for s, e in spans]), sub, ins, dele)
    return [float(rows[i, e - s]) for i, (s, e) in enumerate(spans)]


def score_window(candidate: str, fragment: Fragment | str,
                 costs: EditCostTable | None = None) -> tuple[tuple[int, int], float]:
    return score_windows([candidate], fragment, costs)[0]


def snap_span(text: str, span: tuple[int, int]) -> tuple[int, int]:
    """Move span edges to the nearest word boundaries (ties widen the span)."""
    starts = [0] + [i + 1 for i, ch in enumerate(text) if ch == SPACE]
    ends = [i for i, ch in enumerate(text) if ch == SPACE] + [len(text)]
    s, e = span
    s2 = min(starts, key=lambda b: (abs(b - s), b))
    e2 = min(ends, key=lambda b: (abs(b - e), -b))
    return s2, e2


def window_costs(candidates: Sequence[str], text: str, costs: EditCostTable,
                 snap: bool = True,
                 limit: float | None = None) -> list[tuple[tuple[int, int] | None, float]]:
    """(span, per-character cost) of each candidate's best window in ``text``.

    With ``snap`` the span is moved to word boundaries and re-scored. Empty
    spans come back as ``None`` with infinite cost. With ``limit``, candidates
    whose cheapest window already costs at least ``limit`` per character are
    not located: they come back as ``None`` with that lower bound.
    """
    if not text:
        return [(None, float("inf")) for _ in candidates]
    if any(not c for c in candidates):
        raise InvalidInputError("candidates must be non-empty")
    if not candidates:
        return []
    sub, ins, dele = costs.dense
    frag = encode(text)
    codes, lengths = _encode_all(candidates)
    rows = _forward_rows(codes, lengths, frag, sub, ins, dele)
    out: list[tuple[tuple[int, int] | None, float]] = [
        (None, c / n) for c, n in zip(rows.min(axis=1).tolist(), lengths.tolist())]
    near = [i for i, (_, bound) in enumerate(out) if limit is None or bound < limit]
    if not near:
        return out
    idx = np.array(near)
    scored = _locate(codes[idx], lengths[idx], frag, rows[idx], sub, ins, dele)
    spans = [span for span, _ in scored]
    cost_list = [cost for _, cost in scored]
    if snap:
        spans = [snap_span(text, span) for span in spans]
        redo = [j for j, (s, e) in enumerate(spans) if s < e]
        for j, c in zip(redo, span_costs([candidates[near[j]] for j in redo], text,
                                         [spans[j] for j in redo], costs)):
            cost_list[j] = c
    for j, i in enumerate(near):
        s, e = spans[j]
        out[i] = (None, float("inf")) if s >= e else ((s, e), cost_list[j] / len(candidates[i]))
    return out


def resolve_overlaps(items: list[Acceptance]) -> tuple[list[Acceptance], list[Acceptance]]:
    """Greedy by (cost, longer span, lower slot); returns (kept, dropped)."""
    kept, dropped = [], []
    taken = []
    for a in sorted(items, key=lambda a: (a.normalized_cost, a.span[0] - a.span[1], a.slot)):
        if any(a.span[0] < e and s < a.span[1] for s, e in taken):
            dropped.append(a)
        else:
            kept.append(a)
            taken.append(a.span)
    kept.sort(key=lambda a: a.span)
    return kept, dropped


def tag(fragment: Fragment, candidates: CandidateSet | Sequence[str],
        costs: EditCostTable | None = None, cfg: MatcherConfig | None = None) -> TaggedFragment:
    cfg = cfg or MatcherConfig()
    costs = costs or EditCostTable.unit()
    phrases = candidates.phrases if isinstance(candidates, CandidateSet) else list(candidates)
    if len(phrases) > MAX_SLOTS:
        raise InvalidInputError(f"at most {MAX_SLOTS} candidates")
    text = fragment.text
    live = [(slot, p) for slot, p in enumerate(phrases, start=1) if p and p != EMPTY_SLOT]
    scored = window_costs([p for _, p in live], text, costs, cfg.snap)

    accepted, rejected = [], []
    for (slot, _), (span, norm) in zip(live, scored):
        if span is None:
            rejected.append((slot, None, norm, "empty_span"))
        elif norm < cfg.tau:
            accepted.append(Acceptance(slot, span, norm))
        else:
            rejected.append((slot, span, norm, "above_threshold"))
    kept, lost = resolve_overlaps(accepted)
    rejected.extend((a.slot, a.span, a.normalized_cost, "overlap") for a in lost)

    labels = [0] * len(text)
    for a in kept:
        labels[a.span[0]:a.span[1]] = [a.slot] * (a.span[1] - a.span[0])
    return TaggedFragment(fragment, labels, kept, phrases, rejected)


@dataclass
class MatcherTagger:
    costs: EditCostTable = field(default_factory=EditCostTable.unit)
    cfg: MatcherConfig = field(default_factory=MatcherConfig)

    def __call__(self, fragment: Fragment, candidates) -> TaggedFragment:
        return tag(fragment, candidates, self.costs, self.cfg)
