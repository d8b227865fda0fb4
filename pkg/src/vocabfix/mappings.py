"""Misspelled n-gram mappings extracted from character alignments.

A mapping pairs a source n-gram (space-separated characters, e.g.
``"l u c"``) with the rendered target it was aligned to (``"l u k+e"``,
``"l u <DEL>"``) and the counts that give its conditional probability.
"""
from __future__ import annotations

from collections import Counter, defaultdict
from dataclasses import dataclass
from typing import Iterable, Sequence

from .alignment import (DEL_TOKEN, AlignedPair, EditCostTable, costs_from_counts,
                        parse_unit, render_unit)
from .errors import InvalidInputError, ParseError
from .io import atomic_write

MAX_NGRAM = 5
MIN_PROB = 0.018
HEADER = "src\tdst\tjoint_count\tsrc_count"


@dataclass(frozen=True, order=True)
class NgramMapping:
    src: str
    dst: str
    joint_count: int
    src_count: int

    def __post_init__(self):
        n = len(self.src.split(" "))
        if not self.src or not 1 <= n <= MAX_NGRAM:
            raise InvalidInputError(f"source n-gram length out of range: {self.src!r}")
        if len(self.dst.split(" ")) != n:
            raise InvalidInputError(f"{self.dst!r} does not align with {self.src!r}")
        if not 0 < self.joint_count <= self.src_count:
            raise InvalidInputError(
                f"bad counts {self.joint_count}/{self.src_count} for {self.src!r}")

    @property
    def cond_prob(self) -> float:
        return self.joint_count / self.src_count

    @property
    def src_text(self) -> str:
        return self.src.replace(" ", "")

    @property
    def dst_text(self) -> str:
        """Target with joins flattened and deletions removed."""
        return "".join(parse_unit(tok) for tok in self.dst.split(" "))

    @property
    def is_identity(self) -> bool:
        return self.src == self.dst


def sort_key(m: NgramMapping):
    return (m.src, -m.joint_count, m.dst)


def sort_mappings(mappings: Iterable[NgramMapping]) -> list[NgramMapping]:
    return sorted(mappings, key=sort_key)


def window_counts(alignments: Iterable[AlignedPair], max_len: int = MAX_NGRAM,
                  weights: Iterable[int] | None = None) -> tuple[Counter, Counter]:
    """Count every (source window, rendered target) pair up to ``max_len``."""
    joint, totals = Counter(), Counter()
    alignments = list(alignments)
    weights = [1] * len(alignments) if weights is None else list(weights)
    for pair, w in zip(alignments, weights):
        chars = [ch for ch, _ in pair.units]
        rendered = pair.rendered_units()
        n = len(chars)
        for start in range(n):
            for length in range(1, min(max_len, n - start) + 1):
                src = " ".join(chars[start:start + length])
                dst = " ".join(rendered[start:start + length])
                joint[(src, dst)] += w
                totals[src] += w
    return joint, totals


def extract_mappings(alignments: Iterable[AlignedPair], max_len: int = MAX_NGRAM,
                     min_prob: float = MIN_PROB,
                     weights: Iterable[int] | None = None) -> list[NgramMapping]:
    """Mappings whose conditional probability exceeds ``min_prob``.

    Identity mappings are kept; they carry the no-corruption mass.
    """
    if max_len < 1:
        raise InvalidInputError("max_len must be >= 1")
    if not 0 <= min_prob < 1:
        raise InvalidInputError("min_prob must be in [0, 1)")
    joint, totals = window_counts(alignments, max_len, weights)
    out = [NgramMapping(src, dst, c, totals[src])
           for (src, dst), c in joint.items()
           if c / totals[src] > min_prob]
    return sort_mappings(out)


def by_source(mappings: Iterable[NgramMapping]) -> dict[str, list[NgramMapping]]:
    """Group by plain source text, each list ordered by descending probability."""
    groups = defaultdict(list)
    for m in mappings:
        groups[m.src_text].append(m)
    for group in groups.values():
        group.sort(key=lambda m: (-m.joint_count / m.src_count, m.dst))
    return dict(groups)


def save_mappings(path, mappings: Iterable[NgramMapping]) -> None:
    rows = [HEADER]
    rows.extend(f"{m.src}\t{m.dst}\t{m.joint_count}\t{m.src_count}"
                for m in sort_mappings(mappings))
    atomic_write(path, "\n".join(rows) + "\n")


def load_mappings(path) -> list[NgramMapping]:
    out = []
    with open(path, encoding="utf-8") as f:
        first = f.readline().rstrip("\n")
        if first != HEADER:
            raise ParseError(f"expected header {HEADER!r}", path, 1)
        for lineno, line in enumerate(f, start=2):
            line = line.rstrip("\n")
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 4:
                raise ParseError("expected 4 tab-separated columns", path, lineno)
            src, dst, joint, total = parts
            try:
                out.append(NgramMapping(src, dst, int(joint), int(total)))
            except ValueError as exc:
                raise ParseError(str(exc), path, lineno) from None
    return out


def costs_from_mappings(mappings: Sequence[NgramMapping]) -> EditCostTable:
    """Edit costs rebuilt from the single-character mappings.

    Mass pruned by the extraction threshold is lost and falls back to the
    smoothing floor.
    """
    subs, inss, dels = Counter(), Counter(), Counter()
    for m in mappings:
        if " " in m.src:
            continue
        a = m.src
        if m.dst == DEL_TOKEN:
            dels[a] += m.joint_count
            continue
        first, *rest = m.dst.split("+")
        subs[(a, first)] += m.joint_count
        for ch in rest:
            inss[ch] += m.joint_count
    return costs_from_counts(subs, inss, dels)


__all__ = [
    "NgramMapping", "extract_mappings", "save_mappings", "load_mappings",
    "sort_mappings", "by_source", "window_counts", "costs_from_mappings",
    "render_unit", "MIN_PROB", "MAX_NGRAM",
]
