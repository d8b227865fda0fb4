"""Mapping-driven misspelling channel.

Stands in for the TTS -> ASR round trip: a phrase is cut greedily into the
longest source n-grams known to the model and each piece is replaced by a
target drawn from its conditional distribution.
"""
from __future__ import annotations

import bisect
import itertools
import random
from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .errors import InvalidInputError
from .mappings import NgramMapping, by_source
from .text import tidy, to_display


@dataclass
class CorruptionModel:
    mappings: Sequence[NgramMapping]
    intensity: float = 1.0
    seed: int = 0
    _table: dict = field(init=False, repr=False)

    def __post_init__(self):
        if not 0 <= self.intensity <= 1:
            raise InvalidInputError("intensity must be in [0, 1]")
        self._table = {}
        for src, group in by_source(self.mappings).items():
            outcomes, weights = [], []
            for m in group:
                w = m.cond_prob if m.is_identity else self.intensity * m.cond_prob
                if w > 0:
                    outcomes.append(m.dst_text)
                    weights.append(w)
            total = sum(weights)
            if total <= 0:
                continue
            cum = list(itertools.accumulate(w / total for w in weights))
            cum[-1] = 1.0
            self._table[src] = (outcomes, cum)
        self.max_src = max((len(s) for s in self._table), default=1)

    def distribution(self, src: str) -> dict[str, float]:
        """Sampling distribution of ``src`` after intensity scaling."""
        if src not in self._table:
            return {src: 1.0}
        outcomes, cum = self._table[src]
        probs = [b - a for a, b in zip([0.0] + cum[:-1], cum)]
        dist: dict[str, float] = {}
        for o, p in zip(outcomes, probs):
            dist[o] = dist.get(o, 0.0) + p
        return dist

    def segment(self, phrase: str) -> list[str]:
        """Greedy left-to-right longest-match segmentation."""
        out, i = [], 0
        while i < len(phrase):
            for length in range(min(self.max_src, len(phrase) - i), 0, -1):
                piece = phrase[i:i + length]
                if length == 1 or piece in self._table:
                    out.append(piece)
                    i += length
                    break
        return out

    def sample(self, src: str, rng: random.Random) -> str:
        entry = self._table.get(src)
        if entry is None:
            return src
        outcomes, cum = entry
        return outcomes[bisect.bisect_right(cum, rng.random())]


def corrupt(phrase: str, model: CorruptionModel, rng: random.Random) -> str:
    """Sample a misspelling of ``phrase``; falls back to ``phrase`` if emptied."""
    out = tidy("".join(model.sample(piece, rng) for piece in model.segment(phrase)))
    return out or phrase


def line_rng(seed: int, lineno: int) -> random.Random:
    return random.Random(f"{seed}:{lineno}")


def corrupt_corpus(phrases: Iterable[str], model: CorruptionModel) -> list[tuple[str, str]]:
    """(correct, corrupted) pairs; line ``i`` uses its own seed-derived RNG."""
    return [(p, corrupt(p, model, line_rng(model.seed, i)))
            for i, p in enumerate(phrases)]


def format_corpus(pairs) -> str:
    return "".join(f"{to_display(a)}\t{to_display(b)}\n" for a, b in pairs)
