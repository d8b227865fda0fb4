"""Synthetic tagging examples: a hypothesis, ten candidate slots, and labels.

A context sentence with a known phrase occurrence is turned into a
hypothesis by corrupting that phrase. The correct phrase takes a random slot
among ten; the other slots hold negatives drawn from random, similar and
word-sharing phrases.
"""
from __future__ import annotations

import math
import random
from dataclasses import dataclass
from typing import Iterable, Sequence

from .alignment import EditCostTable
from .corruptor import CorruptionModel, corrupt
from .errors import InvalidInputError, ParseError, PoolError
from .index import PhraseNgramIndex
from .io import atomic_write
from .matcher import EMPTY_SLOT, MAX_SLOTS, unit_window_distances, window_costs
from .retrieval import Fragment, RetrievalConfig, retrieve
from .text import check_normalized, normalize, words


@dataclass(frozen=True)
class Context:
    sentence: str
    start: int
    end: int
    phrase: str

    def __post_init__(self):
        check_normalized(self.sentence)
        if self.sentence[self.start:self.end] != self.phrase:
            raise InvalidInputError(
                f"span {self.start}-{self.end} of {self.sentence!r} is not {self.phrase!r}")


def load_contexts(path) -> list[Context]:
    """Rows of ``sentence \\t char_start \\t char_end \\t phrase``.

    Sentences must already be normalized text (spaces allowed for
    underscores) so that offsets are unambiguous.
    """
    out = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            parts = line.split("\t")
            try:
                sentence, start, end, phrase = parts
                sentence = sentence.replace(" ", "_")
                if normalize(sentence) != sentence:
                    raise InvalidInputError("sentence is not normalized")
                out.append(Context(sentence, int(start), int(end), normalize(phrase)))
            except (ValueError, InvalidInputError) as exc:
                raise ParseError(f"bad context row: {exc}", path, lineno) from None
    return out


@dataclass(frozen=True)
class TrainingExample:
    hyp: str
    candidates: tuple[str, ...]
    labels: tuple[int, ...]
    correct_slot: int
    span: tuple[int, int] | None

    def check(self) -> None:
        if len(self.candidates) != MAX_SLOTS:
            raise InvalidInputError("need exactly 10 candidate slots")
        if len(self.labels) != len(self.hyp):
            raise InvalidInputError("labels must cover every hypothesis character")
        if not 0 <= self.correct_slot <= MAX_SLOTS:
            raise InvalidInputError("correct_slot out of range")
        nonzero = [i for i, v in enumerate(self.labels) if v]
        if self.correct_slot == 0:
            if nonzero or self.span is not None:
                raise InvalidInputError("clean example must have no labelled span")
            return
        if self.span is None or nonzero != list(range(*self.span)):
            raise InvalidInputError("labels must be nonzero exactly on the span")
        if any(self.labels[i] != self.correct_slot for i in nonzero):
            raise InvalidInputError("span labels must equal correct_slot")

    def to_line(self) -> str:
        return "\t".join([
            " ".join(self.hyp),
            ";".join(self.candidates),
            " ".join(map(str, self.labels)),
            str(self.correct_slot),
        ])

    @classmethod
    def from_line(cls, line: str) -> TrainingExample:
        hyp_chars, cands, labels, slot = line.rstrip("\n").split("\t")
        hyp = hyp_chars.replace(" ", "")
        label_list = tuple(int(x) for x in labels.split()) if labels else ()
        nonzero = [i for i, v in enumerate(label_list) if v]
        span = (nonzero[0], nonzero[-1] + 1) if nonzero else None
        ex = cls(hyp, tuple(cands.split(";")), label_list, int(slot), span)
        ex.check()
        return ex


@dataclass(frozen=True)
class DatasetConfig:
    n_random: int = 4
    n_similar: int = 3
    n_intersecting: int = 2
    similar_pool: int = 20
    # negatives whose best window in the hypothesis costs less than this
    # (unit costs, per character) would be true matches; None disables
    negative_guard: float | None = 0.6
    strict_pools: bool = False

    def __post_init__(self):
        if self.n_random + self.n_similar + self.n_intersecting != MAX_SLOTS - 1:
            raise InvalidInputError("pool mix must sum to 9")
        if min(self.n_random, self.n_similar, self.n_intersecting) < 0:
            raise InvalidInputError("pool sizes must be nonnegative")


class NegativeSampler:
    """Negative candidate pools over a phrase list."""

    def __init__(self, pool: Sequence[str], index: PhraseNgramIndex | None = None,
                 config: DatasetConfig | None = None):
        self.pool = list(dict.fromkeys(pool))
        self.index = index
        self.config = config or DatasetConfig()
        self._by_word: dict[str, list[str]] = {}
        for p in self.pool:
            for w in set(words(p)):
                self._by_word.setdefault(w, []).append(p)
        self._similar: dict[str, list[str]] = {}

    def similar(self, phrase: str) -> list[str]:
        hit = self._similar.get(phrase)
        if hit is None:
            hit = []
            if self.index is not None:
                cfg = RetrievalConfig(top_k=self.config.similar_pool + 1,
                                      coverage_threshold=0.0, min_hits=1)
                cands = retrieve(Fragment(phrase), self.index, cfg)
                hit = [c for c in cands.phrases if c != phrase][:self.config.similar_pool]
            self._similar[phrase] = hit
        return hit

    def intersecting(self, phrase: str) -> list[str]:
        seen = dict.fromkeys(p for w in sorted(set(words(phrase)))
                             for p in self._by_word.get(w, ()))
        return [p for p in seen if p != phrase]


def _acceptable(cands: list[str], hyp: str, span, guard: float | None) -> list[bool]:
    if guard is None or not cands:
        return [True] * len(cands)
    # the closest substring bounds the snapped window from below
    out = [d / len(p) >= guard for p, d in zip(cands, unit_window_distances(cands, hyp))]
    close = [i for i, ok in enumerate(out) if not ok]
    for i, (win, norm) in zip(close, window_costs([cands[i] for i in close], hyp,
                                                  EditCostTable.unit())):
        if win is None or norm >= guard:
            out[i] = True
        elif span is not None and norm > 0:
            out[i] = win[0] < span[1] and span[0] < win[1]
    return out


class _Order:
    """Uniformly random order over a pool minus one phrase, drawn lazily."""

    def __init__(self, pool: Sequence[str], rng: random.Random, skip: str, head: int):
        self.pool = [p for p in pool if p != skip]
        self.rng = rng
        self.items = rng.sample(self.pool, min(head, len(self.pool)))
        self.full = len(self.items) == len(self.pool)

    def get(self, i: int) -> str | None:
        if i >= len(self.items) and not self.full:
            seen = set(self.items)
            rest = [p for p in self.pool if p not in seen]
            self.rng.shuffle(rest)
            self.items += rest
            self.full = True
        return self.items[i] if i < len(self.items) else None


class _Guard:
    """Per-example cache of negative acceptability, scored in batches."""

    def __init__(self, hyp: str, span, limit: float | None):
        self.hyp, self.span, self.limit = hyp, span, limit
        self.verdicts: dict[str, bool] = {}

    def prefetch(self, phrases) -> None:
        todo = [p for p in dict.fromkeys(phrases) if p is not None and p not in self.verdicts]
        self.verdicts.update(zip(todo, _acceptable(todo, self.hyp, self.span, self.limit)))

    def pick(self, order: _Order, k: int, taken: set) -> list[str]:
        chosen, i = [], 0
        while len(chosen) < k:
            p = order.get(i)
            if p is None:
                break
            if p not in taken:
                if p not in self.verdicts:
                    self.prefetch(order.get(j) for j in range(i, i + max(2 * k, 8)))
                if self.verdicts[p]:
                    chosen.append(p)
            i += 1
        return chosen


def build_example(context: Context, sampler: NegativeSampler | Sequence[str],
                  model: CorruptionModel, index: PhraseNgramIndex | None,
                  rng: random.Random, clean: bool,
                  config: DatasetConfig | None = None) -> TrainingExample:
    """One example; clean examples keep the sentence and omit the phrase."""
    if not isinstance(sampler, NegativeSampler):
        sampler = NegativeSampler(sampler, index, config)
    cfg = config or sampler.config
    phrase = context.phrase
    if clean:
        hyp, span, slot = context.sentence, None, 0
    else:
        corrupted = corrupt(phrase, model, rng)
        hyp = context.sentence[:context.start] + corrupted + context.sentence[context.end:]
        span = (context.start, context.start + len(corrupted))
        slot = rng.randint(1, MAX_SLOTS)

    needed = MAX_SLOTS if clean else MAX_SLOTS - 1
    plan = [("intersecting", sampler.intersecting(phrase), cfg.n_intersecting),
            ("similar", sampler.similar(phrase), cfg.n_similar),
            ("random", sampler.pool, None)]
    # size the random head by the expected shortfall of the other pools
    shortfall = needed - sum(min(len(pool), k) for _, pool, k in plan[:2])
    orders = []
    for name, pool, k in plan:
        want = shortfall if k is None else k
        orders.append((name, _Order(pool, rng, phrase, 2 * want + 2), k, want))
    guard = _Guard(hyp, span, cfg.negative_guard)
    guard.prefetch(o.items[i] for _, o, _, want in orders
                   for i in range(min(len(o.items), want + 2)))
    negatives: list[str] = []
    for name, order, k, _ in orders:
        k = needed - len(negatives) if k is None else k
        got = guard.pick(order, k, set(negatives))
        if len(got) < k and cfg.strict_pools:
            raise PoolError(name, k, len(got))
        negatives.extend(got)
    negatives.extend([EMPTY_SLOT] * (needed - len(negatives)))
    rng.shuffle(negatives)

    if slot:
        negatives.insert(slot - 1, phrase)
    labels = [0] * len(hyp)
    if span is not None:
        labels[span[0]:span[1]] = [slot] * (span[1] - span[0])
    ex = TrainingExample(hyp, tuple(negatives), tuple(labels), slot, span)
    ex.check()
    return ex


def clean_count(n: int, fraction: float) -> int:
    return math.floor(n * fraction + 0.5)


def build_dataset(contexts: Sequence[Context], sampler: NegativeSampler | Sequence[str],
                  model: CorruptionModel, index: PhraseNgramIndex | None,
                  n_examples: int, clean_fraction: float = 0.5, seed: int = 0,
                  config: DatasetConfig | None = None) -> list[TrainingExample]:
    """``n_examples`` examples, exactly ``round(n * clean_fraction)`` clean.

    Example ``i`` draws from its own seed-derived RNG, so any subset can be
    rebuilt independently.
    """
    if n_examples <= 0:
        raise InvalidInputError("n_examples must be positive")
    if not 0 <= clean_fraction <= 1:
        raise InvalidInputError("clean_fraction must be in [0, 1]")
    if not contexts:
        raise InvalidInputError("no contexts")
    if not isinstance(sampler, NegativeSampler):
        sampler = NegativeSampler(sampler, index, config)
    clean = set(random.Random(f"{seed}:clean").sample(range(n_examples),
                                                       clean_count(n_examples, clean_fraction)))
    return [example_at(i, contexts, sampler, model, index, seed, i in clean, config)
            for i in range(n_examples)]


def example_at(i: int, contexts, sampler, model, index, seed, clean, config=None):
    rng = random.Random(f"{seed}:{i}")
    context = contexts[rng.randrange(len(contexts))]
    return build_example(context, sampler, model, index, rng, clean, config)


def format_dataset(examples: Iterable[TrainingExample]) -> str:
    return "".join(ex.to_line() + "\n" for ex in examples)


def save_dataset(path, examples: Iterable[TrainingExample]) -> None:
    atomic_write(path, format_dataset(examples))


def load_dataset(path) -> list[TrainingExample]:
    out = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            if not line.strip():
                continue
            try:
                out.append(TrainingExample.from_line(line))
            except (ValueError, InvalidInputError) as exc:
                raise ParseError(f"bad example: {exc}", path, lineno) from None
    return out
