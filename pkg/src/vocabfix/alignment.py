"""Character-level weighted alignment and iterative edit-cost estimation.

Costs are negative log probabilities of edit events, re-estimated from
the alignments they produce (a hard-EM loop that starts from unit costs).
"""
from __future__ import annotations

import functools
import itertools
import math
from collections import Counter
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Sequence

import numpy as np

from .errors import InvalidInputError, ParseError
from .io import atomic_write
from .text import ALPHABET

SUB, INS, DEL = 0, 1, 2
DEL_TOKEN = "<DEL>"
JOIN = "+"

# number of outcomes for one source character: any alphabet char or deletion
SMOOTHING_ARITY = len(ALPHABET) + 1

_CODE = {ch: i for i, ch in enumerate(ALPHABET)}
UNKNOWN_CODE = len(ALPHABET)


def encode(text: str) -> np.ndarray:
    return np.fromiter((_CODE.get(ch, UNKNOWN_CODE) for ch in text),
                       dtype=np.intp, count=len(text))


@dataclass(frozen=True, eq=True)
class EditCostTable:
    """Nonnegative costs of substitution, insertion and deletion events.

    Lookups for characters missing from the tables fall back to
    ``default_cost``; identity substitutions of unknown characters are free.
    """

    sub_cost: dict = field(default_factory=dict)
    ins_cost: dict = field(default_factory=dict)
    del_cost: dict = field(default_factory=dict)
    default_cost: float = 1.0

    def __post_init__(self):
        for table in (self.sub_cost, self.ins_cost, self.del_cost):
            for key, value in table.items():
                if not (math.isfinite(value) and value >= 0):
                    raise InvalidInputError(f"bad cost {value!r} for {key!r}")
        if not (math.isfinite(self.default_cost) and self.default_cost >= 0):
            raise InvalidInputError(f"bad default cost {self.default_cost!r}")

    @classmethod
    def unit(cls) -> EditCostTable:
        if cls is EditCostTable:
            return _unit_table()
        return cls._build_unit()

    @classmethod
    def _build_unit(cls) -> EditCostTable:
        sub = {(a, b): 0.0 if a == b else 1.0 for a in ALPHABET for b in ALPHABET}
        ones = {a: 1.0 for a in ALPHABET}
        return cls(sub, dict(ones), dict(ones), 1.0)

    def sub(self, a: str, b: str) -> float:
        cost = self.sub_cost.get((a, b))
        if cost is None:
            return 0.0 if a == b else self.default_cost
        return cost

    def ins(self, ch: str) -> float:
        return self.ins_cost.get(ch, self.default_cost)

    def dele(self, ch: str) -> float:
        return self.del_cost.get(ch, self.default_cost)

    @cached_property
    def alphabet(self) -> frozenset[str]:
        chars = set(self.ins_cost) | set(self.del_cost)
        for a, b in self.sub_cost:
            chars.add(a)
            chars.add(b)
        return frozenset(chars)

    @cached_property
    def dense(self) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """(sub, ins, del) arrays indexed by :func:`encode` codes."""
        size = len(ALPHABET) + 1
        sub = np.full((size, size), self.default_cost)
        np.fill_diagonal(sub, 0.0)
        ins = np.full(size, self.default_cost)
        dele = np.full(size, self.default_cost)
        for (a, b), cost in self.sub_cost.items():
            if a in _CODE and b in _CODE:
                sub[_CODE[a], _CODE[b]] = cost
        for a, cost in self.ins_cost.items():
            if a in _CODE:
                ins[_CODE[a]] = cost
        for a, cost in self.del_cost.items():
            if a in _CODE:
                dele[_CODE[a]] = cost
        return sub, ins, dele

    def save(self, path) -> None:
        lines = ["kind\tsrc\tdst\tcost"]
        for (a, b), cost in sorted(self.sub_cost.items()):
            lines.append(f"sub\t{a}\t{b}\t{cost!r}")
        for a, cost in sorted(self.ins_cost.items()):
            lines.append(f"ins\t\t{a}\t{cost!r}")
        for a, cost in sorted(self.del_cost.items()):
            lines.append(f"del\t{a}\t\t{cost!r}")
        lines.append(f"default\t\t\t{self.default_cost!r}")
        atomic_write(path, "\n".join(lines) + "\n")

    @classmethod
    def load(cls, path) -> EditCostTable:
        sub, ins, dele, default = {}, {}, {}, None
        with open(path, encoding="utf-8") as f:
            header = f.readline().rstrip("\n")
            if header != "kind\tsrc\tdst\tcost":
                raise ParseError("missing cost table header", path, 1)
            for lineno, line in enumerate(f, start=2):
                parts = line.rstrip("\n").split("\t")
                if len(parts) != 4:
                    raise ParseError("expected 4 columns", path, lineno)
                kind, a, b, raw = parts
                try:
                    cost = float(raw)
                except ValueError:
                    raise ParseError(f"bad cost {raw!r}", path, lineno) from None
                if kind == "sub" and len(a) == 1 and len(b) == 1:
                    sub[(a, b)] = cost
                elif kind == "ins" and len(b) == 1:
                    ins[b] = cost
                elif kind == "del" and len(a) == 1:
                    dele[a] = cost
                elif kind == "default":
                    default = cost
                else:
                    raise ParseError(f"bad row kind {kind!r}", path, lineno)
        if default is None:
            raise ParseError("missing default row", path)
        return cls(sub, ins, dele, default)


@dataclass(frozen=True)
class AlignedPair:
    """A monotone character alignment of ``source`` onto ``target``.

    ``units`` has one entry per source character; its second element is the
    (possibly empty) run of target characters that source character produced.
    Insertions are attached to the preceding source character, or to the
    first one when they precede all source characters.
    """

    source: str
    target: str
    units: tuple[tuple[str, str], ...]
    cost: float
    ops: tuple[tuple[int, str, str], ...] = ()

    def rendered_units(self) -> list[str]:
        return [render_unit(t) for _, t in self.units]


@functools.lru_cache(maxsize=1)
def _unit_table() -> EditCostTable:
    return EditCostTable._build_unit()


def render_unit(target: str) -> str:
    return JOIN.join(target) if target else DEL_TOKEN


def parse_unit(token: str) -> str:
    if token == DEL_TOKEN:
        return ""
    return token.replace(JOIN, "")


def align_pair(correct: str, misspelled: str,
               costs: EditCostTable | None = None) -> AlignedPair:
    """Minimum-cost alignment of ``correct`` onto ``misspelled``.

    Among equal-cost paths the backtrace from the end prefers substitution,
    then insertion, then deletion.
    """
    if not correct:
        raise InvalidInputError("correct phrase must be non-empty")
    costs = costs or EditCostTable.unit()
    src, tgt = correct, misspelled
    n, m = len(src), len(tgt)
    ins_row = [costs.ins(ch) for ch in tgt]
    sub_rows = {a: [costs.sub(a, ch) for ch in tgt] for a in set(src)}

    dp = [[0.0] * (m + 1) for _ in range(n + 1)]
    row = dp[0]
    for j in range(1, m + 1):
        row[j] = row[j - 1] + ins_row[j - 1]
    for i in range(1, n + 1):
        a = src[i - 1]
        d_a = costs.dele(a)
        srow = sub_rows[a]
        prev, row = dp[i - 1], dp[i]
        row[0] = prev[0] + d_a
        for j in range(1, m + 1):
            best = prev[j - 1] + srow[j - 1]
            c = row[j - 1] + ins_row[j - 1]
            if c < best:
                best = c
            c = prev[j] + d_a
            if c < best:
                best = c
            row[j] = best

    ops = []
    i, j = n, m
    while i > 0 or j > 0:
        here = dp[i][j]
        if i > 0 and j > 0 and dp[i - 1][j - 1] + sub_rows[src[i - 1]][j - 1] == here:
            ops.append((SUB, src[i - 1], tgt[j - 1]))
            i, j = i - 1, j - 1
        elif j > 0 and dp[i][j - 1] + ins_row[j - 1] == here:
            ops.append((INS, "", tgt[j - 1]))
            j -= 1
        else:
            ops.append((DEL, src[i - 1], ""))
            i -= 1
    ops.reverse()
    return AlignedPair(src, tgt, units_from_ops(src, ops), dp[n][m], tuple(ops))


def units_from_ops(source: str, ops) -> tuple[tuple[str, str], ...]:
    targets = [[] for _ in source]
    leading = []
    idx = -1
    for kind, _, t in ops:
        if kind == INS:
            (leading if idx < 0 else targets[idx]).append(t)
        else:
            idx += 1
            if kind == SUB:
                targets[idx].append(t)
    if leading:
        targets[0] = leading + targets[0]
    return tuple((ch, "".join(t)) for ch, t in zip(source, targets))


def count_events(alignments: Iterable[AlignedPair],
                 weights: Iterable[int] | None = None):
    subs, inss, dels = Counter(), Counter(), Counter()
    if weights is None:
        weights = itertools.repeat(1)
    for pair, w in zip(alignments, weights):
        for kind, a, t in pair.ops:
            if kind == SUB:
                subs[(a, t)] += w
            elif kind == INS:
                inss[t] += w
            else:
                dels[a] += w
    return subs, inss, dels


def costs_from_counts(subs: Counter, inss: Counter, dels: Counter) -> EditCostTable:
    """Add-one smoothed −log relative frequencies of edit events.

    Substitution and deletion are conditioned on the source character
    (arity: alphabet + deletion); insertions are relative to all events.
    Identity substitution is capped at the cheapest substitution of its row.
    """
    src_totals = Counter()
    for (a, _), c in subs.items():
        src_totals[a] += c
    for a, c in dels.items():
        src_totals[a] += c
    total_events = sum(subs.values()) + sum(inss.values()) + sum(dels.values())

    sub_cost, del_cost = {}, {}
    for a in ALPHABET:
        denom = src_totals[a] + SMOOTHING_ARITY
        row = {b: -math.log((subs[(a, b)] + 1) / denom) for b in ALPHABET}
        cheapest = min(row.values())
        if row[a] > cheapest:
            row[a] = cheapest
        for b, cost in row.items():
            sub_cost[(a, b)] = cost
        del_cost[a] = -math.log((dels[a] + 1) / denom)
    ins_denom = total_events + len(ALPHABET)
    ins_cost = {t: -math.log((inss[t] + 1) / ins_denom) for t in ALPHABET}
    return EditCostTable(sub_cost, ins_cost, del_cost, math.log(SMOOTHING_ARITY))


def costs_from_alignments(alignments: Iterable[AlignedPair],
                          weights: Iterable[int] | None = None) -> EditCostTable:
    return costs_from_counts(*count_events(alignments, weights))


def estimate_costs(corpus: Sequence[tuple[str, str]], rounds: int = 3) -> EditCostTable:
    """Re-estimate edit costs for ``rounds`` rounds, starting from unit costs.

    Identical pairs are aligned once and weighted by multiplicity, so the
    result does not depend on corpus order.
    """
    if not corpus:
        raise InvalidInputError("corpus is empty")
    if rounds < 1:
        raise InvalidInputError("rounds must be >= 1")
    counted = sorted(Counter(corpus).items())
    table = EditCostTable.unit()
    for _ in range(rounds):
        aligned = [align_pair(c, m, table) for (c, m), _ in counted]
        table = costs_from_alignments(aligned, [w for _, w in counted])
    return table


def align_corpus(corpus: Sequence[tuple[str, str]],
                 costs: EditCostTable) -> list[AlignedPair]:
    cache: dict[tuple[str, str], AlignedPair] = {}
    out = []
    for pair in corpus:
        hit = cache.get(pair)
        if hit is None:
            hit = cache[pair] = align_pair(pair[0], pair[1], costs)
        out.append(hit)
    return out


def read_parallel_corpus(path) -> list[tuple[str, str]]:
    """Read ``correct \\t corrupted`` rows, normalizing both columns."""
    from .text import normalize

    pairs = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.rstrip("\n")
            if not line.strip():
                continue
            parts = line.split("\t")
            if len(parts) != 2:
                raise ParseError("expected 2 tab-separated columns", path, lineno)
            try:
                correct, corrupted = normalize(parts[0]), normalize(parts[1])
            except InvalidInputError as exc:
                raise ParseError(str(exc), path, lineno) from None
            if not correct:
                raise ParseError("empty correct phrase", path, lineno)
            pairs.append((correct, corrupted))
    return pairs


def write_parallel_corpus(path, pairs) -> None:
    from .text import to_display

    atomic_write(Path(path), "".join(
        f"{to_display(a)}\t{to_display(b)}\n" for a, b in pairs))
