"""End-to-end correction of utterances.

Long utterances are split into overlapping word fragments; each fragment is
retrieved against and tagged, and accepted spans are mapped back to the
utterance, filtered and applied right to left.
"""
from __future__ import annotations

import functools
from dataclasses import dataclass, field
from importlib import resources
from typing import Sequence

from .alignment import EditCostTable
from .errors import ConfigError, InvalidInputError
from .index import PhraseNgramIndex
from .matcher import MatcherConfig, MatcherTagger, Tagger
from .retrieval import CandidateSet, Fragment, RetrievalConfig, retrieve
from .text import SPACE, join_words, normalize, to_display, words


@dataclass(frozen=True)
class PipelineConfig:
    min_words: int = 10
    max_words: int = 15
    overlap: int = 2
    frequent_word_guard: bool = True

    def __post_init__(self):
        if not 1 <= self.min_words <= self.max_words:
            raise InvalidInputError("need 1 <= min_words <= max_words")
        if not 0 <= self.overlap < self.min_words:
            raise InvalidInputError("overlap must be in [0, min_words)")


@functools.lru_cache(maxsize=1)
def frequent_words() -> frozenset[str]:
    text = resources.files("vocabfix").joinpath("data/frequent_words.txt").read_text("utf-8")
    return frozenset(w for w in text.split() if w)


def split_transcript(tokens: Sequence[str], min_words: int = 10, max_words: int = 15,
                     overlap: int = 2, utterance_id: str = "") -> list[Fragment]:
    """Consecutive ``max_words`` windows sharing ``overlap`` words.

    Utterances of at most ``max_words`` words stay whole.
    """
    if not 1 <= min_words <= max_words or not 0 <= overlap < max_words:
        raise InvalidInputError("bad fragment bounds")
    n = len(tokens)
    out = []
    start = 0
    while start < n:
        end = min(start + max_words, n)
        out.append(Fragment(join_words(tokens[start:end]), utterance_id, start, end))
        if end == n:
            break
        start = end - overlap
    return out


@dataclass
class Replacement:
    span: tuple[int, int]
    original: str
    replacement: str
    slot: int
    normalized_cost: float
    reason: str = "accepted"

    @property
    def applied(self) -> bool:
        return self.reason == "accepted"


@dataclass
class CorrectionTrace:
    utterance_id: str
    replacements: list[Replacement] = field(default_factory=list)
    candidate_sets: list[CandidateSet] = field(default_factory=list)

    @property
    def applied(self) -> list[Replacement]:
        return [r for r in self.replacements if r.applied]

    def lines(self) -> list[str]:
        return [f"{self.utterance_id}\t{r.span[0]}-{r.span[1]}\t{to_display(r.original)}\t"
                f"{to_display(r.replacement)}\t{r.slot}\t{r.normalized_cost:.6f}\t{r.reason}"
                for r in self.replacements]


TRACE_HEADER = "utterance_id\tspan\toriginal\treplacement\tslot\tnormalized_cost\treason"


def _fragment_offsets(tokens: Sequence[str]) -> list[int]:
    """Character offset of every word in the joined utterance."""
    offsets, pos = [], 0
    for t in tokens:
        offsets.append(pos)
        pos += len(t) + 1
    return offsets


def check_alphabet(index: PhraseNgramIndex, costs: EditCostTable) -> None:
    missing = index.alphabet - costs.alphabet
    if missing:
        raise ConfigError(f"cost table lacks characters used by the index: {sorted(missing)}")


def correct_transcript(utterance: str, index: PhraseNgramIndex,
                       costs: EditCostTable | None = None,
                       retrieval_cfg: RetrievalConfig | None = None,
                       matcher_cfg: MatcherConfig | None = None,
                       pipeline_cfg: PipelineConfig | None = None,
                       utterance_id: str = "",
                       tagger: Tagger | None = None) -> tuple[str, CorrectionTrace]:
    """Correct one utterance; returns (normalized corrected text, trace).

    The corrected text uses spaces between words.
    """
    costs = costs or EditCostTable.unit()
    check_alphabet(index, costs)
    retrieval_cfg = retrieval_cfg or RetrievalConfig()
    matcher_cfg = matcher_cfg or MatcherConfig()
    cfg = pipeline_cfg or PipelineConfig()
    tagger = tagger or MatcherTagger(costs, matcher_cfg)

    text = normalize(utterance)
    tokens = words(text)
    trace = CorrectionTrace(utterance_id)
    offsets = _fragment_offsets(tokens)

    found: list[Replacement] = []
    for frag in split_transcript(tokens, cfg.min_words, cfg.max_words, cfg.overlap, utterance_id):
        cands = retrieve(frag, index, retrieval_cfg)
        trace.candidate_sets.append(cands)
        if not cands.candidates:
            continue
        tagged = tagger(frag, cands)
        base = offsets[frag.word_start]
        for a in tagged.accepted:
            s, e = a.span[0] + base, a.span[1] + base
            found.append(Replacement((s, e), text[s:e], cands.candidates[a.slot - 1].phrase,
                                     a.slot, a.normalized_cost))

    freq = frequent_words() if cfg.frequent_word_guard else frozenset()
    ordered = sorted(found, key=lambda r: (r.normalized_cost, r.span[0] - r.span[1], r.span))
    taken: list[tuple[int, int, str]] = []
    for r in ordered:
        if any(r.span == (s, e) and r.replacement == p for s, e, p in taken):
            r.reason = "duplicate"
        elif r.original == r.replacement:
            r.reason = "noop"
        elif (SPACE not in r.original and r.original in freq
              and r.normalized_cost >= matcher_cfg.tau / 2):
            r.reason = "frequent_word"
        elif any(r.span[0] < e and s < r.span[1] for s, e, _ in taken):
            r.reason = "overlap"
        else:
            taken.append((r.span[0], r.span[1], r.replacement))
    trace.replacements = sorted(found, key=lambda r: (r.span, r.reason != "accepted"))

    out = text
    for r in sorted(trace.applied, key=lambda r: r.span[0], reverse=True):
        out = out[:r.span[0]] + r.replacement + out[r.span[1]:]
    return to_display(out), trace
