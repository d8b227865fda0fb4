"""Seeded synthetic benchmark.

A hand-written confusion channel corrupts generated name-like phrases. The
system only sees a parallel corpus drawn from that channel: it learns costs
and mappings from it, indexes a user vocabulary, and is scored on fresh
carrier sentences whose planted phrase the channel has misspelled.
"""
from __future__ import annotations

import logging
import random
import time
from importlib import resources
from dataclasses import dataclass, field

from .alignment import EditCostTable, align_corpus, align_pair, estimate_costs
from .corruptor import CorruptionModel, corrupt
from .dataset import Context
from .index import IndexConfig, PhraseNgramIndex, UserVocabulary, build_index
from .mappings import NgramMapping, extract_mappings
from .matcher import MatcherConfig
from .metrics import EvalReport, evaluate, ideal_wer, misrecognized, topk_recall, wer
from .pipeline import PipelineConfig, correct_transcript
from .retrieval import CandidateSet, RetrievalConfig, levenshtein_retrieve
from .text import join_words, words

log = logging.getLogger(__name__)

# (source, target, probability): sound-alike respellings of the kind an
# acoustic model produces for unfamiliar names ("lucas" heard as "lookez"),
# plus rare letter drops
CHANNEL_RULES = [
    # vowel spellings
    ("u", "oo", 0.25), ("oo", "u", 0.25), ("a", "e", 0.15), ("e", "a", 0.10),
    ("ee", "i", 0.35), ("ea", "ee", 0.35), ("ie", "y", 0.35), ("y", "ie", 0.20),
    ("i", "ee", 0.10), ("ou", "ow", 0.30), ("ai", "ay", 0.35), ("o", "oh", 0.05),
    ("er", "ur", 0.20), ("or", "er", 0.15), ("ar", "er", 0.10),
    # consonant spellings
    ("c", "k", 0.35), ("k", "c", 0.20), ("ck", "k", 0.45), ("ph", "f", 0.50),
    ("f", "ph", 0.10), ("s", "z", 0.25), ("z", "s", 0.35), ("x", "ks", 0.35),
    ("qu", "kw", 0.40), ("tt", "t", 0.45), ("ll", "l", 0.45), ("th", "t", 0.15),
    ("ch", "sh", 0.15), ("sh", "ch", 0.10), ("d", "t", 0.10), ("t", "d", 0.10),
    ("v", "f", 0.10), ("g", "k", 0.05), ("b", "p", 0.05), ("p", "b", 0.05),
    ("nd", "n", 0.15), ("rd", "rt", 0.15), ("j", "g", 0.20),
    # drops and merges
    ("_", "", 0.05), ("h", "", 0.10), ("r", "", 0.03),
]
CHANNEL_SCALE = 10_000

ONSETS = ["b", "c", "d", "f", "g", "h", "k", "l", "m", "n", "p", "r", "s", "t", "v",
          "w", "z", "ch", "sh", "th", "ph", "st", "tr", "br", "kl", "gr", "qu", "j", "y"]
VOWELS = ["a", "e", "i", "o", "u", "ee", "ea", "ou", "ai", "ie", "y", "a", "e", "o"]
CODAS = ["", "", "", "n", "r", "s", "l", "t", "ck", "tt", "ll", "x", "rd", "nd", "m"]


def channel_mappings(rules=CHANNEL_RULES, strength: float = 1.0,
                     scale: int = CHANNEL_SCALE) -> list[NgramMapping]:
    """Rules as mappings, with the leftover mass on the identity mapping.

    ``strength`` multiplies every rule probability.
    """
    unit = EditCostTable.unit()
    groups: dict[str, list[tuple[str, float]]] = {}
    for src, dst, p in rules:
        groups.setdefault(src, []).append((dst, p))
    out = []
    for src, outs in sorted(groups.items()):
        spaced = " ".join(src)
        used = 0
        for dst, p in outs:
            joint = round(p * strength * scale)
            used += joint
            rendered = " ".join(align_pair(src, dst, unit).rendered_units())
            out.append(NgramMapping(spaced, rendered, joint, scale))
        out.append(NgramMapping(spaced, spaced, scale - used, scale))
    return out


def planted_channel(strength: float = 1.0, seed: int = 0) -> CorruptionModel:
    return CorruptionModel(channel_mappings(strength=strength), 1.0, seed)


def make_word(rng: random.Random) -> str:
    syllables = rng.choice([2, 2, 2, 3, 3])
    return "".join(rng.choice(ONSETS) + rng.choice(VOWELS) + rng.choice(CODAS)
                   for _ in range(syllables))


def make_phrases(n: int, rng: random.Random, exclude=()) -> list[str]:
    out, seen = [], set(exclude)
    while len(out) < n:
        k = rng.choices([1, 2, 3], weights=[0.5, 0.35, 0.15])[0]
        p = join_words(make_word(rng) for _ in range(k))
        if p not in seen:
            seen.add(p)
            out.append(p)
    return out


def carrier_words(n: int = 2000) -> list[str]:
    """The ``n`` most frequent words without apostrophes, in rank order."""
    text = resources.files("vocabfix").joinpath("data/frequent_words.txt").read_text("utf-8")
    return [w for w in text.split() if "'" not in w][:n]


def make_context(phrase: str, rng: random.Random, filler: list[str],
                 min_words: int = 10, max_words: int = 15) -> Context:
    k = len(words(phrase))
    total = rng.randint(max(min_words, k + 1), max(max_words, k + 1))
    carrier = [rng.choice(filler) for _ in range(total - k)]
    at = rng.randint(0, len(carrier))
    left, right = join_words(carrier[:at]), join_words(carrier[at:])
    start = len(left) + 1 if left else 0
    sentence = join_words([x for x in (left, phrase, right) if x])
    return Context(sentence, start, start + len(phrase), phrase)


def corrupt_until_changed(phrase: str, model: CorruptionModel, rng: random.Random,
                          tries: int = 20) -> str:
    for _ in range(tries):
        out = corrupt(phrase, model, rng)
        if out != phrase:
            return out
    return out


@dataclass
class BenchmarkConfig:
    seed: int = 42
    n_vocab: int = 500
    n_corpus: int = 5000
    n_fragments: int = 1000
    rounds: int = 3
    carrier_noise: float = 0.05
    channel_strength: float = 1.0
    index: IndexConfig = field(default_factory=IndexConfig)
    retrieval: RetrievalConfig = field(default_factory=RetrievalConfig)
    matcher: MatcherConfig = field(default_factory=MatcherConfig)
    pipeline: PipelineConfig = field(default_factory=PipelineConfig)


@dataclass
class BenchmarkData:
    vocab: UserVocabulary
    corpus: list[tuple[str, str]]
    costs: EditCostTable
    mappings: list[NgramMapping]
    index: PhraseNgramIndex
    channel: CorruptionModel
    contexts: list[Context]
    references: list[str]
    baselines: list[str]


@dataclass
class BenchmarkResult:
    data: BenchmarkData
    ngram_sets: list[CandidateSet]
    levenshtein_sets: list[CandidateSet]
    corrected: list[str]
    ngram_recall: float | None
    levenshtein_recall: float | None
    report: EvalReport
    per_utterance_ideal_ok: bool
    timings: dict[str, float]


def prepare(cfg: BenchmarkConfig | None = None) -> BenchmarkData:
    cfg = cfg or BenchmarkConfig()
    rng = random.Random(cfg.seed)
    channel = planted_channel(cfg.channel_strength, cfg.seed)
    vocab_phrases = make_phrases(cfg.n_vocab, rng)
    corpus_phrases = make_phrases(cfg.n_corpus, rng, exclude=vocab_phrases)
    corpus = [(p, corrupt(p, channel, rng)) for p in corpus_phrases]
    costs = estimate_costs(corpus, cfg.rounds)
    mappings = extract_mappings(align_corpus(corpus, costs))
    vocab = UserVocabulary(vocab_phrases)
    index = build_index(vocab, mappings, cfg.index)

    filler = carrier_words()
    contexts, refs, bases = [], [], []
    for _ in range(cfg.n_fragments):
        phrase = rng.choice(vocab_phrases)
        ctx = make_context(phrase, rng, filler, cfg.pipeline.min_words, cfg.pipeline.max_words)
        contexts.append(ctx)
        left = words(ctx.sentence[:ctx.start].strip("_"))
        right = words(ctx.sentence[ctx.end:].strip("_"))
        noisy = [corrupt(w, channel, rng) if rng.random() < cfg.carrier_noise else w
                 for w in left + right]
        bad = corrupt_until_changed(phrase, channel, rng)
        refs.append(" ".join(words(ctx.sentence)))
        bases.append(" ".join(noisy[:len(left)] + words(bad) + noisy[len(left):]))
    return BenchmarkData(vocab, corpus, costs, mappings, index, channel, contexts, refs, bases)


def run(cfg: BenchmarkConfig | None = None, data: BenchmarkData | None = None) -> BenchmarkResult:
    cfg = cfg or BenchmarkConfig()
    timings = {}
    t0 = time.perf_counter()
    data = data or prepare(cfg)
    timings["prepare"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    ngram_sets, corrected = [], []
    for i, base in enumerate(data.baselines):
        out, trace = correct_transcript(base, data.index, data.costs, cfg.retrieval,
                                        cfg.matcher, cfg.pipeline, utterance_id=str(i))
        corrected.append(out)
        ngram_sets.append(trace.candidate_sets[0])
    timings["correct"] = time.perf_counter() - t0

    t0 = time.perf_counter()
    lev_sets = [levenshtein_retrieve(cs.fragment, data.vocab, cfg.retrieval.top_k)
                for cs in ngram_sets]
    timings["levenshtein"] = time.perf_counter() - t0

    ngram_events, lev_events = [], []
    ideal_ok = True
    for i, (ref, base) in enumerate(zip(data.references, data.baselines)):
        for _, _, phrase in misrecognized(ref, base, data.vocab):
            ngram_events.append((phrase, ngram_sets[i]))
            lev_events.append((phrase, lev_sets[i]))
        if ideal_wer(ref, base, data.vocab) > wer(ref, base):
            ideal_ok = False
    report = evaluate(data.references, data.baselines, corrected, data.vocab, ngram_events)
    return BenchmarkResult(data, ngram_sets, lev_sets, corrected, topk_recall(ngram_events),
                           topk_recall(lev_events), report, ideal_ok, timings)


def summary(result: BenchmarkResult) -> dict:
    """Seed-determined figures of a run (no timings)."""
    r = result.report
    return {
        "ngram_top10_recall": result.ngram_recall,
        "levenshtein_top10_recall": result.levenshtein_recall,
        "baseline_wer": r.baseline_wer,
        "corrected_wer": r.corrected_wer,
        "ideal_wer": r.ideal_wer,
        "recall": r.recall,
        "precision": r.precision,
        "counts": dict(zip(("better", "missed", "fp", "unchanged_correct"), r.counts.as_tuple())),
        "ideal_le_baseline_everywhere": result.per_utterance_ideal_ok,
        "fragments": len(result.data.references),
        "vocabulary": len(result.data.vocab),
        "mappings": len(result.data.mappings),
    }
