"""WER, the ideal-spellchecker bound, diff-keyword recall/precision, top-k recall."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable, Sequence

from .errors import InvalidInputError
from .index import UserVocabulary
from .io import atomic_write
from .retrieval import CandidateSet
from .text import words

MATCH, SUBST, INSERT, DELETE = "=", "S", "I", "D"


def edit_ops(ref: Sequence[str], hyp: Sequence[str]) -> list[tuple[str, int | None, int | None]]:
    """Word alignment as (op, ref_index, hyp_index), in order.

    Backtrace preference: match/substitution, then deletion, then insertion.
    """
    n, m = len(ref), len(hyp)
    dp = [[0] * (m + 1) for _ in range(n + 1)]
    for j in range(m + 1):
        dp[0][j] = j
    for i in range(1, n + 1):
        dp[i][0] = i
        r = ref[i - 1]
        prev, row = dp[i - 1], dp[i]
        for j in range(1, m + 1):
            row[j] = min(prev[j - 1] + (r != hyp[j - 1]), prev[j] + 1, row[j - 1] + 1)
    ops = []
    i, j = n, m
    while i or j:
        if i and j and dp[i][j] == dp[i - 1][j - 1] + (ref[i - 1] != hyp[j - 1]):
            ops.append((MATCH if ref[i - 1] == hyp[j - 1] else SUBST, i - 1, j - 1))
            i, j = i - 1, j - 1
        elif i and dp[i][j] == dp[i - 1][j] + 1:
            ops.append((DELETE, i - 1, None))
            i -= 1
        else:
            ops.append((INSERT, None, j - 1))
            j -= 1
    ops.reverse()
    return ops


def word_errors(ref: Sequence[str], hyp: Sequence[str]) -> int:
    return sum(op != MATCH for op, _, _ in edit_ops(ref, hyp))


def wer(reference: Sequence[str] | str, hypothesis: Sequence[str] | str) -> float:
    ref, hyp = _tokens(reference), _tokens(hypothesis)
    if not ref:
        raise InvalidInputError("reference must be non-empty")
    return word_errors(ref, hyp) / len(ref)


def _tokens(x) -> list[str]:
    if isinstance(x, str):
        return x.replace("_", " ").split()
    return list(x)


def phrase_occurrences(tokens: Sequence[str], vocab: UserVocabulary) -> list[tuple[int, int, str]]:
    """Every (start, end, phrase) where a vocabulary phrase occurs word-aligned."""
    by_first: dict[str, list[tuple[str, ...]]] = {}
    for p in vocab:
        w = tuple(words(p))
        by_first.setdefault(w[0], []).append(w)
    out = []
    for i, t in enumerate(tokens):
        for w in by_first.get(t, ()):
            if tuple(tokens[i:i + len(w)]) == w:
                out.append((i, i + len(w), "_".join(w)))
    return out


def _ref_to_hyp(ops) -> tuple[dict[int, int], set[int]]:
    """Matched ref->hyp word positions, and ref gaps receiving insertions.

    A gap ``g`` means an insertion between ref words ``g - 1`` and ``g``.
    """
    matched, gaps = {}, set()
    next_ref = 0
    for op, ri, hi in ops:
        if op == INSERT:
            gaps.add(next_ref)
        else:
            if op == MATCH:
                matched[ri] = hi
            next_ref = ri + 1
    return matched, gaps


def _present(span, matched, gaps) -> bool:
    s, e = span
    if any(i not in matched for i in range(s, e)):
        return False
    return not any(g in gaps for g in range(s + 1, e))


def ideal_hypothesis(ref: Sequence[str], hyp: Sequence[str],
                     vocab: UserVocabulary) -> list[str]:
    """Patch every nonidentical aligned run whose reference side overlaps a
    vocabulary phrase occurrence in the reference."""
    occ = phrase_occurrences(ref, vocab)
    covered = set()
    inner_gaps = set()
    for s, e, _ in occ:
        covered.update(range(s, e))
        inner_gaps.update(range(s + 1, e))
    ops = edit_ops(ref, hyp)
    out: list[str] = []
    i = 0
    while i < len(ops):
        op, ri, hi = ops[i]
        if op == MATCH:
            out.append(hyp[hi])
            i += 1
            continue
        j = i
        while j < len(ops) and ops[j][0] != MATCH:
            j += 1
        run = ops[i:j]
        ref_idx = [r for _, r, _ in run if r is not None]
        if ref_idx:
            patch = any(r in covered for r in ref_idx)
        else:
            # pure insertion run: patch only inside an occurrence
            gap = (ops[i - 1][1] + 1) if i > 0 else 0
            patch = gap in inner_gaps
        if patch:
            out.extend(ref[r] for r in ref_idx)
        else:
            out.extend(hyp[h] for _, _, h in run if h is not None)
        i = j
    return out


def ideal_wer(reference, baseline_hypothesis, vocab: UserVocabulary) -> float:
    ref, hyp = _tokens(reference), _tokens(baseline_hypothesis)
    if not ref:
        raise InvalidInputError("reference must be non-empty")
    return word_errors(ref, ideal_hypothesis(ref, hyp, vocab)) / len(ref)


@dataclass
class EvalCounts:
    better: int = 0
    missed: int = 0
    fp: int = 0
    unchanged_correct: int = 0

    def __add__(self, other: EvalCounts) -> EvalCounts:
        return EvalCounts(self.better + other.better, self.missed + other.missed,
                          self.fp + other.fp, self.unchanged_correct + other.unchanged_correct)

    def as_tuple(self):
        return (self.better, self.missed, self.fp, self.unchanged_correct)


def ratio(num: int, den: int) -> float | None:
    return num / den if den else None


def recall_precision(c: EvalCounts) -> tuple[float | None, float | None]:
    return ratio(c.better, c.better + c.missed), ratio(c.better, c.better + c.fp)


def utterance_counts(ref, baseline, corrected, vocab: UserVocabulary) -> EvalCounts:
    ref, base, corr = _tokens(ref), _tokens(baseline), _tokens(corrected)
    c = EvalCounts()
    base_m, base_g = _ref_to_hyp(edit_ops(ref, base))
    corr_m, corr_g = _ref_to_hyp(edit_ops(ref, corr))
    for s, e, _ in phrase_occurrences(ref, vocab):
        in_base = _present((s, e), base_m, base_g)
        in_corr = _present((s, e), corr_m, corr_g)
        if in_base and in_corr:
            c.unchanged_correct += 1
        elif in_corr:
            c.better += 1
        elif in_base:
            c.fp += 1
        else:
            c.missed += 1
    # phrases introduced by the correction where the reference has none
    ref_of_corr = {h: r for r, h in corr_m.items()}
    cb_m, cb_g = _ref_to_hyp(edit_ops(corr, base))
    for s, e, phrase in phrase_occurrences(corr, vocab):
        if _present((s, e), cb_m, cb_g):
            continue
        rs = [ref_of_corr.get(h) for h in range(s, e)]
        aligned = (None not in rs and rs == list(range(rs[0], rs[0] + len(rs)))
                   and _present((rs[0], rs[-1] + 1), corr_m, corr_g))
        if not aligned:
            c.fp += 1
    return c


def diff_keyword_metrics(references, baselines, correcteds, vocab: UserVocabulary):
    """Aggregate counts and (recall, precision) over aligned utterance lists."""
    if not (len(references) == len(baselines) == len(correcteds)):
        raise InvalidInputError("utterance lists differ in length")
    total = EvalCounts()
    for r, b, c in zip(references, baselines, correcteds):
        total = total + utterance_counts(r, b, c, vocab)
    return total, recall_precision(total)


def topk_recall(events: Iterable[tuple[str, CandidateSet]]) -> float | None:
    events = list(events)
    if not events:
        return None
    return sum(phrase in cands for phrase, cands in events) / len(events)


def misrecognized(ref, baseline, vocab: UserVocabulary) -> list[tuple[int, int, str]]:
    """Reference phrase occurrences absent from the baseline, with the start
    position each maps to in the baseline (nearest aligned word)."""
    ref, base = _tokens(ref), _tokens(baseline)
    ops = edit_ops(ref, base)
    matched, gaps = _ref_to_hyp(ops)
    pos_in_base = {}
    last = 0
    for op, ri, hi in ops:
        if hi is not None:
            last = hi
        if ri is not None:
            pos_in_base[ri] = hi if hi is not None else last
    return [(s, pos_in_base.get(s, 0), p) for s, e, p in phrase_occurrences(ref, vocab)
            if not _present((s, e), matched, gaps)]


@dataclass
class EvalReport:
    baseline_wer: float
    corrected_wer: float
    ideal_wer: float
    recall: float | None
    precision: float | None
    top10_recall: float | None
    counts: EvalCounts = field(default_factory=EvalCounts)

    COLUMNS = ("baseline_wer_pct", "spellcheck_wer_pct", "ideal_wer_pct", "recall_pct",
               "precision_pct", "top10_recall_pct", "better", "missed", "fp", "unchanged_correct")

    def to_tsv(self) -> str:
        def pct(x):
            return "" if x is None else f"{100 * x:.2f}"
        row = [pct(self.baseline_wer), pct(self.corrected_wer), pct(self.ideal_wer),
               pct(self.recall), pct(self.precision), pct(self.top10_recall),
               *map(str, self.counts.as_tuple())]
        return "\t".join(self.COLUMNS) + "\n" + "\t".join(row) + "\n"

    def save(self, path) -> None:
        atomic_write(path, self.to_tsv())


def corpus_wer(references, hypotheses) -> float:
    errors = total = 0
    for r, h in zip(references, hypotheses):
        r, h = _tokens(r), _tokens(h)
        errors += word_errors(r, h)
        total += len(r)
    if not total:
        raise InvalidInputError("empty reference set")
    return errors / total


def evaluate(references, baselines, correcteds, vocab: UserVocabulary,
             topk_events=None) -> EvalReport:
    """Corpus-level report; WERs are errors over total reference words."""
    refs = [_tokens(r) for r in references]
    bases = [_tokens(b) for b in baselines]
    ideal = [ideal_hypothesis(r, b, vocab) for r, b in zip(refs, bases)]
    counts, (rec, prec) = diff_keyword_metrics(refs, bases, correcteds, vocab)
    return EvalReport(corpus_wer(refs, bases), corpus_wer(refs, correcteds),
                      corpus_wer(refs, ideal), rec, prec,
                      topk_recall(topk_events) if topk_events is not None else None, counts)
