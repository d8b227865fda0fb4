"""Command-line entry point: ``vocabfix <subcommand> ...``.

Exit codes: 0 ok, 1 usage, 2 input parse, 3 config. Failures print one line
``vocabfix: error[<kind>]: <message>`` on stderr.
"""
from __future__ import annotations

import argparse
import json
import logging
import sys
from concurrent.futures import ProcessPoolExecutor
from pathlib import Path

from . import __version__
from .alignment import EditCostTable, align_corpus, estimate_costs, read_parallel_corpus
from .config import RunConfig, describe_keys
from .corruptor import CorruptionModel, corrupt_corpus, format_corpus
from .dataset import NegativeSampler, clean_count, example_at, format_dataset, load_contexts
from .errors import ConfigError, InvalidInputError, ParseError
from .index import UserVocabulary, build_index, load_index, save_index
from .io import atomic_write
from .mappings import costs_from_mappings, extract_mappings, load_mappings, save_mappings
from .metrics import evaluate
from .pipeline import TRACE_HEADER, correct_transcript, split_transcript
from .retrieval import format_candidates, retrieve
from .text import normalize, words

log = logging.getLogger("vocabfix")

EXIT_OK, EXIT_USAGE, EXIT_PARSE, EXIT_CONFIG = 0, 1, 2, 3


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# flag dest -> config key
FLAG_KEYS = {
    "rounds": "mappings.rounds",
    "max_len": "mappings.max_len",
    "min_prob": "mappings.min_prob",
    "top_k": "retrieval.top_k",
    "tau": "matcher.tau",
    "seed": "seed",
    "intensity": "corrupt.intensity",
    "clean_fraction": "dataset.clean_fraction",
}


def run_config(args) -> RunConfig:
    cfg = RunConfig.load(args.config) if args.config else RunConfig()
    pairs = []
    for item in args.set or ():
        if "=" not in item:
            raise ConfigError(f"--set expects key=value, got {item!r}")
        key, raw = item.split("=", 1)
        pairs.append((key.strip(), raw.strip()))
    for dest, key in FLAG_KEYS.items():
        v = getattr(args, dest, None)
        if v is not None:
            pairs.append((key, str(v)))
    return cfg.with_values(pairs) if pairs else cfg


def read_lines(path) -> list[tuple[str, str]]:
    """(utterance_id, text) rows; ``id \\t text`` or bare text numbered from 1."""
    out = []
    with open(path, encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.rstrip("\n")
            if "\t" in line:
                uid, text = line.split("\t", 1)
            else:
                uid, text = str(lineno), line
            out.append((uid, text))
    return out


def _normalized(path, rows):
    out = []
    for lineno, (uid, text) in enumerate(rows, start=1):
        try:
            out.append((uid, normalize(text)))
        except InvalidInputError as exc:
            raise ParseError(str(exc), path, lineno) from None
    return out


def _parallel(fn, items, jobs: int, initializer=None, initargs=()):
    """Map in input order, in-process for ``jobs <= 1``."""
    if jobs <= 1:
        if initializer:
            initializer(*initargs)
        return [fn(x) for x in items]
    with ProcessPoolExecutor(jobs, initializer=initializer, initargs=initargs) as pool:
        return list(pool.map(fn, items, chunksize=max(1, len(items) // (4 * jobs))))


_STATE: dict = {}


def _set_state(**kw):
    _STATE.clear()
    _STATE.update(kw)


def _load_costs(args, mappings) -> EditCostTable:
    if getattr(args, "costs", None):
        return EditCostTable.load(args.costs)
    return costs_from_mappings(mappings)


# subcommands

def cmd_mappings_extract(args, cfg: RunConfig) -> None:
    corpus = read_parallel_corpus(args.corpus)
    if not corpus:
        raise InvalidInputError(f"{args.corpus}: corpus is empty")
    costs = estimate_costs(corpus, cfg["mappings.rounds"])
    mappings = extract_mappings(align_corpus(corpus, costs), cfg["mappings.max_len"],
                                cfg["mappings.min_prob"])
    save_mappings(args.out, mappings)
    costs.save(args.costs_out or f"{args.out}.costs")
    log.info("wrote %d mappings", len(mappings))


def cmd_index_build(args, cfg: RunConfig) -> None:
    vocab = UserVocabulary.load(args.vocab)
    mappings = load_mappings(args.mappings) if args.mappings else []
    index = build_index(vocab, mappings, cfg.index())
    save_index(args.out, index)
    log.info("indexed %d phrases under %d keys", len(vocab), len(index.entries))


def _retrieve_row(row):
    uid, text = row
    cfg = _STATE["cfg"]
    p = cfg.pipeline()
    frags = split_transcript(words(text), p.min_words, p.max_words, p.overlap, uid)
    return [retrieve(f, _STATE["index"], cfg.retrieval()) for f in frags]


def cmd_retrieve(args, cfg: RunConfig) -> None:
    index = load_index(args.index)
    rows = _normalized(args.input, read_lines(args.input))
    results = _parallel(_retrieve_row, rows, args.jobs, _init_retrieve, (index, cfg))
    _emit(args.out, format_candidates(s for sets in results for s in sets))


def _init_retrieve(index, cfg):
    _set_state(index=index, cfg=cfg)


def _init_correct(index, costs, cfg):
    _set_state(index=index, costs=costs, cfg=cfg)


def _correct_row(row):
    uid, text = row
    cfg = _STATE["cfg"]
    out, trace = correct_transcript(text, _STATE["index"], _STATE["costs"], cfg.retrieval(),
                                    cfg.matcher(), cfg.pipeline(), utterance_id=uid)
    return out, trace.lines()


def cmd_correct(args, cfg: RunConfig) -> None:
    index = load_index(args.index)
    mappings = load_mappings(args.mappings) if args.mappings else []
    costs = _load_costs(args, mappings) if (args.costs or mappings) else EditCostTable.unit()
    rows = _normalized(args.input, read_lines(args.input))
    results = _parallel(_correct_row, rows, args.jobs, _init_correct, (index, costs, cfg))
    _emit(args.out, "".join(text + "\n" for text, _ in results))
    if args.trace:
        lines = [TRACE_HEADER] + [ln for _, trace in results for ln in trace]
        atomic_write(args.trace, "\n".join(lines) + "\n")


def cmd_corrupt(args, cfg: RunConfig) -> None:
    mappings = load_mappings(args.mappings)
    model = CorruptionModel(mappings, cfg["corrupt.intensity"], cfg["seed"])
    rows = _normalized(args.phrases, [(str(i), t) for i, t in
                                      enumerate(Path(args.phrases).read_text("utf-8").splitlines())])
    _emit(args.out, format_corpus(corrupt_corpus([t for _, t in rows if t], model)))


def _init_dataset(contexts, sampler, model, seed, clean):
    _set_state(contexts=contexts, sampler=sampler, model=model, seed=seed, clean=clean)


def _dataset_row(i):
    s = _STATE
    return example_at(i, s["contexts"], s["sampler"], s["model"], s["sampler"].index,
                      s["seed"], i in s["clean"], s["sampler"].config).to_line() + "\n"


def cmd_dataset_build(args, cfg: RunConfig) -> None:
    import random

    if args.n <= 0:
        raise InvalidInputError("--n must be positive")
    contexts = load_contexts(args.contexts)
    if not contexts:
        raise InvalidInputError(f"{args.contexts}: no contexts")
    pool = UserVocabulary.load(args.vocab_pool)
    mappings = load_mappings(args.mappings)
    dcfg = cfg.dataset()
    index = load_index(args.index) if args.index else build_index(pool, mappings, cfg.index())
    sampler = NegativeSampler(list(pool), index, dcfg)
    model = CorruptionModel(mappings, cfg["corrupt.intensity"], cfg["seed"])
    seed = cfg["seed"]
    fraction = cfg["dataset.clean_fraction"]
    clean = frozenset(random.Random(f"{seed}:clean").sample(range(args.n),
                                                            clean_count(args.n, fraction)))
    lines = _parallel(_dataset_row, list(range(args.n)), args.jobs, _init_dataset,
                      (contexts, sampler, model, seed, clean))
    _emit(args.out, "".join(lines))


def cmd_eval(args, cfg: RunConfig) -> None:
    refs = _normalized(args.ref, read_lines(args.ref))
    bases = _normalized(args.baseline, read_lines(args.baseline))
    corrs = _normalized(args.corrected, read_lines(args.corrected))
    if not (len(refs) == len(bases) == len(corrs)):
        raise InvalidInputError("reference, baseline and corrected differ in line count")
    vocab = UserVocabulary.load(args.vocab)
    report = evaluate([t for _, t in refs], [t for _, t in bases], [t for _, t in corrs], vocab)
    if args.report:
        report.save(args.report)
    else:
        sys.stdout.write(report.to_tsv())


def cmd_benchmark(args, cfg: RunConfig) -> None:
    from . import benchmark

    sizes = {k: getattr(args, k) for k in ("n_vocab", "n_corpus", "n_fragments")
             if getattr(args, k) is not None}
    if any(v < 1 for v in sizes.values()):
        raise InvalidInputError("benchmark sizes must be positive")
    result = benchmark.run(benchmark.BenchmarkConfig(
        seed=cfg["seed"], index=cfg.index(), retrieval=cfg.retrieval(),
        matcher=cfg.matcher(), pipeline=cfg.pipeline(), **sizes))
    for k, v in result.timings.items():
        log.info("%s: %.1fs", k, v)
    summary = benchmark.summary(result)
    _emit(args.out, json.dumps(summary, indent=2, sort_keys=True) + "\n")


def _emit(path, text: str) -> None:
    if path:
        atomic_write(path, text)
    else:
        sys.stdout.write(text)


def build_parser() -> argparse.ArgumentParser:
    common = _Parser(add_help=False)
    common.add_argument("--config", help="flat key=value config file")
    common.add_argument("--set", action="append", metavar="KEY=VALUE",
                        help="override one config key (repeatable)")
    common.add_argument("--jobs", type=int, default=1, help="worker processes")
    common.add_argument("-v", "--verbose", action="store_true")

    p = _Parser(prog="vocabfix", description="Correct user-vocabulary phrases in ASR output.",
                formatter_class=argparse.RawDescriptionHelpFormatter,
                epilog="config keys (key, default, meaning):\n" + describe_keys())
    p.add_argument("--version", action="version", version=f"vocabfix {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, fn, help_):
        sp = sub.add_parser(name, parents=[common], help=help_, description=help_,
                            formatter_class=argparse.RawDescriptionHelpFormatter,
                            epilog="config keys (key, default, meaning):\n" + describe_keys())
        sp.set_defaults(func=fn)
        return sp

    sp = add("mappings-extract", cmd_mappings_extract,
             "learn edit costs and n-gram mappings from a correct/misrecognized corpus")
    sp.add_argument("--corpus", required=True)
    sp.add_argument("--out", required=True, help="mapping TSV")
    sp.add_argument("--costs-out", help="cost table TSV (default: OUT.costs)")
    sp.add_argument("--rounds", type=int)
    sp.add_argument("--max-len", type=int)
    sp.add_argument("--min-prob", type=float)

    sp = add("index-build", cmd_index_build, "index a user vocabulary")
    sp.add_argument("--vocab", required=True)
    sp.add_argument("--mappings")
    sp.add_argument("--out", required=True)

    sp = add("retrieve", cmd_retrieve, "top-k candidate phrases for each fragment")
    sp.add_argument("--index", required=True)
    sp.add_argument("--input", required=True)
    sp.add_argument("--top-k", type=int)
    sp.add_argument("--out")

    sp = add("correct", cmd_correct, "correct utterances, one per line")
    sp.add_argument("--index", required=True)
    sp.add_argument("--mappings")
    sp.add_argument("--costs", help="cost table (default: derived from the mappings)")
    sp.add_argument("--input", required=True)
    sp.add_argument("--out")
    sp.add_argument("--trace")
    sp.add_argument("--tau", type=float)

    sp = add("corrupt", cmd_corrupt, "simulate misrecognitions of phrases")
    sp.add_argument("--phrases", required=True)
    sp.add_argument("--mappings", required=True)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--intensity", type=float)
    sp.add_argument("--out")

    sp = add("dataset-build", cmd_dataset_build, "build tagging examples")
    sp.add_argument("--contexts", required=True)
    sp.add_argument("--vocab-pool", required=True)
    sp.add_argument("--mappings", required=True)
    sp.add_argument("--index", help="index over the pool (default: built on the fly)")
    sp.add_argument("--n", type=int, required=True)
    sp.add_argument("--clean-fraction", type=float)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--intensity", type=float)
    sp.add_argument("--out")

    sp = add("eval", cmd_eval, "WER, ideal WER and phrase recall/precision")
    sp.add_argument("--ref", required=True)
    sp.add_argument("--baseline", required=True)
    sp.add_argument("--corrected", required=True)
    sp.add_argument("--vocab", required=True)
    sp.add_argument("--report")

    sp = add("benchmark", cmd_benchmark, "run the seeded synthetic benchmark")
    sp.add_argument("--seed", type=int, default=42, help="benchmark seed (default 42)")
    sp.add_argument("--n-vocab", type=int, help="vocabulary phrases (default 500)")
    sp.add_argument("--n-corpus", type=int, help="learning corpus pairs (default 5000)")
    sp.add_argument("--n-fragments", type=int, help="test utterances (default 1000)")
    sp.add_argument("--out")
    return p


def _fail(kind: str, message: str, code: int) -> int:
    flat = " ".join(str(message).split())
    print(f"vocabfix: error[{kind}]: {flat}", file=sys.stderr)
    return code


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except UsageError as exc:
        return _fail("usage", exc, EXIT_USAGE)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.jobs < 1:
        return _fail("usage", "--jobs must be >= 1", EXIT_USAGE)
    try:
        cfg = run_config(args)
        args.func(args, cfg)
    except ConfigError as exc:
        return _fail("config", exc, EXIT_CONFIG)
    except (ParseError, InvalidInputError) as exc:
        return _fail("parse", exc, EXIT_PARSE)
    except OSError as exc:
        return _fail("io", f"{exc.filename}: {exc.strerror}", EXIT_PARSE)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
