"""Flat ``key=value`` run configuration shared by all CLI subcommands."""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Any, Callable, Iterable, Mapping

from .dataset import DatasetConfig
from .errors import ConfigError, InvalidInputError
from .index import IndexConfig
from .matcher import MatcherConfig
from .pipeline import PipelineConfig
from .retrieval import RetrievalConfig


def _bool(text: str) -> bool:
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


def _optional_float(text: str) -> float | None:
    return None if text.strip().lower() in ("none", "") else float(text)


def _check(pred: Callable[[Any], bool], msg: str):
    def run(v):
        if not pred(v):
            raise ValueError(msg)
    return run


@dataclass(frozen=True)
class Key:
    default: Any
    parse: Callable[[str], Any]
    help: str
    check: Callable[[Any], None] = lambda v: None


_unit = _check(lambda v: 0 <= v <= 1, "must be in [0, 1]")
_nonneg = _check(lambda v: v >= 0, "must be >= 0")
_pos = _check(lambda v: v >= 1, "must be >= 1")

KEYS: dict[str, Key] = {
    "seed": Key(0, int, "seed for every random draw", _nonneg),
    "mappings.rounds": Key(3, int, "EM re-estimation rounds", _nonneg),
    "mappings.max_len": Key(5, int, "longest source n-gram", _pos),
    "mappings.min_prob": Key(0.018, float, "keep mappings with cond_prob above this",
                             _check(lambda v: 0 <= v < 1, "must be in [0, 1)")),
    "index.ngram_min": Key(2, int, "shortest indexed n-gram", _pos),
    "index.ngram_max": Key(5, int, "longest indexed n-gram", _pos),
    "index.min_prob": Key(0.018, float, "minimum mapping probability for a variant",
                          _check(lambda v: 0 <= v < 1, "must be in [0, 1)")),
    "index.variants_per_ngram": Key(4, int, "misspelled variants per phrase n-gram", _nonneg),
    "index.max_postings": Key(200, int, "posting cap per key", _pos),
    "retrieval.top_k": Key(10, int, "candidates kept per fragment", _pos),
    "retrieval.coverage_threshold": Key(0.4, float, "minimum phrase coverage", _unit),
    "retrieval.min_hits": Key(2, int, "minimum covered fragment characters", _nonneg),
    "retrieval.offset_bucket_width": Key(3, int, "positional bucket width", _pos),
    "matcher.tau": Key(0.6, float, "accept below this per-character cost",
                       _check(lambda v: v > 0, "must be > 0")),
    "matcher.snap": Key(True, _bool, "snap spans to word boundaries"),
    "pipeline.min_words": Key(10, int, "minimum fragment words", _pos),
    "pipeline.max_words": Key(15, int, "maximum fragment words", _pos),
    "pipeline.overlap": Key(2, int, "words shared by adjacent fragments", _nonneg),
    "pipeline.frequent_word_guard": Key(True, _bool, "reject weak single frequent-word edits"),
    "corrupt.intensity": Key(1.0, float, "scale of non-identity corruption mass", _unit),
    "dataset.clean_fraction": Key(0.5, float, "share of examples without a target", _unit),
    "dataset.n_random": Key(4, int, "random negatives", _nonneg),
    "dataset.n_similar": Key(3, int, "retrieval-similar negatives", _nonneg),
    "dataset.n_intersecting": Key(2, int, "word-sharing negatives", _nonneg),
    "dataset.similar_pool": Key(20, int, "retrieval depth for similar negatives", _pos),
    "dataset.negative_guard": Key(0.6, _optional_float,
                                  "drop negatives matching the hypothesis below this cost"),
    "dataset.strict_pools": Key(False, _bool, "fail instead of backfilling short pools"),
}


def _fmt(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    return "none" if v is None else str(v)


def describe_keys() -> str:
    width = max(map(len, KEYS))
    return "\n".join(f"  {k:<{width}}  {_fmt(entry.default):<6}  {entry.help}"
                     for k, entry in KEYS.items())


@dataclass(frozen=True)
class RunConfig:
    values: Mapping[str, Any] = field(default_factory=lambda: {k: s.default for k, s in KEYS.items()})

    def __getitem__(self, key: str):
        return self.values[key]

    def with_values(self, pairs: Iterable[tuple[str, str]], source: str = "override") -> RunConfig:
        values = dict(self.values)
        for key, raw in pairs:
            entry = KEYS.get(key)
            if entry is None:
                raise ConfigError(f"{source}: unknown key {key!r}")
            try:
                v = entry.parse(raw)
                if v is not None:
                    entry.check(v)
            except ValueError as exc:
                raise ConfigError(f"{source}: {key}: {exc}") from None
            values[key] = v
        cfg = RunConfig(values)
        cfg.validate()
        return cfg

    @classmethod
    def load(cls, path) -> RunConfig:
        pairs = []
        with open(path, encoding="utf-8") as f:
            for lineno, line in enumerate(f, start=1):
                line = line.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise ConfigError(f"{path}:{lineno}: expected key=value")
                key, raw = line.split("=", 1)
                pairs.append((key.strip(), raw.strip()))
        return cls().with_values(pairs, source=str(path))

    def dump(self) -> str:
        return "".join(f"{k}={_fmt(self.values[k])}\n" for k in KEYS)

    def validate(self) -> None:
        # cross-key constraints live in the module configs
        for build in (self.index, self.retrieval, self.matcher, self.pipeline, self.dataset):
            build()

    def _build(self, cls, prefix: str, **extra):
        kw = {k.split(".", 1)[1]: v for k, v in self.values.items()
              if k.startswith(prefix + ".") and k.split(".", 1)[1] not in extra}
        kw.update(extra)
        try:
            return cls(**kw)
        except InvalidInputError as exc:
            raise ConfigError(f"{prefix}: {exc}") from None

    def index(self) -> IndexConfig:
        return self._build(IndexConfig, "index")

    def retrieval(self) -> RetrievalConfig:
        return self._build(RetrievalConfig, "retrieval")

    def matcher(self) -> MatcherConfig:
        return self._build(MatcherConfig, "matcher")

    def pipeline(self) -> PipelineConfig:
        return self._build(PipelineConfig, "pipeline")

    def dataset(self) -> DatasetConfig:
        kw = {k: v for k, v in self.values.items() if k.startswith("dataset.")}
        kw.pop("dataset.clean_fraction")
        try:
            return DatasetConfig(**{k.split(".", 1)[1]: v for k, v in kw.items()})
        except InvalidInputError as exc:
            raise ConfigError(f"dataset: {exc}") from None
