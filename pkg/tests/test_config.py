import pytest

from vocabfix.config import KEYS, RunConfig, describe_keys
from vocabfix.errors import ConfigError


def test_defaults_build_every_module_config():
    cfg = RunConfig()
    assert cfg.retrieval().top_k == 10 and cfg.matcher().tau == 0.6
    assert cfg.pipeline().max_words == 15 and cfg.dataset().n_random == 4
    assert cfg.index().max_postings == 200


def test_overrides_are_parsed():
    cfg = RunConfig().with_values([("matcher.tau", "0.4"), ("matcher.snap", "off"),
                                   ("dataset.negative_guard", "none")])
    assert cfg["matcher.tau"] == 0.4 and cfg.matcher().snap is False
    assert cfg.dataset().negative_guard is None


@pytest.mark.parametrize("key,value", [
    ("nope", "1"), ("matcher.tau", "0"), ("matcher.tau", "abc"), ("seed", "-1"),
    ("dataset.clean_fraction", "1.5"), ("matcher.snap", "maybe"),
    ("pipeline.min_words", "20"), ("dataset.n_random", "5"), ("index.ngram_min", "6"),
])
def test_invalid_values_are_config_errors(key, value):
    with pytest.raises(ConfigError):
        RunConfig().with_values([(key, value)])


def test_file_round_trip(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("# tuned\nseed = 7\nretrieval.top_k=5  # fewer\n\n")
    cfg = RunConfig.load(path)
    assert cfg["seed"] == 7 and cfg["retrieval.top_k"] == 5
    path.write_text(cfg.dump())
    assert RunConfig.load(path) == cfg


def test_malformed_line(tmp_path):
    path = tmp_path / "run.cfg"
    path.write_text("seed 7\n")
    with pytest.raises(ConfigError, match="key=value"):
        RunConfig.load(path)


def test_description_lists_every_key():
    text = describe_keys()
    assert all(k in text for k in KEYS)
