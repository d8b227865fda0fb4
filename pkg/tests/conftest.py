import os

from hypothesis import HealthCheck, settings

settings.register_profile("default", max_examples=60, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("thorough", max_examples=500, deadline=None)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


from pathlib import Path

import pytest

DATA = Path(__file__).parent / "data"


@pytest.fixture(scope="session")
def tiny_model():
    """(vocab, costs, mappings, index) learned from the bundled tiny corpus."""
    from vocabfix.alignment import align_corpus, estimate_costs, read_parallel_corpus
    from vocabfix.index import UserVocabulary, build_index
    from vocabfix.mappings import extract_mappings

    corpus = read_parallel_corpus(DATA / "tiny_corpus.tsv")
    costs = estimate_costs(corpus, 3)
    mappings = extract_mappings(align_corpus(corpus, costs))
    vocab = UserVocabulary.load(DATA / "tiny_vocab.txt")
    return vocab, costs, mappings, build_index(vocab, mappings)


# (criterion number, report line), filled by the acceptance tests
ACCEPTANCE: list[tuple[float, str]] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(ACCEPTANCE):
            terminalreporter.write_line(line)
