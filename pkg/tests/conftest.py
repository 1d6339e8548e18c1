import pytest

from dynrbac import corpus
from dynrbac.dsl import parse_policy


def mutate(name: str, old: str, new: str):
    """Parse a corpus file after a textual edit (which must apply)."""
    text = corpus.read_text(name)
    assert old in text, f"mutation anchor not found in {name}: {old!r}"
    return parse_policy(text.replace(old, new))


@pytest.fixture
def abs_m():
    return corpus.load("rms_abs.pol")


@pytest.fixture
def ref1():
    return corpus.load("rms_ref1.pol")


@pytest.fixture
def ref2():
    return corpus.load("rms_ref2.pol")
