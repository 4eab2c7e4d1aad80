import json
from pathlib import Path

import pytest

from elicit.affect import SentimentLexicon
from elicit.templates import bundled_templates_path, load_templates
from elicit.textproc import PosLexicon

ORACLES = Path(__file__).parent / "oracles"


@pytest.fixture(scope="session")
def pos_lexicon():
    return PosLexicon.bundled()


@pytest.fixture(scope="session")
def sentiment_lexicon():
    return SentimentLexicon.bundled()


@pytest.fixture(scope="session")
def templates():
    return load_templates(bundled_templates_path())


def load_oracle(name: str) -> dict:
    return json.loads((ORACLES / name).read_text())
