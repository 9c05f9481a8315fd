import json
import random
from fractions import Fraction
from pathlib import Path

import pytest

from hgmtrace.datum import parse_datum_text

GOLDEN = Path(__file__).parent / "golden" / "oracle_traces.jsonl"

Z = Fraction(314, 159)

# the five reference data, ascending weight
DATA_TEXTS = [
    "1/4,3/4;1/6,5/6",
    "1/10,3/10,7/10,9/10;1/6,1/6,5/6,5/6",
    "1/4,1/3,2/3,3/4;1/6,1/6,5/6,5/6",
    "1/5,2/5,1/2,1/2,3/5,4/5;1/6,1/6,1/6,5/6,5/6,5/6",
    "1/5,1/3,2/5,1/2,1/2,3/5,2/3,4/5;1/6,1/6,1/6,1/6,5/6,5/6,5/6,5/6",
]


@pytest.fixture(scope="session")
def data():
    return [parse_datum_text(t) for t in DATA_TEXTS]


@pytest.fixture(scope="session")
def golden_records():
    with open(GOLDEN) as f:
        return [json.loads(line) for line in f]


@pytest.fixture()
def rng():
    return random.Random(20260824)


ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
