import sys
from pathlib import Path

import pytest
import torch

from cogtran.alignment import Msa
from cogtran.dataio import load_collection, sample_dir
from cogtran.phonology import default_model, segment

sys.path.insert(0, str(Path(__file__).parent))
torch.set_num_threads(1)

# the cognate set of the juniper example, aligned as in the published figure
TABLE1_ROWS = [
    ("French", "ʒ ə n j ɛ v - ʁ - -"),
    ("Italian", "dʒ i n - e p - r o -"),
    ("Spanish", "x u n - i p e ɾ o -"),
    ("Latin", "j uː n - ɪ p ɛ r ʊ m"),
]
TABLE2_ROWS = [
    ("French", "ʒ ə n j.ɛ v - ʁ -"),
    ("Italian", "dʒ i n e p - r o"),
    ("Spanish", "x u n i p e ɾ o"),
    ("Latin", "j uː n ɪ p ɛ r ʊ.m"),
]
TABLE1_WORDS = [
    ("French", "ʒ ə n j ɛ v ʁ"),
    ("Italian", "dʒ i n e p r o"),
    ("Spanish", "x u n i p e ɾ o"),
    ("Latin", "j uː n ɪ p ɛ r ʊ m"),
]


def rows(spec):
    return [(lang, line.split()) for lang, line in spec]


@pytest.fixture(scope="session")
def scm():
    return default_model()


@pytest.fixture
def table1():
    return Msa(rows(TABLE1_ROWS))


@pytest.fixture
def table1_words():
    return [(lang, segment(form)) for lang, form in TABLE1_WORDS]


@pytest.fixture(scope="session")
def sample():
    return load_collection(sample_dir())


def pytest_terminal_summary(terminalreporter):
    acceptance = sys.modules.get("test_acceptance")
    if acceptance is None or not acceptance.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for line in acceptance.summary_lines():
        terminalreporter.write_line(line)
