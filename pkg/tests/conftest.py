import io
import os
from pathlib import Path

import pytest

from matthewcf.interactions import build_interaction_matrix, ingest_lastfm_tsv

ROOT = Path(__file__).resolve().parent.parent
HETREC_CANDIDATES = (
    ROOT / "data" / "user_artists.dat",
    ROOT / "data" / "hetrec2011-lastfm-2k" / "user_artists.dat",
    ROOT / "tests" / "data" / "user_artists.dat",
)

TINY_TSV = b"userID\tartistID\tweight\n1\t10\t3\n1\t11\t5\n2\t10\t1\n"


def hetrec_path():
    """Location of the hetrec-2011 Lastfm user_artists.dat, or None."""
    env = os.environ.get("MATTHEWCF_HETREC")
    if env:
        return Path(env)
    for candidate in HETREC_CANDIDATES:
        if candidate.is_file():
            return candidate
    return None


@pytest.fixture
def tiny_log():
    return ingest_lastfm_tsv(io.BytesIO(TINY_TSV))


@pytest.fixture
def tiny_matrix(tiny_log):
    return build_interaction_matrix(tiny_log)


@pytest.fixture(scope="session")
def hetrec_matrix():
    path = hetrec_path()
    if path is None or not path.is_file():
        pytest.skip("hetrec Lastfm user_artists.dat not available (set MATTHEWCF_HETREC)")
    from matthewcf.interactions import read_log
    return build_interaction_matrix(read_log(path))


def pytest_terminal_summary(terminalreporter):
    import sys
    module = sys.modules.get("test_acceptance")
    results = getattr(module, "RESULTS", None)
    if results:
        terminalreporter.section("acceptance criteria")
        for key in sorted(results, key=lambda k: int(k.split()[0][1:])):
            terminalreporter.write_line(results[key])
