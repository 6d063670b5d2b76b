from pathlib import Path

import pytest

from gradcap.cli import corpus_dir
from gradcap.parser import parse_program

CORPUS = corpus_dir()
CORPUS_NAMES = sorted(p.stem for p in CORPUS.glob("*.gcap"))


def load_corpus(name: str):
    path = CORPUS / f"{name}.gcap"
    return parse_program(path.read_text(), f"corpus/{name}.gcap")


@pytest.fixture(params=CORPUS_NAMES)
def corpus_program(request):
    return request.param, load_corpus(request.param)


# Acceptance results, printed once at the end of the session.
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(line)
