import os
import sys

import pytest

sys.path.insert(0, os.path.dirname(__file__))

from inextbeam.assembly import assemble  # noqa: E402
from inextbeam.modes import ModeBasis  # noqa: E402

_ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session", autouse=True)
def _tensor_cache(tmp_path_factory):
    path = tmp_path_factory.mktemp("tensor-cache")
    old = os.environ.get("INEXTBEAM_CACHE_DIR")
    os.environ["INEXTBEAM_CACHE_DIR"] = str(path)
    yield path
    if old is None:
        os.environ.pop("INEXTBEAM_CACHE_DIR", None)
    else:
        os.environ["INEXTBEAM_CACHE_DIR"] = old


@pytest.fixture(scope="session")
def cache_dir(_tensor_cache):
    return _tensor_cache


@pytest.fixture(scope="session")
def basis6():
    return ModeBasis(6)


@pytest.fixture(scope="session")
def tensors6(basis6):
    return assemble(basis6)


@pytest.fixture(scope="session")
def basis8():
    return ModeBasis(8)


@pytest.fixture(scope="session")
def report():
    """Record one PASS/FAIL line per acceptance criterion; printed in the terminal summary."""

    def record(label: str, passed: bool, detail: str) -> bool:
        line = f"{'PASS' if passed else 'FAIL'}  {label}: {detail}"
        _ACCEPTANCE_LINES.append(line)
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
