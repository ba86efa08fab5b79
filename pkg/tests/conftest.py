import pytest

from refpat.patterndb import BUNDLED_DIR, PatternDatabase

_CRITERIA: dict[int, list[bool]] = {}
_TITLES: dict[int, str] = {}


def pytest_collection_modifyitems(items):
    for item in items:
        mark = item.get_closest_marker("criterion")
        if mark is not None:
            n = mark.args[0]
            _TITLES[n] = mark.args[1] if len(mark.args) > 1 else ""
            _CRITERIA.setdefault(n, [])


def pytest_runtest_logreport(report):
    mark = None
    for kw in report.keywords:
        if kw.startswith("criterion_"):
            mark = int(kw.split("_", 1)[1])
    if mark is None:
        return
    if report.when == "call" or (report.when == "setup" and not report.passed):
        _CRITERIA.setdefault(mark, []).append(report.passed)


def pytest_itemcollected(item):
    mark = item.get_closest_marker("criterion")
    if mark is not None:
        item.keywords[f"criterion_{mark.args[0]}"] = True


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        results = _CRITERIA[n]
        if not results:
            status = "NOT RUN"
        else:
            status = "PASS" if all(results) else "FAIL"
        terminalreporter.write_line(f"criterion {n:2d} {status:7s} {_TITLES.get(n, '')}")


@pytest.fixture(scope="session")
def uniform_db():
    return PatternDatabase.with_uniform()


@pytest.fixture(scope="session")
def full_db():
    db = PatternDatabase.with_uniform()
    db.load_directory(BUNDLED_DIR)
    return db


@pytest.fixture
def fresh_db():
    db = PatternDatabase.with_uniform()
    db.load_directory(BUNDLED_DIR)
    return db
