from pathlib import Path

import pytest

HERE = Path(__file__).resolve().parent
GOLDEN = HERE / "golden"
BUNDLE = HERE.parent / "src" / "uedkit" / "data" / "synthetic"


@pytest.fixture
def golden():
    return GOLDEN


@pytest.fixture
def bundle():
    return BUNDLE


@pytest.fixture
def lexdir(tmp_path):
    """Small lexicon pair: emotion.txt and warmth.csv."""
    d = tmp_path / "lex"
    d.mkdir()
    (d / "emotion.txt").write_text(
        "good\tpositive\t1\ngood\tjoy\t1\nbad\tnegative\t1\n"
        "terrible\tnegative\t1\nterrible\tfear\t1\nterrible\tsadness\t1\n"
        "vaccine\ttrust\t1\nflu\tfear\t1\nday\tjoy\t0\n")
    (d / "warmth.csv").write_text(
        "word,warmth,sociability,trust,competence,arousal\n"
        "kind,0.9,0.95,0.85,0.6,0.3\nbad,0.1,0.2,0.15,0.3,0.55\n"
        "good,0.85,0.8,0.82,0.7,0.4\nvaccine,0.6,0.4,0.65,0.7,0.4\n")
    return d


# -- acceptance summary: one line per criterion ---------------------------------

_criteria: dict = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion")


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or rep.when not in ("setup", "call"):
        return
    num, title = mark.args
    if rep.failed or (rep.when == "call"):
        prev = _criteria.get(num, (title, "PASS", 0.0))
        status = "FAIL" if rep.failed or prev[1] == "FAIL" else "PASS"
        _criteria[num] = (title, status, prev[2] + rep.duration)


def pytest_terminal_summary(terminalreporter):
    if not _criteria:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_criteria):
        title, status, secs = _criteria[num]
        terminalreporter.write_line(f"criterion {num:2d} {status}  {title}  ({secs:.1f}s)")
