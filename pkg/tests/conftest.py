import numpy as np
import pytest
from hypothesis import settings

settings.register_profile("default", max_examples=60, deadline=None)
settings.load_profile("default")

_RESULTS: dict[str, list[str]] = {}
_LABELS: dict[str, str] = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(num, label): acceptance criterion id")


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.outcome != "passed"):
        return
    for key, label in report.user_properties:
        if key == "criterion":
            num, text = label
            _LABELS[num] = text
            outcome = "passed" if report.passed else ("xfail" if hasattr(report, "wasxfail") else "failed")
            _RESULTS.setdefault(num, []).append(outcome)


@pytest.hookimpl(tryfirst=True)
def pytest_runtest_setup(item):
    for m in item.iter_markers("criterion"):
        item.user_properties.append(("criterion", (str(m.args[0]), m.args[1])))


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for num in sorted(_RESULTS, key=lambda s: (int(s.split(".")[0]), s)):
        outcomes = _RESULTS[num]
        ok = all(o == "passed" for o in outcomes)
        tr.write_line(f"{'PASS' if ok else 'FAIL'}  [{num}] {_LABELS[num]}")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)
