import numpy as np
import pytest


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_configure(config):
    config._criteria = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        status = "PASS" if rep.passed else ("SKIP" if rep.skipped else "FAIL")
        detail = "; ".join(str(v) for k, v in item.user_properties if k == "detail")
        item.config._criteria.setdefault(mark.args[0], []).append((item.name, status, detail))


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    crit = getattr(config, "_criteria", {})
    if not crit:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(crit):
        rows = crit[k]
        run = [r for r in rows if r[1] != "SKIP"]
        overall = "FAIL" if any(r[1] == "FAIL" for r in rows) else ("PASS" if run else "SKIP")
        terminalreporter.write_line(f"criterion {k:>2}: {overall}")
        for name, status, detail in rows:
            terminalreporter.write_line(f"    {status:4} {name}" + (f"  [{detail}]" if detail else ""))
