from hypothesis import settings

settings.register_profile("repro", derandomize=True, print_blob=True)
settings.load_profile("repro")

_CRITERIA = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion exercised by the test")


def pytest_runtest_makereport(item, call):
    mark = item.get_closest_marker("criterion")
    if mark is None or call.when != "call":
        return
    entry = _CRITERIA.setdefault(mark.args[0], [])
    xfail = item.get_closest_marker("xfail")
    if call.excinfo is None:
        entry.append((item.name, "xpass" if xfail else "pass"))
    else:
        entry.append((item.name, "xfail" if xfail else "fail"))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for n in sorted(_CRITERIA):
        results = _CRITERIA[n]
        ok = all(r == "pass" for _, r in results)
        detail = ", ".join(f"{name}: {r}" for name, r in results)
        tr.write_line(f"criterion {n:2d}: {'PASS' if ok else 'FAIL'}  ({detail})")
