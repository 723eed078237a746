import pytest

# criterion number -> (ok, detail), filled by test_acceptance
ACCEPTANCE = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(ACCEPTANCE):
        ok, detail = ACCEPTANCE[k]
        terminalreporter.write_line("criterion %2d: %s  %s" % (k, "PASS" if ok else "FAIL", detail))


@pytest.fixture
def report():
    def record(k, ok, detail=""):
        ACCEPTANCE[k] = (bool(ok), detail)
        print("criterion %2d: %s  %s" % (k, "PASS" if ok else "FAIL", detail))
        assert ok, detail
    return record
