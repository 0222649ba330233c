import pytest

from rpgcache.logic import Backend
from rpgcache.logic import terms as T

INT = T.Sort.INT


@pytest.fixture(scope="session")
def backend():
    b = Backend()
    yield b
    b.close()


def ivars(*names):
    return [T.var(n, INT) for n in names]


def formula(text, *vs):
    from rpgcache.logic import read_formula

    return read_formula(text, {v.val: v for v in vs})


def pytest_terminal_summary(terminalreporter):
    """One PASS/FAIL line per acceptance criterion."""
    lines = []
    for outcome in ("passed", "failed", "error"):
        for rep in terminalreporter.stats.get(outcome, []):
            if "test_acceptance.py" not in rep.nodeid or rep.when != "call" and outcome != "error":
                continue
            name = rep.nodeid.split("::")[-1]
            detail = dict(rep.user_properties).get("detail", "")
            lines.append((name, "PASS" if outcome == "passed" else "FAIL", detail))
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for name, status, detail in sorted(lines, key=lambda x: int(x[0].split("_")[2])):
        terminalreporter.write_line(f"{status} {name}: {detail}")
