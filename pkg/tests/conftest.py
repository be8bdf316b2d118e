import sys
from pathlib import Path

# lets test modules share fixtures such as test_core.make_data
sys.path.insert(0, str(Path(__file__).parent))

_ACCEPTANCE = {}


def record(criterion, ok, detail):
    """Remember one acceptance result for the terminal summary."""
    _ACCEPTANCE[criterion] = f"criterion {criterion}: {'PASS' if ok else 'FAIL'}  {detail}"


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for k in sorted(_ACCEPTANCE):
            terminalreporter.write_line(_ACCEPTANCE[k])
