import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))


def pytest_terminal_summary(terminalreporter):
    mod = sys.modules.get("test_acceptance")
    results = getattr(mod, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for name in mod.CRITERIA:
        if name in results:
            ok, detail = results[name]
            terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} criterion {name}: {detail}")
