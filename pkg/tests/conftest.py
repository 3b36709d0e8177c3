"""Echo the acceptance verdicts after the run.

pytest captures test stdout at the file-descriptor level, so the verdict
lines the acceptance tests print would only surface for failures. This hook
repeats them through the terminal reporter, which writes outside capture,
giving every console log one visible PASS/FAIL line per acceptance check.
"""

import sys


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance") or sys.modules.get(
        "tests.test_acceptance"
    )
    verdicts = getattr(module, "VERDICTS", None)
    if not verdicts:
        return
    terminalreporter.write_sep("=", "acceptance verdicts")
    for label, verdict in verdicts:
        terminalreporter.write_line(f"[acceptance] {label}: {verdict}")
