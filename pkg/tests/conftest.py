"""Shared pytest wiring: the acceptance sweep gets a one-line-per-criterion
summary block at the end of the run."""


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    outcomes = []
    for verdict, label in (("passed", "PASS"), ("failed", "FAIL"), ("error", "FAIL")):
        for report in terminalreporter.stats.get(verdict, ()):
            nodeid = getattr(report, "nodeid", "")
            if "test_acceptance.py::" in nodeid and getattr(report, "when", "call") == "call":
                outcomes.append((nodeid.split("::")[-1], label))
    if outcomes:
        terminalreporter.section("acceptance criteria")
        for name, label in sorted(outcomes):
            terminalreporter.write_line(f"{label}  {name}")
