"""Collects acceptance outcomes and prints one line per criterion."""

_CRITERIA: list[tuple[str, str, str]] = []


def pytest_runtest_logreport(report):
    if report.when != "call":
        return
    props = dict(report.user_properties)
    if "criterion" in props:
        _CRITERIA.append((props["criterion"], report.outcome, props.get("detail", "")))


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.section("acceptance criteria")
    for name, outcome, detail in sorted(_CRITERIA):
        mark = "PASS" if outcome == "passed" else "FAIL"
        terminalreporter.write_line(f"{mark}  criterion {name}  {detail}".rstrip())
