import re
from collections import defaultdict

CRITERIA = {
    1: "ER exact values",
    2: "CR exact values",
    3: "guided enumeration counts",
    4: "bipartite CR values",
    5: "OR exact values",
    6: "detector oracle equivalence",
    7: "ILP cross-validation",
    8: "flag structural checks",
    9: "flag bound soundness",
    10: "tabu reliability",
}

_outcomes = defaultdict(list)


def pytest_runtest_logreport(report):
    m = re.search(r"test_acceptance\.py::test_c(\d+)_", report.nodeid)
    if not m:
        return
    if report.when == "call" or (report.when == "setup" and report.outcome != "passed"):
        if hasattr(report, "wasxfail"):
            state = "xfail"
        else:
            state = report.outcome
        _outcomes[int(m.group(1))].append((report.nodeid.split("::")[-1], state))


def pytest_terminal_summary(terminalreporter):
    if not _outcomes:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for k, title in CRITERIA.items():
        res = _outcomes.get(k)
        if not res:
            tr.write_line(f"criterion {k:2d} {title}: NOT RUN")
            continue
        passed = sum(s == "passed" for _, s in res)
        failed = [n for n, s in res if s == "failed"]
        xfailed = [n for n, s in res if s == "xfail"]
        skipped = [n for n, s in res if s == "skipped"]
        verdict = "PASS" if not failed and not xfailed else "FAIL"
        notes = [f"{passed}/{len(res)} passed"]
        if xfailed:
            notes.append("unattainable as stated (xfail): " + ", ".join(xfailed))
        if failed:
            notes.append("failed: " + ", ".join(failed))
        if skipped:
            notes.append(f"{len(skipped)} stretch skipped")
        tr.write_line(f"criterion {k:2d} {title}: {verdict} ({'; '.join(notes)})")
