"""Prints one PASS/FAIL line per acceptance criterion at the end of the run."""

import json
from pathlib import Path

_CRITERIA: dict[int, dict] = {}


def pytest_runtest_logreport(report):
    if report.when != "call" and not (report.when == "setup" and report.failed):
        return
    for key, value in report.user_properties:
        if key == "criterion":
            entry = _CRITERIA.setdefault(value["id"], {"id": value["id"], "title": value["title"],
                                                        "details": {}, "passed": True})
            entry["details"].update(value.get("details", {}))
            entry["passed"] = entry["passed"] and report.passed


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    tr = terminalreporter
    tr.section("acceptance criteria")
    for cid in sorted(_CRITERIA):
        c = _CRITERIA[cid]
        note = c["details"].get("note")
        tail = f" ({note})" if note else ""
        tr.write_line(f"criterion {cid}: {'PASS' if c['passed'] else 'FAIL'}  {c['title']}{tail}")
    out = Path(tr.config.rootpath) / "acceptance_summary.json"
    out.write_text(json.dumps([_CRITERIA[k] for k in sorted(_CRITERIA)], indent=2, default=str) + "\n")
    tr.write_line(f"details written to {out.name}")
