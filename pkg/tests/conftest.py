"""Shared pytest hooks: collect acceptance verdicts, print them at the end.

Tests register clause verdicts via `config._acceptance` so the roll-up
survives output capturing and lands in the terminal summary.
"""


def pytest_configure(config):
    config._acceptance = {}


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    acc = getattr(config, "_acceptance", None)
    if not acc:
        return
    terminalreporter.section("acceptance verdicts")
    for num in sorted(acc):
        clauses = acc[num]
        ok = all(v for _, v, _ in clauses)
        terminalreporter.write_line(f"[acceptance] criterion {num}: {'PASS' if ok else 'FAIL'}")
        for clause, v, detail in clauses:
            tag = "PASS" if v else "FAIL"
            terminalreporter.write_line(f"    {clause or '-'}: {tag}  {detail}")
