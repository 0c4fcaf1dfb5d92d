# Collects the one-line verdicts from test_acceptance.py and prints them
# after the run, where pytest's output capture cannot hide them.

acceptance_results = []


def report_criterion(num, ok, detail):
    line = f"CRITERION {num}: {'PASS' if ok else 'FAIL'} - {detail}"
    acceptance_results.append((num, line))
    print("\n" + line)
    assert ok, detail


def pytest_terminal_summary(terminalreporter):
    if not acceptance_results:
        return
    terminalreporter.section("acceptance criteria")
    for _, line in sorted(acceptance_results):
        terminalreporter.write_line(line)
