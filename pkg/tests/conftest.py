import sys


def pytest_terminal_summary(terminalreporter):
    """Print the acceptance verdict lines after capture is released."""
    lines = []
    for name, module in sys.modules.items():
        if name.rpartition(".")[2] == "test_acceptance":
            lines = getattr(module, "VERDICT_LINES", [])
            break
    if not lines:
        return
    terminalreporter.section("acceptance criteria")
    for line in lines:
        terminalreporter.write_line(line)
