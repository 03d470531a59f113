import os

import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("default", deadline=None, max_examples=100,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("quick", deadline=None, max_examples=20)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))

# lines appended by the acceptance tests, replayed after the run
ACCEPTANCE_LINES: list[str] = []


@pytest.fixture
def acceptance_report(request):
    terminal = request.config.pluginmanager.getplugin("terminalreporter")

    def report(label: str, ok: bool, detail: str = "", status: str = "") -> None:
        line = f"{status or ('PASS' if ok else 'FAIL')}  {label}" + (f"  ({detail})" if detail else "")
        ACCEPTANCE_LINES.append(line)
        if terminal is not None:
            terminal.write_line("")
            terminal.write_line(line)
        else:
            print(line)

    return report


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
