import pytest

# filled by test_acceptance: criterion number -> (passed, label)
ACCEPTANCE_RESULTS: dict[int, tuple[bool, str]] = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(ACCEPTANCE_RESULTS):
        passed, label = ACCEPTANCE_RESULTS[number]
        terminalreporter.write_line(f"[{'PASS' if passed else 'FAIL'}] {number:2d}. {label}")


@pytest.fixture
def criterion(request):
    """Record the outcome of one acceptance criterion for the summary table."""
    marker = request.node.get_closest_marker("criterion")
    number, label = marker.args
    ACCEPTANCE_RESULTS[number] = (False, label)
    yield
    ACCEPTANCE_RESULTS[number] = (True, label)


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, label): acceptance criterion")
