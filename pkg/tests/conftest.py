import contextlib

import pytest

_RESULTS_KEY = pytest.StashKey[list]()


def pytest_configure(config):
    config.stash[_RESULTS_KEY] = []


class _Outcome:
    def __init__(self):
        self.detail = ""


@pytest.fixture
def criterion(request):
    """Context manager that logs one pass/fail line per acceptance criterion."""
    results = request.config.stash[_RESULTS_KEY]

    @contextlib.contextmanager
    def run(name, title):
        outcome = _Outcome()
        try:
            yield outcome
        except BaseException:
            results.append(f"{name} FAIL  {title}  {outcome.detail}".rstrip())
            print(results[-1])
            raise
        results.append(f"{name} PASS  {title}  {outcome.detail}".rstrip())
        print(results[-1])

    return run


def pytest_terminal_summary(terminalreporter, config):
    results = config.stash.get(_RESULTS_KEY, [])
    if results:
        terminalreporter.section("acceptance criteria")
        for line in sorted(results, key=lambda s: int(s.split()[0][2:])):
            terminalreporter.write_line(line)
