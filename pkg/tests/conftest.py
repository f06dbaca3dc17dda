from hypothesis import settings

# fixed example sequence: property tests draw the same cases on every run
settings.register_profile("fixed", derandomize=True, deadline=None)
settings.load_profile("fixed")

_RESULTS = {}


def record_criterion(number: int, passed, detail: str) -> None:
    """Store the outcome of an acceptance criterion for the end-of-run summary."""
    status = {True: "PASS", False: "FAIL", None: "SKIP"}[passed]
    _RESULTS[number] = f"criterion {number}: {status}  {detail}"


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_RESULTS):
        terminalreporter.write_line(_RESULTS[number])
