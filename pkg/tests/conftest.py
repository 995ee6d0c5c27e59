import pytest

_RESULTS = {}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(number, title): acceptance criterion reported in the summary")


@pytest.fixture
def details(request):
    """Record a line of measured values for the acceptance summary."""

    def add(text):
        request.node.user_properties.append(("details", text))

    return add


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    number, title = mark.args
    if rep.when == "call" or (rep.when == "setup" and not rep.passed):
        info = "; ".join(v for k, v in item.user_properties if k == "details")
        _RESULTS[number] = (title, rep.passed, info, rep.duration)


def pytest_terminal_summary(terminalreporter):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(_RESULTS):
        title, ok, info, secs = _RESULTS[number]
        line = f"C{number:<2} {'PASS' if ok else 'FAIL'}  {title} ({secs:.1f} s)"
        if info:
            line += f"  [{info}]"
        terminalreporter.write_line(line)
    passed = sum(ok for _, ok, _, _ in _RESULTS.values())
    terminalreporter.write_line(f"{passed}/{len(_RESULTS)} criteria passed")
