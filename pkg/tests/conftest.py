import pytest


@pytest.fixture
def criterion_report(request):
    """Write a line through the terminal reporter so it stays visible.

    Plain prints are swallowed by capture; the acceptance tests use this to
    emit their one-line pass/fail verdicts under any pytest invocation.
    """
    reporter = request.config.pluginmanager.get_plugin("terminalreporter")

    def _report(line: str):
        if reporter is None:
            print(line)
            return
        reporter.ensure_newline()
        reporter.write_line(line)

    return _report
