import sys

from hypothesis import settings

settings.register_profile("cauchygap", database=None, max_examples=25, deadline=None, derandomize=True)
settings.load_profile("cauchygap")


def pytest_terminal_summary(terminalreporter):
    module = sys.modules.get("test_acceptance")
    results = getattr(module, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for k in sorted(results):
        terminalreporter.write_line(results[k])
