"""Shared test plumbing: acceptance criteria get one visible summary line each."""

import functools

_CRITERION_LINES = []


def criterion(name):
    """Mark an acceptance test; its pass/fail line prints in the summary."""

    def decorate(fn):
        @functools.wraps(fn)
        def wrapper(*args, **kwargs):
            ok = False
            try:
                result = fn(*args, **kwargs)
                ok = True
                return result
            finally:
                _CRITERION_LINES.append(f"[{'PASS' if ok else 'FAIL'}] {name}")

        return wrapper

    return decorate


def pytest_terminal_summary(terminalreporter):
    if _CRITERION_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _CRITERION_LINES:
            terminalreporter.write_line(line)
