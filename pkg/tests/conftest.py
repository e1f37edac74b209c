import functools

import pytest

from rieszlab.equilibrium import solve_set
from rieszlab.geometry import Ball, Interval, SetSpec
from rieszlab.kernels import KernelSpec


@functools.lru_cache(maxsize=None)
def solved(kind, shape, resolution, grading="endpoint_refined"):
    """Cached solves shared across test modules."""
    sets = {
        "interval": SetSpec(1, [Interval(-1.0, 1.0)]),
        "interval2": SetSpec(1, [Interval(-2.0, 2.0)]),
        "two_intervals": SetSpec(1, [Interval(-2.0, -1.0), Interval(1.0, 2.0)]),
        "disk": SetSpec(2, [Ball((0.0, 0.0), 1.0)]),
        "disk2": SetSpec(2, [Ball((0.0, 0.0), 2.0)]),
        "ball3": SetSpec(3, [Ball((0.0, 0.0, 0.0), 1.0)]),
    }
    spec = sets[shape]
    kernels = {
        "log": KernelSpec.log(max(2, spec.dim)),
        "riesz1": KernelSpec.riesz(1.0, 3),
    }
    kernel = kernels[kind]
    return solve_set(spec, kernel, resolution, grading), kernel


@pytest.fixture(scope="session")
def interval_log():
    return solved("log", "interval", 2000)


@pytest.fixture(scope="session")
def ball3_newton():
    return solved("riesz1", "ball3", 3000)


@pytest.fixture(scope="session")
def disk_codim():
    return solved("riesz1", "disk", 3000)


# acceptance criteria: one pass/fail line each in the terminal summary

_CRITERIA = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None or rep.when not in ("setup", "call"):
        return
    number, title = mark.args
    detail = "; ".join(str(v) for k, v in item.user_properties if k == "detail")
    if rep.failed or rep.when == "call":
        _CRITERIA[number] = (title, "PASS" if rep.passed else "FAIL", detail)


def pytest_terminal_summary(terminalreporter):
    if not _CRITERIA:
        return
    terminalreporter.write_sep("=", "acceptance criteria")
    for number in sorted(_CRITERIA):
        title, status, detail = _CRITERIA[number]
        line = f"C{number:<3d}{status}  {title}"
        terminalreporter.write_line(line + (f"  [{detail}]" if detail else ""))
