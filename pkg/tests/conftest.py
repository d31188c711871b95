"""Suite-wide fixtures.

The ``criterion`` fixture wraps one end-to-end check with a wall-clock
budget; the terminal summary then prints one line per criterion so a full
run ends with a scoreboard.
"""

import time
from contextlib import contextmanager

import pytest

_RESULTS: dict[int, tuple[str, bool, float, float]] = {}


@pytest.fixture
def criterion():
    @contextmanager
    def run(num: int, title: str, bound: float):
        t0 = time.perf_counter()
        try:
            yield
        except BaseException:
            _RESULTS[num] = (title, False, time.perf_counter() - t0, bound)
            raise
        dt = time.perf_counter() - t0
        _RESULTS[num] = (title, dt <= bound, dt, bound)
        assert dt <= bound, f"{title}: took {dt:.2f}s, budget {bound:.0f}s"

    return run


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not _RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(_RESULTS):
        title, ok, dt, bound = _RESULTS[num]
        word = "pass" if ok else "FAIL"
        terminalreporter.write_line(
            f"{word}  {num:2d}  {title}  ({dt:.2f}s of {bound:.0f}s)")
