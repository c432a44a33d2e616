import os

# single-threaded BLAS keeps timings and float reductions reproducible
for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
    os.environ.setdefault(_var, "1")

import pytest  # noqa: E402
from hypothesis import settings  # noqa: E402


settings.register_profile("default", deadline=None, max_examples=60)
settings.load_profile("default")

_LINES = pytest.StashKey[list]()


@pytest.fixture
def criterion_log(request):
    """Record a one-line PASS/FAIL verdict; all verdicts are echoed at the end."""
    lines = request.config.stash.setdefault(_LINES, [])

    def log(number: int, ok: bool, detail: str):
        line = f"criterion {number:2d}: {'PASS' if ok else 'FAIL'}  {detail}"
        lines.append((number, line))
        print(line)
    return log


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = config.stash.get(_LINES, [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for _, line in sorted(lines):
            terminalreporter.write_line(line)
