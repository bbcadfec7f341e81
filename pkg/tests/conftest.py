import contextlib
import time

import pytest
from hypothesis import HealthCheck, settings

from heteroclinic.potential import make_quartic, modify
from heteroclinic.trajectory import Grid

settings.register_profile(
    "default",
    deadline=None,
    max_examples=60,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("default")

_RESULTS = pytest.StashKey[list]()


@pytest.fixture(scope="session")
def quartic():
    return make_quartic()


@pytest.fixture(scope="session")
def vtilde(quartic):
    return modify(quartic, 0.1)


@pytest.fixture(scope="session")
def grid():
    return Grid(12.0, 1201)


@pytest.fixture
def criterion(request):
    """Context manager that logs one PASS/FAIL line for an acceptance criterion."""
    log = request.config.stash.setdefault(_RESULTS, [])

    @contextlib.contextmanager
    def run(label):
        info = {}
        t0 = time.perf_counter()
        try:
            yield info
        except BaseException as exc:
            log.append((label, False, f"{type(exc).__name__}: {str(exc).splitlines()[0] if str(exc) else ''}"))
            raise
        detail = info.get("detail", "")
        log.append((label, True, f"{detail} [{time.perf_counter() - t0:.2f}s]".strip()))

    return run


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    log = config.stash.get(_RESULTS, [])
    if not log:
        return
    terminalreporter.section("acceptance criteria")
    for label, ok, detail in sorted(log, key=lambda r: int(r[0].split()[0][2:])):
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'}  {label}  {detail}")
