import numpy as np
import pytest
from hypothesis import HealthCheck, settings

settings.register_profile("repo", deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("repo")

# Invariant suites run at least this many randomized cases each.
INVARIANT_EXAMPLES = 1000


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def rel_rms(a, b):
    a, b = np.asarray(a), np.asarray(b)
    return float(np.sqrt(np.mean(np.abs(a - b) ** 2) / np.mean(np.abs(b) ** 2)))


IMAGE_SEEDS = range(10)


@pytest.fixture(scope="session")
def image_runs():
    """VR-FFT(16^4) and direct-256 reconstructions of the bundled scene, per seed."""
    from analogfft import fixtures, sigproc
    from analogfft.device import HardwareModel

    img = fixtures.image_fixture()
    runs = {}
    for seed in IMAGE_SEEDS:
        model = HardwareModel().with_seed(seed)
        vr = sigproc.image_spectrum_and_reconstruct(
            img, "vr", sigproc.image_config("vr", model), (16, 16, 16, 16))
        direct = sigproc.image_spectrum_and_reconstruct(
            img, "direct", sigproc.image_config("direct", model), k_max=256)
        runs[seed] = (vr, direct)
    return runs


ACCEPTANCE: dict = {}


@pytest.fixture
def verdict():
    """Record one pass/fail line for an acceptance criterion, then assert it."""
    def check(name, ok, detail=""):
        ACCEPTANCE[name] = (bool(ok), detail)
        assert ok, f"criterion {name} failed: {detail}"
    return check


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for name in sorted(ACCEPTANCE, key=lambda s: (int(s.rstrip("abc")), s)):
        ok, detail = ACCEPTANCE[name]
        terminalreporter.write_line(f"criterion {name:<3} {'PASS' if ok else 'FAIL'}  {detail}")
