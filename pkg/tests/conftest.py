import numpy as np
import pytest

from bolab.density import TWO_PI, CircleDensity
from bolab.fields import FourierField


# populated by tests/test_acceptance.py: {number: (label, passed)}
ACCEPTANCE_RESULTS = {}


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(ACCEPTANCE_RESULTS):
        label, ok = ACCEPTANCE_RESULTS[num]
        status = "PASS" if ok else "FAIL"
        terminalreporter.write_line(f"criterion {num:2d} [{status}] {label}")


@pytest.fixture
def rng():
    return np.random.default_rng(20260826)


def random_density(seed, n_modes=6, amp=0.3):
    """A strictly positive random trigonometric density."""
    r = np.random.default_rng(seed)
    raw = {m: amp / TWO_PI * (r.standard_normal() + 1j * r.standard_normal())
           / (2 * m ** 2) for m in range(1, n_modes + 1)}
    while True:
        modes = dict(raw)
        modes[0] = 1.0 / TWO_PI
        f = FourierField.from_modes(modes, n_modes)
        if f.values(512).min() > 1e-3:
            return CircleDensity(f)
        raw = {m: 0.6 * c for m, c in raw.items()}


def random_field(seed, cutoff=8, scale=1.0):
    """A random mean-free real field."""
    r = np.random.default_rng(seed)
    a = scale * r.standard_normal(cutoff)
    b = scale * r.standard_normal(cutoff)
    return FourierField.from_real_basis(a, b)
