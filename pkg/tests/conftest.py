import numpy as np
import pytest

from ionwalk.dynamics import DriveParams, calibrate_step

DELTA = float(np.sqrt(1.33))


@pytest.fixture(scope="session")
def trap_params():
    """Calibrated drive at the experimental trap parameters."""
    return calibrate_step(DriveParams(), 1.33)


def coherent_brute(alpha, n_max):
    """Coherent state by direct summation with Python integers for n!."""
    import math

    out = np.zeros(n_max + 1, dtype=complex)
    for n in range(n_max + 1):
        out[n] = alpha ** n / math.sqrt(math.factorial(n)) if n < 170 else 0.0
    return out * np.exp(-abs(alpha) ** 2 / 2)


#: ``(number, title, passed, detail)`` rows recorded by the acceptance suite
ACCEPTANCE = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, passed, detail in sorted(ACCEPTANCE, key=lambda r: r[0]):
        terminalreporter.write_line(
            f"criterion {number:>2} {'PASS' if passed else 'FAIL'}  {title}: {detail}")
