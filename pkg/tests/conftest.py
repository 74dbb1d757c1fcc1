import numpy as np
import pytest

from crofton_lab.metric import build_metric

FLAT = "1"
HEMISPHERE = "2/(1+x^2+y^2)"
TILTED = "1+0.1*x"
REFERENCE = {"flat": FLAT, "hemisphere": HEMISPHERE, "tilted": TILTED}

_ACCEPTANCE_LINES = []


@pytest.fixture(scope="session")
def flat():
    return build_metric(FLAT)


@pytest.fixture(scope="session")
def hemi():
    return build_metric(HEMISPHERE)


@pytest.fixture(scope="session")
def tilted():
    return build_metric(TILTED)


@pytest.fixture(scope="session")
def metrics(flat, hemi, tilted):
    return {"flat": flat, "hemisphere": hemi, "tilted": tilted}


@pytest.fixture
def verdict():
    """Record one acceptance line; shown again in the terminal summary."""

    def record(label: str, ok: bool, detail: str = "") -> bool:
        line = f"{'PASS' if ok else 'FAIL'}  {label}  {detail}".rstrip()
        print(line)
        _ACCEPTANCE_LINES.append(line)
        return ok

    return record


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in _ACCEPTANCE_LINES:
            terminalreporter.write_line(line)


def great_circle(t, tilt, phase=0.0):
    """Stereographic image of a unit-speed great circle through the equator.

    Returns q, q', q'' as (len(t), 2) arrays; an independent oracle for the
    hemisphere metric rho = 2 / (1 + r^2).
    """
    t = np.asarray(t, dtype=float)
    a = np.array([np.cos(phase), np.sin(phase), 0.0])
    b = np.array([-np.sin(phase) * np.cos(tilt), np.cos(phase) * np.cos(tilt), -np.sin(tilt)])
    c, s = np.cos(t)[:, None], np.sin(t)[:, None]
    P = c * a + s * b
    dP = -s * a + c * b
    d2P = -P
    X, dX, d2X = P[:, :2], dP[:, :2], d2P[:, :2]
    w, dw, d2w = 1.0 - P[:, 2:], -dP[:, 2:], -d2P[:, 2:]
    q = X / w
    dq = dX / w - X * dw / w**2
    d2q = d2X / w - 2.0 * dX * dw / w**2 - X * d2w / w**2 + 2.0 * X * dw**2 / w**3
    return q, dq, d2q
