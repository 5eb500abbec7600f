import numpy as np
import pytest
from hypothesis import settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

settings.register_profile("default", max_examples=30, deadline=None)
settings.load_profile("default")

# one line per acceptance criterion, printed at the end of the session
ACCEPTANCE_LINES = {}


def record(criterion, passed, message):
    line = f"[acceptance {criterion:>2}] {'PASS' if passed else 'FAIL'}  {message}"
    ACCEPTANCE_LINES[criterion] = line
    print(line)
    return passed


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for k in sorted(ACCEPTANCE_LINES):
            terminalreporter.write_line(ACCEPTANCE_LINES[k])


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


finite = st.floats(-2.0, 2.0, allow_nan=False, allow_infinity=False)


def matrices(shape=(3, 3), elements=finite):
    return arrays(np.float64, shape, elements=elements)


def sym_matrices(n=3):
    return matrices((n, n)).map(lambda m: 0.5 * (m + m.T))


@st.composite
def spd_matrices(draw, n=3, lo=0.3, hi=3.0):
    q, _ = np.linalg.qr(draw(matrices((n, n), st.floats(-1, 1))) + 3 * np.eye(n))
    eig = draw(arrays(np.float64, n, elements=st.floats(lo, hi)))
    return q @ np.diag(eig) @ q.T


def random_spd(rng, n, lo=0.3, hi=3.0, batch=()):
    a = rng.normal(size=batch + (n, n))
    q, _ = np.linalg.qr(a)
    eig = rng.uniform(lo, hi, size=batch + (n,))
    return q @ (eig[..., :, None] * np.swapaxes(q, -1, -2))
