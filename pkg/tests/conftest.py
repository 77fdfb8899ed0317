import numpy as np
import pytest

from cubedisp import _backend
from cubedisp.grid import ScalarVolume

BACKENDS = ["python"] + (["cython"] if _backend.compiled_kernels is not None else [])


def cube_volume(shape, fill):
    return ScalarVolume(np.full(shape, fill), np.zeros(shape, dtype=bool))


def hollow_shell(f=80, n=3):
    """n x n x n block of value ``f`` whose interior is background."""
    vol = cube_volume((n, n, n), f)
    vol.background[1:-1, 1:-1, 1:-1] = True
    return ScalarVolume(vol.values, vol.background)


def thick_ring(f=80):
    """3 x 3 x 1 square ring, middle column background."""
    bg = np.zeros((3, 3, 1), dtype=bool)
    bg[1, 1, 0] = True
    return ScalarVolume(np.full((3, 3, 1), f), bg)


def chebyshev_layers(n, layer_values):
    """Cube of side ``n`` (odd) valued by Chebyshev distance from the centre."""
    c = n // 2
    idx = np.indices((n, n, n)) - c
    r = np.abs(idx).max(axis=0)
    values = np.zeros((n, n, n), dtype=np.int16)
    for radius, v in layer_values.items():
        values[r == radius] = v
    return ScalarVolume(values, np.zeros((n, n, n), dtype=bool)), r


def nested_shells():
    """Outer shell (g=20), gap layer (g=90), inner shell (g=40), centre (g=95).

    H2 features: the outer void born at 20, split at 40 by the inner shell;
    the gap closes at 90 and the centre at 95.
    """
    return chebyshev_layers(7, {3: 80, 2: 10, 1: 60, 0: 5})


@pytest.fixture(params=BACKENDS)
def backend(request):
    return request.param


# one line per acceptance criterion, printed at the end of the run
ACCEPTANCE: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE:
            terminalreporter.write_line(line)
