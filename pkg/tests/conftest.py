import numpy as np
import pytest

from kzstring.initial_data import make_curve
from kzstring.kz_map import build_kz_map

# one line per acceptance criterion, filled in by tests/test_acceptance.py
ACCEPTANCE = {}


def record(key, ok, detail):
    ACCEPTANCE[key] = (bool(ok), detail)
    print(f"{'PASS' if ok else 'FAIL'} {key}: {detail}")
    return ok


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(ACCEPTANCE, key=lambda k: (int(k.split(".")[0]), k)):
        ok, detail = ACCEPTANCE[key]
        terminalreporter.write_line(f"{'PASS' if ok else 'FAIL'} criterion {key}: {detail}")


@pytest.fixture(scope="session")
def circle():
    return make_curve("circle")


@pytest.fixture(scope="session")
def ellipse():
    return make_curve("ellipse", a=2.0, b=1.0)


@pytest.fixture(scope="session")
def circle_map(circle):
    return build_kz_map(circle, 1024)


@pytest.fixture(scope="session")
def ellipse_map(ellipse):
    return build_kz_map(ellipse, 1024)


@pytest.fixture(scope="session")
def drift_map():
    return build_kz_map(make_curve("circle", velocity=[0.0, 0.1]), 1024)


@pytest.fixture(scope="session")
def line_map():
    return build_kz_map(make_curve("line", half_length=np.pi, velocity=[0.0, 0.6]), 256)


@pytest.fixture(scope="session")
def wavy_map():
    """Ellipse with a non-uniform Fourier velocity: exercises every term of the map."""
    curve = make_curve("ellipse", a=2.0, b=1.0,
                       velocity_cos=[[0.0, 0.1], [0.2, 0.0]], velocity_sin=[[0.0, 0.0], [0.0, 0.15]])
    return build_kz_map(curve, 1024)
