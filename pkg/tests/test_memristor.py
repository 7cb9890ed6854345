import numpy as np
import pytest
from hypothesis import given, strategies as st

from memchua.memristor import (MemristorError, MemristorParams, biolek_window, drive_sinusoidal,
                               loop_area, memristance, step_function, width_derivative)

P = MemristorParams()


def test_memristance_limits():
    assert memristance(P, 0.0) == P.r_off
    assert memristance(P, 1.0) == P.r_on
    assert memristance(P, 0.5) == pytest.approx(8050.0)


def test_step_function():
    assert step_function(0.0) == 1
    assert step_function(-1e-6) == 0
    assert step_function(2.5) == 1


def test_window_examples():
    assert biolek_window(0.5, 1e-3, 1) == pytest.approx(0.75)
    assert biolek_window(1.0, 1e-3, 1) == 0.0
    assert biolek_window(0.0, -1e-3, 1) == 0.0


@given(st.floats(0, 1), st.floats(-1, 1), st.integers(1, 10))
def test_window_bounded(x, i, p):
    assert 0.0 <= biolek_window(x, i, p) <= 1.0


def test_width_derivative_examples():
    one = MemristorParams(p=1)
    # (1e-14 * 100 / 1e-16) * 1e-3 * 0.75
    assert width_derivative(one, 0.5, 1e-3) == pytest.approx(7.5)
    assert width_derivative(one, 1.0, 1e-3) == 0.0
    assert width_derivative(P, 0.3, 0.0) == 0.0


@pytest.mark.parametrize("kw", [dict(r_on=-1.0), dict(r_on=2e4), dict(d=0.0), dict(eta=2),
                                dict(p=0), dict(mu_v=float("nan"))])
def test_invalid_params(kw):
    with pytest.raises(MemristorError):
        MemristorParams(**kw)


def test_zero_drive_keeps_state():
    out = drive_sinusoidal(P, 0.4, 0.0, 1.0, 1, 1e-3)
    assert np.all(out[:, 2] == 0.0)
    assert np.all(out[:, 3] == 0.4)


def test_drive_is_pinched_and_hysteretic():
    out = drive_sinusoidal(P, 0.5, 1.0, 1.0, 1, 1e-3)
    v, i, x = out[:, 1], out[:, 2], out[:, 3]
    small = np.abs(i) < 1e-12
    assert np.all(np.abs(v[small]) < P.r_off * 1e-12)
    assert np.all((x >= 0) & (x <= 1))
    assert abs(x[-1] - x[0]) > 1e-3


def test_drive_rejects_underresolved_step():
    with pytest.raises(MemristorError):
        drive_sinusoidal(P, 0.5, 1.0, 100.0, 1, 1e-3)
    with pytest.raises(MemristorError):
        drive_sinusoidal(P, 1.5, 1.0, 1.0, 1, 1e-3)


def test_loop_area_of_known_ellipse():
    t = np.linspace(0, 2 * np.pi, 20001)
    # one lobe on each side of v = 0, each a half ellipse of semi-axes 1 and 0.5;
    # polygon sampling loses a sliver of order the grid step
    v, i = np.cos(t), 0.5 * np.sin(t)
    assert loop_area(v, i) == pytest.approx(np.pi * 0.5, rel=1e-3)


def test_area_shrinks_with_frequency():
    slow = drive_sinusoidal(P, 0.5, 1.0, 1.0, 2, 1e-3)
    fast = drive_sinusoidal(P, 0.5, 1.0, 10.0, 2, 1e-4)
    assert loop_area(fast[:, 1], fast[:, 2]) < loop_area(slow[:, 1], slow[:, 2])
