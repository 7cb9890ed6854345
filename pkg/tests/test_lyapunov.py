import numpy as np
import pytest

from memchua.dynamics import CircuitParams, NonlinearElement, jacobian, linear_field, rescale_time
from memchua.integrator import Trajectory
from memchua.lyapunov import (LyapunovConfig, divergence_average, lyapunov_exponents,
                              lyapunov_spectrum, mean_trace)
from memchua.pwl import paper_curve

CHAOTIC = CircuitParams(c1=10e-9, c2=100e-9, l=15e-3, r=1410.0)
PWL = NonlinearElement(paper_curve())


def test_diagonal_system():
    rec = lyapunov_exponents(linear_field(np.diag([-1.0, -2.0, -3.0])), [1, 1, 1],
                             LyapunovConfig(t_transient=0, t_total=100))
    assert rec.final == pytest.approx([-1, -2, -3], rel=0.02)


def test_oscillator_plus_decay():
    a = np.array([[0, 1, 0], [-1, 0, 0], [0, 0, -1.0]])
    rec = lyapunov_exponents(linear_field(a), [1, 0, 1], LyapunovConfig(t_transient=0, t_total=500))
    assert np.max(np.abs(rec.final - [0, 0, -1])) < 0.02


def test_non_normal_matrix_uses_eigenvalues():
    a = np.array([[-1.0, 50.0], [0.0, -2.0]])
    rec = lyapunov_exponents(linear_field(a), [1, 1], LyapunovConfig(t_transient=0, t_total=400))
    assert rec.final == pytest.approx([-1, -2], rel=0.02)


def test_python_fallback_matches_compiled():
    a = np.array([[-0.5, 1.0, 0.0], [-1.0, -0.5, 0.0], [0.0, 0.3, -2.0]])
    cfg = LyapunovConfig(t_transient=1, t_total=30)
    fast = lyapunov_exponents(linear_field(a), [1, 0, 0], cfg)
    slow = lyapunov_exponents(lambda t, y: a @ y, [1, 0, 0], cfg, jac=lambda y: a)
    assert np.allclose(fast.final, slow.final, rtol=1e-10)
    with pytest.raises(ValueError):
        lyapunov_exponents(lambda t, y: a @ y, [1, 0, 0], cfg)


def test_fewer_exponents():
    cfg = LyapunovConfig(t_transient=0, t_total=50, n_exponents=2)
    rec = lyapunov_exponents(linear_field(np.diag([-1.0, -2.0, -3.0])), [1, 1, 1], cfg)
    assert rec.exponents.shape[1] == 2
    assert rec.final == pytest.approx([-1, -2], rel=0.02)


def test_config_validation():
    with pytest.raises(ValueError):
        LyapunovConfig(renorm_interval=0)
    with pytest.raises(ValueError):
        LyapunovConfig(dt=2.0, renorm_interval=1.0)


def test_divergence_of_linear_system():
    tr = Trajectory(np.arange(10.0), np.ones((10, 3)))
    a = np.diag([-1.0, -2.0, -3.0])
    assert mean_trace(lambda y: a, tr) == -6.0


def test_divergence_at_origin():
    ts = rescale_time(CHAOTIC)
    tr = Trajectory(np.arange(5.0), np.zeros((5, 3)), timescale=ts)
    c = paper_curve().slopes[2]
    p = CHAOTIC
    expect = (-1 / (p.r * p.c1) - c / p.c1 - 1 / (p.r * p.c2)) * ts
    assert divergence_average(p, PWL, tr) == pytest.approx(expect, rel=1e-12)
    assert divergence_average(p, PWL, tr) == pytest.approx(
        np.trace(jacobian(p, PWL, [0, 0, 0])) * ts, rel=1e-12)


@pytest.mark.slow
def test_chaotic_spectrum_properties():
    rec = lyapunov_spectrum(CHAOTIC, PWL, [0.1, 0, 0], LyapunovConfig(t_transient=300, t_total=2000))
    lam = rec.final
    assert lam[0] > 0.02
    assert abs(lam[1]) < 0.05 * max(1, abs(lam[0]))
    assert lam.sum() < 0
    assert lam.sum() == pytest.approx(divergence_average(CHAOTIC, PWL, rec.trajectory), rel=0.05)
    assert lam.sum() == pytest.approx(rec.trace_average, rel=1e-3)
    assert np.all(np.diff(lam) <= 0)
