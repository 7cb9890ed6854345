import numpy as np
import pytest

from memchua.analysis import (attractor_projection, bifurcation_scan, local_maxima, power_report,
                              power_spectrum, scroll_count, spectral_flatness, spectrum_energy)
from memchua.dynamics import CircuitParams, NonlinearElement, rescale_time, vector_field
from memchua.integrator import IntegratorConfig, Trajectory, integrate
from memchua.pwl import paper_curve

CHAOTIC = CircuitParams(c1=10e-9, c2=100e-9, l=15e-3, r=1410.0)
PWL = NonlinearElement(paper_curve())


@pytest.fixture(scope="module")
def chaotic_run():
    ts = rescale_time(CHAOTIC)
    return integrate(vector_field(CHAOTIC, PWL, ts), [0.1, 0, 0],
                     IntegratorConfig(t_end=2200, record_every=10), timescale=ts)


def test_bin_aligned_sinusoid():
    n, k = 2048, 100
    sp = power_spectrum(3.0 * np.sin(2 * np.pi * k * np.arange(n) / n), 0.5)
    assert sp.frequencies[k] == pytest.approx(k / (n * 0.5))
    assert sp.magnitudes[k] == pytest.approx(3.0)
    assert np.delete(sp.magnitudes, k).max() < 1e-10 * sp.magnitudes[k]


def test_constant_signal_after_mean_removal():
    assert np.all(power_spectrum(np.full(512, 4.2), 1.0).magnitudes < 1e-12)


def test_parseval():
    x = np.random.default_rng(3).normal(size=1024)
    sp = power_spectrum(x, 1.0, remove_mean=False)
    assert spectrum_energy(sp) == pytest.approx(np.mean(x ** 2), rel=1e-9)


def test_trims_to_power_of_two_and_validates():
    assert power_spectrum(np.arange(1000.0), 1.0).n_points == 512
    with pytest.raises(ValueError):
        power_spectrum([1.0], 1.0)
    with pytest.raises(ValueError):
        power_spectrum(np.ones(8), 1.0, window="kaiser")


def test_flatness_orders_noise_above_tone():
    rng = np.random.default_rng(0)
    tone = power_spectrum(np.sin(2 * np.pi * 5 * np.arange(1024) / 1024), 1.0, window="hann")
    noise = power_spectrum(rng.normal(size=1024), 1.0, window="hann")
    assert spectral_flatness(noise) > 0.3 > 1e-6 > spectral_flatness(tone)


def test_projection_identities():
    tr = Trajectory(np.arange(4.0), np.tile([1.0, 2.0, 3.0], (4, 1)))
    assert np.all(attractor_projection(tr, "v2", "iL") == [2.0, 3.0])
    pts = attractor_projection(Trajectory(np.arange(4.0), np.random.rand(4, 3)), "v1", "v1")
    assert np.all(pts[:, 0] == pts[:, 1])


def test_double_scroll_oracle(chaotic_run):
    sc = scroll_count(chaotic_run, transient=200)
    assert sc.sign_changes >= 20 and min(sc.turns) >= 5
    assert sc.is_double_scroll()


def test_single_lobe_rejected():
    t = np.linspace(0, 100, 5000)
    s = np.column_stack([2 + np.cos(t), np.sin(t), np.cos(t)])
    sc = scroll_count(Trajectory(t, s))
    assert sc.sign_changes == 0 and not sc.is_double_scroll()


def test_power_of_equilibrium_is_zero():
    tr = Trajectory(np.arange(10.0), np.zeros((10, 3)), timescale=1e-5)
    rep = power_report(tr, CHAOTIC, PWL)
    assert rep.resistor == rep.nonlinear == rep.storage == 0.0


def test_power_balance(chaotic_run):
    rep = power_report(chaotic_run.after(200), CHAOTIC, PWL)
    assert rep.resistor > 0 > rep.nonlinear
    assert abs(rep.total) < 1e-12 * rep.resistor
    assert abs(rep.storage - rep.energy_rate) < 1e-6 * rep.resistor
    assert "Linear resistor R" in rep.table()


def test_local_maxima():
    x = np.array([0, 1, 0, 2, 0, 1, 0.0])
    assert list(local_maxima(x)) == pytest.approx([1.0, 2.0])
    t = np.linspace(0, 20 * np.pi, 20001)
    assert len(local_maxima(np.sin(t))) == 1
    assert len(local_maxima([1.0, 2.0])) == 0


def test_bifurcation_scan_regimes():
    cfg = IntegratorConfig(t_end=1200)
    pts = bifurcation_scan(CHAOTIC, PWL, "r", [1410.0, 1460.0], [0.1, 0, 0], cfg, transient=300)
    chaotic, damped = pts
    assert chaotic.error is None and len(chaotic.maxima) > 20
    assert damped.error is None and len(damped.maxima) <= 2
    assert bifurcation_scan(CHAOTIC, PWL, "r", [], [0.1, 0, 0], cfg) == []


def test_bifurcation_reports_divergence_and_parallel_matches_serial():
    cfg = IntegratorConfig(t_end=400)
    vals = [1300.0, 1410.0]
    serial = bifurcation_scan(CHAOTIC, PWL, "r", vals, [0.1, 0, 0], cfg, transient=100)
    assert serial[0].error and len(serial[0].maxima) == 0
    par = bifurcation_scan(CHAOTIC, PWL, "r", vals, [0.1, 0, 0], cfg, transient=100, jobs=2)
    assert np.array_equal(par[1].maxima, serial[1].maxima)
    with pytest.raises(ValueError):
        bifurcation_scan(CHAOTIC, PWL, "q", vals, [0.1, 0, 0], cfg)
