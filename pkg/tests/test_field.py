import math

import numpy as np
import pytest

from isochrone import IntegratorConfig
from isochrone.field import (
    InitialProfile,
    constant_profile,
    detect_crossing,
    gaussian_profile,
    reconstruct_field,
    resample,
)
from isochrone.models import hopf_potential, plasma_radial


def linear_profile(N_x, window=(-1.0, 1.0)):
    """``Y0(x) = x`` for the Hopf model: every characteristic is ``x0 (cos t + sin t)``."""
    return InitialProfile(lambda x: np.asarray(x, dtype=float)[None] * 1.0, window, N_x,
                          lambda x: np.ones((1,) + np.shape(x)))


def test_constant_profile_d1_stays_ordered():
    prof = constant_profile([0.0, 0.1], window=(0.5, 2.0), N_x=12)
    snaps = reconstruct_field(plasma_radial(1), prof, np.linspace(0, 100, 21))
    assert len(snaps) == 21
    for s in snaps:
        assert s.ordered
        assert np.all(s.q > 0)
        # identical data on every characteristic: positions scale by one common factor
        np.testing.assert_allclose(s.X / prof.seeds, s.q, rtol=1e-9)


def test_zero_profile_stays_put():
    prof = constant_profile([0.0, 0.0], N_x=8)
    snaps = reconstruct_field(plasma_radial(3), prof, [0.0, 10.0])
    np.testing.assert_array_equal(snaps[-1].X, prof.seeds)
    assert np.all(snaps[-1].q == 1.0)


def test_hopf_linear_profile_crossing():
    rep = detect_crossing(hopf_potential(), linear_profile(9), t_max=5.0)
    assert rep.found
    assert rep.t_cross == pytest.approx(3 * math.pi / 4, abs=1e-8)
    assert rep.t_q_zero == pytest.approx(3 * math.pi / 4, abs=1e-8)
    assert rep.agree is True
    assert abs(rep.min_q_at_cross) <= 1e-8


def test_crossing_time_independent_of_mesh():
    coarse = detect_crossing(hopf_potential(), linear_profile(9), t_max=5.0)
    fine = detect_crossing(hopf_potential(), linear_profile(33), t_max=5.0)
    assert fine.t_cross == pytest.approx(coarse.t_cross, abs=1e-8)
    assert fine.bound < coarse.bound


def test_isochronous_dimension_has_no_early_crossing():
    rep = detect_crossing(plasma_radial(1), gaussian_profile(0.2, N_x=32), t_max=50.0)
    assert not rep.found
    assert rep.t_cross is None and rep.t_q_zero is None


def test_constant_profile_never_crosses():
    rep = detect_crossing(plasma_radial(2), constant_profile([0.0, 0.1], window=(0.5, 2.0)),
                          t_max=50.0, history_points=11)
    assert not rep.found
    assert np.all(rep.history["min_gap"] > 0)
    assert rep.history["t"][-1] == 50.0


def test_history_is_sampled():
    rep = detect_crossing(hopf_potential(), linear_profile(9), t_max=5.0, history_points=21)
    # sampling stops at the crossing
    assert rep.history["t"][-1] <= rep.t_cross
    np.testing.assert_allclose(rep.history["min_q"],
                               np.cos(rep.history["t"]) + np.sin(rep.history["t"]), atol=1e-9)


def test_isochronous_snapshots_return_to_the_profile():
    prof = gaussian_profile(0.2, N_x=32)
    T = 2 * math.pi
    snaps = reconstruct_field(plasma_radial(1), prof, [T, 2 * T])
    Y0 = prof.values(prof.seeds).T
    for s in snaps:
        np.testing.assert_allclose(s.X, prof.seeds, atol=1e-5)
        np.testing.assert_allclose(s.Y, Y0, atol=1e-5)


def test_resample_recovers_initial_profile_on_the_seeds():
    prof = gaussian_profile(0.2, N_x=32)
    s = reconstruct_field(plasma_radial(2), prof, [0.0])[0]
    np.testing.assert_allclose(resample(s, prof.seeds), prof.values(prof.seeds).T, atol=1e-15)
    outside = resample(s, [10.0])
    assert np.isnan(outside).all()


def test_resample_refuses_crossed_fan():
    snaps = reconstruct_field(hopf_potential(), linear_profile(9), [1.0, 3.0])
    assert snaps[0].ordered and not snaps[1].ordered
    resample(snaps[0], [0.0])
    with pytest.raises(ValueError):
        resample(snaps[1], [0.0])


def test_gradient_is_sensitivity_over_q():
    snaps = reconstruct_field(hopf_potential(), linear_profile(5), [1.0])
    s = snaps[0]
    # Y = x0 (cos t - sin t) and X = x0 (cos t + sin t), so dY/dX is their ratio
    expected = (math.cos(1.0) - math.sin(1.0)) / (math.cos(1.0) + math.sin(1.0))
    np.testing.assert_allclose(s.gradient[:, 0], expected, rtol=1e-9)


def test_profile_validation():
    with pytest.raises(ValueError):
        gaussian_profile(N_x=1)
    with pytest.raises(ValueError):
        constant_profile([0.0], window=(1.0, 1.0))


def test_default_fd_derivative():
    prof = InitialProfile(lambda x: np.sin(np.asarray(x))[None], (-1.0, 1.0), 7)
    np.testing.assert_allclose(prof.derivative(prof.seeds)[0], np.cos(prof.seeds), atol=1e-8)


def test_config_is_respected():
    loose = detect_crossing(hopf_potential(), linear_profile(9), 5.0, IntegratorConfig(rtol=1e-6))
    assert loose.t_cross == pytest.approx(3 * math.pi / 4, abs=1e-6)
