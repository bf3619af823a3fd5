import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from isochrone import (
    IntegratorConfig,
    RiccatiSpec,
    StepUnderflow,
    SystemDef,
    augment,
    detect_blowup,
    integrate,
    radon_reconstruct,
    radon_singular_time,
    solve_riccati_direct,
)
from isochrone.models import hopf_potential, plasma_radial
from isochrone.variational import riccati_along


def scalar_spec(a21, a22, a11, a12, w0):
    """``w' = a21 + a22 w - w a11 - a12 w^2`` as a 1x1 constant-block spec."""
    return RiccatiSpec.constant([[a11]], [[a12]], [[a21]], [[a22]], [[w0]])


@settings(max_examples=20, deadline=None)
@given(st.floats(-2.0, 2.0))
def test_hopf_augmented_closed_form(y0):
    t_eval = np.linspace(0.0, 3.0, 13)
    traj = integrate(augment(hopf_potential()), [0.0, 0.0, 1.0, y0],
                     IntegratorConfig(t_max=3.0), t_eval=t_eval)
    q, y = traj.y_eval[:, 2], traj.y_eval[:, 3]
    np.testing.assert_allclose(q, np.cos(t_eval) + y0 * np.sin(t_eval), atol=1e-9)
    np.testing.assert_allclose(y, -np.sin(t_eval) + y0 * np.cos(t_eval), atol=1e-9)


def test_zero_source_gives_positive_exponential_q():
    # plasma has S_x = 0; with y0 = 0 the y-block stays zero and q = exp(int Q_x) = X / x0
    t_eval = np.linspace(0.0, 30.0, 61)
    traj = integrate(augment(plasma_radial(1)), [1.5, 0.0, 0.2, 1.0, 0.0, 0.0],
                     IntegratorConfig(t_max=30.0), t_eval=t_eval)
    z = traj.y_eval
    assert np.all(z[:, 4:] == 0.0)
    np.testing.assert_allclose(z[:, 3], z[:, 0] / 1.5, rtol=1e-9)
    assert np.all(z[:, 3] > 0)


def test_equilibrium_keeps_q_at_one():
    traj = integrate(augment(plasma_radial(3)), [1.0, 0.0, 0.0, 1.0, 0.0, 0.0],
                     IntegratorConfig(t_max=10.0))
    assert np.all(traj.y[:, 3] == 1.0)


def test_batched_augment_matches_single():
    f = augment(plasma_radial(2))
    rng = np.random.default_rng(0)
    Z = np.vstack([rng.uniform(0.5, 1.5, 4), rng.uniform(-0.3, 0.3, (2, 4)),
                   np.ones(4), rng.uniform(-1, 1, (2, 4))])
    batch = f(0.0, Z.ravel()).reshape(6, 4)
    for k in range(4):
        np.testing.assert_allclose(batch[:, k], f(0.0, Z[:, k]), rtol=1e-14)


@pytest.mark.parametrize("y0, t_star", [(1.0, 3 * math.pi / 4), (0.0, math.pi / 2)])
def test_hopf_blowup_times(y0, t_star):
    rep = detect_blowup(hopf_potential(), 0.0, [0.0], [y0], IntegratorConfig(t_max=10.0))
    assert rep.blown and rep.kind == "gradient"
    assert rep.t_star == pytest.approx(t_star, abs=1e-8)
    assert rep.q_min <= 1.0


def test_plasma_d1_constant_profile_never_blows():
    rep = detect_blowup(plasma_radial(1), 1.0, [0.0, 0.1], [0.0, 0.0], horizon=100.0)
    assert not rep.blown
    assert rep.t_star is None
    assert 0.0 < rep.q_min <= 1.0
    assert rep.horizon == 100.0


def test_non_isochronous_dimension_blows_where_isochronous_does_not():
    cfg = IntegratorConfig()
    two = detect_blowup(plasma_radial(2), 1.0, [0.0, 0.5], [0.0, -0.5], cfg, horizon=300.0)
    one = detect_blowup(plasma_radial(1), 1.0, [0.0, 0.5], [0.0, -0.5], cfg, horizon=300.0)
    assert two.blown and two.kind == "gradient" and two.t_star < 300.0
    assert not one.blown and one.q_min > 0.0


def test_state_blowup_is_distinguished():
    # Y' = Y^2 from Y = 1 escapes at t = 1 while y stays 0 and q stays 1
    sys = SystemDef(n=1, Q=lambda x, Y: Y[0], S=lambda x, Y: [Y[0] ** 2])
    rep = detect_blowup(sys, 0.0, [1.0], [0.0], IntegratorConfig(t_max=5.0))
    assert rep.blown and rep.kind == "state"
    assert rep.t_star == pytest.approx(1.0, abs=1e-5)
    assert rep.as_dict()["kind"] == "state"


def test_report_invariant_blown_iff_t_star():
    for y0 in (0.0, 1.0):
        rep = detect_blowup(hopf_potential(), 0.0, [0.0], [y0], horizon=10.0)
        assert rep.blown == (rep.t_star is not None)
    rep = detect_blowup(hopf_potential(), 0.0, [0.0], [0.0], horizon=1.0)
    assert not rep.blown and rep.t_star is None


class TestRiccati:
    def test_decay_direct(self):
        sol = solve_riccati_direct(scalar_spec(0, 0, 0, 1, 1.0), (0, 1), t_eval=[0.5, 1.0])
        np.testing.assert_allclose(sol.W[:, 0, 0], [1 / 1.5, 0.5], atol=1e-10)

    def test_decay_radon(self):
        t = np.linspace(0, 1, 11)
        sol = radon_reconstruct(scalar_spec(0, 0, 0, 1, 1.0), (0, 1), t_eval=t)
        np.testing.assert_allclose(sol.W[:, 0, 0], 1 / (1 + t), atol=1e-10)
        np.testing.assert_allclose(sol.det_Q, 1 + t, atol=1e-10)
        assert not sol.singular.any()

    def test_tangent_escape(self):
        spec = scalar_spec(1, 0, 0, -1, 0.0)  # w' = 1 + w^2
        with pytest.raises(StepUnderflow) as info:
            solve_riccati_direct(spec, (0, 3))
        t_escape = info.value.t
        t_sing = radon_singular_time(spec, (0, 3))
        assert t_sing == pytest.approx(math.pi / 2, abs=1e-8)
        assert t_escape == pytest.approx(t_sing, abs=1e-5)
        t = np.array([0.5, 1.0, math.pi / 2, 2.0])
        sol = radon_reconstruct(spec, (0, 3), t_eval=t)
        np.testing.assert_allclose(sol.det_Q, np.cos(t), atol=1e-10)
        np.testing.assert_allclose(sol.W[[0, 1, 3], 0, 0], np.tan(t[[0, 1, 3]]), rtol=1e-9)

    def test_singular_samples_are_flagged(self):
        # w' = w^2 from w = 1: Q = 1 - t, P = 1, so det Q vanishes at t = 1
        spec = scalar_spec(0, 0, 0, -1, 1.0)
        sol = radon_reconstruct(spec, (0, 2), t_eval=[0.5, 1.0, 1.5])
        np.testing.assert_allclose(sol.det_Q, [0.5, 0.0, -0.5], atol=1e-13)
        assert sol.singular.tolist() == [False, True, False]
        assert np.isnan(sol.W[1]).all()
        np.testing.assert_allclose(sol.W[[0, 2], 0, 0], [2.0, -2.0], rtol=1e-12)

    def test_zero_is_invariant_without_source(self):
        rng = np.random.default_rng(5)
        M = [rng.normal(size=(2, 2)) for _ in range(4)]
        spec = RiccatiSpec.constant(M[0], M[1], np.zeros((2, 2)), M[3], np.zeros((2, 2)))
        sol = solve_riccati_direct(spec, (0, 1), t_eval=[0.25, 1.0])
        assert np.all(sol.W == 0.0)

    def test_shape_validation(self):
        with pytest.raises(ValueError):
            RiccatiSpec.constant(np.eye(2), np.eye(2), np.eye(2), np.eye(3), np.zeros((2, 2)))

    def test_rectangular_blocks(self):
        # m = 2, k = 1: the gradient shape used along characteristics
        spec = RiccatiSpec.constant([[0.1]], [[0.2, -0.1]], [[0.3], [0.0]],
                                    [[0.0, 1.0], [-1.0, 0.0]], [[0.1], [0.2]])
        t = np.linspace(0, 1, 5)
        direct = solve_riccati_direct(spec, (0, 1), t_eval=t)
        radon = radon_reconstruct(spec, (0, 1), t_eval=t)
        np.testing.assert_allclose(direct.W, radon.W, atol=1e-9)


@pytest.mark.parametrize("sys, x0, Y0, y0, horizon", [
    (hopf_potential(), 0.0, [0.0], [1.0], 5.0),
    (plasma_radial(2), 1.0, [0.0, 0.5], [0.0, -0.5], 80.0),
])
def test_q_zero_matches_det_q_zero(sys, x0, Y0, y0, horizon):
    cfg = IntegratorConfig()
    rep = detect_blowup(sys, x0, Y0, y0, cfg, horizon)
    traj = integrate(sys, np.concatenate([[x0], Y0]), cfg.replace(t_max=horizon))
    spec = riccati_along(sys, traj, y0)
    t_sing = radon_singular_time(spec, (0.0, horizon), cfg)
    assert rep.blown
    assert t_sing == pytest.approx(rep.t_star, abs=1e-8)
