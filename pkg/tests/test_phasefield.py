import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from slicesurf.constraints import ObstaclePair
from slicesurf.errors import ConfigError, DegenerateInputError, \
    InfeasibleConstraintsError
from slicesurf.grid import BinaryVolume, GridSpec, ScalarField3D
from slicesurf.phasefield import (PhaseFieldParams, double_well,
                                  init_phase_field, project_obstacle,
                                  transition_profile)
from slicesurf.synth import gen_sphere


def test_profile_midpoint():
    assert transition_profile(0.0) == 0.5


@pytest.mark.parametrize("x", [0.1, 1.0, 7.0])
def test_profile_symmetry(x):
    assert transition_profile(x) + transition_profile(-x) == pytest.approx(1.0)


def test_profile_tail():
    assert transition_profile(20.0) < 1e-8  # 1/(1+e^20) ~ 2.06e-9


def test_profile_monotone_decreasing():
    x = np.linspace(-60, 60, 301)
    q = transition_profile(x)
    assert np.all(np.diff(q) <= 0)
    # open-interval range holds wherever the tails are representable in f64
    x = np.linspace(-36, 36, 301)
    q = transition_profile(x)
    assert np.all((q > 0) & (q < 1))


def test_profile_solves_interface_ode():
    # q' = -sqrt(2 W(q)) at 100 points in [-8, 8], tolerance 1e-6
    x = np.linspace(-8, 8, 100)
    h = 1e-5
    dq = (transition_profile(x + h) - transition_profile(x - h)) / (2 * h)
    w = double_well(transition_profile(x))[0]
    assert np.allclose(dq, -np.sqrt(2 * w), atol=1e-6)


def test_double_well_wells():
    assert double_well(0.0) == (0.0, 0.0, 1.0)
    assert double_well(1.0) == (0.0, 0.0, 1.0)


def test_double_well_midpoint():
    w, w1, w2 = double_well(0.5)
    assert w == pytest.approx(1 / 32)
    assert w1 == 0.0
    assert w2 == pytest.approx(-0.5)


@pytest.mark.parametrize("u", [-0.2, 0.3, 1.4])
def test_double_well_derivatives_fd(u):
    h = 1e-4
    w_p = double_well(u + h)[0]
    w_m = double_well(u - h)[0]
    w1 = double_well(u)[1]
    assert w1 == pytest.approx((w_p - w_m) / (2 * h), abs=1e-6)
    w1_p = double_well(u + h)[1]
    w1_m = double_well(u - h)[1]
    w2 = double_well(u)[2]
    assert w2 == pytest.approx((w1_p - w1_m) / (2 * h), abs=1e-6)


def test_params_validation():
    with pytest.raises(ConfigError):
        PhaseFieldParams(0.0)
    with pytest.raises(ConfigError):
        PhaseFieldParams(0.1, alpha=1.5)
    p = PhaseFieldParams(0.04, alpha=0.5)
    assert p.h == pytest.approx(0.2)


def test_init_interface_value_near_half():
    n = 64
    eps = 1.5 / n
    vol = gen_sphere(n, 0.3)
    u = init_phase_field(vol, PhaseFieldParams(eps)).data
    # voxels straddling the sphere boundary along the central axis
    X, _, _ = vol.spec.meshgrid()
    r = np.abs(X[:, n // 2, n // 2] - 0.5)
    j = int(np.argmin(np.abs(r - 0.3)))
    assert abs(u[j, n // 2, n // 2] - 0.5) < 0.15


def test_init_deep_inside_near_one():
    n = 64
    eps = 0.3 / 10 / 2  # centre depth ~0.3 = 20 eps
    u = init_phase_field(gen_sphere(n, 0.3), PhaseFieldParams(eps)).data
    assert u[n // 2, n // 2, n // 2] > 0.9999
    assert np.all((u >= 0) & (u <= 1))


def test_init_monotone_along_ray():
    n = 64
    vol = gen_sphere(n, 0.3)
    u = init_phase_field(vol, PhaseFieldParams(1.5 / n)).data
    ray = u[n // 2 :, n // 2, n // 2]
    assert np.all(np.diff(ray) <= 1e-12)


def test_init_degenerate_raises():
    spec = GridSpec(4, 4, 4)
    with pytest.raises(DegenerateInputError):
        init_phase_field(BinaryVolume(spec, np.zeros(spec.shape, bool)),
                         PhaseFieldParams(0.1))
    with pytest.raises(DegenerateInputError):
        init_phase_field(BinaryVolume(spec, np.ones(spec.shape, bool)),
                         PhaseFieldParams(0.1))


def _obstacles(spec, lo, hi):
    return ObstaclePair(ScalarField3D(spec, lo), ScalarField3D(spec, hi))


def test_project_identity_within_bounds():
    spec = GridSpec(4, 4, 4)
    rng = np.random.default_rng(0)
    u = ScalarField3D(spec, rng.uniform(0.3, 0.7, spec.shape))
    obst = _obstacles(spec, np.zeros(spec.shape), np.ones(spec.shape))
    assert np.array_equal(project_obstacle(u, obst).data, u.data)


def test_project_clamps_to_upper():
    spec = GridSpec(4, 4, 4)
    u = ScalarField3D.full(spec, 2.0)
    obst = _obstacles(spec, np.zeros(spec.shape), np.ones(spec.shape))
    assert np.all(project_obstacle(u, obst).data == 1.0)


def test_project_idempotent():
    spec = GridSpec(4, 4, 4)
    rng = np.random.default_rng(1)
    u = ScalarField3D(spec, rng.uniform(-1, 2, spec.shape))
    lo = rng.uniform(0.0, 0.4, spec.shape)
    hi = lo + rng.uniform(0.0, 0.6, spec.shape)
    obst = _obstacles(spec, lo, hi)
    once = project_obstacle(u, obst)
    twice = project_obstacle(once, obst)
    assert np.array_equal(once.data, twice.data)


def test_project_infeasible_raises():
    spec = GridSpec(4, 4, 4)
    lo = np.full(spec.shape, 0.8)
    hi = np.full(spec.shape, 0.7)
    u = ScalarField3D.zeros(spec)
    with pytest.raises(InfeasibleConstraintsError):
        ObstaclePair(ScalarField3D(spec, lo), ScalarField3D(spec, hi))
    bad = ObstaclePair.__new__(ObstaclePair)  # bypass constructor validation
    bad.lower = ScalarField3D(spec, lo)
    bad.upper = ScalarField3D(spec, hi)
    with pytest.raises(InfeasibleConstraintsError):
        project_obstacle(u, bad)


@settings(max_examples=25)
@given(st.integers(0, 2 ** 31 - 1))
def test_project_nonexpansive_sup_norm(seed):
    rng = np.random.default_rng(seed)
    spec = GridSpec(4, 4, 4)
    lo = rng.uniform(0, 0.4, spec.shape)
    hi = lo + rng.uniform(0, 0.6, spec.shape)
    obst = _obstacles(spec, lo, hi)
    u = ScalarField3D(spec, rng.uniform(-1, 2, spec.shape))
    v = ScalarField3D(spec, rng.uniform(-1, 2, spec.shape))
    pu = project_obstacle(u, obst).data
    pv = project_obstacle(v, obst).data
    assert np.abs(pu - pv).max() <= np.abs(u.data - v.data).max() + 1e-15
