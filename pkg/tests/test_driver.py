import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from levelline.boundary import LAMBDA, AdmissibilityMargin, MeasurePair, RadonMeasure
from levelline.driver import (
    CollisionError,
    DriverError,
    SdeState,
    SleConfig,
    ThresholdReached,
    advance,
    drift,
    force_residual,
    initial_state,
    integral_residual,
    path_generator,
    qv,
    simulate,
    step_size,
)


def pair(left=(), right=()):
    return MeasurePair(RadonMeasure("L", left), RadonMeasure("R", right))


def state(W, xs, masses):
    xs = np.asarray(xs, float)
    return SdeState(0.0, W, xs, np.where(xs < 0, -1, 1), np.asarray(masses, float), np.ones(len(xs), bool))


# drift


def test_drift_empty_pair():
    assert drift(initial_state(SleConfig())) == 0.0


def test_drift_single_right_atom():
    assert drift(state(0.0, [1.0], [1.0])) == pytest.approx(-1.0)


def test_drift_mirrored_pair_cancels():
    assert drift(state(0.0, [-2.0, 2.0], [0.7, 0.7])) == pytest.approx(0.0, abs=1e-15)


def test_drift_signals_collision():
    with pytest.raises(CollisionError):
        drift(state(0.0, [1e-4], [1.0]), eps=1e-3)


@given(st.floats(-5, -0.1), st.floats(0.1, 5), st.floats(-2, 2), st.floats(-2, 2))
@settings(max_examples=100, deadline=None)
def test_drift_signs(xl, xr, ml, mr):
    # left masses push W to the right, right masses push it to the left
    d = drift(state(0.0, [xl, xr], [ml, mr]))
    assert d == pytest.approx(ml / -xl - mr / xr)


# single substeps


def test_advance_brownian_increment():
    cfg = SleConfig()
    s = initial_state(cfg)
    out = advance(s, cfg, 1e-4, 0.01)
    assert out.W == pytest.approx(2 * 0.01)
    assert out.t == pytest.approx(1e-4)


def test_advance_threshold():
    cfg = SleConfig(pair=pair(right=((0.0, -2.0),)))
    with pytest.raises(ThresholdReached) as exc:
        advance(initial_state(cfg), cfg, 1e-4, 0.0)
    assert exc.value.event.side == "R"
    assert exc.value.event.cluster_mass <= -2 + 1e-9


def test_step_size_caps():
    cfg = SleConfig(dt=1e-2)
    s = state(0.0, [0.1], [1.0])
    assert step_size(s, cfg) <= (0.1 / 4) ** 2 / 4 + 1e-15


# full paths


def test_simulate_deterministic():
    cfg = SleConfig(pair=pair(right=((0.0, -0.5),)), dt=1e-3, seed=9)
    a = simulate(cfg, 0.5, index=3, track=(1j,))
    b = simulate(cfg, 0.5, index=3, track=(1j,))
    assert np.array_equal(a.path.W, b.path.W)
    assert np.array_equal(a.tracked[0].g, b.tracked[0].g, equal_nan=True)
    c = simulate(cfg, 0.5, index=4)
    assert not np.array_equal(a.path.W, c.path.W)


def test_path_generator_streams_differ():
    a = path_generator(1, 0).standard_normal(4)
    b = path_generator(1, 1).standard_normal(4)
    assert not np.allclose(a, b)


def test_chordal_increments_are_twice_the_noise():
    # apart from rare folds at the massless points 0- and 0+ (W starts in
    # contact with both), every grid increment is exactly 2 dB
    for seed in range(5):
        sim = simulate(SleConfig(dt=1e-3, seed=seed), 1.0)
        d = np.abs(np.diff(sim.path.W) - 2 * np.diff(sim.B))
        assert np.mean(d > 1e-12) < 0.01
        assert d.max() < math.sqrt(1e-3) / 4


def test_chordal_quadratic_variation():
    dt = 1e-4
    rates = [qv(simulate(SleConfig(dt=dt, seed=5), 1.0, index=i).path) for i in range(20)]
    assert 3.8 <= np.mean(rates) <= 4.2


def test_chordal_variance_at_one():
    W1 = np.array([simulate(SleConfig(dt=1e-2, seed=1), 1.0, index=i).path.W[-1] for i in range(1000)])
    assert 3.6 <= W1.var(ddof=1) <= 4.4


def test_ordering_of_force_points():
    cfg = SleConfig(pair=pair(left=((-0.5, 0.5),), right=((0.0, -0.5), (1.0, 1.0))), dt=1e-3, seed=3)
    sim = simulate(cfg, 1.0)
    V = sim.path.force
    W = sim.path.W
    side = sim.tracker_side[sim.force_index]
    assert np.all(V[:, side < 0] <= W[:, None] + 1e-12)
    assert np.all(V[:, side > 0] >= W[:, None] - 1e-12)
    assert sim.monitor.zmin >= 0


def test_threshold_event_recorded():
    cfg = SleConfig(pair=pair(right=((0.0, -2.0),)), dt=1e-3)
    sim = simulate(cfg, 0.1)
    assert len(sim.events) == 1
    assert sim.events[0].side == "R"
    assert sim.path.n < 100


def test_margin_checked_before_running():
    cfg = SleConfig(pair=pair(right=((0.0, -1.9),)), margin=AdmissibilityMargin(0.5 * LAMBDA, LAMBDA))
    with pytest.raises(DriverError):
        simulate(cfg, 0.1)


def test_horizon_shorter_than_a_step():
    with pytest.raises(DriverError):
        simulate(SleConfig(dt=1e-2), 1e-3)


# residual diagnostics


def test_residuals_for_chordal():
    dt = 1e-3
    sim = simulate(SleConfig(dt=dt, seed=4), 0.3)
    assert force_residual(sim) == 0.0
    assert np.max(np.abs(integral_residual(sim))) < math.sqrt(dt) / 4


def test_far_force_point_residual():
    dt = 1e-3
    sim = simulate(SleConfig(pair=pair(right=((10.0, 0.5),)), dt=dt, seed=3), 0.1)
    assert force_residual(sim) <= 10 * dt
    assert np.max(np.abs(integral_residual(sim))) <= 10 * dt


def test_contact_share_shrinks_with_dt():
    # reflection is instantaneous: the share of grid times in contact with
    # the force point at 0+ goes down as the grid is refined
    share = []
    for dt in (1e-3, 1e-4):
        cfg = SleConfig(pair=pair(right=((0.0, -0.5),)), dt=dt, seed=8)
        Z = np.concatenate([simulate(cfg, 0.5, index=i).monitor.Z[1:] for i in range(5)])
        share.append(np.mean(Z < 1e-12))
    assert share[1] <= share[0]
    assert share[1] < 0.05


def test_eps_default_scales_with_dt():
    assert SleConfig(dt=1e-4).eps == pytest.approx(0.05 * math.sqrt(1e-4))
    assert SleConfig(dt=1e-4, eps_coll=1e-3).eps == 1e-3
