"""Two-mass-spring collision model: closed forms vs integrated trajectories.

The closed-form peak state and the RK4 simulation are independent routes to
the same quantities; each test uses one as the oracle for the other.
"""
import math

import numpy as np
import pytest

from pflsafe.collision import (CollisionScenario, common_velocity,
                               energy_transfer, natural_period,
                               peak_contact_state, simulate, total_energy)
from pflsafe.errors import DomainError, StepSizeError, ValidationError

# hand-evaluated closed forms for (m_r=3, m_h=1, k=5, v0=1):
#   mu = 3/4, dx = sqrt(0.75/5), f = k*dx, t* = (pi/2)*sqrt(0.75/5)
FREE = CollisionScenario(m_r=3.0, m_h=1.0, k=5.0, v0=1.0)
FREE_DX = 0.3872983346207417
FREE_F = 1.9364916731037085
FREE_T = 0.6083668013960418
FREE_PERIOD = 2.4334672055841673

CLAMPED = CollisionScenario(m_r=3.0, m_h=math.inf, k=5.0, v0=1.0)
CLAMPED_DX = 0.7745966692414834
CLAMPED_F = 3.872983346207417


def test_reduced_mass_and_common_velocity():
    assert FREE.reduced_mass == pytest.approx(0.75, rel=1e-15)
    assert common_velocity(FREE) == pytest.approx(0.75, rel=1e-15)
    assert CLAMPED.reduced_mass == 3.0
    assert common_velocity(CLAMPED) == 0.0


def test_energy_transfer_and_period():
    assert energy_transfer(FREE) == pytest.approx(0.375, rel=1e-15)
    assert natural_period(FREE) == pytest.approx(FREE_PERIOD, rel=1e-12)


def test_peak_contact_state_closed_form():
    peak = peak_contact_state(FREE)
    assert peak.dx_max == pytest.approx(FREE_DX, rel=1e-12)
    assert peak.f_peak == pytest.approx(FREE_F, rel=1e-12)
    assert peak.t_star == pytest.approx(FREE_T, rel=1e-12)
    assert not peak.degenerate

    clamped = peak_contact_state(CLAMPED)
    assert clamped.dx_max == pytest.approx(CLAMPED_DX, rel=1e-12)
    assert clamped.f_peak == pytest.approx(CLAMPED_F, rel=1e-12)


def test_simulation_matches_closed_form_free():
    traj, outcome = simulate(FREE)
    assert outcome.dx_max == pytest.approx(FREE_DX, rel=1e-8)
    assert outcome.f_peak == pytest.approx(FREE_F, rel=1e-8)
    assert outcome.t_star == pytest.approx(FREE_T, rel=1e-6)
    assert outcome.v_star == pytest.approx(0.75, rel=1e-6)
    assert outcome.delta_k == pytest.approx(0.375, rel=1e-8)
    assert outcome.k0 == pytest.approx(1.5, rel=1e-15)
    assert outcome.k_star == pytest.approx(1.5 - 0.375, rel=1e-7)


def test_simulation_matches_closed_form_clamped():
    traj, outcome = simulate(CLAMPED)
    assert outcome.dx_max == pytest.approx(CLAMPED_DX, rel=1e-8)
    assert outcome.f_peak == pytest.approx(CLAMPED_F, rel=1e-8)
    assert outcome.v_star == 0.0
    assert np.all(traj.v_h == 0.0)


def test_energy_conserved_throughout():
    traj, _ = simulate(FREE)
    e = total_energy(FREE, traj)
    assert np.max(np.abs(e - e[0])) / e[0] < 1e-9


def test_momentum_conserved_free():
    traj, _ = simulate(FREE)
    p = FREE.m_r * traj.v_r + FREE.m_h * traj.v_h
    assert np.max(np.abs(p - FREE.m_r * FREE.v0)) < 1e-9


def test_elastic_restitution_after_release():
    # elastic two-body impact: v_r' = (m_r-m_h)/(m_r+m_h) v0, v_h' = 2 m_r v0/(m_r+m_h)
    traj, _ = simulate(FREE)
    assert traj.dx[-1] == 0.0
    assert traj.v_r[-1] == pytest.approx(0.5, abs=1e-6)
    assert traj.v_h[-1] == pytest.approx(1.5, abs=1e-6)


def test_compression_never_negative_with_detachment():
    traj, _ = simulate(FREE)
    assert np.min(traj.dx) >= 0.0


def test_attached_spring_same_peak_but_pulls():
    attached, out_attached = simulate(FREE, detach_on_unload=False,
                                      horizon=natural_period(FREE))
    _, out_detached = simulate(FREE, horizon=natural_period(FREE))
    assert out_attached.dx_max == pytest.approx(out_detached.dx_max, rel=1e-10)
    assert out_attached.f_peak == pytest.approx(out_detached.f_peak, rel=1e-10)
    assert np.min(attached.dx) < 0.0  # tension half-cycle


def test_degenerate_zero_speed():
    scenario = CollisionScenario(m_r=3.0, m_h=1.0, k=5.0, v0=0.0)
    assert peak_contact_state(scenario).degenerate
    traj, outcome = simulate(scenario)
    assert outcome.degenerate
    assert outcome.f_peak == 0.0
    assert np.all(traj.dx == 0.0)


def test_coarse_step_rejected():
    with pytest.raises(StepSizeError, match="period"):
        simulate(FREE, dt=natural_period(FREE) / 10.0)


@pytest.mark.parametrize("kwargs", [dict(dt=-1e-4), dict(dt=0.0),
                                    dict(horizon=0.0), dict(horizon=-1.0)])
def test_bad_step_or_horizon_rejected(kwargs):
    with pytest.raises(DomainError):
        simulate(FREE, **kwargs)


def test_unbracketed_peak_rejected():
    with pytest.raises(DomainError, match="horizon"):
        simulate(FREE, horizon=0.1 * natural_period(FREE))


@pytest.mark.parametrize("kwargs", [
    dict(m_r=0.0, m_h=1.0, k=5.0, v0=1.0),
    dict(m_r=math.inf, m_h=1.0, k=5.0, v0=1.0),
    dict(m_r=3.0, m_h=-1.0, k=5.0, v0=1.0),
    dict(m_r=3.0, m_h=1.0, k=0.0, v0=1.0),
    dict(m_r=3.0, m_h=1.0, k=5.0, v0=-0.2),
    dict(m_r=3.0, m_h=math.nan, k=5.0, v0=1.0),
])
def test_invalid_scenarios_rejected(kwargs):
    with pytest.raises(ValidationError):
        CollisionScenario(**kwargs)


def test_random_scenarios_match_closed_forms(rng):
    # property check over the full operating envelope (acceptance runs the
    # larger version of this sweep)
    for _ in range(40):
        scenario = CollisionScenario(
            m_r=float(rng.uniform(0.5, 100.0)),
            m_h=float(rng.uniform(0.5, 100.0)) if rng.random() < 0.8 else math.inf,
            k=float(10.0 ** rng.uniform(2.0, 6.0)),
            v0=float(rng.uniform(0.05, 3.0)),
        )
        peak = peak_contact_state(scenario)
        _, outcome = simulate(scenario)
        assert outcome.dx_max == pytest.approx(peak.dx_max, rel=5e-3)
        assert outcome.f_peak == pytest.approx(peak.f_peak, rel=5e-3)
        assert outcome.delta_k == pytest.approx(
            energy_transfer(scenario), rel=5e-3)


def test_total_energy_clamped_counts_robot_and_spring_only():
    traj, _ = simulate(CLAMPED)
    e = total_energy(CLAMPED, traj)
    assert e[0] == pytest.approx(0.5 * 3.0 * 1.0, rel=1e-12)
    assert np.max(np.abs(e - e[0])) / e[0] < 1e-9
