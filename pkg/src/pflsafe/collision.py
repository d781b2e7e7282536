"""Two-mass-spring contact model for robot/human collisions.

A robot of effective mass m_r moving at v0 strikes a body part of effective
mass m_h through a linear contact spring of stiffness k (the tissue spring
from the body-region table).  While the spring is compressed the pair
behaves as an undamped oscillator in the relative coordinate; all stored
energy is returned, so the model is the conservative worst case for the
peak force.  Closed forms for the pre-collision quantities:

  reduced mass        mu      = m_r * m_h / (m_r + m_h)
  common velocity     v_star  = m_r * v0 / (m_r + m_h)   (momentum balance)
  transferred energy  delta_k = 1/2 * mu * v0^2
  peak compression    dx_max  = v0 * sqrt(mu / k)
  peak force          f_peak  = k * dx_max
  time of peak        t_star  = (pi / 2) * sqrt(mu / k)

A clamped body part (m_h = inf) is modelled by pinning the human mass:
v_h == 0, mu == m_r, v_star == 0, and the robot's entire kinetic energy
loads the spring.

``simulate`` integrates the same dynamics with a fixed-step classic
Runge-Kutta scheme and a compression-only spring: when the compression
returns to zero the surfaces separate and both masses coast.  The
simulated peak must agree with the closed forms; tests use one as the
oracle for the other.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, StepSizeError, ValidationError


@dataclass(frozen=True)
class CollisionScenario:
    """Pre-collision configuration. Masses kg, stiffness N/m, speed m/s."""

    m_r: float
    m_h: float          # math.inf pins the body part (clamped contact)
    k: float
    v0: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.m_r) and self.m_r > 0):
            raise ValidationError(f"m_r must be finite and > 0, got {self.m_r!r}")
        if not self.m_h > 0:
            raise ValidationError(f"m_h must be > 0 (or inf), got {self.m_h!r}")
        if not (math.isfinite(self.k) and self.k > 0):
            raise ValidationError(f"k must be finite and > 0, got {self.k!r}")
        if not (math.isfinite(self.v0) and self.v0 >= 0):
            raise ValidationError(f"v0 must be finite and >= 0, got {self.v0!r}")

    @property
    def clamped(self) -> bool:
        return math.isinf(self.m_h)

    @property
    def reduced_mass(self) -> float:
        if self.clamped:
            return self.m_r
        return self.m_r * self.m_h / (self.m_r + self.m_h)


@dataclass(frozen=True)
class PeakState:
    """Analytic state at maximum compression."""

    dx_max: float   # m
    f_peak: float   # N
    t_star: float   # s
    degenerate: bool = False  # v0 == 0: no contact develops, t_star undefined


@dataclass(frozen=True)
class CollisionOutcome:
    """Quantities extracted from a simulated collision."""

    v_star: float    # common velocity at peak compression (0 when clamped)
    t_star: float    # s
    dx_max: float    # m
    f_peak: float    # N
    delta_k: float   # kinetic energy converted to elastic energy at peak, J
    k0: float        # robot kinetic energy at impact, J
    k_star: float    # kinetic energy remaining at peak, J
    degenerate: bool = False


@dataclass(frozen=True, eq=False)
class CollisionTrajectory:
    """Uniformly sampled collision time history."""

    t: np.ndarray
    v_r: np.ndarray
    v_h: np.ndarray   # all zeros for a clamped contact
    dx: np.ndarray    # spring compression, >= 0
    dt: float


def common_velocity(scenario: CollisionScenario) -> float:
    """Shared velocity at maximum compression (momentum conservation)."""
    if scenario.clamped:
        return 0.0
    return scenario.m_r * scenario.v0 / (scenario.m_r + scenario.m_h)


def energy_transfer(scenario: CollisionScenario) -> float:
    """Kinetic energy converted into elastic energy at peak compression [J]."""
    return 0.5 * scenario.reduced_mass * scenario.v0 ** 2


def natural_period(scenario: CollisionScenario) -> float:
    """Period of the relative-coordinate oscillator, 2*pi*sqrt(mu/k)."""
    return 2.0 * math.pi * math.sqrt(scenario.reduced_mass / scenario.k)


def peak_contact_state(scenario: CollisionScenario) -> PeakState:
    """Closed-form peak compression, peak force and time of peak."""
    if scenario.v0 == 0.0:
        return PeakState(0.0, 0.0, 0.0, degenerate=True)
    mu = scenario.reduced_mass
    dx_max = scenario.v0 * math.sqrt(mu / scenario.k)
    return PeakState(
        dx_max=dx_max,
        f_peak=scenario.k * dx_max,
        t_star=(math.pi / 2.0) * math.sqrt(mu / scenario.k),
    )


def _rk4_step(state: tuple[float, float, float], h: float,
              m_r: float, m_h: float, k: float, clamped: bool,
              ) -> tuple[float, float, float]:
    """One classic Runge-Kutta step of the in-contact dynamics."""

    def deriv(v_r: float, v_h: float, dx: float) -> tuple[float, float, float]:
        f = k * dx
        if clamped:
            return (-f / m_r, 0.0, v_r)
        return (-f / m_r, f / m_h, v_r - v_h)

    v_r, v_h, dx = state
    a1 = deriv(v_r, v_h, dx)
    a2 = deriv(v_r + 0.5 * h * a1[0], v_h + 0.5 * h * a1[1], dx + 0.5 * h * a1[2])
    a3 = deriv(v_r + 0.5 * h * a2[0], v_h + 0.5 * h * a2[1], dx + 0.5 * h * a2[2])
    a4 = deriv(v_r + h * a3[0], v_h + h * a3[1], dx + h * a3[2])
    return (
        v_r + h / 6.0 * (a1[0] + 2.0 * a2[0] + 2.0 * a3[0] + a4[0]),
        v_h + h / 6.0 * (a1[1] + 2.0 * a2[1] + 2.0 * a3[1] + a4[1]),
        dx + h / 6.0 * (a1[2] + 2.0 * a2[2] + 2.0 * a3[2] + a4[2]),
    )


def _release_time(state: tuple[float, float, float], h: float,
                  m_r: float, m_h: float, k: float, clamped: bool) -> float:
    """Bisect the sub-step time at which compression returns to zero."""
    lo, hi = 0.0, h
    for _ in range(80):
        mid = 0.5 * (lo + hi)
        if _rk4_step(state, mid, m_r, m_h, k, clamped)[2] > 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def simulate(scenario: CollisionScenario, dt: float | None = None,
             horizon: float | None = None, detach_on_unload: bool = True,
             ) -> tuple[CollisionTrajectory, CollisionOutcome]:
    """Integrate a collision and extract its peak-state outcome.

    dt defaults to 1/1000 of the natural period and must stay below 1/10 of
    it; horizon defaults to 3/4 of the period (the peak sits at a quarter
    period, separation at half).  With ``detach_on_unload`` the spring only
    pushes; disabling it keeps the pair attached so the spring can pull,
    which must not change the extracted peak quantities.
    """
    period = natural_period(scenario)
    if dt is None:
        dt = period / 1000.0
    elif dt <= 0:
        raise DomainError(f"dt must be > 0, got {dt!r}")
    if dt >= period / 10.0:
        raise StepSizeError(
            f"dt = {dt:g} s too coarse for contact period {period:g} s; "
            f"need dt < period/10")
    if horizon is None:
        horizon = 0.75 * period
    elif horizon <= 0:
        raise DomainError(f"horizon must be > 0, got {horizon!r}")

    n = int(math.floor(horizon / dt + 1e-9)) + 1
    t = np.arange(n) * dt
    v_r = np.empty(n)
    v_h = np.empty(n)
    dx = np.empty(n)
    v_r[0], v_h[0], dx[0] = scenario.v0, 0.0, 0.0

    if scenario.v0 == 0.0:
        v_r.fill(0.0)
        v_h.fill(0.0)
        dx.fill(0.0)
        traj = CollisionTrajectory(t=t, v_r=v_r, v_h=v_h, dx=dx, dt=dt)
        return traj, CollisionOutcome(0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0,
                                      degenerate=True)

    m_r, m_h, k = scenario.m_r, scenario.m_h, scenario.k
    clamped = scenario.clamped
    state = (scenario.v0, 0.0, 0.0)
    released = False
    for i in range(1, n):
        if released:
            v_r[i], v_h[i] = state[0], state[1]
            dx[i] = 0.0
            continue
        new = _rk4_step(state, dt, m_r, m_h, k, clamped)
        if detach_on_unload and new[2] < 0.0 and state[2] > 0.0:
            # surfaces separate inside this step: advance to the exact
            # crossing, then coast (free flight is integrated exactly)
            tau = _release_time(state, dt, m_r, m_h, k, clamped)
            at_release = _rk4_step(state, tau, m_r, m_h, k, clamped)
            state = (at_release[0], at_release[1], 0.0)
            released = True
            v_r[i], v_h[i] = state[0], state[1]
            dx[i] = 0.0
            continue
        state = new
        v_r[i], v_h[i] = state[0], state[1]
        dx[i] = state[2]

    traj = CollisionTrajectory(t=t, v_r=v_r, v_h=v_h, dx=dx, dt=dt)
    return traj, _extract_outcome(scenario, traj)


def _extract_outcome(scenario: CollisionScenario,
                     traj: CollisionTrajectory) -> CollisionOutcome:
    """Peak quantities from the sampled trajectory (parabolic refinement)."""
    i = int(np.argmax(traj.dx))
    if i == 0 or i == len(traj.dx) - 1:
        raise DomainError(
            "peak compression not bracketed by the horizon; extend it")
    ym, y0, yp = traj.dx[i - 1], traj.dx[i], traj.dx[i + 1]
    denom = ym - 2.0 * y0 + yp
    if denom == 0.0:
        delta, dx_max = 0.0, y0
    else:
        delta = 0.5 * (ym - yp) / denom * traj.dt
        dx_max = y0 - 0.125 * (ym - yp) ** 2 / denom
    t_star = traj.t[i] + delta

    # velocities at the refined peak via linear interpolation
    j = min(int(t_star / traj.dt), len(traj.t) - 2)
    alpha = (t_star - traj.t[j]) / traj.dt
    vr_star = (1.0 - alpha) * traj.v_r[j] + alpha * traj.v_r[j + 1]
    if scenario.clamped:
        v_star = 0.0
    else:
        vh_star = (1.0 - alpha) * traj.v_h[j] + alpha * traj.v_h[j + 1]
        v_star = ((scenario.m_r * vr_star + scenario.m_h * vh_star)
                  / (scenario.m_r + scenario.m_h))

    f_peak = scenario.k * dx_max
    delta_k = 0.5 * scenario.k * dx_max ** 2
    k0 = 0.5 * scenario.m_r * scenario.v0 ** 2
    return CollisionOutcome(
        v_star=v_star,
        t_star=float(t_star),
        dx_max=float(dx_max),
        f_peak=float(f_peak),
        delta_k=float(delta_k),
        k0=k0,
        k_star=k0 - delta_k,
    )


def total_energy(scenario: CollisionScenario,
                 traj: CollisionTrajectory) -> np.ndarray:
    """Mechanical energy at every sample (the human term is 0 when clamped)."""
    e = 0.5 * scenario.m_r * traj.v_r ** 2 + 0.5 * scenario.k * traj.dx ** 2
    if not scenario.clamped:
        e = e + 0.5 * scenario.m_h * traj.v_h ** 2
    return e
