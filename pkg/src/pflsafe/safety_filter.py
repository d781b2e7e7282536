"""Runtime enforcement: velocity clamping and a virtual energy tank.

Two mechanisms, deliberately kept separate because they guarantee different
things:

  * ``filter_velocity`` clamps a commanded speed to the admissible
    pre-collision limit.  This is the actual safety constraint.
  * the energy tank bounds the energy a controller may inject into the
    plant.  Injection (positive actuator power) drains the tank and is
    denied once the tank is empty; dissipation is always allowed and may
    optionally be recycled back into the tank, capped at the initial
    budget.  A tank keeps the closed loop passive, but passivity alone
    does not imply a speed limit: with a large budget and no velocity
    filter the plant happily exceeds any admissible speed while every tank
    invariant holds.  ``simulate_loop`` can demonstrate exactly that.

The demo loop is a 1-DoF plant (mass, velocity) driven by a proportional
velocity controller through the tank.  The tank grants energy per control
period; the granted energy is converted into an exactly work-equivalent
force, so the plant's kinetic energy can never exceed the injected total:
with a budget equal to an elastic energy limit U_s,max the loop cannot
enable a collision that overloads the contact even with the velocity
filter disabled.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import DomainError, ValidationError
from .limits import SpeedLimit


@dataclass(frozen=True)
class FilterConfig:
    """Loop parameters: the speed limit, control period and power ceiling."""

    speed_limit: SpeedLimit
    period: float                 # s
    power_cap: float | None = None  # W, optional actuator power valve

    def __post_init__(self) -> None:
        if not (math.isfinite(self.period) and self.period > 0):
            raise DomainError(f"period must be > 0, got {self.period!r}")
        if self.power_cap is not None and not self.power_cap > 0:
            raise DomainError(f"power_cap must be > 0, got {self.power_cap!r}")


@dataclass(frozen=True)
class TankState:
    """Virtual energy tank ledger.

    With recycling disabled the ledger is derived from the energy balance
    (``cumulative_injected = initial_budget - energy``), which makes the
    bound ``cumulative_injected <= initial_budget`` exact in floating
    point, not just up to accumulation drift.
    """

    energy: float
    initial_budget: float
    cumulative_injected: float = 0.0
    cumulative_recycled: float = 0.0
    recycling_enabled: bool = False

    def __post_init__(self) -> None:
        if not (math.isfinite(self.initial_budget) and self.initial_budget >= 0):
            raise ValidationError(
                f"initial_budget must be finite and >= 0, got {self.initial_budget!r}")
        if self.energy < 0 or not math.isfinite(self.energy):
            raise ValidationError(f"energy must be finite and >= 0, got {self.energy!r}")


def tank_init(budget: float, recycling_enabled: bool = False) -> TankState:
    return TankState(energy=budget, initial_budget=budget,
                     recycling_enabled=recycling_enabled)


def tank_step(state: TankState, requested_power: float, dt: float,
              power_cap: float | None = None) -> tuple[float, TankState]:
    """One tank update; returns (granted_power, new_state).

    Positive requests (injection) are granted up to the power cap and the
    remaining tank energy; the grant drains the tank.  Non-positive
    requests (dissipation) pass through unchanged; with recycling enabled
    the dissipated energy refills the tank up to the initial budget.
    """
    if not (math.isfinite(dt) and dt > 0):
        raise DomainError(f"dt must be > 0, got {dt!r}")
    if not math.isfinite(requested_power):
        raise DomainError(f"requested_power must be finite, got {requested_power!r}")

    if requested_power <= 0.0:
        if state.recycling_enabled and requested_power < 0.0:
            headroom = state.initial_budget - state.energy
            refill = min(-requested_power * dt, headroom)
            return requested_power, replace(
                state,
                energy=state.energy + refill,
                cumulative_recycled=state.cumulative_recycled + refill)
        return requested_power, state

    e_request = requested_power * dt
    if power_cap is not None:
        e_request = min(e_request, power_cap * dt)
    e_grant = min(e_request, state.energy)
    energy_new = state.energy - e_grant
    if energy_new < 0.0:  # floating-point guard; e_grant <= energy already
        energy_new = 0.0
    if state.recycling_enabled:
        injected = state.cumulative_injected + e_grant
    else:
        injected = state.initial_budget - energy_new
    # report the granted power without the round trip through energy when a
    # bound is met exactly, so an unthrottled request passes through bit-equal
    if e_grant == requested_power * dt:
        granted = requested_power
    elif power_cap is not None and e_grant == power_cap * dt:
        granted = power_cap
    else:
        granted = e_grant / dt
    return granted, replace(state, energy=energy_new,
                            cumulative_injected=injected)


def filter_velocity(nominal: float, cfg: FilterConfig) -> float:
    """Clamp a commanded speed into [-v0_max, +v0_max].

    This is the minimal intervention for a scalar bound: admissible
    commands pass unchanged, so the filter is idempotent.
    """
    v_max = cfg.speed_limit.v0_max
    return max(-v_max, min(v_max, nominal))


@dataclass
class PlantState:
    """1-DoF rigid plant."""

    mass: float
    velocity: float = 0.0
    position: float = 0.0

    def __post_init__(self) -> None:
        if not (math.isfinite(self.mass) and self.mass > 0):
            raise ValidationError(f"mass must be finite and > 0, got {self.mass!r}")


@dataclass(eq=False)
class LoopLog:
    """Per-step loop telemetry (arrays share one time base)."""

    t: np.ndarray
    v_nominal: np.ndarray
    v_commanded: np.ndarray
    velocity: np.ndarray
    ke: np.ndarray
    tank_energy: np.ndarray
    injected_cum: np.ndarray

    def write_csv(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write("t,v_nominal,v_commanded,ke,tank_energy,injected_cum\n")
            for i in range(len(self.t)):
                row = (self.t[i], self.v_nominal[i], self.v_commanded[i],
                       self.ke[i], self.tank_energy[i], self.injected_cum[i])
                fh.write(",".join(repr(float(x)) for x in row) + "\n")


def simulate_loop(plant: PlantState, nominal_profile, cfg: FilterConfig,
                  tank: TankState, duration: float, *,
                  velocity_filter: bool = True,
                  gain: float | None = None) -> LoopLog:
    """Run the filtered velocity loop for ``duration`` seconds.

    ``nominal_profile`` maps time to the desired speed.  Each period:
    clamp the nominal speed (if the velocity filter is on), compute the
    proportional control force, ask the tank for the work that force would
    do over the step, then apply the force scaled so its work equals the
    granted energy exactly.  Dissipative steps bypass the tank grant and
    may refill it.
    """
    if not (math.isfinite(duration) and duration > 0):
        raise DomainError(f"duration must be > 0, got {duration!r}")
    dt = cfg.period
    if gain is None:
        gain = 20.0 * plant.mass  # closed-loop time constant 1/20 s
    elif not gain > 0:
        raise DomainError(f"gain must be > 0, got {gain!r}")

    n = int(round(duration / dt)) + 1
    log = LoopLog(
        t=np.arange(n) * dt,
        v_nominal=np.empty(n), v_commanded=np.empty(n), velocity=np.empty(n),
        ke=np.empty(n), tank_energy=np.empty(n), injected_cum=np.empty(n))

    m = plant.mass
    v = plant.velocity
    for i in range(n):
        t = i * dt
        v_nom = float(nominal_profile(t))
        v_cmd = filter_velocity(v_nom, cfg) if velocity_filter else v_nom

        force = gain * (v_cmd - v)
        # ungated candidate step and the exact work it would perform
        v_next = v + force / m * dt
        work = 0.5 * m * (v_next * v_next - v * v)
        granted, tank = tank_step(tank, work / dt, dt, power_cap=cfg.power_cap)
        e_grant = granted * dt
        if work > 0.0 and e_grant < work:
            # throttled injection: apply the force scaled so its work over
            # the step equals the granted energy exactly
            v_next = math.copysign(math.sqrt(max(v * v + 2.0 * e_grant / m, 0.0)),
                                   v_next if v_next != 0.0 else v_cmd - v)
        v = v_next

        log.v_nominal[i] = v_nom
        log.v_commanded[i] = v_cmd
        log.velocity[i] = v
        log.ke[i] = 0.5 * m * v * v
        log.tank_energy[i] = tank.energy
        log.injected_cum[i] = tank.cumulative_injected
        plant.position += v * dt
    plant.velocity = v
    return log
