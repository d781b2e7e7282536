"""Admissible pre-collision speed and energy limits.

The contact spring may store at most u_s_max = F_eff^2 / (2k) before the
region's force threshold is exceeded.  Bounding the energy that reaches the
spring bounds the impact speed:

  free impact     all of the transferred energy 1/2*mu*v0^2 loads the
                  spring at peak compression, so
                  v0_max = sqrt(2 * u_s_max * (m_r + m_h) / (m_r * m_h))

  clamped impact  the body part cannot recoil; the robot's entire kinetic
                  energy loads the spring, so
                  v0_max = sqrt(2 * u_s_max / m_r), equivalently the energy
                  budget k0_max = u_s_max on the robot's kinetic energy.

Free limits with the transient thresholds model the short-duration case;
clamped limits are always evaluated against quasi-static thresholds.

Note on single-mass bounds: the values sqrt(2*u/m) for m = max(m_r, m_h)
and m = min(m_r, m_h) both sit *below* the free-impact limit (the reduced
mass is smaller than either mass), so the smaller-mass value alone is not
an upper bound.  ``velocity_bounds`` therefore returns
[sqrt(2u/max), sqrt(2) * sqrt(2u/min)], which brackets the free limit
strictly for unequal masses and touches it exactly when m_r == m_h.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

from .body import BodyRegionTable, ContactMode, binding_criterion, max_elastic_energy
from .errors import DomainError

#: slack used by admissibility checks so a speed exactly at the limit passes
ADMISSIBLE_TOL = 1e-12


@dataclass(frozen=True)
class LimitQuery:
    """One speed-limit evaluation request."""

    region: str
    mode: ContactMode
    robot_mass: float        # kg, effective robot mass at the contact
    contact_area: float = 1.0  # cm^2

    def __post_init__(self) -> None:
        if not (math.isfinite(self.robot_mass) and self.robot_mass > 0):
            raise DomainError(
                f"robot_mass must be finite and > 0, got {self.robot_mass!r}")
        if not (math.isfinite(self.contact_area) and self.contact_area > 0):
            raise DomainError(
                f"contact_area must be > 0, got {self.contact_area!r}")


@dataclass(frozen=True)
class SpeedLimit:
    """Admissible pre-collision state for one region/mode/mass."""

    v0_max: float            # m/s
    k0_max: float            # J, robot kinetic energy at v0_max
    u_s_max: float           # J, elastic energy budget of the contact
    binding_criterion: str   # "force" or "pressure"
    mode: ContactMode


def v0_max_free(u_s_max: float, m_r: float, m_h: float) -> float:
    """Speed limit for a free impact between two finite masses."""
    _check_energy(u_s_max)
    _check_mass("m_r", m_r)
    if math.isinf(m_h):
        raise DomainError(
            "m_h is infinite: a non-recoiling body part is a clamped "
            "contact; use v0_max_clamped")
    _check_mass("m_h", m_h)
    return math.sqrt(2.0 * u_s_max * (m_r + m_h) / (m_r * m_h))


def v0_max_clamped(u_s_max: float, m_r: float) -> float:
    """Speed limit for a clamped contact: all robot kinetic energy stores."""
    _check_energy(u_s_max)
    _check_mass("m_r", m_r)
    return math.sqrt(2.0 * u_s_max / m_r)


def velocity_bounds(u_s_max: float, m_r: float,
                    m_h: float) -> tuple[float, float]:
    """Bracket of the free-impact limit from single-mass energy budgets.

    Returns (sqrt(2u/max(m_r, m_h)), sqrt(2) * sqrt(2u/min(m_r, m_h))).
    The free limit lies strictly inside for m_r != m_h and equals the upper
    value for equal masses.
    """
    _check_energy(u_s_max)
    _check_mass("m_r", m_r)
    if not math.isinf(m_h):
        _check_mass("m_h", m_h)
    lower = math.sqrt(2.0 * u_s_max / max(m_r, m_h))
    upper = math.sqrt(2.0) * math.sqrt(2.0 * u_s_max / min(m_r, m_h))
    return lower, upper


def compute_limit(query: LimitQuery, table: BodyRegionTable) -> SpeedLimit:
    """Speed limit for one query against a body-region table."""
    params = table[query.region]
    mode = query.mode
    u_s_max = max_elastic_energy(params, mode, query.contact_area)
    if mode is ContactMode.QUASI_STATIC_CLAMPED:
        v0_max = v0_max_clamped(u_s_max, query.robot_mass)
    elif mode in (ContactMode.TRANSIENT, ContactMode.QUASI_STATIC_FREE):
        if params.clamped_only:
            raise DomainError(
                f"{params.label}: effective mass is infinite (cannot "
                f"recoil); evaluate this region in "
                f"{ContactMode.QUASI_STATIC_CLAMPED.value} mode")
        v0_max = v0_max_free(u_s_max, query.robot_mass, params.m_h)
    else:  # pragma: no cover - enum is exhaustive
        raise DomainError(f"unknown contact mode {mode!r}")
    return SpeedLimit(
        v0_max=v0_max,
        k0_max=0.5 * query.robot_mass * v0_max ** 2,
        u_s_max=u_s_max,
        binding_criterion=binding_criterion(params, query.contact_area),
        mode=mode,
    )


def is_admissible(v0: float, limit: SpeedLimit,
                  tol: float = ADMISSIBLE_TOL) -> bool:
    """True when |v0| does not exceed the limit (inclusive within tol)."""
    return abs(v0) <= limit.v0_max + tol


def _check_energy(u_s_max: float) -> None:
    if not (math.isfinite(u_s_max) and u_s_max > 0):
        raise DomainError(f"u_s_max must be finite and > 0, got {u_s_max!r}")


def _check_mass(name: str, value: float) -> None:
    if not (math.isfinite(value) and value > 0):
        raise DomainError(f"{name} must be finite and > 0, got {value!r}")
