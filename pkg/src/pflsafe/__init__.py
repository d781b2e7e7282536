"""pflsafe: power-and-force-limiting safety toolkit for collaborative robots.

Data-driven body-region limit tables, a conservative two-mass-spring
collision model, admissible speed/energy limits, directional reflected-mass
analysis over a robot workspace, and a runtime velocity/energy filter.
"""
from __future__ import annotations

from .assets import body_table_path, robot_model_path
from .body import (BodyRegionParams, BodyRegionTable, ContactMode,
                   REGION_IDS, REGION_LABELS, effective_force_limit,
                   load_body_table, max_elastic_energy)
from .collision import (CollisionOutcome, CollisionScenario,
                        CollisionTrajectory, common_velocity, energy_transfer,
                        natural_period, peak_contact_state, simulate)
from .dynamics import (ManipulatorModel, ReflectedMassQuery, forward_kinematics,
                       inverse_kinematics, iso_effective_mass, load_robot_model,
                       mass_matrix, point_jacobian, reflected_mass)
from .errors import (ConstrainedDirectionError, ConvergenceError, DomainError,
                     PflError, ReportError, SchemaError, StepSizeError,
                     SweepError, ValidationError)
from .limits import (LimitQuery, SpeedLimit, compute_limit, is_admissible,
                     v0_max_clamped, v0_max_free, velocity_bounds)
from .safety_filter import (FilterConfig, PlantState, TankState, filter_velocity,
                            simulate_loop, tank_init, tank_step)
from .sweep import (MassSource, SweepConfig, SweepResult, direction_set,
                    horizontal_directions, run_sweep, scaling_report,
                    sphere_directions)

__version__ = "0.1.0"
