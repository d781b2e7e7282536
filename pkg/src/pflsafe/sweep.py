"""Workspace sweep: directional reflected mass -> speed-limit distributions.

A regular grid of tool positions is swept over a box.  Each grid point is
solved by inverse kinematics with the tool pointing straight down (one fixed
orientation, so distributions are comparable across points); unreachable
points are skipped and counted.  At every reachable point the directional
reflected mass is evaluated along a deterministic set of unit directions
(a Fibonacci sphere), and per body region the admissible speed limit is
computed twice per contact mode: once with the directional reflected mass
and once with the constant half-moving-mass convention.

Everything here is deterministic: the grid order, the direction set and the
warm-start chain are fixed, so reruns reproduce results bit for bit.  Grid
scanlines are independent work units; the optional worker pool changes wall
time only, not output.
"""
from __future__ import annotations

import enum
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import Mapping, Sequence

import numpy as np

from .body import BodyRegionParams, BodyRegionTable, ContactMode, REGION_IDS, \
    REGION_LABELS, effective_force_limit
from .dynamics import (FLANGE_DOWN, ManipulatorModel, ReflectedMassQuery,
                       inverse_kinematics, iso_effective_mass, manipulability,
                       reflected_mass)
from .errors import (ConstrainedDirectionError, DomainError, ReportError,
                     SweepError)

#: manipulability below which a configuration is flagged near-singular
SINGULAR_FLAG_THRESHOLD = 1e-6


class MassSource(enum.Enum):
    """Which robot effective mass enters the speed limit."""

    REFLECTED = "reflected"   # directional m_u(q) at the contact point
    CONSTANT = "constant"     # half moving mass + payload


ALL_COMBOS: tuple[tuple[ContactMode, MassSource], ...] = tuple(
    (mode, source)
    for mode in (ContactMode.TRANSIENT, ContactMode.QUASI_STATIC_FREE,
                 ContactMode.QUASI_STATIC_CLAMPED)
    for source in (MassSource.REFLECTED, MassSource.CONSTANT))

BASELINE_COMBO = (ContactMode.TRANSIENT, MassSource.REFLECTED)


@dataclass(frozen=True)
class SweepConfig:
    """Sweep geometry and evaluation options (distances in metres)."""

    box_min: tuple[float, float, float] = (-0.8, -0.8, 0.05)
    box_max: tuple[float, float, float] = (0.8, 0.8, 1.0)
    grid_spacing: float = 0.05
    n_directions: int = 20
    direction_style: str = "horizontal"
    contact_area: float = 1.0   # cm^2
    payload: float = 0.0        # kg
    modes: tuple[tuple[ContactMode, MassSource], ...] = ALL_COMBOS
    n_workers: int = 1

    def __post_init__(self) -> None:
        if not (math.isfinite(self.grid_spacing) and self.grid_spacing > 0):
            raise DomainError(f"grid_spacing must be > 0, got {self.grid_spacing!r}")
        for lo, hi in zip(self.box_min, self.box_max):
            if not lo <= hi:
                raise DomainError(f"box_min must be <= box_max, got "
                                  f"{self.box_min} / {self.box_max}")
        if self.n_directions < 1:
            raise DomainError("n_directions must be >= 1")
        if self.direction_style not in _DIRECTION_STYLES:
            raise DomainError(
                f"unknown direction style {self.direction_style!r}; valid: "
                + ", ".join(sorted(_DIRECTION_STYLES)))
        if self.n_workers < 1:
            raise DomainError("n_workers must be >= 1")
        if not self.modes:
            raise DomainError("modes must not be empty")


def sphere_directions(n: int) -> np.ndarray:
    """n unit vectors spread over the sphere (Fibonacci lattice), (n, 3)."""
    if n < 1:
        raise DomainError(f"need at least one direction, got {n}")
    i = np.arange(n, dtype=float)
    z = 1.0 - 2.0 * (i + 0.5) / n
    golden_angle = math.pi * (3.0 - math.sqrt(5.0))
    theta = golden_angle * i
    r = np.sqrt(np.maximum(1.0 - z * z, 0.0))
    return np.column_stack([r * np.cos(theta), r * np.sin(theta), z])


def horizontal_directions(n: int) -> np.ndarray:
    """n unit vectors evenly spaced on the horizontal circle, (n, 3).

    The default impact directions: a person standing next to the arm is
    struck sideways at torso or head height, so the strike direction lies
    in the horizontal plane.  Vertical (downward) loading is the pressing
    case covered by the clamped contact mode, not by a free strike.
    """
    if n < 1:
        raise DomainError(f"need at least one direction, got {n}")
    theta = 2.0 * math.pi * np.arange(n, dtype=float) / n
    return np.column_stack([np.cos(theta), np.sin(theta), np.zeros(n)])


_DIRECTION_STYLES = {
    "horizontal": horizontal_directions,
    "sphere": sphere_directions,
}


def direction_set(n: int, style: str = "horizontal") -> np.ndarray:
    """Deterministic direction set: ``horizontal`` circle or Fibonacci ``sphere``."""
    try:
        generator = _DIRECTION_STYLES[style]
    except KeyError:
        raise DomainError(
            f"unknown direction style {style!r}; valid: "
            + ", ".join(sorted(_DIRECTION_STYLES))) from None
    return generator(n)


def _grid_axis(lo: float, hi: float, spacing: float) -> np.ndarray:
    count = int(math.floor((hi - lo) / spacing + 1e-9)) + 1
    return lo + spacing * np.arange(count)


@dataclass(frozen=True)
class BoxStats:
    """Five-number summary with 1.5*IQR whiskers capped to the data."""

    mean: float
    q1: float
    median: float
    q3: float
    whisker_lo: float
    whisker_hi: float
    minimum: float
    maximum: float
    n: int


def summary_stats(samples: np.ndarray) -> BoxStats:
    samples = np.asarray(samples, dtype=float)
    if samples.size == 0:
        raise DomainError("summary_stats: empty sample set")
    q1, med, q3 = np.percentile(samples, [25.0, 50.0, 75.0])
    iqr = q3 - q1
    lo_cut, hi_cut = q1 - 1.5 * iqr, q3 + 1.5 * iqr
    inside = samples[(samples >= lo_cut) & (samples <= hi_cut)]
    return BoxStats(
        mean=float(np.mean(samples)),
        q1=float(q1), median=float(med), q3=float(q3),
        whisker_lo=float(np.min(inside)),
        whisker_hi=float(np.max(inside)),
        minimum=float(np.min(samples)),
        maximum=float(np.max(samples)),
        n=int(samples.size),
    )


@dataclass(eq=False)
class SweepResult:
    config: SweepConfig
    iso_mass: float
    samples: dict[tuple[str, ContactMode, MassSource], np.ndarray]
    reflected_masses: np.ndarray      # (n_reachable, n_directions)
    n_grid: int
    n_reachable: int
    n_unreachable: int
    n_singular: int
    n_constrained_directions: int
    star_out_of_range: tuple[tuple[str, ContactMode], ...]

    def stats(self, region: str, mode: ContactMode,
              source: MassSource) -> BoxStats:
        return summary_stats(self.samples[(region, mode, source)])


# ---------------------------------------------------------------- workers

def _sweep_scanline(payload: tuple) -> list[tuple[bool, bool, int, np.ndarray | None]]:
    """Evaluate one scanline (fixed y, z; x ascending) of grid points."""
    model, targets, seed, directions = payload
    out = []
    q_seed = seed
    for target in targets:
        ik = inverse_kinematics(model, target, q_seed, orientation=FLANGE_DOWN)
        if not ik.success:
            out.append((False, False, 0, None))
            continue
        q_seed = ik.q  # warm start for the next point on this line
        singular = manipulability(model, ik.q) < SINGULAR_FLAG_THRESHOLD
        masses = np.empty(len(directions))
        constrained = 0
        for d_idx, u in enumerate(directions):
            try:
                masses[d_idx] = reflected_mass(
                    model, ReflectedMassQuery(q=ik.q, u=u))
            except ConstrainedDirectionError:
                masses[d_idx] = math.inf
                constrained += 1
        out.append((True, singular, constrained, masses))
    return out


def _default_seed(model: ManipulatorModel) -> np.ndarray:
    lower, upper = model.lower_limits, model.upper_limits
    seed = np.where(np.isfinite(lower) & np.isfinite(upper),
                    0.5 * (lower + upper), 0.0)
    return seed


def run_sweep(model: ManipulatorModel, table: BodyRegionTable,
              config: SweepConfig = SweepConfig()) -> SweepResult:
    """Sweep the box and build speed-limit distributions per region/mode."""
    xs = _grid_axis(config.box_min[0], config.box_max[0], config.grid_spacing)
    ys = _grid_axis(config.box_min[1], config.box_max[1], config.grid_spacing)
    zs = _grid_axis(config.box_min[2], config.box_max[2], config.grid_spacing)
    directions = direction_set(config.n_directions, config.direction_style)
    seed = _default_seed(model)

    free_modes = {ContactMode.TRANSIENT, ContactMode.QUASI_STATIC_FREE}
    for params in table:
        if params.clamped_only and any(m in free_modes for m, _ in config.modes):
            raise SweepError(
                f"{params.label}: infinite effective mass cannot be swept in "
                f"free-impact modes; restrict modes to quasi-static clamped")

    # one scanline per (z, y): deterministic order, warm start along x
    payloads = []
    for z in zs:
        for y in ys:
            targets = np.column_stack([xs, np.full_like(xs, y), np.full_like(xs, z)])
            payloads.append((model, targets, seed, directions))

    if config.n_workers > 1:
        with ProcessPoolExecutor(max_workers=config.n_workers) as pool:
            scanlines = list(pool.map(_sweep_scanline, payloads, chunksize=4))
    else:
        scanlines = [_sweep_scanline(p) for p in payloads]

    mass_rows: list[np.ndarray] = []
    n_singular = 0
    n_constrained = 0
    for scanline in scanlines:
        for reachable, singular, constrained, masses in scanline:
            if not reachable:
                continue
            n_singular += int(singular)
            n_constrained += constrained
            mass_rows.append(masses)

    n_grid = len(xs) * len(ys) * len(zs)
    if not mass_rows:
        raise SweepError("no reachable grid points in the configured box")
    reflected = np.vstack(mass_rows)
    flat_masses = reflected.reshape(-1)
    iso_mass = iso_effective_mass(model, config.payload)

    samples: dict[tuple[str, ContactMode, MassSource], np.ndarray] = {}
    for params in table:
        for mode, source in config.modes:
            masses = flat_masses if source is MassSource.REFLECTED \
                else np.array([iso_mass])
            samples[(params.region_id, mode, source)] = _speed_limits(
                params, mode, masses, config.contact_area)

    stars_out = []
    for params in table:
        for mode in {m for m, _ in config.modes}:
            key_dir = (params.region_id, mode, MassSource.REFLECTED)
            key_const = (params.region_id, mode, MassSource.CONSTANT)
            if key_dir in samples and key_const in samples:
                dir_samples = samples[key_dir]
                const = samples[key_const][0]
                if not (np.min(dir_samples) <= const <= np.max(dir_samples)):
                    stars_out.append((params.region_id, mode))

    return SweepResult(
        config=config,
        iso_mass=iso_mass,
        samples=samples,
        reflected_masses=reflected,
        n_grid=n_grid,
        n_reachable=len(mass_rows),
        n_unreachable=n_grid - len(mass_rows),
        n_singular=n_singular,
        n_constrained_directions=n_constrained,
        star_out_of_range=tuple(sorted(stars_out,
                                       key=lambda t: (t[0], t[1].value))),
    )


def _speed_limits(params: BodyRegionParams, mode: ContactMode,
                  masses: np.ndarray, contact_area: float) -> np.ndarray:
    """Vectorised speed limit for one region/mode over robot masses."""
    f_eff = effective_force_limit(params, mode, contact_area)
    u_s_max = f_eff * f_eff / (2.0 * params.stiffness)
    with np.errstate(divide="ignore"):
        inv_m = 1.0 / masses
    if mode is ContactMode.QUASI_STATIC_CLAMPED:
        return np.sqrt(2.0 * u_s_max * inv_m)
    return np.sqrt(2.0 * u_s_max * (inv_m + 1.0 / params.m_h))


# ---------------------------------------------------------------- reports

@dataclass(frozen=True)
class ScalingRow:
    region_id: str
    baseline_mean: float                                 # m/s
    scaling_pct: Mapping[tuple[ContactMode, MassSource], float]
    worst_case_pct: Mapping[tuple[ContactMode, MassSource], float]


@dataclass(frozen=True)
class ScalingReport:
    baseline: tuple[ContactMode, MassSource]
    rows: tuple[ScalingRow, ...]


def scaling_report(result: SweepResult,
                   baseline: tuple[ContactMode, MassSource] = BASELINE_COMBO,
                   ) -> ScalingReport:
    """Percentage speed scalings of each conservative variant vs baseline.

    Per region: 100 * mean(variant) / mean(baseline).  The worst-case
    columns substitute the face region's limit (the most restrictive body
    region) for every region before dividing, answering "what fraction of
    the nominal speed survives if any body part might be hit".
    """
    mode_b, source_b = baseline
    rows = []
    face_means = _combo_means(result, "face")
    for rid in REGION_IDS:
        key = (rid, mode_b, source_b)
        if key not in result.samples:
            raise ReportError(
                f"missing baseline combination {mode_b.value}/{source_b.value} "
                f"for region {REGION_LABELS[rid]}")
        base_mean = float(np.mean(result.samples[key]))
        scaling: dict[tuple[ContactMode, MassSource], float] = {}
        worst: dict[tuple[ContactMode, MassSource], float] = {}
        for mode, source in result.config.modes:
            if (mode, source) == baseline:
                continue
            combo_mean = float(np.mean(result.samples[(rid, mode, source)]))
            pct = 100.0 * combo_mean / base_mean
            if not 0.0 < pct <= 100.0 + 1e-9:
                raise ReportError(
                    f"{REGION_LABELS[rid]} {mode.value}/{source.value}: "
                    f"scaling {pct:.2f}% outside (0, 100]; variant is not "
                    f"conservative w.r.t. the baseline")
            scaling[(mode, source)] = pct
            worst[(mode, source)] = 100.0 * face_means[(mode, source)] / base_mean
        rows.append(ScalingRow(region_id=rid, baseline_mean=base_mean,
                               scaling_pct=scaling, worst_case_pct=worst))
    return ScalingReport(baseline=baseline, rows=tuple(rows))


def _combo_means(result: SweepResult, rid: str) -> dict:
    out = {}
    for mode, source in result.config.modes:
        out[(mode, source)] = float(np.mean(result.samples[(rid, mode, source)]))
    return out


# ---------------------------------------------------------------- writers

def write_sweep_csv(result: SweepResult, path: str | Path) -> None:
    """Long-format sample dump: region,mode,mass_source,sample."""
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write("region,mode,mass_source,sample\n")
        for rid in REGION_IDS:
            for mode, source in result.config.modes:
                key = (rid, mode, source)
                if key not in result.samples:
                    continue
                for value in result.samples[key]:
                    fh.write(f"{rid},{mode.value},{source.value},"
                             f"{float(value)!r}\n")


def write_scaling_csv(report: ScalingReport, path: str | Path) -> None:
    combos = sorted({combo for row in report.rows for combo in row.scaling_pct},
                    key=lambda c: (c[0].value, c[1].value))
    header = ["region", "baseline_mean_mps"]
    header += [f"pct_{m.value}_{s.value}" for m, s in combos]
    header += [f"worst_pct_{m.value}_{s.value}" for m, s in combos]
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(",".join(header) + "\n")
        for row in report.rows:
            cells = [row.region_id, repr(row.baseline_mean)]
            cells += [f"{row.scaling_pct[c]:.6f}" for c in combos]
            cells += [f"{row.worst_case_pct[c]:.6f}" for c in combos]
            fh.write(",".join(cells) + "\n")


def boxstats_payload(result: SweepResult) -> dict:
    """JSON-ready box statistics per region and mode/mass-source combo."""
    payload: dict = {
        "counts": {
            "grid_points": result.n_grid,
            "reachable": result.n_reachable,
            "unreachable": result.n_unreachable,
            "near_singular": result.n_singular,
            "constrained_directions": result.n_constrained_directions,
        },
        "constant_effective_mass_kg": result.iso_mass,
        "regions": {},
    }
    for rid in REGION_IDS:
        entry: dict = {}
        for mode, source in result.config.modes:
            key = (rid, mode, source)
            if key not in result.samples:
                continue
            name = f"{mode.value}|{source.value}"
            if source is MassSource.CONSTANT:
                entry[name] = {"value": float(result.samples[key][0])}
            else:
                st = result.stats(rid, mode, source)
                entry[name] = {
                    "mean": st.mean, "q1": st.q1, "median": st.median,
                    "q3": st.q3, "whisker_lo": st.whisker_lo,
                    "whisker_hi": st.whisker_hi, "min": st.minimum,
                    "max": st.maximum, "n": st.n,
                }
        payload["regions"][rid] = entry
    return payload


def write_boxstats_json(result: SweepResult, path: str | Path) -> None:
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        json.dump(boxstats_payload(result), fh, indent=2, sort_keys=True)
        fh.write("\n")


def render_sweep_svg(result: SweepResult) -> str:
    """Grouped box plot of speed-limit distributions (stars = constant mass)."""
    from .svgplot import BoxStats as SvgBoxStats, grouped_boxplot

    mode_labels = {
        ContactMode.TRANSIENT: "transient",
        ContactMode.QUASI_STATIC_FREE: "quasi-static (free)",
        ContactMode.QUASI_STATIC_CLAMPED: "quasi-static (clamped)",
    }
    modes_present = [m for m in mode_labels
                     if any(mode == m for mode, _ in result.config.modes)]
    groups = [REGION_LABELS[rid] for rid in REGION_IDS]
    boxes: dict[str, list] = {}
    stars: dict[str, list] = {}
    for mode in modes_present:
        box_row: list = []
        star_row: list = []
        for rid in REGION_IDS:
            key = (rid, mode, MassSource.REFLECTED)
            if key in result.samples:
                st = result.stats(rid, mode, MassSource.REFLECTED)
                box_row.append(SvgBoxStats(
                    mean=st.mean, q1=st.q1, median=st.median, q3=st.q3,
                    whisker_lo=st.whisker_lo, whisker_hi=st.whisker_hi,
                    minimum=st.minimum, maximum=st.maximum, n=st.n))
            else:
                box_row.append(None)
            key_c = (rid, mode, MassSource.CONSTANT)
            star_row.append(float(result.samples[key_c][0])
                            if key_c in result.samples else None)
        label = mode_labels[mode]
        if any(b is not None for b in box_row):
            boxes[label] = box_row
        if any(s is not None for s in star_row):
            stars[label] = star_row
    return grouped_boxplot(
        groups, boxes, stars,
        title="Admissible speed per body region "
              "(boxes: directional reflected mass, stars: constant mass)",
        ylabel="admissible speed [m/s]")
