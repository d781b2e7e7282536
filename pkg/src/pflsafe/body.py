"""Body-region biomechanical limit data.

Per-region onset-of-pain thresholds in the style of ISO/TS 15066 Annex A:
a maximum permissible contact force, a maximum permissible pressure, an
effective spring constant for the contacted tissue, and an effective mass
of the contacted body part.  All thresholds are quasi-static values; the
transient (dynamic, short-duration) thresholds are obtained by a per-region
multiplier, which is 1 for the two head regions and 2 everywhere else.

Units are normalised at load time:

  f_max_qs   N
  p_max_qs   N/cm^2
  stiffness  N/m        (ingested as N/mm, the unit used by the standard)
  m_h        kg         (``inf`` marks a body part that cannot recoil)

The force and pressure criteria are reconciled by ``effective_force_limit``:
for a contact area A (cm^2) the admissible force is min(f_max, A * p_max),
so the pressure criterion governs small-area contacts and the blanket force
limit governs large ones.  The tabulated force values assume A = 1 cm^2.
"""
from __future__ import annotations

import csv
import enum
import io
import math
from dataclasses import dataclass
from pathlib import Path
from typing import IO, Iterable, Mapping, Union

from .errors import DomainError, SchemaError, ValidationError

# Table rows in report order.  Keys are normalised region ids; values the
# human-readable labels used in CSV files and error messages.
REGION_LABELS: Mapping[str, str] = {
    "skull_forehead": "Skull/Forehead",
    "face": "Face",
    "neck": "Neck",
    "back_shoulders": "Back/Shoulders",
    "chest": "Chest",
    "abdomen": "Abdomen",
    "pelvis": "Pelvis",
    "upper_arms_elbows": "Upper arms/elbows",
    "lower_arms_wrists": "Lower arms/wrists",
    "hands_fingers": "Hands/fingers",
    "thighs_knees": "Thighs/knees",
    "lower_legs": "Lower legs",
}
REGION_IDS: tuple[str, ...] = tuple(REGION_LABELS)

# Regions whose transient thresholds carry no elevation over quasi-static.
HEAD_REGIONS = frozenset({"skull_forehead", "face"})

_CSV_HEADER = ["region", "f_max_qs_N", "p_max_qs_N_per_cm2",
               "k_N_per_mm", "m_h_kg", "transient_mult"]


class ContactMode(enum.Enum):
    """Contact situation a speed limit is derived for.

    TRANSIENT             free impact, short-duration (dynamic) thresholds
    QUASI_STATIC_FREE     free impact held to quasi-static thresholds
    QUASI_STATIC_CLAMPED  body part pinned against a rigid surface
    """

    TRANSIENT = "transient"
    QUASI_STATIC_FREE = "quasi_static_free"
    QUASI_STATIC_CLAMPED = "quasi_static_clamped"


def normalize_region(name: str) -> str:
    """Map a region label or id to its canonical id (lossy, lowercase)."""
    out = name.strip().lower()
    for ch in "/ -&":
        out = out.replace(ch, "_")
    while "__" in out:
        out = out.replace("__", "_")
    return out.strip("_")


@dataclass(frozen=True)
class BodyRegionParams:
    """Thresholds and contact model parameters for one body region."""

    region_id: str
    f_max_qs: float        # N
    p_max_qs: float        # N/cm^2
    stiffness: float       # N/m
    m_h: float             # kg; math.inf for parts that cannot recoil
    transient_multiplier: float

    def __post_init__(self) -> None:
        if self.region_id not in REGION_LABELS:
            raise ValidationError(
                f"unknown region id {self.region_id!r}; expected one of "
                + ", ".join(REGION_IDS))
        for field in ("f_max_qs", "p_max_qs", "stiffness"):
            value = getattr(self, field)
            if not (math.isfinite(value) and value > 0):
                raise ValidationError(
                    f"{self.label}: {field} must be finite and > 0, got {value!r}")
        if not (self.m_h > 0):  # inf allowed, nan rejected
            raise ValidationError(
                f"{self.label}: m_h must be > 0 (or inf), got {self.m_h!r}")
        if not (math.isfinite(self.transient_multiplier)
                and self.transient_multiplier >= 1.0):
            raise ValidationError(
                f"{self.label}: transient_mult must be >= 1, "
                f"got {self.transient_multiplier!r}")

    @property
    def label(self) -> str:
        return REGION_LABELS[self.region_id]

    @property
    def clamped_only(self) -> bool:
        """True when the body part cannot recoil (infinite effective mass)."""
        return math.isinf(self.m_h)


@dataclass(frozen=True)
class BodyRegionTable:
    """Immutable mapping of all twelve canonical body regions."""

    entries: Mapping[str, BodyRegionParams]
    source_label: str

    def __post_init__(self) -> None:
        missing = [rid for rid in REGION_IDS if rid not in self.entries]
        if missing:
            raise SchemaError(
                "missing region: " + ", ".join(REGION_LABELS[m] for m in missing))
        extra = [rid for rid in self.entries if rid not in REGION_LABELS]
        if extra:
            raise SchemaError("unknown region: " + ", ".join(extra))
        # The two head regions take no transient elevation; every other
        # region of the reference table doubles its quasi-static threshold.
        for rid, params in self.entries.items():
            expected = 1.0 if rid in HEAD_REGIONS else 2.0
            if params.transient_multiplier != expected:
                raise ValidationError(
                    f"{params.label}: transient_mult must be {expected:g} "
                    f"for this region, got {params.transient_multiplier:g}")

    def __getitem__(self, region: str) -> BodyRegionParams:
        rid = normalize_region(region)
        try:
            return self.entries[rid]
        except KeyError:
            raise KeyError(
                f"unknown region {region!r}; valid regions: "
                + ", ".join(REGION_IDS)) from None

    def __iter__(self) -> Iterable[BodyRegionParams]:
        return (self.entries[rid] for rid in REGION_IDS)

    def regions(self) -> tuple[str, ...]:
        return REGION_IDS


TableSource = Union[str, Path, bytes, IO[str], IO[bytes]]


def _as_text(source: TableSource) -> tuple[str, str]:
    """Return (text, label) for a path, byte string or open stream."""
    if isinstance(source, (str, Path)):
        path = Path(source)
        return path.read_text(encoding="utf-8"), path.name
    if isinstance(source, bytes):
        return source.decode("utf-8"), "<bytes>"
    data = source.read()
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    label = getattr(source, "name", "<stream>")
    return data, str(label)


def _parse_float(raw: str, row: int, column: str, region: str,
                 allow_inf: bool = False) -> float:
    text = raw.strip().lower()
    if allow_inf and text in ("inf", "infinity"):
        return math.inf
    try:
        value = float(text)
    except ValueError:
        raise SchemaError(
            f"row {row} ({region}): column {column!r} is not a number: {raw!r}"
        ) from None
    if not math.isfinite(value):
        raise SchemaError(
            f"row {row} ({region}): column {column!r} must be finite: {raw!r}")
    return value


def load_body_table(source: TableSource) -> BodyRegionTable:
    """Parse and validate a body-region limit table.

    The format is CSV with the exact header
    ``region,f_max_qs_N,p_max_qs_N_per_cm2,k_N_per_mm,m_h_kg,transient_mult``.
    Lines starting with ``#`` are comments; a comment of the form
    ``# source: <text>`` becomes the table's provenance label.  Stiffness is
    converted from N/mm to N/m here; ``m_h_kg`` accepts ``inf``.
    """
    text, default_label = _as_text(source)
    source_label = default_label
    rows: list[tuple[int, list[str]]] = []
    for lineno, line in enumerate(text.splitlines(), start=1):
        stripped = line.strip()
        if not stripped:
            continue
        if stripped.startswith("#"):
            comment = stripped.lstrip("#").strip()
            if comment.lower().startswith("source:"):
                source_label = comment[len("source:"):].strip()
            continue
        rows.append((lineno, next(csv.reader(io.StringIO(line)))))

    if not rows:
        raise SchemaError("empty table: no header row found")
    header_line, header = rows[0]
    if [h.strip() for h in header] != _CSV_HEADER:
        raise SchemaError(
            f"line {header_line}: bad header {header!r}; expected "
            + ",".join(_CSV_HEADER))

    entries: dict[str, BodyRegionParams] = {}
    for lineno, cells in rows[1:]:
        if len(cells) != len(_CSV_HEADER):
            raise SchemaError(
                f"row {lineno}: expected {len(_CSV_HEADER)} columns, "
                f"got {len(cells)}")
        raw_region = cells[0]
        rid = normalize_region(raw_region)
        if rid not in REGION_LABELS:
            raise SchemaError(
                f"row {lineno}: unknown region {raw_region!r}; valid regions: "
                + ", ".join(REGION_LABELS.values()))
        if rid in entries:
            raise SchemaError(
                f"row {lineno}: duplicate region: {REGION_LABELS[rid]}")
        f_max = _parse_float(cells[1], lineno, "f_max_qs_N", raw_region)
        p_max = _parse_float(cells[2], lineno, "p_max_qs_N_per_cm2", raw_region)
        k_n_mm = _parse_float(cells[3], lineno, "k_N_per_mm", raw_region)
        m_h = _parse_float(cells[4], lineno, "m_h_kg", raw_region, allow_inf=True)
        mult = _parse_float(cells[5], lineno, "transient_mult", raw_region)
        try:
            entries[rid] = BodyRegionParams(
                region_id=rid,
                f_max_qs=f_max,
                p_max_qs=p_max,
                stiffness=k_n_mm * 1000.0,  # N/mm -> N/m
                m_h=m_h,
                transient_multiplier=mult,
            )
        except ValidationError as exc:
            raise ValidationError(f"row {lineno}: {exc}") from None

    return BodyRegionTable(entries=entries, source_label=source_label)


def binding_criterion(params: BodyRegionParams, contact_area: float = 1.0) -> str:
    """Which threshold governs at the given contact area: force or pressure.

    Ties resolve to "force": at the nominal 1 cm^2 area the tabulated force
    limit is the operative number.
    """
    if not (math.isfinite(contact_area) and contact_area > 0):
        raise DomainError(f"contact_area must be > 0, got {contact_area!r}")
    return "pressure" if contact_area * params.p_max_qs < params.f_max_qs else "force"


def effective_force_limit(params: BodyRegionParams, mode: ContactMode,
                          contact_area: float = 1.0) -> float:
    """Admissible contact force [N] for a region, mode and contact area [cm^2].

    Both criteria are enforced: the result is min(f_max, A * p_max), scaled
    by the region's transient multiplier when mode is TRANSIENT.  Clamped
    contacts always use quasi-static thresholds (a pinned body part keeps
    loading after the impact, so the short-duration elevation never applies).
    """
    if not (math.isfinite(contact_area) and contact_area > 0):
        raise DomainError(f"contact_area must be > 0, got {contact_area!r}")
    limit = min(params.f_max_qs, contact_area * params.p_max_qs)
    if mode is ContactMode.TRANSIENT:
        limit *= params.transient_multiplier
    return limit


def max_elastic_energy(params: BodyRegionParams, mode: ContactMode,
                       contact_area: float = 1.0) -> float:
    """Maximum elastic energy [J] the contact spring may store: F^2 / (2k)."""
    f_eff = effective_force_limit(params, mode, contact_area)
    return f_eff * f_eff / (2.0 * params.stiffness)
