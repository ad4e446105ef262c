"""Steiner measurement battery: definitions, batch computation, grading, classification."""

from __future__ import annotations

from dataclasses import dataclass, field

from .geometry import (
    LandmarkSet,
    angle_at_vertex,
    directed_line_angle,
    signed_point_line_distance,
    to_physical,
)

UNIT_DEG = "deg"
UNIT_MM = "mm"

# Formula kinds
VERTEX_ANGLE = "vertex-angle"
DIRECTED_LINE_ANGLE = "directed-line-angle"
SIGNED_DISTANCE = "signed-distance"
DERIVED_DIFFERENCE = "derived-difference"

CLASS_I = "CLASS_I"
CLASS_II = "CLASS_II"
CLASS_III = "CLASS_III"
LOW_ANGLE = "LOW_ANGLE"
AVERAGE = "AVERAGE"
HIGH_ANGLE = "HIGH_ANGLE"

GRADE_LOW = "LOW"
GRADE_NORMAL = "NORMAL"
GRADE_HIGH = "HIGH"


class MissingLandmarks(ValueError):
    """A measurement's required landmarks are absent from the set."""

    def __init__(self, landmarks: list[str]):
        self.landmarks = list(landmarks)
        super().__init__(f"missing landmarks: {', '.join(self.landmarks)}")


class MissingCalibration(ValueError):
    """A millimetre measurement was requested without a calibration."""


@dataclass(frozen=True)
class MeasurementDefinition:
    """Static recipe for one measurement.

    ``operands`` is formula-specific: (vertex, p1, p2) for vertex angles,
    (a1, a2, b1, b2) tail->head for directed line angles, (point, a, b) for
    signed distances, and a pair of measurement ids for derived differences.
    """

    id: str
    unit: str
    kind: str
    operands: tuple[str, ...]
    display_en: str
    display_zh: str

    @property
    def required_landmarks(self) -> tuple[str, ...]:
        if self.kind == DERIVED_DIFFERENCE:
            req: list[str] = []
            for mid in self.operands:
                for name in MEASUREMENTS[mid].required_landmarks:
                    if name not in req:
                        req.append(name)
            return tuple(req)
        seen: list[str] = []
        for name in self.operands:
            if name not in seen:
                seen.append(name)
        return tuple(seen)


def _defs(*items: MeasurementDefinition) -> dict[str, MeasurementDefinition]:
    return {d.id: d for d in items}


# Declaration order fixes compute_all output order.
MEASUREMENTS: dict[str, MeasurementDefinition] = _defs(
    MeasurementDefinition("SNA", UNIT_DEG, VERTEX_ANGLE, ("N", "S", "A"), "SNA angle", "SNA 角"),
    MeasurementDefinition("SNB", UNIT_DEG, VERTEX_ANGLE, ("N", "S", "B"), "SNB angle", "SNB 角"),
    MeasurementDefinition("ANB", UNIT_DEG, DERIVED_DIFFERENCE, ("SNA", "SNB"), "ANB angle", "ANB 角"),
    MeasurementDefinition("SND", UNIT_DEG, VERTEX_ANGLE, ("N", "S", "D"), "SND angle", "SND 角"),
    MeasurementDefinition("YAXIS", UNIT_DEG, DIRECTED_LINE_ANGLE, ("S", "Gn", "Po", "Or"), "Y-axis angle", "Y 轴角"),
    MeasurementDefinition("MPFH", UNIT_DEG, DIRECTED_LINE_ANGLE, ("Go", "Me", "Po", "Or"), "MP-FH angle", "MP-FH 角"),
    MeasurementDefinition("FACIAL", UNIT_DEG, DIRECTED_LINE_ANGLE, ("N", "Pog", "Or", "Po"), "facial angle", "面 角"),
    MeasurementDefinition("U1NA_DEG", UNIT_DEG, DIRECTED_LINE_ANGLE, ("U1A", "U1E", "N", "A"), "U1-NA angle", "U1-NA 角"),
    MeasurementDefinition("U1NA_MM", UNIT_MM, SIGNED_DISTANCE, ("U1E", "N", "A"), "U1-NA distance", "U1-NA 距离"),
    MeasurementDefinition("L1NB_DEG", UNIT_DEG, DIRECTED_LINE_ANGLE, ("L1A", "L1E", "N", "B"), "L1-NB angle", "L1-NB 角"),
    MeasurementDefinition("L1NB_MM", UNIT_MM, SIGNED_DISTANCE, ("L1E", "N", "B"), "L1-NB distance", "L1-NB 距离"),
    MeasurementDefinition("POGNB_MM", UNIT_MM, SIGNED_DISTANCE, ("Pog", "N", "B"), "Po-NB distance", "Po-NB 距离"),
    MeasurementDefinition("INTERINCISAL", UNIT_DEG, DIRECTED_LINE_ANGLE, ("U1E", "U1A", "L1E", "L1A"), "interincisal angle", "上下切牙角"),
    MeasurementDefinition("GOGN_SN", UNIT_DEG, DIRECTED_LINE_ANGLE, ("S", "N", "Go", "Gn"), "GoGn-SN angle", "GoGn-SN 角"),
    MeasurementDefinition("OCC_SN", UNIT_DEG, DIRECTED_LINE_ANGLE, ("S", "N", "OcP", "OcA"), "occlusal-SN angle", "咬合平面-SN 角"),
)

MEASUREMENT_IDS: tuple[str, ...] = tuple(MEASUREMENTS)

# The nine-value battery echoed in prompt reference suffixes, in suffix order.
TABLE_BATTERY: tuple[str, ...] = (
    "SNA", "SNB", "ANB", "YAXIS", "MPFH", "FACIAL", "U1NA_MM", "L1NB_MM", "POGNB_MM",
)


@dataclass(frozen=True)
class MeasurementResult:
    id: str
    value: float
    unit: str
    inputs_used: tuple[str, ...]


@dataclass(frozen=True)
class SkippedMeasurement:
    id: str
    code: str       # MISSING_LANDMARKS | MISSING_CALIBRATION | DEGENERATE
    detail: str


@dataclass(frozen=True)
class NormEntry:
    mean: float
    sd: float

    def __post_init__(self) -> None:
        if not self.sd > 0:
            raise ValueError(f"sd must be positive, got {self.sd!r}")


@dataclass(frozen=True)
class NormTable:
    entries: dict[str, NormEntry] = field(default_factory=dict)
    provenance: str = ""

    def __post_init__(self) -> None:
        for mid in self.entries:
            if mid not in MEASUREMENTS:
                raise ValueError(f"unknown measurement id {mid!r} in norm table")


@dataclass(frozen=True)
class Deviation:
    id: str
    z: float
    grade: str


@dataclass(frozen=True)
class ClassificationThresholds:
    anb_lo: float = 0.0
    anb_hi: float = 4.0
    mpfh_lo: float = 22.0
    mpfh_hi: float = 32.0


@dataclass(frozen=True)
class SkeletalClassification:
    sagittal: str | None
    vertical: str | None
    thresholds: ClassificationThresholds


def compute(s: LandmarkSet, measurement_id: str) -> MeasurementResult:
    """One battery value from a normalized (facing-right) landmark set."""
    try:
        definition = MEASUREMENTS[measurement_id]
    except KeyError:
        raise KeyError(f"unknown measurement id {measurement_id!r}") from None

    missing = s.missing(definition.required_landmarks)
    if missing:
        raise MissingLandmarks(missing)

    if definition.kind == VERTEX_ANGLE:
        v, p1, p2 = (s.points[n] for n in definition.operands)
        value = angle_at_vertex(v, p1, p2)
    elif definition.kind == DIRECTED_LINE_ANGLE:
        a1, a2, b1, b2 = (s.points[n] for n in definition.operands)
        value = directed_line_angle(a1, a2, b1, b2)
    elif definition.kind == SIGNED_DISTANCE:
        if s.calibration is None:
            raise MissingCalibration(f"{measurement_id} needs a calibration (mm)")
        p, a, b = (s.points[n] for n in definition.operands)
        value = to_physical(signed_point_line_distance(p, a, b), s.calibration)
    elif definition.kind == DERIVED_DIFFERENCE:
        first, second = (compute(s, mid).value for mid in definition.operands)
        value = first - second
    else:  # pragma: no cover - definitions are static
        raise AssertionError(f"unhandled formula kind {definition.kind}")

    return MeasurementResult(
        id=measurement_id,
        value=value,
        unit=definition.unit,
        inputs_used=definition.required_landmarks,
    )


def compute_all(
    s: LandmarkSet, ids: tuple[str, ...] | list[str] | None = None
) -> tuple[list[MeasurementResult], list[SkippedMeasurement]]:
    """Compute a batch of measurements; per-measurement failures go to ``skipped``.

    Results come back in declaration order regardless of the order of ``ids``.
    """
    wanted = MEASUREMENT_IDS if ids is None else tuple(ids)
    results: list[MeasurementResult] = []
    skipped: list[SkippedMeasurement] = []
    for mid in MEASUREMENT_IDS:
        if mid not in wanted:
            continue
        try:
            results.append(compute(s, mid))
        except MissingLandmarks as exc:
            skipped.append(SkippedMeasurement(mid, "MISSING_LANDMARKS", ", ".join(exc.landmarks)))
        except MissingCalibration as exc:
            skipped.append(SkippedMeasurement(mid, "MISSING_CALIBRATION", str(exc)))
        except Exception as exc:  # DegenerateGeometry and kin
            skipped.append(SkippedMeasurement(mid, type(exc).__name__, str(exc)))
    return results, skipped


def grade(results: list[MeasurementResult], norms: NormTable) -> list[Deviation]:
    """One deviation per result that has a norm entry; |z| <= 2 counts as normal."""
    deviations: list[Deviation] = []
    for result in results:
        entry = norms.entries.get(result.id)
        if entry is None:
            continue
        z = (result.value - entry.mean) / entry.sd
        if z < -2.0:
            g = GRADE_LOW
        elif z > 2.0:
            g = GRADE_HIGH
        else:
            g = GRADE_NORMAL
        deviations.append(Deviation(id=result.id, z=z, grade=g))
    return deviations


def classify(
    results: list[MeasurementResult],
    thresholds: ClassificationThresholds | None = None,
) -> SkeletalClassification:
    """Sagittal class from ANB, vertical pattern from MP-FH; missing inputs leave an axis unset."""
    t = thresholds or ClassificationThresholds()
    by_id = {r.id: r.value for r in results}

    sagittal = None
    anb = by_id.get("ANB")
    if anb is not None:
        if anb > t.anb_hi:
            sagittal = CLASS_II
        elif anb < t.anb_lo:
            sagittal = CLASS_III
        else:
            sagittal = CLASS_I

    vertical = None
    mpfh = by_id.get("MPFH")
    if mpfh is not None:
        if mpfh > t.mpfh_hi:
            vertical = HIGH_ANGLE
        elif mpfh < t.mpfh_lo:
            vertical = LOW_ANGLE
        else:
            vertical = AVERAGE

    return SkeletalClassification(sagittal=sagittal, vertical=vertical, thresholds=t)
