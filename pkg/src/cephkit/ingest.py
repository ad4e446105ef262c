"""Landmark file parsing/serialization, configuration loading, and batch processing.

Native interchange format (JSON):

    {"case_id": str?, "image": str?, "image_size_px": [w, h]?,
     "calibration_mm_per_px": number, "orientation": "left"|"right"|"unknown"?,
     "landmarks": {"S": [x, y], "N": [x, y], ...}}

Also supported: the 19-entry ordered text profile ``isbi19`` (one ``x,y``
pair per line) and a ``landmark,x,y`` CSV variant.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from functools import lru_cache
from importlib import resources
from pathlib import Path

from .analysis import CaseAnalysis, analyze_case
from .geometry import (
    FACING_LEFT,
    FACING_RIGHT,
    FACING_UNKNOWN,
    Calibration,
    DegenerateGeometry,
    KNOWN_LANDMARKS,
    LandmarkSet,
    OrientationUndetermined,
    Point2,
)
from .report import FORMAT_MARKDOWN, LANGUAGES, render_report
from .steiner import (
    MEASUREMENTS,
    ClassificationThresholds,
    MissingCalibration,
    NormEntry,
    NormTable,
)

# Quarantine / rejection reason codes.
REASON_MISSING_LANDMARK = "MISSING_LANDMARK"
REASON_OUT_OF_BOUNDS = "OUT_OF_BOUNDS"
REASON_PARSE_ERROR = "PARSE_ERROR"
REASON_DEGENERATE = "DEGENERATE"
REASON_DUPLICATE_ID = "DUPLICATE_ID"
REASON_NONPOSITIVE_SD = "NONPOSITIVE_SD"

_ORIENTATIONS = {"left": FACING_LEFT, "right": FACING_RIGHT, "unknown": FACING_UNKNOWN}

# Ordered text profiles. Soft-tissue entries are parsed and retained but the
# measurement engine never consumes them. Default scale 0.1 mm/px.
ORDER_PROFILES: dict[str, tuple[str, ...]] = {
    "isbi19": (
        "S", "N", "Or", "Po", "A", "B", "Pog", "Me", "Gn", "Go",
        "L1E", "U1E", "UL", "LL", "Sn", "SPog", "PNS", "ANS", "Ar",
    ),
}
PROFILE_DEFAULT_CALIBRATION = {"isbi19": 0.1}


class IngestError(ValueError):
    """Rejected input; ``code`` is one of the quarantine reason codes."""

    def __init__(self, code: str, message: str):
        self.code = code
        super().__init__(message)


@dataclass(frozen=True)
class CaseFile:
    """One parsed case: geometry plus file-level metadata (pixels are never read)."""

    landmark_set: LandmarkSet
    case_id: str
    source: str | None = None
    image: str | None = None
    image_size_px: tuple[float, float] | None = None


@dataclass(frozen=True)
class QuarantineRecord:
    path: str
    reason: str
    detail: str


@dataclass(frozen=True)
class BatchSummary:
    inputs: int
    analyzed: int
    quarantined: list[QuarantineRecord] = field(default_factory=list)


def _require_number(value, what: str) -> float:
    if isinstance(value, bool) or not isinstance(value, (int, float)):
        raise IngestError(REASON_PARSE_ERROR, f"{what} must be a number, got {value!r}")
    v = float(value)
    if v != v or v in (float("inf"), float("-inf")):
        raise IngestError(REASON_PARSE_ERROR, f"{what} must be finite")
    return v


def _case_id_for(doc_id, path: str | Path | None) -> str:
    if doc_id is not None:
        if not isinstance(doc_id, str) or not doc_id:
            raise IngestError(REASON_PARSE_ERROR, "case_id must be a non-empty string")
        return doc_id
    if path is not None:
        return Path(path).stem
    return "case"


def _detect_duplicate_keys(pairs):
    seen = set()
    out = {}
    for key, value in pairs:
        if key in seen:
            raise IngestError(REASON_DUPLICATE_ID, f"duplicate key {key!r}")
        seen.add(key)
        out[key] = value
    return out


def _build_points(raw: dict) -> dict[str, Point2]:
    points: dict[str, Point2] = {}
    for name, xy in raw.items():
        if name not in KNOWN_LANDMARKS:
            raise IngestError(REASON_PARSE_ERROR, f"unknown landmark name {name!r}")
        if not isinstance(xy, (list, tuple)) or len(xy) != 2:
            raise IngestError(REASON_PARSE_ERROR, f"landmark {name!r} must be an [x, y] pair")
        x = _require_number(xy[0], f"landmark {name!r} x")
        y = _require_number(xy[1], f"landmark {name!r} y")
        points[name] = Point2(x, y)
    return points


def parse_landmarks_json(data: bytes, path: str | Path | None = None) -> CaseFile:
    """Parse the native JSON document. Calibration is mandatory here."""
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise IngestError(REASON_PARSE_ERROR, f"not valid UTF-8: {exc}") from None
    try:
        doc = json.loads(text, object_pairs_hook=_detect_duplicate_keys)
    except IngestError:
        raise
    except json.JSONDecodeError as exc:
        raise IngestError(REASON_PARSE_ERROR, f"invalid JSON: {exc}") from None
    if not isinstance(doc, dict):
        raise IngestError(REASON_PARSE_ERROR, "top-level value must be an object")

    raw_landmarks = doc.get("landmarks")
    if not isinstance(raw_landmarks, dict) or not raw_landmarks:
        raise IngestError(REASON_PARSE_ERROR, "missing or empty 'landmarks' object")
    points = _build_points(raw_landmarks)

    if "calibration_mm_per_px" not in doc:
        raise MissingCalibration("document has no 'calibration_mm_per_px'")
    cal_value = _require_number(doc["calibration_mm_per_px"], "calibration_mm_per_px")
    if cal_value <= 0:
        raise IngestError(REASON_PARSE_ERROR, "calibration_mm_per_px must be positive")

    orientation = doc.get("orientation", "unknown")
    if orientation not in _ORIENTATIONS:
        raise IngestError(REASON_PARSE_ERROR, f"invalid orientation {orientation!r}")

    image_size = None
    if doc.get("image_size_px") is not None:
        raw_size = doc["image_size_px"]
        if not isinstance(raw_size, (list, tuple)) or len(raw_size) != 2:
            raise IngestError(REASON_PARSE_ERROR, "image_size_px must be [width, height]")
        w = _require_number(raw_size[0], "image width")
        h = _require_number(raw_size[1], "image height")
        if w <= 0 or h <= 0:
            raise IngestError(REASON_PARSE_ERROR, "image_size_px must be positive")
        image_size = (w, h)

    image = doc.get("image")
    if image is not None and not isinstance(image, str):
        raise IngestError(REASON_PARSE_ERROR, "image must be a string path")

    return CaseFile(
        landmark_set=LandmarkSet(
            points=points,
            calibration=Calibration(cal_value),
            orientation=_ORIENTATIONS[orientation],
        ),
        case_id=_case_id_for(doc.get("case_id"), path),
        source=str(path) if path is not None else None,
        image=image,
        image_size_px=image_size,
    )


def parse_landmarks_ordered_txt(
    data: bytes,
    order_profile: str = "isbi19",
    calibration_mm_per_px: float | None = None,
    path: str | Path | None = None,
) -> CaseFile:
    """Parse an ordered ``x,y``-per-line file according to a named profile."""
    if order_profile not in ORDER_PROFILES:
        raise IngestError(REASON_PARSE_ERROR, f"unknown order profile {order_profile!r}")
    order = ORDER_PROFILES[order_profile]
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise IngestError(REASON_PARSE_ERROR, f"not valid UTF-8: {exc}") from None

    points: dict[str, Point2] = {}
    index = 0
    for lineno, line in enumerate(text.splitlines(), 1):
        stripped = line.strip()
        if not stripped:
            continue
        if index >= len(order):
            raise IngestError(
                REASON_PARSE_ERROR,
                f"line {lineno}: unexpected extra line beyond the {len(order)}-entry profile",
            )
        parts = stripped.split(",")
        if len(parts) != 2:
            raise IngestError(REASON_PARSE_ERROR, f"line {lineno}: expected 'x,y'")
        try:
            x, y = float(parts[0]), float(parts[1])
        except ValueError:
            raise IngestError(REASON_PARSE_ERROR, f"line {lineno}: non-numeric coordinate") from None
        points[order[index]] = Point2(x, y)
        index += 1

    if index < len(order):
        missing = order[index:]
        raise IngestError(
            REASON_MISSING_LANDMARK,
            f"profile {order_profile} expects {len(order)} lines, got {index} "
            f"(missing {', '.join(missing)})",
        )

    cal = calibration_mm_per_px
    if cal is None:
        cal = PROFILE_DEFAULT_CALIBRATION[order_profile]
    return CaseFile(
        landmark_set=LandmarkSet(points=points, calibration=Calibration(cal)),
        case_id=_case_id_for(None, path),
        source=str(path) if path is not None else None,
    )


def parse_landmarks_csv(
    data: bytes,
    calibration_mm_per_px: float = 0.1,
    path: str | Path | None = None,
) -> CaseFile:
    """Parse the ``landmark,x,y`` CSV variant."""
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise IngestError(REASON_PARSE_ERROR, f"not valid UTF-8: {exc}") from None
    lines = [ln for ln in text.splitlines() if ln.strip()]
    if not lines or lines[0].strip().lower() != "landmark,x,y":
        raise IngestError(REASON_PARSE_ERROR, "missing 'landmark,x,y' header")
    points: dict[str, Point2] = {}
    for lineno, line in enumerate(lines[1:], 2):
        parts = [p.strip() for p in line.split(",")]
        if len(parts) != 3:
            raise IngestError(REASON_PARSE_ERROR, f"line {lineno}: expected 'landmark,x,y'")
        name = parts[0]
        if name not in KNOWN_LANDMARKS:
            raise IngestError(REASON_PARSE_ERROR, f"line {lineno}: unknown landmark name {name!r}")
        if name in points:
            raise IngestError(REASON_DUPLICATE_ID, f"line {lineno}: duplicate landmark {name!r}")
        try:
            x, y = float(parts[1]), float(parts[2])
        except ValueError:
            raise IngestError(REASON_PARSE_ERROR, f"line {lineno}: non-numeric coordinate") from None
        points[name] = Point2(x, y)
    if not points:
        raise IngestError(REASON_PARSE_ERROR, "no landmark rows")
    return CaseFile(
        landmark_set=LandmarkSet(points=points, calibration=Calibration(calibration_mm_per_px)),
        case_id=_case_id_for(None, path),
        source=str(path) if path is not None else None,
    )


def _fmt_coord(v: float) -> str:
    return f"{v:.6f}"


def write_landmarks_json(case: CaseFile) -> bytes:
    """Canonical serialization: sorted landmark keys, 6-decimal coordinates, LF endings."""
    s = case.landmark_set
    lines = ["{"]
    lines.append(f'  "case_id": {json.dumps(case.case_id, ensure_ascii=False)},')
    if case.image is not None:
        lines.append(f'  "image": {json.dumps(case.image, ensure_ascii=False)},')
    if case.image_size_px is not None:
        w, h = case.image_size_px
        lines.append(f'  "image_size_px": [{_fmt_coord(w)}, {_fmt_coord(h)}],')
    cal = s.calibration.mm_per_px if s.calibration is not None else None
    if cal is None:
        raise MissingCalibration("cannot serialize a case without calibration")
    lines.append(f'  "calibration_mm_per_px": {json.dumps(cal)},')
    lines.append(f'  "orientation": {json.dumps(s.orientation)},')
    lines.append('  "landmarks": {')
    names = sorted(s.points)
    for i, name in enumerate(names):
        p = s.points[name]
        comma = "," if i < len(names) - 1 else ""
        lines.append(f'    "{name}": [{_fmt_coord(p.x)}, {_fmt_coord(p.y)}]{comma}')
    lines.append("  }")
    lines.append("}")
    return ("\n".join(lines) + "\n").encode("utf-8")


def write_landmarks_csv(case: CaseFile) -> bytes:
    rows = ["landmark,x,y"]
    for name in sorted(case.landmark_set.points):
        p = case.landmark_set.points[name]
        rows.append(f"{name},{_fmt_coord(p.x)},{_fmt_coord(p.y)}")
    return ("\n".join(rows) + "\n").encode("utf-8")


def write_landmarks_ordered_txt(case: CaseFile, order_profile: str = "isbi19") -> bytes:
    if order_profile not in ORDER_PROFILES:
        raise IngestError(REASON_PARSE_ERROR, f"unknown order profile {order_profile!r}")
    order = ORDER_PROFILES[order_profile]
    missing = [n for n in order if n not in case.landmark_set.points]
    if missing:
        raise IngestError(
            REASON_MISSING_LANDMARK,
            f"profile {order_profile} needs {', '.join(missing)}",
        )
    rows = []
    for name in order:
        p = case.landmark_set.points[name]
        rows.append(f"{_fmt_coord(p.x)},{_fmt_coord(p.y)}")
    return ("\n".join(rows) + "\n").encode("utf-8")


def load_norms(data: bytes) -> NormTable:
    """Parse a norm table: '# provenance:' headers plus 'ID MEAN SD' lines."""
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise IngestError(REASON_PARSE_ERROR, f"not valid UTF-8: {exc}") from None
    entries: dict[str, NormEntry] = {}
    provenance: list[str] = []
    for lineno, line in enumerate(text.splitlines(), 1):
        stripped = line.strip()
        if not stripped:
            continue
        if stripped.startswith("#"):
            body = stripped.lstrip("#").strip()
            if body.lower().startswith("provenance:"):
                provenance.append(body.partition(":")[2].strip())
            continue
        parts = stripped.split()
        if len(parts) != 3:
            raise IngestError(REASON_PARSE_ERROR, f"line {lineno}: expected 'ID MEAN SD'")
        mid, raw_mean, raw_sd = parts
        if mid not in MEASUREMENTS:
            raise IngestError(REASON_PARSE_ERROR, f"line {lineno}: unknown measurement id {mid!r}")
        if mid in entries:
            raise IngestError(REASON_PARSE_ERROR, f"line {lineno}: duplicate entry for {mid}")
        try:
            mean, sd = float(raw_mean), float(raw_sd)
        except ValueError:
            raise IngestError(REASON_PARSE_ERROR, f"line {lineno}: non-numeric value") from None
        if not sd > 0:
            raise IngestError(REASON_NONPOSITIVE_SD, f"line {lineno}: sd must be positive for {mid}")
        entries[mid] = NormEntry(mean=mean, sd=sd)
    return NormTable(entries=entries, provenance="; ".join(provenance))


_THRESHOLD_KEYS = ("anb_lo", "anb_hi", "mpfh_lo", "mpfh_hi")


def load_thresholds(data: bytes) -> ClassificationThresholds:
    """Parse 'key value' threshold lines; missing keys keep their defaults."""
    try:
        text = data.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise IngestError(REASON_PARSE_ERROR, f"not valid UTF-8: {exc}") from None
    values: dict[str, float] = {}
    for lineno, line in enumerate(text.splitlines(), 1):
        stripped = line.strip()
        if not stripped or stripped.startswith("#"):
            continue
        parts = stripped.split()
        if len(parts) != 2:
            raise IngestError(REASON_PARSE_ERROR, f"line {lineno}: expected 'key value'")
        key, raw = parts
        if key not in _THRESHOLD_KEYS:
            raise IngestError(REASON_PARSE_ERROR, f"line {lineno}: unknown threshold key {key!r}")
        if key in values:
            raise IngestError(REASON_PARSE_ERROR, f"line {lineno}: duplicate key {key!r}")
        try:
            values[key] = float(raw)
        except ValueError:
            raise IngestError(REASON_PARSE_ERROR, f"line {lineno}: non-numeric value") from None
    t = ClassificationThresholds(**values)
    if t.anb_lo > t.anb_hi or t.mpfh_lo > t.mpfh_hi:
        raise IngestError(REASON_PARSE_ERROR, "threshold lower bound exceeds upper bound")
    return t


@lru_cache(maxsize=1)
def default_norms() -> NormTable:
    return load_norms(resources.files("cephkit.data").joinpath("norms.default").read_bytes())


@lru_cache(maxsize=1)
def default_thresholds() -> ClassificationThresholds:
    return load_thresholds(
        resources.files("cephkit.data").joinpath("thresholds.default").read_bytes()
    )


# landmark pairs that feed a direction somewhere in the battery; coincident
# pairs would poison every dependent measurement
_MANDATORY_DISTINCT_PAIRS = (
    ("S", "N"), ("N", "A"), ("N", "B"), ("N", "D"), ("N", "Pog"),
    ("Or", "Po"), ("Go", "Me"), ("Go", "Gn"), ("S", "Gn"),
    ("U1E", "U1A"), ("L1E", "L1A"), ("OcA", "OcP"),
)


def validate_case(case: CaseFile) -> list[tuple[str, str]]:
    """Structural validity problems as (reason_code, detail): bounds, degeneracy, orientation."""
    problems: list[tuple[str, str]] = []
    s = case.landmark_set

    if case.image_size_px is not None:
        w, h = case.image_size_px
        outside = [
            name
            for name, p in sorted(s.points.items())
            if not (0 <= p.x <= w and 0 <= p.y <= h)
        ]
        if outside:
            problems.append(
                (REASON_OUT_OF_BOUNDS, f"landmarks outside [0,{w}]x[0,{h}]: {', '.join(outside)}")
            )

    degenerate = [
        f"{a}={b}"
        for a, b in _MANDATORY_DISTINCT_PAIRS
        if a in s.points and b in s.points and s.points[a] == s.points[b]
    ]
    if degenerate:
        problems.append((REASON_DEGENERATE, f"coincident mandatory pairs: {', '.join(degenerate)}"))

    try:
        from .geometry import _infer_facing

        _infer_facing(s)
    except OrientationUndetermined as exc:
        problems.append((REASON_MISSING_LANDMARK, f"orientation undetermined: {exc}"))

    return problems


def parse_any(path: Path, order_profile: str = "isbi19") -> CaseFile:
    """Dispatch on file extension: .json native, .txt ordered profile, .csv variant."""
    data = path.read_bytes()
    suffix = path.suffix.lower()
    if suffix == ".json":
        return parse_landmarks_json(data, path=path)
    if suffix == ".txt":
        return parse_landmarks_ordered_txt(data, order_profile=order_profile, path=path)
    if suffix == ".csv":
        return parse_landmarks_csv(data, path=path)
    raise IngestError(REASON_PARSE_ERROR, f"unrecognized extension {suffix!r}")


def _analysis_record(analysis: CaseAnalysis) -> dict:
    return {
        "case_id": analysis.case.case_id,
        "source": Path(analysis.case.source).name if analysis.case.source else None,
        "measurements": [
            {"id": r.id, "value": r.value, "unit": r.unit, "inputs": list(r.inputs_used)}
            for r in analysis.results
        ],
        "skipped": [
            {"id": sk.id, "code": sk.code, "detail": sk.detail} for sk in analysis.skipped
        ],
        "deviations": [
            {"id": d.id, "z": d.z, "grade": d.grade} for d in analysis.deviations
        ],
        "classification": {
            "sagittal": analysis.classification.sagittal,
            "vertical": analysis.classification.vertical,
            "thresholds": {
                "anb_lo": analysis.classification.thresholds.anb_lo,
                "anb_hi": analysis.classification.thresholds.anb_hi,
                "mpfh_lo": analysis.classification.thresholds.mpfh_lo,
                "mpfh_hi": analysis.classification.thresholds.mpfh_hi,
            },
        },
        "findings": [f.key for f in analysis.findings],
    }


def analysis_record_json(analysis: CaseAnalysis) -> bytes:
    record = _analysis_record(analysis)
    return (json.dumps(record, indent=2, sort_keys=True, ensure_ascii=False) + "\n").encode("utf-8")


def batch_process(
    input_dir: str | Path,
    out_dir: str | Path,
    quarantine_dir: str | Path | None = None,
    langs: tuple[str, ...] = LANGUAGES,
    norms: NormTable | None = None,
    thresholds: ClassificationThresholds | None = None,
    order_profile: str = "isbi19",
) -> BatchSummary:
    """Parse, validate, analyze, and write out every recognized landmark file.

    Failures are quarantined, never fatal; outputs are byte-stable across
    reruns on identical input.
    """
    input_dir = Path(input_dir)
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    qdir = Path(quarantine_dir) if quarantine_dir is not None else None
    if qdir is not None:
        qdir.mkdir(parents=True, exist_ok=True)

    candidates = sorted(
        p for p in input_dir.iterdir()
        if p.is_file() and p.suffix.lower() in (".json", ".txt", ".csv")
    )

    quarantined: list[QuarantineRecord] = []
    analyzed = 0
    for path in candidates:
        try:
            case = parse_any(path, order_profile=order_profile)
            problems = validate_case(case)
            if problems:
                reason, detail = problems[0]
                if len(problems) > 1:
                    detail += "; " + "; ".join(f"{r}: {d}" for r, d in problems[1:])
                raise IngestError(reason, detail)
            analysis = analyze_case(case, norms=norms, thresholds=thresholds)
        except IngestError as exc:
            quarantined.append(QuarantineRecord(path=path.name, reason=exc.code, detail=str(exc)))
            if qdir is not None:
                (qdir / path.name).write_bytes(path.read_bytes())
            continue
        except MissingCalibration as exc:
            quarantined.append(
                QuarantineRecord(path=path.name, reason=REASON_PARSE_ERROR, detail=str(exc))
            )
            if qdir is not None:
                (qdir / path.name).write_bytes(path.read_bytes())
            continue
        except (DegenerateGeometry, OrientationUndetermined) as exc:
            code = (
                REASON_DEGENERATE
                if isinstance(exc, DegenerateGeometry)
                else REASON_MISSING_LANDMARK
            )
            quarantined.append(QuarantineRecord(path=path.name, reason=code, detail=str(exc)))
            if qdir is not None:
                (qdir / path.name).write_bytes(path.read_bytes())
            continue

        stem = path.stem
        (out_dir / f"{stem}.analysis.json").write_bytes(analysis_record_json(analysis))
        for lang in langs:
            text = render_report(
                list(analysis.findings), lang, FORMAT_MARKDOWN, results=list(analysis.results)
            )
            (out_dir / f"{stem}.report.{lang}.md").write_text(text, encoding="utf-8")
        analyzed += 1

    tsv_lines = ["path\treason\tdetail"]
    for record in quarantined:
        detail = record.detail.replace("\t", " ").replace("\n", " ")
        tsv_lines.append(f"{record.path}\t{record.reason}\t{detail}")
    (out_dir / "quarantine.tsv").write_text("\n".join(tsv_lines) + "\n", encoding="utf-8")

    return BatchSummary(inputs=len(candidates), analyzed=analyzed, quarantined=quarantined)
