"""Bilingual diagnostic reports and instruction-tuning prompt generation.

Template and instruction text lives in data files (``templates.<lang>``,
``instructions.<lang>``, tab-separated key/template records) so deployments
can swap wording without touching code.
"""

from __future__ import annotations

import hashlib
from dataclasses import dataclass
from decimal import ROUND_HALF_UP, Decimal
from functools import lru_cache
from importlib import resources
from pathlib import Path

from .steiner import (
    CLASS_II,
    CLASS_III,
    GRADE_HIGH,
    GRADE_LOW,
    MEASUREMENTS,
    TABLE_BATTERY,
    Deviation,
    MeasurementResult,
    SkeletalClassification,
)

LANG_EN = "en"
LANG_ZH = "zh"
LANGUAGES = (LANG_EN, LANG_ZH)

FORMAT_TEXT = "text"
FORMAT_MARKDOWN = "markdown"
FORMAT_STRUCTURED = "structured"
FORMATS = (FORMAT_TEXT, FORMAT_MARKDOWN, FORMAT_STRUCTURED)

DEFAULT_IMAGE_TOKEN = "<ImageFeature>"

CATEGORY_ORDER = (
    "MAXILLA",
    "MANDIBLE",
    "SAGITTAL_CLASS",
    "VERTICAL",
    "CHIN",
    "UPPER_INCISOR",
    "LOWER_INCISOR",
    "INTERINCISAL",
)

# grade -> proclination tendency per incisor measurement; the directed
# L1NB_DEG runs opposite to the millimetre offset (it is a supplement angle).
_INCISOR_POLARITY = {
    "U1NA_MM": {GRADE_LOW: -1, GRADE_HIGH: +1},
    "U1NA_DEG": {GRADE_LOW: -1, GRADE_HIGH: +1},
    "L1NB_MM": {GRADE_LOW: -1, GRADE_HIGH: +1},
    "L1NB_DEG": {GRADE_LOW: +1, GRADE_HIGH: -1},
}


class MissingTemplate(KeyError):
    def __init__(self, key: str, lang: str):
        self.key, self.lang = key, lang
        super().__init__(f"no template for {key!r} in language {lang!r}")


class MissingMeasurement(ValueError):
    def __init__(self, measurement_id: str):
        self.measurement_id = measurement_id
        super().__init__(f"measurement {measurement_id!r} required but not computed")


class EmptyInstructionSet(ValueError):
    def __init__(self, lang: str):
        self.lang = lang
        super().__init__(f"no instructions available for language {lang!r}")


@dataclass(frozen=True)
class Finding:
    category: str
    key: str                    # e.g. "MAXILLA/HIGH"
    sources: tuple[str, ...]    # measurement ids the finding came from

    @property
    def subkey(self) -> str:
        return self.key.split("/", 1)[1]


@dataclass(frozen=True)
class DiagnosticReport:
    language: str
    findings: tuple[Finding, ...]
    narrative: tuple[str, ...]
    measurement_rows: tuple[tuple[str, str, str, str], ...]  # (id, display, value, unit)
    diagnosis_lines: tuple[str, ...]
    recommendations: tuple[str, ...]


@dataclass(frozen=True)
class PromptSample:
    text: str
    language: str
    instruction_index: int
    seed: int


@dataclass(frozen=True)
class Templates:
    tables: dict[str, dict[str, str]]

    def get(self, key: str, lang: str) -> str:
        try:
            return self.tables[lang][key]
        except KeyError:
            raise MissingTemplate(key, lang) from None

    def has(self, key: str, lang: str) -> bool:
        return key in self.tables.get(lang, {})


@dataclass(frozen=True)
class InstructionSet:
    by_lang: dict[str, tuple[str, ...]]

    def for_lang(self, lang: str) -> tuple[str, ...]:
        items = self.by_lang.get(lang, ())
        if not items:
            raise EmptyInstructionSet(lang)
        return items


def _parse_kv_lines(text: str) -> dict[str, str]:
    table: dict[str, str] = {}
    for line in text.splitlines():
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        key, _, value = line.partition("\t")
        table[key.strip()] = value
    return table


def _read_data_file(name: str, directory: str | Path | None) -> str:
    if directory is not None:
        return (Path(directory) / name).read_text(encoding="utf-8")
    return resources.files("cephkit.data").joinpath(name).read_text(encoding="utf-8")


def load_templates(directory: str | Path | None = None) -> Templates:
    return Templates(
        tables={lang: _parse_kv_lines(_read_data_file(f"templates.{lang}", directory)) for lang in LANGUAGES}
    )


def load_instructions(directory: str | Path | None = None) -> InstructionSet:
    by_lang: dict[str, tuple[str, ...]] = {}
    for lang in LANGUAGES:
        lines = [
            ln.strip()
            for ln in _read_data_file(f"instructions.{lang}", directory).splitlines()
            if ln.strip() and not ln.lstrip().startswith("#")
        ]
        by_lang[lang] = tuple(lines)
    return InstructionSet(by_lang=by_lang)


@lru_cache(maxsize=1)
def default_templates() -> Templates:
    return load_templates(None)


@lru_cache(maxsize=1)
def default_instructions() -> InstructionSet:
    return load_instructions(None)


def format_value(value: float) -> str:
    """Round half-up to 2 decimals, then strip trailing zeros and a bare point.

    84.41 -> "84.41", 85.70 -> "85.7", 2.00 -> "2", -3.56 -> "-3.56".
    """
    quantized = Decimal(repr(float(value))).quantize(Decimal("0.01"), rounding=ROUND_HALF_UP)
    text = format(quantized, "f")
    if "." in text:
        text = text.rstrip("0").rstrip(".")
    if text in ("-0", ""):
        text = "0"
    return text


def format_reference_suffix(results: list[MeasurementResult], lang: str) -> str:
    """The nine-value reference suffix appended to prompts."""
    values = {r.id: r.value for r in results}
    parts = []
    for mid in TABLE_BATTERY:
        if mid not in values:
            raise MissingMeasurement(mid)
        definition = MEASUREMENTS[mid]
        label = definition.display_en if lang == LANG_EN else definition.display_zh
        parts.append((label, format_value(values[mid])))
    if lang == LANG_ZH:
        return "\n 参考指标:" + ",".join(f"{label}:{v}" for label, v in parts)
    return "\nReference measurements: " + ", ".join(f"{label}: {v}" for label, v in parts)


def _pick_instruction_index(seed: int, count: int) -> int:
    # Stable, platform-independent uniform pick over the 64-bit seed space.
    normalized = seed & 0xFFFFFFFFFFFFFFFF
    digest = hashlib.sha256(normalized.to_bytes(8, "big")).digest()
    return int.from_bytes(digest[:8], "big") % count


def build_prompt(
    results: list[MeasurementResult],
    lang: str,
    seed: int,
    image_token: str = DEFAULT_IMAGE_TOKEN,
    instructions: InstructionSet | None = None,
) -> PromptSample:
    """Training-style prompt: doctor marker, image token, seeded instruction, reference suffix."""
    pool = (instructions or default_instructions()).for_lang(lang)
    index = _pick_instruction_index(seed, len(pool))
    suffix = format_reference_suffix(results, lang)
    text = f"###Doctor: {image_token}{pool[index]}{suffix}###Assistant: "
    return PromptSample(text=text, language=lang, instruction_index=index, seed=seed)


def derive_findings(
    results: list[MeasurementResult],
    deviations: list[Deviation],
    classification: SkeletalClassification | None,
) -> list[Finding]:
    """Fixed rule table mapping grades and classification onto finding keys."""
    grades = {d.id: d.grade for d in deviations}
    findings: list[Finding] = []

    def add(category: str, subkey: str, sources: tuple[str, ...]) -> None:
        findings.append(Finding(category=category, key=f"{category}/{subkey}", sources=sources))

    if "SNA" in grades:
        add("MAXILLA", grades["SNA"], ("SNA",))
    if "SNB" in grades:
        add("MANDIBLE", grades["SNB"], ("SNB",))
    if classification is not None and classification.sagittal is not None:
        add("SAGITTAL_CLASS", classification.sagittal, ("ANB",))
    if classification is not None and classification.vertical is not None:
        add("VERTICAL", classification.vertical, ("MPFH",))
    if "POGNB_MM" in grades:
        add("CHIN", grades["POGNB_MM"], ("POGNB_MM",))

    for category, ids in (("UPPER_INCISOR", ("U1NA_MM", "U1NA_DEG")),
                          ("LOWER_INCISOR", ("L1NB_MM", "L1NB_DEG"))):
        graded = [mid for mid in ids if mid in grades]
        if not graded:
            continue
        tendencies = {_INCISOR_POLARITY[mid].get(grades[mid], 0) for mid in graded}
        if +1 in tendencies and -1 not in tendencies:
            subkey = GRADE_HIGH
        elif -1 in tendencies and +1 not in tendencies:
            subkey = GRADE_LOW
        else:
            subkey = "NORMAL"
        add(category, subkey, tuple(graded))

    if "INTERINCISAL" in grades:
        add("INTERINCISAL", grades["INTERINCISAL"], ("INTERINCISAL",))

    order = {cat: i for i, cat in enumerate(CATEGORY_ORDER)}
    findings.sort(key=lambda f: order[f.category])
    return findings


_ABNORMAL = (GRADE_LOW, GRADE_HIGH)


def _diagnosis_lines(findings: list[Finding], lang: str, t: Templates) -> list[str]:
    by_cat = {f.category: f for f in findings}
    joiner = ", " if lang == LANG_EN else "，"
    lines: list[str] = []

    class_suffix = None
    sag = by_cat.get("SAGITTAL_CLASS")
    if sag is not None and sag.subkey in (CLASS_II, CLASS_III):
        class_suffix = t.get(f"DIAG/CLASS/{sag.subkey}", lang)

    for category in ("MAXILLA", "MANDIBLE"):
        f = by_cat.get(category)
        if f is not None and f.subkey in _ABNORMAL:
            line = t.get(f"DIAG/{category}/{f.subkey}", lang)
            if class_suffix:
                line = line + joiner + class_suffix
            lines.append(line)
    if not lines and class_suffix:
        lines.append(class_suffix[0].upper() + class_suffix[1:] if lang == LANG_EN else class_suffix)

    f = by_cat.get("VERTICAL")
    if f is not None and f.subkey in ("HIGH_ANGLE", "LOW_ANGLE"):
        lines.append(t.get(f"DIAG/VERTICAL/{f.subkey}", lang))

    for category in ("CHIN", "UPPER_INCISOR", "LOWER_INCISOR", "INTERINCISAL"):
        f = by_cat.get(category)
        if f is not None and f.subkey in _ABNORMAL:
            lines.append(t.get(f"DIAG/{category}/{f.subkey}", lang))

    dental = ("UPPER_INCISOR", "LOWER_INCISOR", "INTERINCISAL")
    if lines and not any(
        by_cat.get(c) is not None and by_cat[c].subkey in _ABNORMAL for c in dental
    ):
        lines.append(t.get("DIAG/DENTAL_OK", lang))

    if not lines:
        lines.append(t.get("DIAG/NONE", lang))
    return lines


def _recommendation_keys(findings: list[Finding]) -> list[str]:
    by_cat = {f.category: f.subkey for f in findings}
    keys: list[str] = []
    skeletal = (
        by_cat.get("SAGITTAL_CLASS") in (CLASS_II, CLASS_III)
        or by_cat.get("MAXILLA") in _ABNORMAL
        or by_cat.get("MANDIBLE") in _ABNORMAL
        or by_cat.get("CHIN") in _ABNORMAL
    )
    if skeletal:
        keys += ["REC/SKELETAL_IMAGING", "REC/SKELETAL_APPLIANCE"]
    if by_cat.get("VERTICAL") in ("HIGH_ANGLE", "LOW_ANGLE"):
        keys.append("REC/VERTICAL_CONTROL")
    if any(by_cat.get(c) in _ABNORMAL for c in ("UPPER_INCISOR", "LOWER_INCISOR", "INTERINCISAL")):
        keys.append("REC/INCISOR_ALIGNMENT")
    if not keys:
        keys.append("REC/ROUTINE")
    return keys


def compose_report(
    findings: list[Finding],
    lang: str,
    results: list[MeasurementResult] = (),
    templates: Templates | None = None,
) -> DiagnosticReport:
    if lang not in LANGUAGES:
        raise ValueError(f"unsupported language {lang!r}")
    t = templates or default_templates()

    narrative = tuple(t.get(f.key, lang) for f in findings) or (t.get("FINDINGS/NONE", lang),)
    rows = tuple(
        (
            r.id,
            MEASUREMENTS[r.id].display_en if lang == LANG_EN else MEASUREMENTS[r.id].display_zh,
            format_value(r.value),
            t.get(f"UNIT/{r.unit}", lang),
        )
        for r in results
    )
    return DiagnosticReport(
        language=lang,
        findings=tuple(findings),
        narrative=narrative,
        measurement_rows=rows,
        diagnosis_lines=tuple(_diagnosis_lines(findings, lang, t)),
        recommendations=tuple(t.get(k, lang) for k in _recommendation_keys(findings)),
    )


def report_summary(
    findings: list[Finding], lang: str, templates: Templates | None = None
) -> str:
    """The narrative findings paragraph on its own (dialogue fallback answer)."""
    report = compose_report(findings, lang, results=(), templates=templates)
    return " ".join(report.narrative) if lang == LANG_EN else "".join(report.narrative)


def render_report(
    findings: list[Finding],
    lang: str,
    fmt: str = FORMAT_TEXT,
    results: list[MeasurementResult] = (),
    templates: Templates | None = None,
):
    """Render to plain text, markdown, or a structured record (dict)."""
    if fmt not in FORMATS:
        raise ValueError(f"unsupported format {fmt!r}")
    t = templates or default_templates()
    report = compose_report(findings, lang, results=results, templates=templates)
    narrative = (" " if lang == LANG_EN else "").join(report.narrative)

    if fmt == FORMAT_STRUCTURED:
        return {
            "language": report.language,
            "findings": [
                {"category": f.category, "key": f.key, "sources": list(f.sources)}
                for f in report.findings
            ],
            "narrative": narrative,
            "measurements": [
                {"id": mid, "display": display, "value": value, "unit": unit}
                for mid, display, value, unit in report.measurement_rows
            ],
            "diagnosis": list(report.diagnosis_lines),
            "recommendations": list(report.recommendations),
        }

    title = t.get("TITLE", lang)
    sec_findings = t.get("SEC/FINDINGS", lang)
    sec_measurements = t.get("SEC/MEASUREMENTS", lang)
    sec_diagnosis = t.get("SEC/DIAGNOSIS", lang)
    sec_recommendations = t.get("SEC/RECOMMENDATIONS", lang)

    lines: list[str] = []
    if fmt == FORMAT_MARKDOWN:
        lines.append(f"# {title}")
        lines.append("")
        lines.append(f"## {sec_findings}")
        lines.append("")
        lines.append(narrative)
        if report.measurement_rows:
            lines.append("")
            lines.append(f"## {sec_measurements}")
            lines.append("")
            for _, display, value, unit in report.measurement_rows:
                lines.append(f"- {display}: {value} {unit}")
        lines.append("")
        lines.append(f"## {sec_diagnosis}")
        lines.append("")
        for i, line in enumerate(report.diagnosis_lines, 1):
            lines.append(f"{i}. {line}")
        lines.append("")
        lines.append(f"## {sec_recommendations}")
        lines.append("")
        for i, line in enumerate(report.recommendations, 1):
            lines.append(f"{i}. {line}")
    else:
        lines.append(title)
        lines.append("")
        lines.append(f"{sec_findings}:")
        lines.append(narrative)
        if report.measurement_rows:
            lines.append("")
            lines.append(f"{sec_measurements}:")
            for _, display, value, unit in report.measurement_rows:
                lines.append(f"- {display}: {value} {unit}")
        lines.append("")
        lines.append(sec_diagnosis)
        for i, line in enumerate(report.diagnosis_lines, 1):
            lines.append(f"{i}. {line}")
        lines.append("")
        lines.append(sec_recommendations)
        for i, line in enumerate(report.recommendations, 1):
            lines.append(f"{i}. {line}")
    return "\n".join(lines) + "\n"
