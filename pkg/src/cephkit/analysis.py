"""One-case orchestration: normalize, measure, grade, classify, derive findings."""

from __future__ import annotations

from dataclasses import dataclass, replace
from typing import TYPE_CHECKING

from .geometry import normalize_orientation
from .report import Finding, derive_findings
from .steiner import (
    ClassificationThresholds,
    Deviation,
    MeasurementResult,
    NormTable,
    SkeletalClassification,
    SkippedMeasurement,
    classify,
    compute_all,
    grade,
)

if TYPE_CHECKING:  # pragma: no cover
    from .ingest import CaseFile


@dataclass(frozen=True)
class CaseAnalysis:
    case: "CaseFile"                     # with the normalized landmark set
    results: tuple[MeasurementResult, ...]
    skipped: tuple[SkippedMeasurement, ...]
    deviations: tuple[Deviation, ...]
    classification: SkeletalClassification
    findings: tuple[Finding, ...]


def analyze_case(
    case: "CaseFile",
    norms: NormTable | None = None,
    thresholds: ClassificationThresholds | None = None,
) -> CaseAnalysis:
    """Full deterministic pipeline over one parsed case."""
    from .ingest import default_norms, default_thresholds

    norms = norms if norms is not None else default_norms()
    thresholds = thresholds if thresholds is not None else default_thresholds()

    normalized = normalize_orientation(case.landmark_set)
    case = replace(case, landmark_set=normalized)
    results, skipped = compute_all(normalized)
    deviations = grade(results, norms)
    classification = classify(results, thresholds)
    findings = derive_findings(results, deviations, classification)
    return CaseAnalysis(
        case=case,
        results=tuple(results),
        skipped=tuple(skipped),
        deviations=tuple(deviations),
        classification=classification,
        findings=tuple(findings),
    )
