import json
from pathlib import Path

import pytest

from cephkit.geometry import Calibration, LandmarkSet, Point2

FIXTURE_DIR = Path(__file__).resolve().parent.parent / "fixtures"
FIXTURE_NAMES = ("synthetic_case_01", "synthetic_case_02", "synthetic_case_03")


def fixture_path(name: str) -> Path:
    return FIXTURE_DIR / f"{name}.json"


def load_fixture_doc(name: str) -> dict:
    return json.loads(fixture_path(name).read_text(encoding="utf-8"))


def load_fixture_set(name: str) -> LandmarkSet:
    """Minimal loader for tests that predate the ingest layer."""
    doc = load_fixture_doc(name)
    points = {k: Point2(v[0], v[1]) for k, v in doc["landmarks"].items()}
    return LandmarkSet(
        points=points,
        calibration=Calibration(doc["calibration_mm_per_px"]),
        orientation=doc.get("orientation", "unknown"),
    )


@pytest.fixture
def case01() -> LandmarkSet:
    return load_fixture_set("synthetic_case_01")
