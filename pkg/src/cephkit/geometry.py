"""2D landmark geometry: canonical vocabulary, calibration, angle/distance primitives.

Coordinates follow the image convention: x grows to the right, y grows
downward. The canonical working frame faces right (anterior = +x);
``normalize_orientation`` mirrors left-facing sets into it.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

FACING_RIGHT = "right"
FACING_LEFT = "left"
FACING_UNKNOWN = "unknown"

# Hard skeletal/dental vocabulary consumed by measurements.
CANONICAL_LANDMARKS: tuple[str, ...] = (
    "S", "N", "Or", "Po", "A", "B", "Pog", "Gn", "Me", "Go", "D",
    "U1E", "U1A", "L1E", "L1A", "OcA", "OcP", "ANS", "PNS", "Ar",
)

# Soft-tissue points carried by the 19-point ordered profile; parsed and
# round-tripped but never consumed by a measurement.
SOFT_TISSUE_LANDMARKS: tuple[str, ...] = ("UL", "LL", "Sn", "SPog")

KNOWN_LANDMARKS: tuple[str, ...] = CANONICAL_LANDMARKS + SOFT_TISSUE_LANDMARKS

LANDMARK_FULL_NAMES: dict[str, str] = {
    "S": "sella",
    "N": "nasion",
    "Or": "orbitale",
    "Po": "porion",
    "A": "subspinale (A point)",
    "B": "supramentale (B point)",
    "Pog": "pogonion",
    "Gn": "gnathion",
    "Me": "menton",
    "Go": "gonion",
    "D": "symphysis center (D point)",
    "U1E": "upper incisor edge",
    "U1A": "upper incisor apex",
    "L1E": "lower incisor edge",
    "L1A": "lower incisor apex",
    "OcA": "anterior occlusal point",
    "OcP": "posterior occlusal point",
    "ANS": "anterior nasal spine",
    "PNS": "posterior nasal spine",
    "Ar": "articulare",
    "UL": "upper lip",
    "LL": "lower lip",
    "Sn": "subnasale",
    "SPog": "soft-tissue pogonion",
}


class DegenerateGeometry(ValueError):
    """A primitive needed a direction but got coincident points."""


class OrientationUndetermined(ValueError):
    """Facing direction cannot be inferred from the available landmarks."""


@dataclass(frozen=True)
class Point2:
    """A 2D point in image convention (y grows downward)."""

    x: float
    y: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.x) and math.isfinite(self.y)):
            raise ValueError(f"non-finite coordinate ({self.x}, {self.y})")


@dataclass(frozen=True)
class Calibration:
    """Physical scale of the image, in millimetres per pixel."""

    mm_per_px: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.mm_per_px) and self.mm_per_px > 0):
            raise ValueError(f"mm_per_px must be positive and finite, got {self.mm_per_px!r}")


@dataclass(frozen=True)
class LandmarkSet:
    """Calibrated landmark map for one case. Treat as immutable after construction."""

    points: dict[str, Point2]
    calibration: Calibration | None = None
    orientation: str = FACING_UNKNOWN

    def __post_init__(self) -> None:
        for name in self.points:
            if name not in KNOWN_LANDMARKS:
                raise ValueError(f"unknown landmark id {name!r}")
        if self.orientation not in (FACING_RIGHT, FACING_LEFT, FACING_UNKNOWN):
            raise ValueError(f"invalid orientation {self.orientation!r}")

    def get(self, name: str) -> Point2 | None:
        return self.points.get(name)

    def has(self, *names: str) -> bool:
        return all(n in self.points for n in names)

    def missing(self, names) -> list[str]:
        return [n for n in names if n not in self.points]


def angle_at_vertex(vertex: Point2, p1: Point2, p2: Point2) -> float:
    """Unsigned angle in degrees, in [0, 180], between rays vertex->p1 and vertex->p2."""
    ux, uy = p1.x - vertex.x, p1.y - vertex.y
    vx, vy = p2.x - vertex.x, p2.y - vertex.y
    if (ux == 0.0 and uy == 0.0) or (vx == 0.0 and vy == 0.0):
        raise DegenerateGeometry("zero-length ray at vertex")
    cross = ux * vy - uy * vx
    dot = ux * vx + uy * vy
    return math.degrees(math.atan2(abs(cross), dot))


def directed_line_angle(a1: Point2, a2: Point2, b1: Point2, b2: Point2) -> float:
    """Unsigned angle in degrees, in [0, 180], between directions a1->a2 and b1->b2.

    Direction matters: reversing one direction maps the result r to 180 - r.
    """
    ux, uy = a2.x - a1.x, a2.y - a1.y
    vx, vy = b2.x - b1.x, b2.y - b1.y
    if (ux == 0.0 and uy == 0.0) or (vx == 0.0 and vy == 0.0):
        raise DegenerateGeometry("zero-length direction")
    cross = ux * vy - uy * vx
    dot = ux * vx + uy * vy
    return math.degrees(math.atan2(abs(cross), dot))


def signed_point_line_distance(p: Point2, a: Point2, b: Point2) -> float:
    """Perpendicular distance from p to the line through a and b, signed by side.

    The sign is that of cross(p - a, unit(a->b)). With the line directed
    craniocaudally (e.g. N->A, N->B) in the canonical facing-right frame,
    anterior offsets come out positive.
    """
    dx, dy = b.x - a.x, b.y - a.y
    norm = math.hypot(dx, dy)
    if norm == 0.0:
        raise DegenerateGeometry("line endpoints coincide")
    return ((p.x - a.x) * dy - (p.y - a.y) * dx) / norm


def to_physical(value_px: float, calibration: Calibration) -> float:
    """Convert a pixel length to millimetres."""
    return value_px * calibration.mm_per_px


def _infer_facing(s: LandmarkSet) -> str:
    # Anterior/posterior pairs, most reliable first. A pair is usable only
    # when both points are present and horizontally distinct.
    for anterior, posterior in (("Or", "Po"), ("N", "S")):
        pa, pp = s.points.get(anterior), s.points.get(posterior)
        if pa is not None and pp is not None and pa.x != pp.x:
            return FACING_RIGHT if pa.x > pp.x else FACING_LEFT
    if s.orientation in (FACING_RIGHT, FACING_LEFT):
        return s.orientation
    raise OrientationUndetermined(
        "need Or/Po or N/S with distinct x, or a declared orientation"
    )


def normalize_orientation(s: LandmarkSet) -> LandmarkSet:
    """Return an equivalent set in the canonical facing-right frame.

    Left-facing sets are mirrored about the x-centroid of their points,
    which preserves every distance and unsigned angle. Idempotent.
    """
    facing = _infer_facing(s)
    if facing == FACING_RIGHT:
        return replace(s, orientation=FACING_RIGHT)
    cx = sum(p.x for p in s.points.values()) / len(s.points)
    mirrored = {name: Point2(2.0 * cx - p.x, p.y) for name, p in s.points.items()}
    return LandmarkSet(points=mirrored, calibration=s.calibration, orientation=FACING_RIGHT)
