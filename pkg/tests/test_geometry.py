import math
import random

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cephkit.geometry import (
    FACING_LEFT,
    FACING_RIGHT,
    FACING_UNKNOWN,
    Calibration,
    DegenerateGeometry,
    LandmarkSet,
    OrientationUndetermined,
    Point2,
    angle_at_vertex,
    directed_line_angle,
    normalize_orientation,
    signed_point_line_distance,
    to_physical,
)

# frozen via atan2(30, 100) in degrees (independent calculator)
ATAN2_30_100_DEG = 16.69924423399362


def P(x, y):
    return Point2(float(x), float(y))


class TestAngleAtVertex:
    def test_isoceles_right_construction(self):
        assert angle_at_vertex(P(0, 0), P(0, -100), P(100, -100)) == pytest.approx(45.0, abs=1e-12)

    def test_collinear_same_side(self):
        assert angle_at_vertex(P(0, 0), P(5, 0), P(17, 0)) == 0.0

    def test_atan2_oracle(self):
        got = angle_at_vertex(P(0, 0), P(100, 30), P(100, 0))
        assert got == pytest.approx(ATAN2_30_100_DEG, abs=1e-12)

    def test_symmetric_in_p1_p2(self):
        rng = random.Random(7)
        for _ in range(200):
            v = P(rng.uniform(-50, 50), rng.uniform(-50, 50))
            p1 = P(v.x + rng.uniform(1, 50), v.y + rng.uniform(1, 50))
            p2 = P(v.x - rng.uniform(1, 50), v.y + rng.uniform(1, 50))
            assert angle_at_vertex(v, p1, p2) == angle_at_vertex(v, p2, p1)

    def test_degenerate_ray_raises(self):
        with pytest.raises(DegenerateGeometry):
            angle_at_vertex(P(1, 1), P(1, 1), P(2, 2))
        with pytest.raises(DegenerateGeometry):
            angle_at_vertex(P(1, 1), P(2, 2), P(1, 1))

    def test_range(self):
        rng = random.Random(11)
        for _ in range(500):
            v = P(rng.uniform(-10, 10), rng.uniform(-10, 10))
            p1 = P(v.x + rng.uniform(-9, 9) or 1.0, v.y + rng.uniform(1, 9))
            p2 = P(v.x + rng.uniform(-9, 9) or 1.0, v.y - rng.uniform(1, 9))
            a = angle_at_vertex(v, p1, p2)
            assert 0.0 <= a <= 180.0


class TestDirectedLineAngle:
    def test_perpendicular(self):
        assert directed_line_angle(P(0, 0), P(1, 0), P(0, 0), P(0, 1)) == pytest.approx(90.0, abs=1e-12)

    def test_antiparallel(self):
        assert directed_line_angle(P(0, 0), P(1, 0), P(5, 5), P(4, 5)) == pytest.approx(180.0, abs=1e-12)

    def test_atan2_oracle(self):
        got = directed_line_angle(P(0, 0), P(100, 0), P(10, 80), P(110, 110))
        assert got == pytest.approx(ATAN2_30_100_DEG, abs=1e-12)

    def test_direction_reversal_complements(self):
        rng = random.Random(3)
        for _ in range(300):
            a1 = P(rng.uniform(-100, 100), rng.uniform(-100, 100))
            a2 = P(a1.x + rng.uniform(1, 50), a1.y + rng.uniform(-50, 50))
            b1 = P(rng.uniform(-100, 100), rng.uniform(-100, 100))
            b2 = P(b1.x + rng.uniform(-50, -1), b1.y + rng.uniform(-50, 50))
            r = directed_line_angle(a1, a2, b1, b2)
            r_rev = directed_line_angle(a2, a1, b1, b2)
            assert r + r_rev == pytest.approx(180.0, abs=1e-9)

    def test_degenerate(self):
        with pytest.raises(DegenerateGeometry):
            directed_line_angle(P(0, 0), P(0, 0), P(1, 1), P(2, 2))


class TestSignedPointLineDistance:
    def test_vertical_line_positive_side(self):
        assert signed_point_line_distance(P(3, 5), P(0, 0), P(0, 10)) == pytest.approx(3.0, abs=1e-12)

    def test_point_on_line(self):
        assert signed_point_line_distance(P(4, 4), P(0, 0), P(10, 10)) == pytest.approx(0.0, abs=1e-12)

    def test_direction_reversal_flips_sign(self):
        assert signed_point_line_distance(P(3, 5), P(0, 10), P(0, 0)) == pytest.approx(-3.0, abs=1e-12)

    def test_coincident_endpoints_raise(self):
        with pytest.raises(DegenerateGeometry):
            signed_point_line_distance(P(1, 2), P(3, 3), P(3, 3))

    def test_scales_linearly(self):
        rng = random.Random(5)
        for _ in range(200):
            p, a, b = (P(rng.uniform(-20, 20), rng.uniform(-20, 20)) for _ in range(3))
            if math.hypot(b.x - a.x, b.y - a.y) < 1e-6:
                continue
            k = rng.uniform(0.1, 10)
            d1 = signed_point_line_distance(p, a, b)
            d2 = signed_point_line_distance(
                P(p.x * k, p.y * k), P(a.x * k, a.y * k), P(b.x * k, b.y * k)
            )
            assert d2 == pytest.approx(k * d1, abs=1e-9 * max(1.0, k))


class TestToPhysical:
    def test_simple(self):
        assert to_physical(30.0, Calibration(0.1)) == pytest.approx(3.0, abs=1e-12)

    def test_zero(self):
        assert to_physical(0.0, Calibration(0.25)) == 0.0

    def test_table_style_value(self):
        # 63.4 px at 0.1 mm/px lands exactly on the 6.34 mm fixture target
        assert to_physical(63.4, Calibration(0.1)) == pytest.approx(6.34, abs=1e-12)

    def test_invalid_calibration(self):
        with pytest.raises(ValueError):
            Calibration(0.0)
        with pytest.raises(ValueError):
            Calibration(-1.0)
        with pytest.raises(ValueError):
            Calibration(float("nan"))


def _random_set(rng: random.Random, facing: str) -> LandmarkSet:
    sign = 1.0 if facing == FACING_RIGHT else -1.0
    pts = {
        "Po": P(rng.uniform(0, 100), rng.uniform(80, 120)),
    }
    pts["Or"] = P(pts["Po"].x + sign * rng.uniform(10, 80), rng.uniform(80, 120))
    pts["S"] = P(rng.uniform(40, 90), rng.uniform(40, 70))
    pts["N"] = P(pts["S"].x + sign * rng.uniform(10, 80), rng.uniform(40, 70))
    pts["A"] = P(rng.uniform(20, 180), rng.uniform(130, 150))
    pts["B"] = P(rng.uniform(20, 180), rng.uniform(160, 190))
    return LandmarkSet(points=pts, calibration=Calibration(0.1))


class TestNormalizeOrientation:
    def test_left_facing_is_mirrored(self):
        s = LandmarkSet(points={"Or": P(10, 50), "Po": P(90, 50)})
        out = normalize_orientation(s)
        assert out.orientation == FACING_RIGHT
        assert out.points["Or"].x > out.points["Po"].x
        # mirror preserves y and pairwise x-distance
        assert out.points["Or"].y == 50
        assert abs(out.points["Or"].x - out.points["Po"].x) == pytest.approx(80, abs=1e-9)

    def test_right_facing_unchanged(self):
        s = LandmarkSet(points={"Or": P(90, 50), "Po": P(10, 50), "N": P(80, 20)})
        out = normalize_orientation(s)
        assert out.points == s.points
        assert out.orientation == FACING_RIGHT

    def test_ns_fallback(self):
        s = LandmarkSet(points={"N": P(10, 20), "S": P(60, 25)})
        out = normalize_orientation(s)
        assert out.points["N"].x > out.points["S"].x

    def test_declared_orientation_fallback(self):
        s = LandmarkSet(points={"A": P(10, 20), "B": P(12, 40)}, orientation=FACING_LEFT)
        out = normalize_orientation(s)
        assert out.orientation == FACING_RIGHT
        assert out.points["A"].x != s.points["A"].x

    def test_undetermined(self):
        s = LandmarkSet(points={"A": P(10, 20)}, orientation=FACING_UNKNOWN)
        with pytest.raises(OrientationUndetermined):
            normalize_orientation(s)

    def test_idempotent_over_random_sets(self):
        rng = random.Random(42)
        for _ in range(1000):
            facing = FACING_LEFT if rng.random() < 0.5 else FACING_RIGHT
            s = _random_set(rng, facing)
            once = normalize_orientation(s)
            twice = normalize_orientation(once)
            assert twice.points == once.points
            assert twice.orientation == once.orientation


@given(
    x=st.floats(min_value=-1e6, max_value=1e6, allow_nan=False),
    y=st.floats(min_value=-1e6, max_value=1e6, allow_nan=False),
)
def test_point_accepts_finite(x, y):
    p = Point2(x, y)
    assert p.x == x and p.y == y


@given(v=st.sampled_from([float("nan"), float("inf"), -float("inf")]))
def test_point_rejects_non_finite(v):
    with pytest.raises(ValueError):
        Point2(v, 0.0)


@settings(max_examples=200)
@given(
    vx=st.floats(min_value=-100, max_value=100),
    vy=st.floats(min_value=-100, max_value=100),
    ang1=st.floats(min_value=0, max_value=2 * math.pi),
    ang2=st.floats(min_value=0, max_value=2 * math.pi),
    r1=st.floats(min_value=1.0, max_value=100.0),
    r2=st.floats(min_value=1.0, max_value=100.0),
    rot=st.floats(min_value=0, max_value=2 * math.pi),
    scale=st.floats(min_value=0.01, max_value=100.0),
)
def test_angle_rigid_motion_invariance(vx, vy, ang1, ang2, r1, r2, rot, scale):
    v = P(vx, vy)
    p1 = P(vx + r1 * math.cos(ang1), vy + r1 * math.sin(ang1))
    p2 = P(vx + r2 * math.cos(ang2), vy + r2 * math.sin(ang2))
    base = angle_at_vertex(v, p1, p2)

    c, s = math.cos(rot), math.sin(rot)

    def xform(p):
        return P(scale * (c * p.x - s * p.y) + 13.5, scale * (s * p.x + c * p.y) - 7.25)

    moved = angle_at_vertex(xform(v), xform(p1), xform(p2))
    assert moved == pytest.approx(base, abs=1e-9)
