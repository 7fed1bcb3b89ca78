import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from triobs.geometry import (
    ALPHA_MAX,
    SQRT3,
    V0,
    V1,
    V2,
    ConvexPolygon,
    RigidTransform,
    Triangle,
    apply,
    base_rectangle,
    coverage_counts,
    edge_points,
    exadm_tiling,
    half_equilateral_triangle,
    inverse,
    pullback_union,
    r_alpha,
    rect_strip_region,
    strip_region,
    uniform_points,
    verify_region_equality,
    verify_tiling,
)

angles = st.floats(-2 * math.pi, 2 * math.pi, allow_nan=False)
coords = st.floats(-3, 3, allow_nan=False)


@given(angles, coords, coords)
def test_rotation_is_rigid_and_invertible(theta, cx, cy):
    r = RigidTransform.rotation(theta, (cx, cy))
    p = np.array([[0.3, -0.2], [1.0, 2.0]])
    q = r(p)
    assert np.isclose(np.linalg.norm(q[0] - q[1]), np.linalg.norm(p[0] - p[1]))
    assert np.allclose(apply(inverse(r), q), p, atol=1e-12)
    assert np.allclose(r(np.array([cx, cy])), [cx, cy], atol=1e-12)
    assert r.det == pytest.approx(1.0)


@given(coords, coords, coords, coords)
def test_reflection_fixes_its_line(ax, ay, bx, by):
    a, b = np.array([ax, ay]), np.array([bx, by])
    if np.linalg.norm(b - a) < 1e-3:
        return
    f = RigidTransform.reflection(a, b)
    assert f.det == pytest.approx(-1.0)
    mid = 0.3 * a + 0.7 * b
    assert np.allclose(f(mid), mid, atol=1e-10)
    p = np.array([1.5, -0.5])
    assert np.allclose(f(f(p)), p, atol=1e-10)


def test_compose_order():
    r = RigidTransform.rotation(math.pi / 2)
    s = RigidTransform(np.eye(2), np.array([1.0, 0.0]))
    p = np.array([1.0, 0.0])
    assert np.allclose(r.compose(s)(p), r(s(p)))
    assert np.allclose(s.compose(r)(p), [1.0, 1.0])


def test_non_orthogonal_rejected():
    with pytest.raises(ValueError):
        RigidTransform(np.array([[2.0, 0.0], [0.0, 1.0]]), np.zeros(2))


def test_triangle_shape():
    t = half_equilateral_triangle()
    assert t.area == pytest.approx(1 / (2 * SQRT3), abs=1e-15)
    assert np.allclose(sorted(map(tuple, t.vertices)), sorted(map(tuple, [V0, V1, V2])))
    # 30 degree angle at (0, 1)
    a = V0 - V2
    b = V1 - V2
    assert math.degrees(math.acos(a @ b / np.linalg.norm(a) / np.linalg.norm(b))) == pytest.approx(30.0)


def test_contains_and_boundary_distance():
    t = half_equilateral_triangle()
    p = np.array([[0.1, 0.1], [0.5, 0.5], [-0.1, 0.2], [0.0, 0.5]])
    assert t.contains(p).tolist() == [True, False, False, False]
    assert t.boundary_distance(np.array([[0.0, 0.5]]))[0] == pytest.approx(0.0)


def test_tiling_structure(tiling):
    assert tiling.N == 6
    assert tiling.delta == (1, -1, 1, 1, -1, 1)
    assert [round(k.det) for k in tiling.transforms] == list(tiling.delta)


def test_tiles_cover_rectangle_once(tiling):
    rep = verify_tiling(tiling, base_rectangle(), 50_000, seed=2)
    assert rep.passed
    assert rep.uncovered == 0.0 and rep.overlap == 0.0


def test_exadm_covers_its_rectangle():
    t = exadm_tiling()
    target = ConvexPolygon(np.array([[0, 0], [1 / SQRT3, 0], [1 / SQRT3, 1], [0, 1]]))
    assert verify_tiling(t, target, 20_000, seed=0).passed


def test_coverage_counts_exact_on_vertices(tiling):
    counts, clear = coverage_counts(tiling, np.array([[SQRT3 / 2, 0.5]]))
    assert not clear[0]


def test_edge_points_endpoints():
    x = edge_points(0, 2, [0.0, 1.0])
    assert np.allclose(x, [V2, V0])


@pytest.mark.parametrize("bad", [0.0, -0.1, 0.3, ALPHA_MAX * 1.001])
def test_alpha_range(bad):
    with pytest.raises(ValueError):
        strip_region(bad)


@given(st.floats(1e-4, ALPHA_MAX))
@settings(max_examples=25, deadline=None)
def test_strip_area(alpha):
    # area(S_alpha) = area(T) (1 - r^2)
    s = strip_region(alpha)
    area_t = half_equilateral_triangle().area
    assert s.area == pytest.approx(area_t * (1 - r_alpha(alpha) ** 2), rel=1e-12)


def test_r_alpha_vanishes_at_incenter():
    assert r_alpha(ALPHA_MAX) == 0.0
    # the inner triangle collapses onto the incenter (alpha, alpha)
    s = strip_region(ALPHA_MAX)
    assert s.area == pytest.approx(half_equilateral_triangle().area)


def test_strip_hole_excluded():
    s = strip_region(0.1)
    inner = np.array([[0.1 + 0.05, 0.1 + 0.05]])
    assert not s.contains(inner)[0]
    assert s.contains(np.array([[0.05, 0.5]]))[0]


def test_rect_strip_area():
    a = 0.125
    assert rect_strip_region(a).area == pytest.approx(a * 1 + SQRT3 * a - a * a, rel=1e-12)


@pytest.mark.parametrize("alpha", [0.03, 0.125, ALPHA_MAX])
def test_pullback_equals_strip(tiling, alpha):
    pb = pullback_union(tiling, rect_strip_region(alpha))
    rep = verify_region_equality(strip_region(alpha), pb, 20_000, 1e-9, seed=4)
    assert rep.passed
    assert pb.area == pytest.approx(strip_region(alpha).area, rel=1e-10)


def test_region_equality_detects_difference(tiling):
    rep = verify_region_equality(strip_region(0.1), strip_region(0.12), 20_000, 1e-9, seed=0)
    assert not rep.passed and len(rep.locations) == rep.disagreements


def test_pullback_pieces_overlap(tiling):
    pb = pullback_union(tiling, rect_strip_region(0.125))
    piece_area = sum(abs(Triangle(*tri).area) for per_h in pb.pieces() for poly in per_h
                     for tri in ConvexPolygon(poly).triangles())
    assert piece_area > pb.area * 1.05


def test_uniform_points_inside():
    rng = np.random.default_rng(0)
    p = uniform_points(half_equilateral_triangle(), 5000, rng)
    assert p.shape == (5000, 2)
    assert half_equilateral_triangle().contains(p).all()
    assert p[:, 0].mean() == pytest.approx(1 / (3 * SQRT3), abs=0.01)
