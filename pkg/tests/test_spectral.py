import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from triobs.geometry import SQRT3, base_rectangle, half_equilateral_triangle, uniform_points
from triobs.spectral import (
    Basis,
    DegenerateModeError,
    Domain,
    SeamError,
    SpectralField,
    basis_norm2,
    basis_values,
    default_rule,
    eigen_residual,
    eigenvalue,
    folded_basis,
    folded_eigenfunction,
    inner_product,
    locate_tile,
    mode_box,
    project,
    prolong,
    quadrature,
    rect_eigenfunction,
    sobolev_norm,
    triangle_rule,
    weighted_sobolev_norm2,
)


def test_eigenvalue_formula():
    assert eigenvalue((1, 3)) == pytest.approx(28 * math.pi**2 / 3)
    assert eigenvalue((2, 1)) == pytest.approx(math.pi**2 * (4 / 3 + 1))


@given(st.integers(0, 7), st.integers(0, 7))
@settings(max_examples=30, deadline=None)
def test_triangle_rule_exact_on_monomials(i, j):
    # ∫_T x^i y^j by the Beta-function closed form on the reference triangle, scaled to T
    rule = quadrature(half_equilateral_triangle(), 10)
    a = 1 / SQRT3
    exact = a ** (i + 1) * math.factorial(i) * math.factorial(j) / math.factorial(i + j + 2)
    vals = rule.nodes[:, 0] ** i * rule.nodes[:, 1] ** j
    assert rule.integrate(vals) == pytest.approx(exact, rel=1e-12)


def test_rectangle_rule():
    rule = quadrature(base_rectangle(), 16, refine=2)
    assert rule.total_weight == pytest.approx(SQRT3, rel=1e-14)
    assert rule.integrate(rule.nodes[:, 0] ** 2) == pytest.approx(SQRT3**3 / 3, rel=1e-13)


def test_triangle_rule_refinement_total():
    tri = half_equilateral_triangle().vertices
    _, w = triangle_rule([tri], 4, refine=3)
    assert w.sum() == pytest.approx(half_equilateral_triangle().area, rel=1e-14)
    assert (w > 0).all()


def test_sine_orthogonality_on_rectangle():
    rule = default_rule(Domain.RECTANGLE)
    f = lambda p: rect_eigenfunction((1, 1), p)
    g = lambda p: rect_eigenfunction((2, 1), p)
    assert abs(inner_product(f, g, rule)) < 1e-12
    assert inner_product(f, f, rule) == pytest.approx(SQRT3 / 4, rel=1e-12)


def test_folded_basis_structure():
    fb = folded_basis(8)
    assert fb.modes[0] == (1, 3)
    assert min(fb.modes, key=eigenvalue) == (1, 3)
    assert len(fb.modes) == 12
    for k in fb.vanishing:
        assert not (k[0] % 2 == k[1] % 2 and k[0] != k[1] and k[0] != 3 * k[1])
    assert np.allclose(fb.norms2, SQRT3 / 2, rtol=1e-10)
    # e_(1,3) = ± e_(4,2) = ± e_(5,1)
    assert fb.aliases[(4, 2)][0] == (1, 3) and fb.aliases[(5, 1)][0] == (1, 3)


def test_aliases_share_eigenvalue():
    fb = folded_basis(8)
    for k, (rep, sign) in fb.aliases.items():
        assert eigenvalue(k) == pytest.approx(eigenvalue(rep))


def test_alias_signs_hold_pointwise():
    fb = folded_basis(8)
    rng = np.random.default_rng(0)
    p = uniform_points(half_equilateral_triangle(), 200, rng)
    for k, (rep, sign) in fb.aliases.items():
        a = basis_values(Domain.TRIANGLE, Basis.FOLDED, [k], p)[0]
        b = basis_values(Domain.TRIANGLE, Basis.FOLDED, [rep], p)[0]
        assert np.allclose(a, sign * b, atol=1e-12)


def test_canonical_rewrites_aliases():
    fb = folded_basis(8)
    f = SpectralField(Domain.TRIANGLE, {(4, 2): 2.0, (1, 1): 5.0})
    g = fb.canonical(f)
    assert g.modes == [(1, 3)]
    assert g.coeffs[(1, 3)] == fb.aliases[(4, 2)][1] * 2.0


def test_folded_eigenfunction_vanishes_on_boundary(tiling):
    lam = np.linspace(0, 1, 50)[:, None]
    v = half_equilateral_triangle().vertices
    edges = np.concatenate([a + lam * (b - a) for a, b in zip(v, np.roll(v, -1, axis=0))])
    for k in folded_basis(8).modes:
        assert np.abs(folded_eigenfunction(tiling, k, edges)).max() < 1e-12


def test_folded_modes_are_eigenfunctions():
    rng = np.random.default_rng(1)
    p = uniform_points(half_equilateral_triangle(), 100, rng)
    for k in folded_basis(6).modes:
        f = lambda q, k=k: basis_values(Domain.TRIANGLE, Basis.FOLDED, [k], q)[0]
        assert eigen_residual(f, k, p, h=1e-3).passed


def test_rectangle_norm_is_six_times_triangle():
    for k in folded_basis(6).modes:
        assert basis_norm2(Domain.RECTANGLE, Basis.FOLDED, k) == pytest.approx(
            6 * basis_norm2(Domain.TRIANGLE, Basis.FOLDED, k), rel=1e-10)


def test_project_self_and_linear():
    rule = default_rule(Domain.TRIANGLE)
    k1, k2 = (1, 3), (2, 4)
    f = SpectralField(Domain.TRIANGLE, {k1: 3.0, k2: -2.0})
    c = project(f, [k1, k2, (1, 5)], rule, Domain.TRIANGLE)
    assert c.coeffs[k1] == pytest.approx(3.0, abs=1e-8)
    assert c.coeffs[k2] == pytest.approx(-2.0, abs=1e-8)
    assert abs(c.coeffs[(1, 5)]) < 1e-8


def test_project_degenerate_mode():
    rule = default_rule(Domain.TRIANGLE)
    f = SpectralField(Domain.TRIANGLE, {(1, 3): 1.0})
    with pytest.raises(DegenerateModeError):
        project(f, [(1, 1)], rule, Domain.TRIANGLE)


def test_sine_projection_on_rectangle():
    rule = default_rule(Domain.RECTANGLE)
    f = lambda p: 2 * rect_eigenfunction((1, 2), p) - rect_eigenfunction((3, 1), p)
    c = project(f, [(1, 2), (3, 1)], rule, Domain.RECTANGLE, Basis.SINE)
    assert c.coeffs == pytest.approx({(1, 2): 2.0, (3, 1): -1.0}, abs=1e-10)


def test_sobolev_norms():
    f = SpectralField(Domain.TRIANGLE, {(1, 3): 2.0})
    assert sobolev_norm(f, 0) == pytest.approx(2.0)
    assert sobolev_norm(f, 1) == pytest.approx(2 * math.sqrt(eigenvalue((1, 3))))
    assert weighted_sobolev_norm2(f, 0) == pytest.approx(4 * SQRT3 / 2, rel=1e-10)
    rule = default_rule(Domain.TRIANGLE)
    assert weighted_sobolev_norm2(f, 0) == pytest.approx(inner_product(f, f, rule), rel=1e-10)


def test_triangle_field_requires_folded_basis():
    with pytest.raises(ValueError):
        SpectralField(Domain.TRIANGLE, {(1, 1): 1.0}, Basis.SINE)


def test_nonfinite_coefficient_rejected():
    with pytest.raises(ValueError):
        SpectralField(Domain.TRIANGLE, {(1, 3): float("nan")})


def test_locate_tile_and_seams(tiling):
    idx, pre = locate_tile(tiling, np.array([[0.1, 0.1], [1.5, 0.9]]))
    assert idx[0] == 0 and np.allclose(pre[0], [0.1, 0.1])
    assert idx[1] != 0
    with pytest.raises(SeamError):
        locate_tile(tiling, np.array([[SQRT3 / 2, 0.5]]))


def test_prolong_matches_rectangle_basis(tiling):
    rng = np.random.default_rng(2)
    p = uniform_points(base_rectangle(), 300, rng)
    for k in folded_basis(6).modes:
        u = lambda q, k=k: basis_values(Domain.TRIANGLE, Basis.FOLDED, [k], q)[0]
        assert np.allclose(prolong(tiling, u)(p), basis_values(Domain.RECTANGLE, Basis.FOLDED, [k], p)[0],
                           atol=1e-12)


def test_mode_box():
    assert len(mode_box(3)) == 9
    assert mode_box(2)[0] == (1, 1)
