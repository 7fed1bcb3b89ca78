import numpy as np
import pytest

from triobs.geometry import base_rectangle, half_equilateral_triangle, uniform_points
from triobs.spectral import Basis, Domain, basis_values, eigenvalue, folded_basis
from triobs.wave import (
    WaveState,
    conserved_energy,
    energy_pair,
    evaluate,
    fold_state,
    prolong_state,
    random_state,
)


def test_single_mode_closed_form():
    k = (1, 3)
    s = WaveState.from_coeffs({k: 1.0}, {k: 2.0})
    w = np.sqrt(eigenvalue(k))
    p = np.array([[0.1, 0.3]])
    t = np.array([0.0, 0.2, 1.3])
    e = basis_values(Domain.TRIANGLE, Basis.FOLDED, [k], p)[0, 0]
    expect = (np.cos(w * t) + 2.0 / w * np.sin(w * t)) * e
    assert np.allclose(evaluate(s, t, p)[:, 0], expect, atol=1e-13)


def test_initial_data_reproduced():
    rng = np.random.default_rng(0)
    s = random_state(rng)
    a0 = s.amplitudes(0.0)[0]
    v0 = s.velocities(0.0)[0]
    assert np.allclose(a0, s.c.vector(s.modes))
    assert np.allclose(v0, s.d.vector(s.modes))


def test_wave_equation_by_finite_differences():
    rng = np.random.default_rng(1)
    s = random_state(rng, kmax=4)
    p = uniform_points(half_equilateral_triangle(), 20, rng)
    t, dt, h = 0.37, 1e-3, 1e-3
    u = lambda tt, q: evaluate(s, tt, q)
    utt = (u(t + dt, p) - 2 * u(t, p) + u(t - dt, p)) / dt**2
    ex, ey = np.array([h, 0]), np.array([0, h])
    lap = (u(t, p + ex) + u(t, p - ex) + u(t, p + ey) + u(t, p - ey) - 4 * u(t, p)) / h**2
    scale = np.abs(utt).max()
    assert np.abs(utt - lap).max() < 1e-3 * scale


def test_energy_conserved():
    s = random_state(np.random.default_rng(2))
    e = conserved_energy(s, np.linspace(0, 10, 50))
    assert np.ptp(e) < 1e-10 * e[0]


def test_energy_pair_matches_norms():
    k = (2, 4)
    s = WaveState.from_coeffs({k: 2.0}, {k: 3.0})
    n2 = folded_basis(4).norms2[folded_basis(4).modes.index(k)]
    e0, e1 = energy_pair(s)
    assert e0 == pytest.approx(4 * n2, rel=1e-12)
    assert e1 == pytest.approx(9 * n2 / eigenvalue(k), rel=1e-12)


def test_prolong_and_fold_roundtrip(tiling):
    s = random_state(np.random.default_rng(3))
    sb = prolong_state(s, tiling)
    assert sb.domain is Domain.RECTANGLE
    back = fold_state(sb, tiling)
    assert back.c.coeffs == pytest.approx(s.c.coeffs)
    assert back.d.coeffs == pytest.approx(s.d.coeffs)


def test_prolonged_energy_scaling(tiling):
    # true norms: factor N from the coefficients squared, N from the larger domain
    s = random_state(np.random.default_rng(4))
    sb = prolong_state(s, tiling)
    assert sum(energy_pair(sb)) == pytest.approx(tiling.N**3 * sum(energy_pair(s)), rel=1e-10)


def test_prolonged_solution_symmetry(tiling):
    rng = np.random.default_rng(5)
    sb = prolong_state(random_state(rng), tiling)
    x = uniform_points(base_rectangle(), 50, rng)
    t = np.array([0.0, 0.7, 3.1])
    for kh, d in zip(tiling.transforms, tiling.delta):
        assert np.allclose(evaluate(sb, t, kh(x)), d * evaluate(sb, t, x), atol=1e-11)


def test_zero_state():
    s = WaveState.zero()
    assert evaluate(s, 1.0, np.array([[0.1, 0.1]])).tolist() == [0.0]
    assert energy_pair(s) == (0.0, 0.0)


def test_mismatched_domains_rejected(tiling):
    s = random_state(np.random.default_rng(6))
    with pytest.raises(ValueError):
        WaveState(s.c, prolong_state(s, tiling).d)
    with pytest.raises(ValueError):
        prolong_state(prolong_state(s, tiling), tiling)


def test_random_state_reproducible():
    a = random_state(np.random.default_rng(7))
    b = random_state(np.random.default_rng(7))
    assert a.c.coeffs == b.c.coeffs and a.d.coeffs == b.d.coeffs
