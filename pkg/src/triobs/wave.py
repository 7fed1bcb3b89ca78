"""Closed-form spectral solutions of u_tt = Δu with Dirichlet data.

Each mode evolves as a_k(t) = c_k cos(ω_k t) + (d_k/ω_k) sin(ω_k t) with
ω_k = √γ_k, the real form of the a_k e^{iωt} + b_k e^{−iωt} expansion.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .geometry import Tiling
from .spectral import (
    Basis,
    Domain,
    SpectralField,
    basis_norm2,
    basis_values,
    eigenvalue,
    folded_basis,
    weighted_sobolev_norm2,
)


@dataclass(frozen=True)
class WaveState:
    c: SpectralField   # u(0)
    d: SpectralField   # u_t(0)

    def __post_init__(self):
        if self.c.domain is not self.d.domain or self.c.basis is not self.d.basis:
            raise ValueError("initial position and velocity must share domain and basis")

    @property
    def domain(self) -> Domain:
        return self.c.domain

    @property
    def basis(self) -> Basis:
        return self.c.basis

    @property
    def modes(self) -> list:
        return sorted(set(self.c.coeffs) | set(self.d.coeffs))

    @classmethod
    def zero(cls, domain: Domain = Domain.TRIANGLE, basis: Basis = Basis.FOLDED) -> "WaveState":
        return cls(SpectralField(domain, {}, basis), SpectralField(domain, {}, basis))

    @classmethod
    def from_coeffs(cls, c: dict, d: dict | None = None, domain: Domain = Domain.TRIANGLE,
                    basis: Basis = Basis.FOLDED) -> "WaveState":
        return cls(SpectralField(domain, c, basis), SpectralField(domain, d or {}, basis))

    def omegas(self) -> np.ndarray:
        return np.sqrt([eigenvalue(k) for k in self.modes])

    def amplitudes(self, t) -> np.ndarray:
        """a_k(t) as an array of shape (len(t), n_modes)."""
        t = np.atleast_1d(np.asarray(t, dtype=float))
        modes = self.modes
        w = self.omegas()
        c = self.c.vector(modes)
        d = self.d.vector(modes)
        wt = t[:, None] * w[None, :]
        return c * np.cos(wt) + (d / w) * np.sin(wt)

    def velocities(self, t) -> np.ndarray:
        t = np.atleast_1d(np.asarray(t, dtype=float))
        modes = self.modes
        w = self.omegas()
        c = self.c.vector(modes)
        d = self.d.vector(modes)
        wt = t[:, None] * w[None, :]
        return -c * w * np.sin(wt) + d * np.cos(wt)


def evaluate(s: WaveState, t, p) -> np.ndarray:
    """u(t, x); returns shape (len(t), len(p)), squeezed for scalar t."""
    scalar_t = np.ndim(t) == 0
    modes = s.modes
    if not modes:
        out = np.zeros((np.size(t), len(np.atleast_2d(p))))
    else:
        out = s.amplitudes(t) @ basis_values(s.domain, s.basis, modes, p)
    return out[0] if scalar_t else out


def prolong_state(s: WaveState, t: Tiling) -> WaveState:
    """ū = N·u on the rectangle: coefficients times N in the same folded basis."""
    if s.domain is not Domain.TRIANGLE:
        raise ValueError("prolong_state expects a state on T")
    return WaveState(s.c.on(Domain.RECTANGLE).scaled(t.N), s.d.on(Domain.RECTANGLE).scaled(t.N))


def fold_state(s_bar: WaveState, t: Tiling) -> WaveState:
    if s_bar.domain is not Domain.RECTANGLE or s_bar.basis is not Basis.FOLDED:
        raise ValueError("fold_state expects a rectangle state in the folded basis")
    return WaveState(s_bar.c.on(Domain.TRIANGLE).scaled(1.0 / t.N),
                     s_bar.d.on(Domain.TRIANGLE).scaled(1.0 / t.N))


def energy_pair(s: WaveState) -> tuple[float, float]:
    """(‖u₀‖²_{L²}, ‖u₁‖²_{D⁻¹}) with the basis norms of the state's domain."""
    return weighted_sobolev_norm2(s.c, 0.0), weighted_sobolev_norm2(s.d, -1.0)


def conserved_energy(s: WaveState, t) -> np.ndarray:
    """Σ_k ‖b_k‖² (γ_k a_k² + a_k′²); constant in t."""
    modes = s.modes
    g = np.array([eigenvalue(k) for k in modes])
    w = np.array([basis_norm2(s.domain, s.basis, k) for k in modes])
    a = s.amplitudes(t)
    v = s.velocities(t)
    return (w * (g * a * a + v * v)).sum(axis=1)


def random_state(rng: np.random.Generator, kmax: int = 8) -> WaveState:
    """Standard-normal coefficients on every distinct folded mode with index <= kmax."""
    modes = folded_basis(kmax).modes
    c = rng.standard_normal(len(modes))
    d = rng.standard_normal(len(modes))
    return WaveState.from_coeffs(dict(zip(modes, c)), dict(zip(modes, d)))
