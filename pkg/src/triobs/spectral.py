"""Eigenfunctions, folding/prolongation, quadrature and spectral norms."""
from __future__ import annotations

import enum
import functools
import itertools
from dataclasses import dataclass, field
from typing import Callable, Iterable, NamedTuple, Sequence

import numpy as np
from numpy.polynomial.legendre import leggauss
from scipy.special import roots_jacobi

from .geometry import (
    SQRT3,
    ConvexPolygon,
    Region,
    Tiling,
    apply,
    as_points,
    base_rectangle,
    build_half_equilateral_tiling,
    half_equilateral_triangle,
    inverse,
)

Field = Callable[[np.ndarray], np.ndarray]


class Mode(NamedTuple):
    k1: int
    k2: int


def as_mode(k) -> Mode:
    k1, k2 = int(k[0]), int(k[1])
    if k1 < 1 or k2 < 1:
        raise ValueError(f"mode indices must be >= 1, got {(k1, k2)}")
    return Mode(k1, k2)


def mode_box(kmax: int) -> list[Mode]:
    return [Mode(a, b) for a in range(1, kmax + 1) for b in range(1, kmax + 1)]


class Domain(str, enum.Enum):
    TRIANGLE = "T"
    RECTANGLE = "R"


class Basis(str, enum.Enum):
    FOLDED = "folded"   # e_k = Σ_h δ_h ē_k∘K_h
    SINE = "sine"       # ē_k, rectangle only


class DegenerateModeError(ValueError):
    pass


class SeamError(ValueError):
    """Raised when a prolongation is evaluated on a tile boundary."""


# ----------------------------------------------------------------------------
# eigenpairs
# ----------------------------------------------------------------------------

def rect_eigenfunction(k, p) -> np.ndarray:
    """sin(π k1 x1/√3) sin(π k2 x2)."""
    p = np.asarray(p, dtype=float)
    return np.sin(np.pi * k[0] * p[..., 0] / SQRT3) * np.sin(np.pi * k[1] * p[..., 1])


def eigenvalue(k) -> float:
    return float(np.pi**2 * (k[0] ** 2 / 3.0 + k[1] ** 2))


def eigenvalue_without_pi2(k) -> float:
    """The k1²/3 + k2² convention; kept only to show it is off by π²."""
    return float(k[0] ** 2 / 3.0 + k[1] ** 2)


@dataclass(frozen=True)
class EigenPair:
    mode: Mode
    gamma: float
    omega: float

    @classmethod
    def of(cls, k) -> "EigenPair":
        g = eigenvalue(k)
        return cls(as_mode(k), g, float(np.sqrt(g)))


@functools.lru_cache(maxsize=None)
def default_tiling() -> Tiling:
    return build_half_equilateral_tiling()


def folded_eigenfunction(t: Tiling, k, p) -> np.ndarray:
    p = np.asarray(p, dtype=float)
    out = np.zeros(p.shape[:-1])
    for kh, d in zip(t.transforms, t.delta):
        out += d * rect_eigenfunction(k, apply(kh, p))
    return out


# ----------------------------------------------------------------------------
# folding and prolongation
# ----------------------------------------------------------------------------

def fold(t: Tiling, g: Field) -> Field:
    """F_δ g(x) = N⁻² Σ_h δ_h g(K_h x)."""
    scale = 1.0 / t.N**2

    def folded(p):
        p = as_points(p)
        return scale * sum(d * g(apply(kh, p)) for kh, d in zip(t.transforms, t.delta))

    return folded


def locate_tile(t: Tiling, p, seam_tol: float = 1e-12) -> tuple[np.ndarray, np.ndarray]:
    """Tile index h and preimage K_h⁻¹p for each point; raises on seams."""
    p = as_points(p)
    idx = np.full(len(p), -1)
    pre = np.empty_like(p)
    for h, kh in enumerate(t.transforms):
        q = apply(inverse(kh), p)
        hit = t.base.contains(q) & (t.base.boundary_distance(q) > seam_tol)
        idx[hit] = h
        pre[hit] = q[hit]
    if np.any(idx < 0):
        bad = p[idx < 0][0]
        raise SeamError(f"point {bad.tolist()} lies on a tile seam or outside the tiled domain")
    return idx, pre


def prolong(t: Tiling, f: Field) -> Field:
    """P_δ f(K_h x) = δ_h f(x)."""
    delta = np.asarray(t.delta, dtype=float)

    def prolonged(p):
        idx, pre = locate_tile(t, p)
        return delta[idx] * f(pre)

    return prolonged


# ----------------------------------------------------------------------------
# quadrature
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class QuadratureRule:
    nodes: np.ndarray
    weights: np.ndarray
    domain: Region | None = None

    def integrate(self, values: np.ndarray) -> float:
        return float(np.dot(self.weights, values))

    @property
    def total_weight(self) -> float:
        return float(self.weights.sum())


@functools.lru_cache(maxsize=64)
def _collapsed_reference(order: int) -> tuple[np.ndarray, np.ndarray]:
    # reference triangle (0,0),(1,0),(0,1); y = (1-x) s
    tj, wj = roots_jacobi(order, 1.0, 0.0)
    x = (tj + 1.0) / 2.0
    wx = wj / 4.0
    s, ws = leggauss(order)
    s = (s + 1.0) / 2.0
    ws = ws / 2.0
    X, S = np.meshgrid(x, s, indexing="ij")
    nodes = np.column_stack([X.ravel(), ((1.0 - X) * S).ravel()])
    weights = np.outer(wx, ws).ravel()
    return nodes, weights


def _subdivide(tri: np.ndarray, m: int) -> list[np.ndarray]:
    a, b, c = tri
    e1 = (b - a) / m
    e2 = (c - a) / m
    out = []
    for i in range(m):
        for j in range(m - i):
            p = a + i * e1 + j * e2
            out.append(np.array([p, p + e1, p + e2]))
            if i + j < m - 1:
                out.append(np.array([p + e1, p + e1 + e2, p + e2]))
    return out


def triangle_rule(triangles: Sequence[np.ndarray], order: int, refine: int = 1) -> tuple[np.ndarray, np.ndarray]:
    ref_nodes, ref_w = _collapsed_reference(order)
    nodes, weights = [], []
    for big in triangles:
        for tri in _subdivide(np.asarray(big, dtype=float), refine):
            a, b, c = tri
            # affine map from the reference triangle
            J = np.column_stack([b - a, c - a])
            area2 = abs(np.linalg.det(J))
            nodes.append(ref_nodes @ J.T + a)
            weights.append(ref_w * area2)
    if not nodes:
        return np.zeros((0, 2)), np.zeros(0)
    return np.concatenate(nodes), np.concatenate(weights)


def _axis_aligned_box(r: Region):
    if isinstance(r, ConvexPolygon) and len(r.vertices) == 4:
        v = r.vertices
        xs, ys = np.unique(v[:, 0]), np.unique(v[:, 1])
        if len(xs) == 2 and len(ys) == 2:
            return (xs[0], ys[0]), (xs[1], ys[1])
    return None


def quadrature(domain: Region, order: int, refine: int = 1) -> QuadratureRule:
    """Tensor Gauss–Legendre on rectangles, collapsed Gauss on triangulations.

    ``refine`` splits each rectangle axis (or each triangle edge) into that
    many panels. Rectangles integrate degree 2·order−1 per axis exactly;
    triangle cells integrate total degree 2·order−1 exactly.
    """
    if order < 1 or refine < 1:
        raise ValueError("order and refine must be >= 1")
    box = _axis_aligned_box(domain)
    if box is not None:
        (x0, y0), (x1, y1) = box
        g, w = leggauss(order)
        def axis(lo, hi):
            edges = np.linspace(lo, hi, refine + 1)
            h = np.diff(edges)
            pts = (edges[:-1, None] + (g[None, :] + 1.0) * h[:, None] / 2.0).ravel()
            wts = (w[None, :] * h[:, None] / 2.0).ravel()
            return pts, wts
        px, wx = axis(x0, x1)
        py, wy = axis(y0, y1)
        X, Y = np.meshgrid(px, py, indexing="ij")
        nodes = np.column_stack([X.ravel(), Y.ravel()])
        weights = np.outer(wx, wy).ravel()
    else:
        nodes, weights = triangle_rule(domain.triangles(), order, refine)
    return QuadratureRule(nodes, weights, domain)


def inner_product(f: Field, g: Field, rule: QuadratureRule) -> float:
    return float(np.sum(rule.weights * f(rule.nodes) * g(rule.nodes)))


# default resolutions; rectangle rule resolves modes up to ~(32, 32)
DEFAULT_T_ORDER = 20
DEFAULT_T_REFINE = 2
DEFAULT_R_ORDER = 32
DEFAULT_R_REFINE = 2


@functools.lru_cache(maxsize=8)
def default_rule(domain: Domain, order: int | None = None, refine: int | None = None) -> QuadratureRule:
    if domain is Domain.TRIANGLE:
        return quadrature(half_equilateral_triangle(), order or DEFAULT_T_ORDER, refine or DEFAULT_T_REFINE)
    return quadrature(base_rectangle(), order or DEFAULT_R_ORDER, refine or DEFAULT_R_REFINE)


# ----------------------------------------------------------------------------
# bases and spectral fields
# ----------------------------------------------------------------------------

def basis_function(domain: Domain, basis: Basis, k, tiling: Tiling | None = None) -> Field:
    if basis is Basis.SINE:
        if domain is not Domain.RECTANGLE:
            raise ValueError("the sine basis lives on the rectangle")
        return lambda p: rect_eigenfunction(k, p)
    t = tiling or default_tiling()
    return lambda p: folded_eigenfunction(t, k, p)


def basis_values(domain: Domain, basis: Basis, modes: Sequence, p, tiling: Tiling | None = None) -> np.ndarray:
    """Array of shape (len(modes), n_points)."""
    p = as_points(p)
    if not modes:
        return np.zeros((0, len(p)))
    if basis is Basis.SINE:
        k = np.asarray(modes, dtype=float)
        return (np.sin(np.pi * k[:, :1] * p[None, :, 0] / SQRT3)
                * np.sin(np.pi * k[:, 1:] * p[None, :, 1]))
    t = tiling or default_tiling()
    out = np.zeros((len(modes), len(p)))
    for kh, d in zip(t.transforms, t.delta):
        out += d * basis_values(Domain.RECTANGLE, Basis.SINE, modes, apply(kh, p))
    return out


@functools.lru_cache(maxsize=None)
def basis_norm2(domain: Domain, basis: Basis, k) -> float:
    """‖basis_k‖² in L²(domain); exact for the sine basis, quadrature otherwise."""
    k = as_mode(k)
    if basis is Basis.SINE:
        return SQRT3 / 4.0
    rule = default_rule(domain)
    v = basis_values(domain, basis, [k], rule.nodes)[0]
    return float(np.dot(rule.weights, v * v))


@dataclass(frozen=True)
class SpectralField:
    """Finite expansion Σ c_k basis_k on a domain."""

    domain: Domain
    coeffs: dict = field(default_factory=dict)
    basis: Basis = Basis.FOLDED

    def __post_init__(self):
        if self.domain is Domain.TRIANGLE and self.basis is not Basis.FOLDED:
            raise ValueError("fields on T use the folded basis")
        clean = {}
        for k, v in self.coeffs.items():
            v = float(v)
            if not np.isfinite(v):
                raise ValueError(f"non-finite coefficient for mode {k}")
            clean[as_mode(k)] = v
        object.__setattr__(self, "coeffs", clean)

    @property
    def modes(self) -> list[Mode]:
        return sorted(self.coeffs)

    def vector(self, modes: Sequence | None = None) -> np.ndarray:
        modes = self.modes if modes is None else modes
        return np.array([self.coeffs.get(as_mode(k), 0.0) for k in modes])

    def scaled(self, factor: float) -> "SpectralField":
        return SpectralField(self.domain, {k: factor * v for k, v in self.coeffs.items()}, self.basis)

    def on(self, domain: Domain) -> "SpectralField":
        return SpectralField(domain, dict(self.coeffs), self.basis)

    def __call__(self, p) -> np.ndarray:
        modes = self.modes
        return self.vector(modes) @ basis_values(self.domain, self.basis, modes, p)


def project(f: Field, modes: Iterable, rule: QuadratureRule, domain: Domain,
            basis: Basis = Basis.FOLDED) -> SpectralField:
    """Coefficients ⟨f, b_k⟩ / ⟨b_k, b_k⟩ by the given quadrature rule."""
    modes = [as_mode(k) for k in modes]
    B = basis_values(domain, basis, modes, rule.nodes)
    fv = f(rule.nodes)
    num = B @ (rule.weights * fv)
    den = (B * B) @ rule.weights
    for k, d in zip(modes, den):
        if d < 1e-12:
            raise DegenerateModeError(f"basis function for mode {tuple(k)} vanishes (norm² = {d:.3e})")
    return SpectralField(domain, dict(zip(modes, num / den)), basis)


def sobolev_norm(f: SpectralField, s: float) -> float:
    """(Σ γ_k^s c_k²)^{1/2}, coefficients taken as given."""
    return float(np.sqrt(sum(eigenvalue(k) ** s * c * c for k, c in f.coeffs.items())))


def weighted_sobolev_norm2(f: SpectralField, s: float) -> float:
    """Σ γ_k^s c_k² ‖basis_k‖²: the true D^s norm for an orthogonal basis."""
    return float(sum(eigenvalue(k) ** s * c * c * basis_norm2(f.domain, f.basis, k)
                     for k, c in f.coeffs.items()))


# ----------------------------------------------------------------------------
# the folded basis on T: vanishing and coinciding indices
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class FoldedBasis:
    """Distinct nonzero folded eigenfunctions among the indices of a box.

    Many raw indices give e_k ≡ 0 and the nonzero ones coincide (up to sign)
    in groups related by a 60° rotation of the frequency vector, so the raw
    index set is not a basis. ``modes`` keeps the lexicographically first
    index of each group; ``aliases`` maps every nonzero index to
    ``(representative, sign)`` with e_k = sign · e_rep.
    """

    kmax: int
    modes: tuple
    norms2: tuple
    aliases: dict
    vanishing: tuple

    @property
    def size(self) -> int:
        return len(self.modes)

    def canonical(self, field_: SpectralField) -> SpectralField:
        """Rewrite a field on raw indices in terms of representatives."""
        out: dict = {}
        for k, c in field_.coeffs.items():
            if k in self.vanishing:
                continue
            rep, sign = self.aliases[k]
            out[rep] = out.get(rep, 0.0) + sign * c
        return SpectralField(field_.domain, out, field_.basis)


@functools.lru_cache(maxsize=16)
def folded_basis(kmax: int, rel_zero: float = 1e-10, alias_tol: float = 1e-8) -> FoldedBasis:
    rule = default_rule(Domain.TRIANGLE)
    raw = mode_box(kmax)
    V = basis_values(Domain.TRIANGLE, Basis.FOLDED, raw, rule.nodes)
    G = (V * rule.weights) @ V.T
    n2 = np.diag(G).copy()
    # a nonzero e_k has ‖e_k‖² = O(1); the bar ē_k carries ‖·‖²_T ≈ area/4
    zero = n2 < rel_zero
    reps: list[int] = []
    aliases: dict = {}
    for i, k in enumerate(raw):
        if zero[i]:
            continue
        for r in reps:
            cos = G[i, r] / np.sqrt(n2[i] * n2[r])
            if abs(cos) > 1.0 - alias_tol:
                aliases[k] = (raw[r], 1 if cos > 0 else -1)
                break
        else:
            reps.append(i)
            aliases[k] = (k, 1)
    return FoldedBasis(
        kmax=kmax,
        modes=tuple(raw[i] for i in reps),
        norms2=tuple(float(n2[i]) for i in reps),
        aliases=aliases,
        vanishing=tuple(k for k, z in zip(raw, zero) if z),
    )


# ----------------------------------------------------------------------------
# admissibility and eigenvalue checks
# ----------------------------------------------------------------------------

@dataclass
class AdmissibilityReport:
    maxima: dict          # sign vector -> max |F_δ φ| on ∂(base)
    n_fields: int
    n_boundary: int

    def admissible_for(self, delta, tol: float = 1e-10) -> bool:
        return self.maxima[tuple(delta)] < tol

    @property
    def min_over_signs(self) -> float:
        return min(self.maxima.values())


def boundary_samples(poly: ConvexPolygon, n: int) -> np.ndarray:
    lam = np.linspace(0.0, 1.0, n)[:, None]
    v = poly.vertices
    return np.concatenate([a + lam * (b - a) for a, b in zip(v, np.roll(v, -1, axis=0))])


def check_admissibility(t: Tiling, trial_fields: Sequence[Field], boundary_samples_per_edge: int = 200,
                        signs: Iterable | None = None) -> AdmissibilityReport:
    """Largest boundary trace of F_δ′φ over the trial fields, per sign vector δ′.

    ``signs=None`` checks the tiling's own δ; ``signs="all"`` every vector in
    {−1, 1}^N.
    """
    if signs is None:
        signs = [t.delta]
    elif signs == "all":
        signs = list(itertools.product((1, -1), repeat=t.N))
    pts = boundary_samples(t.base, boundary_samples_per_edge)
    maxima = {}
    for delta in signs:
        td = t.with_delta(delta)
        worst = 0.0
        for phi in trial_fields:
            worst = max(worst, float(np.abs(fold(td, phi)(pts)).max()))
        maxima[tuple(int(d) for d in delta)] = worst
    return AdmissibilityReport(maxima, len(trial_fields), len(pts))


def random_sine_combination(rng: np.random.Generator, lengths=(SQRT3, 1.0), kmax: int = 4) -> Field:
    """Σ a_k sin(π k1 x1/L1) sin(π k2 x2/L2); vanishes on ∂((0,L1)×(0,L2))."""
    L1, L2 = lengths
    ks = np.array(mode_box(kmax), dtype=float)
    a = rng.standard_normal(len(ks))

    def phi(p):
        p = as_points(p)
        s = np.sin(np.pi * ks[:, :1] * p[None, :, 0] / L1) * np.sin(np.pi * ks[:, 1:] * p[None, :, 1] / L2)
        return a @ s

    return phi


def fd_laplacian(f: Field, p, h: float = 1e-3) -> np.ndarray:
    p = as_points(p)
    ex = np.array([h, 0.0])
    ey = np.array([0.0, h])
    return (f(p + ex) + f(p - ex) + f(p + ey) + f(p - ey) - 4.0 * f(p)) / h**2


@dataclass
class EigenResidual:
    mode: Mode
    gamma: float
    residual: float       # max |Δ_h f + γ f|
    bound: float          # 10 γ² h²
    rayleigh: float       # −Σ f Δ_h f / Σ f²

    @property
    def passed(self) -> bool:
        return self.residual <= self.bound


def eigen_residual(f: Field, k, p, h: float = 1e-3, gamma: float | None = None) -> EigenResidual:
    p = as_points(p)
    g = eigenvalue(k) if gamma is None else gamma
    lap = fd_laplacian(f, p, h)
    fv = f(p)
    denom = float(np.dot(fv, fv))
    ray = float(-np.dot(fv, lap) / denom) if denom > 0 else float("nan")
    return EigenResidual(as_mode(k), g, float(np.abs(lap + g * fv).max()), 10.0 * g * g * h * h, ray)
