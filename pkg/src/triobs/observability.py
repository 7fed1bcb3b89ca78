"""Observability constants, observed energies and inequality verification."""
from __future__ import annotations

import logging
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np
from numpy.polynomial.legendre import leggauss

from .geometry import (
    SQRT3,
    ALPHA_MAX,
    Region,
    Tiling,
    _union_triangles,
    pullback_union,
    r_alpha,
)
from .spectral import Basis, Domain, basis_values, eigenvalue, quadrature, triangle_rule
from .wave import WaveState, energy_pair, prolong_state

log = logging.getLogger(__name__)

STRIP_GEOMETRY_FACTOR = 40.0 / 3.0
LIMIT_RTOL = 1e-12


class ResolutionError(RuntimeError):
    """Doubling the quadrature resolution changed the result too much."""


# ----------------------------------------------------------------------------
# constants
# ----------------------------------------------------------------------------

def sin2_integral(a: float, b: float, length: float, k) -> np.ndarray:
    """∫_a^b sin²(π k x / length) dx, vectorized over k."""
    k = np.asarray(k, dtype=float)
    w = 2.0 * np.pi * k / length
    return (b - a) / 2.0 - (np.sin(w * b) - np.sin(w * a)) / (2.0 * w)


def sin2_infimum(a: float, b: float, length: float, k_max: int = 64) -> tuple[float, int | None]:
    """inf over k ≥ 1 of ∫_a^b sin²(πkx/L) dx and the minimizing k.

    The k-th integral is at least (b−a)/2 − L/(2πk), so once the running
    minimum is below that bound for k > k_max the infimum is certified;
    otherwise k_max is doubled. Returns ``(value, None)`` when the infimum is
    the k→∞ limit (b−a)/2, taken to relative round-off LIMIT_RTOL.
    """
    if not b > a:
        raise ValueError("empty interval")
    limit = (b - a) / 2.0
    while True:
        ks = np.arange(1, k_max + 1)
        vals = sin2_integral(a, b, length, ks)
        i = int(np.argmin(vals))
        best = float(vals[i])
        # within round-off of the limit: no k does better than k -> ∞
        if best >= limit * (1.0 - LIMIT_RTOL):
            return limit, None
        tail = limit - length / (2.0 * np.pi * (k_max + 1))
        if best <= tail:
            return best, int(ks[i])
        k_max *= 2


def _check_alpha(alpha: float) -> None:
    if not (0.0 < alpha <= ALPHA_MAX + 1e-15):
        raise ValueError(f"alpha must lie in (0, {ALPHA_MAX:.10f}], got {alpha}")


def t_alpha(alpha: float, k_max: int = 64) -> float:
    """inf_k ∫_0^α sin²(πkx/√3) dx."""
    _check_alpha(alpha)
    if k_max < 16:
        raise ValueError("k_max must be >= 16")
    return sin2_infimum(0.0, alpha, SQRT3, k_max)[0]


def t_alpha_argmin(alpha: float, k_max: int = 64) -> int | None:
    _check_alpha(alpha)
    return sin2_infimum(0.0, alpha, SQRT3, k_max)[1]


@dataclass(frozen=True)
class RectObsConstants:
    l1: float
    l2: float
    J1: tuple
    J2: tuple
    T: float
    t1: float
    t2: float
    m: float
    geometry_factor: float   # (l1²+l2²)(l1⁴+l2⁴)/(l1² l2²)
    time_threshold: float
    c: float

    @property
    def valid(self) -> bool:
        return self.m > 0.0 and self.c > 0.0


def rect_constants(l1: float, l2: float, J1, J2, T: float, k_max: int = 64) -> RectObsConstants:
    """Inverse-inequality constants for strips J1×(0,l2) ∪ (0,l1)×J2 of a rectangle."""
    if not (l1 > 0 and l2 > 0 and T > 0):
        raise ValueError("side lengths and T must be positive")
    (a1, b1), (a2, b2) = J1, J2
    if not (0.0 <= a1 < b1 <= l1 and 0.0 <= a2 < b2 <= l2):
        raise ValueError("J1, J2 must be nonempty subintervals of (0, l1), (0, l2)")
    t1 = sin2_infimum(a1, b1, l1, k_max)[0]
    t2 = sin2_infimum(a2, b2, l2, k_max)[0]
    m = min(t1 / l1, t2 / l2)
    geo = (l1**2 + l2**2) * (l1**4 + l2**4) / (l1**2 * l2**2)
    if m <= 0.0:
        log.warning("m = 0: the time condition can never hold")
        threshold = math.inf
    else:
        threshold = math.sqrt(geo / m)
    c = T / math.pi * (m - geo / T**2)
    return RectObsConstants(l1, l2, tuple(J1), tuple(J2), T, t1, t2, m, geo, threshold, c)


@dataclass(frozen=True)
class StripObsConstants:
    alpha: float
    r_alpha: float
    t_alpha: float
    argmin_k: int | None
    t_alpha_prime: float
    m_alpha: float
    T_alpha_derived: float
    T_alpha_paper: float

    def c_alpha(self, T: float) -> float:
        return T / math.pi * (self.t_alpha / SQRT3 - STRIP_GEOMETRY_FACTOR / T**2)

    @property
    def m_is_t_alpha_over_sqrt3(self) -> bool:
        return self.t_alpha / SQRT3 <= self.t_alpha_prime

    @property
    def printed_time_inconsistent(self) -> bool:
        """True when the printed closed form for T_α gives a non-positive c_α."""
        return self.c_alpha(self.T_alpha_paper) <= 0.0

    def as_dict(self, T: float | None = None) -> dict:
        d = {
            "alpha": self.alpha,
            "r_alpha": self.r_alpha,
            "t_alpha": self.t_alpha,
            "argmin_k": self.argmin_k,
            "t_alpha_prime": self.t_alpha_prime,
            "m_alpha": self.m_alpha,
            "T_alpha_derived": self.T_alpha_derived,
            "T_alpha_paper": self.T_alpha_paper,
            "c_alpha_at_T_alpha_paper": self.c_alpha(self.T_alpha_paper),
            "T_alpha_printed_inconsistent": self.printed_time_inconsistent,
        }
        if T is not None:
            d["T"] = T
            d["c_alpha"] = self.c_alpha(T)
        return d


def strip_constants(alpha: float, k_max: int = 64) -> StripObsConstants:
    _check_alpha(alpha)
    ta, kmin = sin2_infimum(0.0, alpha, SQRT3, k_max)
    tp = sin2_infimum(0.0, alpha, 1.0, k_max)[0]
    m = float(min(ta / SQRT3, tp))
    return StripObsConstants(
        alpha=alpha,
        r_alpha=r_alpha(alpha),
        t_alpha=ta,
        argmin_k=kmin,
        t_alpha_prime=tp,
        m_alpha=m,
        T_alpha_derived=math.sqrt(STRIP_GEOMETRY_FACTOR / m),
        T_alpha_paper=8.0 * math.sqrt(5.0 / SQRT3 * ta),
    )


# ----------------------------------------------------------------------------
# observed energy
# ----------------------------------------------------------------------------

def region_rule(region: Region, order: int, refine: int = 2):
    return quadrature(region, order, refine)


def time_rule(T: float, omega_max: float, nodes_per_period: int, panel_order: int = 8):
    """Composite Gauss–Legendre on [0, T] with >= nodes_per_period per period 2π/ω_max."""
    if T <= 0:
        raise ValueError("T must be positive")
    period = 2.0 * math.pi / max(omega_max, 1e-300)
    panels = max(1, math.ceil(T / period * nodes_per_period / panel_order))
    g, w = leggauss(panel_order)
    edges = np.linspace(0.0, T, panels + 1)
    h = np.diff(edges)
    t = (edges[:-1, None] + (g[None, :] + 1.0) * h[:, None] / 2.0).ravel()
    wt = (w[None, :] * h[:, None] / 2.0).ravel()
    return t, wt


class SpaceTimeIntegrator:
    """∫_0^T ∫_region |u|² for many states sharing a mode set.

    Uses |u|² = Σ_jk a_j a_k b_j b_k: a spatial Gram matrix of the basis
    over the region, contracted with a time Gram matrix of the modal
    amplitudes. Both factors are computed at two resolutions for the
    doubling gate.
    """

    def __init__(self, region: Region, modes: Sequence, domain: Domain, basis: Basis, T: float,
                 space_order: int = 20, time_nodes_per_period: int = 16, refine: int = 2,
                 triangles: list | None = None):
        self.modes = list(modes)
        self.T = float(T)
        self.domain, self.basis = domain, basis
        self.omega = np.sqrt([eigenvalue(k) for k in self.modes])
        self.grams = []
        self.time_rules = []
        for factor in (1, 2):
            self.grams.append(self._gram(region, triangles, space_order * factor, refine))
            wmax = float(self.omega.max()) if len(self.omega) else 1.0
            self.time_rules.append(time_rule(self.T, wmax, time_nodes_per_period * factor))

    def _gram(self, region, tris, order, refine):
        if not self.modes:
            return np.zeros((0, 0))
        if tris is not None:
            nodes, weights = triangle_rule(tris, order, refine)
        else:
            rule = quadrature(region, order, refine)
            nodes, weights = rule.nodes, rule.weights
        B = basis_values(self.domain, self.basis, self.modes, nodes)
        return (B * weights) @ B.T

    def _time_gram(self, s: WaveState, rule) -> np.ndarray:
        t, wt = rule
        c = s.c.vector(self.modes)
        d = s.d.vector(self.modes)
        wtm = t[:, None] * self.omega[None, :]
        A = c * np.cos(wtm) + (d / self.omega) * np.sin(wtm)
        return (A * wt[:, None]).T @ A

    def observed(self, s: WaveState, gate: float = 1e-6) -> float:
        if s.domain is not self.domain or s.basis is not self.basis:
            raise ValueError("state does not match the integrator's domain/basis")
        extra = set(s.modes) - set(self.modes)
        if extra:
            raise ValueError(f"state has modes outside the integrator: {sorted(extra)[:3]}")
        if not self.modes:
            return 0.0
        vals = [float(np.sum(G * self._time_gram(s, rule))) for G, rule in zip(self.grams, self.time_rules)]
        coarse, fine = vals
        scale = max(abs(fine), 1e-300)
        change = abs(fine - coarse) / scale
        if fine != 0.0 and change > gate:
            raise ResolutionError(f"doubling changed the observed energy by {change:.2e} (relative)")
        if fine != 0.0 and change > 1e-8:
            log.warning("observed energy converged only to %.1e relative", change)
        return fine


def observed_energy(s: WaveState, region: Region, T: float, space_order: int = 20,
                    time_nodes_per_period: int = 16) -> float:
    integ = SpaceTimeIntegrator(region, s.modes, s.domain, s.basis, T, space_order, time_nodes_per_period)
    return integ.observed(s)


# ----------------------------------------------------------------------------
# inequality checks
# ----------------------------------------------------------------------------

def conservation_upper_constant(T: float) -> float:
    """c₂ with ∫_0^T∫_Ω|u|² ≤ c₂ (‖u₀‖² + ‖u₁‖²₋₁).

    Each modal amplitude obeys a_k(t)² ≤ c_k² + d_k²/γ_k, so ‖u(t)‖² never
    exceeds the energy pair sum and c₂ = T bounds any subregion.
    """
    return float(T)


def worker_count() -> int | None:
    raw = os.environ.get("TRIOBS_THREADS")
    if not raw:
        return None
    n = int(raw)
    if n < 1:
        raise ValueError("TRIOBS_THREADS must be a positive integer")
    return n


@dataclass
class ObservabilityReport:
    T: float
    constants: tuple            # (c1, c2); either may be None
    direction: str
    energies: list              # per-state (‖u₀‖², ‖u₁‖²₋₁)
    observed: list
    lower_margins: list = field(default_factory=list)   # O − c1 E
    upper_margins: list = field(default_factory=list)   # c2 E − O

    @property
    def lower_pass(self) -> bool | None:
        if not self.lower_margins:
            return None
        return all(m >= 0.0 for m in self.lower_margins)

    @property
    def upper_pass(self) -> bool | None:
        if not self.upper_margins:
            return None
        return all(m >= 0.0 for m in self.upper_margins)

    @property
    def verdict(self) -> bool:
        return all(v is not False for v in (self.lower_pass, self.upper_pass))

    def per_state_verdicts(self) -> list:
        n = len(self.observed)
        low = self.lower_margins or [0.0] * n
        up = self.upper_margins or [0.0] * n
        return [lo >= 0.0 and u >= 0.0 for lo, u in zip(low, up)]

    def as_dict(self) -> dict:
        return {
            "T": self.T,
            "constants": list(self.constants),
            "direction": self.direction,
            "energy_pairs": [list(e) for e in self.energies],
            "observed": list(self.observed),
            "lower_margins": list(self.lower_margins),
            "upper_margins": list(self.upper_margins),
            "min_lower_margin": min(self.lower_margins) if self.lower_margins else None,
            "min_upper_margin": min(self.upper_margins) if self.upper_margins else None,
            "lower_pass": self.lower_pass,
            "upper_pass": self.upper_pass,
            "verdict": self.verdict,
        }


def _normalize_constants(constants) -> tuple:
    if isinstance(constants, (int, float)):
        return (float(constants), None)
    c1, c2 = constants
    return (None if c1 is None else float(c1), None if c2 is None else float(c2))


def check_inequality(states: Sequence[WaveState], region: Region, T: float, constants,
                     direction: str = "lower", space_order: int = 20,
                     time_nodes_per_period: int = 16) -> ObservabilityReport:
    """Check c₁E ≤ O (lower), O ≤ c₂E (upper) or both for every state."""
    if direction not in ("lower", "upper", "both"):
        raise ValueError("direction must be lower, upper or both")
    if T <= 0:
        raise ValueError("T must be positive")
    c1, c2 = _normalize_constants(constants)
    if states:
        dom, bas = states[0].domain, states[0].basis
        if any(s.domain is not dom or s.basis is not bas for s in states):
            raise ValueError("all states must share a domain and basis")
        modes = sorted(set().union(*(s.modes for s in states)))
        integ = SpaceTimeIntegrator(region, modes, dom, bas, T, space_order, time_nodes_per_period)
        with ThreadPoolExecutor(max_workers=worker_count()) as pool:
            observed = list(pool.map(integ.observed, states))
    else:
        observed = []
    energies = [energy_pair(s) for s in states]
    rep = ObservabilityReport(T, (c1, c2), direction, energies, observed)
    E = [sum(e) for e in energies]
    if direction in ("lower", "both"):
        rep.lower_margins = [o - c1 * e for o, e in zip(observed, E)]
    if direction in ("upper", "both"):
        rep.upper_margins = [c2 * e - o for o, e in zip(observed, E)]
    return rep


# ----------------------------------------------------------------------------
# tile / rectangle equivalence
# ----------------------------------------------------------------------------

@dataclass
class EquivalenceReport:
    N: int
    E_T: tuple
    E_R: tuple
    O_T: float
    O_R: float
    O_mult: float   # Σ_h ∫∫ over K_h⁻¹S̄ ∩ T, counting overlaps with multiplicity

    @property
    def energy_ratio(self) -> float:
        return _ratio(sum(self.E_R), sum(self.E_T))

    @property
    def observed_ratio(self) -> float:
        return _ratio(self.O_R, self.O_T)

    def stated_identities(self) -> dict:
        """Relative defects of E_R = N²E_T and O_R = N²O_T."""
        n2 = self.N**2
        return {
            "E_R = N^2 E_T": _rel(sum(self.E_R), n2 * sum(self.E_T)),
            "O_R = N^2 O_T": _rel(self.O_R, n2 * self.O_T),
        }

    def derived_identities(self) -> dict:
        """Relations that hold for overlapping pullback pieces and true norms."""
        n = self.N
        return {
            "E_R = N^3 E_T": _rel(sum(self.E_R), n**3 * sum(self.E_T)),
            "O_R = N^2 O_mult": _rel(self.O_R, n**2 * self.O_mult),
            "O_T <= O_mult": max(0.0, (self.O_T - self.O_mult) / max(self.O_T, 1e-300)),
            "O_mult <= N O_T": max(0.0, (self.O_mult - n * self.O_T) / max(self.O_T, 1e-300)),
        }

    def verdicts(self, c1: float) -> tuple[bool, bool]:
        """Lower-inequality verdicts with the same c₁ on (T, S) and (R, S̄)."""
        return (self.O_T - c1 * sum(self.E_T) >= 0.0, self.O_R - c1 * sum(self.E_R) >= 0.0)

    def as_dict(self) -> dict:
        return {
            "N": self.N,
            "E_T": list(self.E_T),
            "E_R": list(self.E_R),
            "O_T": self.O_T,
            "O_R": self.O_R,
            "O_mult": self.O_mult,
            "energy_ratio": self.energy_ratio,
            "observed_ratio": self.observed_ratio,
            "stated_identities": self.stated_identities(),
            "derived_identities": self.derived_identities(),
        }


def _ratio(a: float, b: float) -> float:
    return a / b if b != 0.0 else (1.0 if a == 0.0 else math.inf)


def _rel(a: float, b: float) -> float:
    if a == b:
        return 0.0
    return abs(a - b) / max(abs(a), abs(b))


class EquivalenceChecker:
    """Tile/rectangle comparison for many states on one region and horizon.

    For each state u on T with prolongation ū = N·u on the rectangle it
    computes E_T, E_R, O_T (over the pulled-back region), O_R (over S̄) and
    O_mult, the sum over tiles h of the integral over K_h⁻¹S̄ ∩ T.
    """

    def __init__(self, t: Tiling, s_bar_region: Region, T: float, modes: Sequence,
                 space_order: int = 20, time_nodes_per_period: int = 16):
        self.tiling = t
        self.modes = sorted(modes)
        pb = pullback_union(t, s_bar_region)
        kw = dict(space_order=space_order, time_nodes_per_period=time_nodes_per_period)
        tri, rect = (Domain.TRIANGLE, Basis.FOLDED), (Domain.RECTANGLE, Basis.FOLDED)
        self._on_T = SpaceTimeIntegrator(pb, self.modes, *tri, T, **kw)
        self._on_R = SpaceTimeIntegrator(s_bar_region, self.modes, *rect, T, **kw)
        self._pieces = [
            SpaceTimeIntegrator(pb, self.modes, *tri, T, triangles=_union_triangles(polys), **kw)
            for polys in pb.pieces() if polys
        ]

    def check(self, s: WaveState) -> EquivalenceReport:
        if s.domain is not Domain.TRIANGLE:
            raise ValueError("equivalence_check expects a state on T")
        s_bar = prolong_state(s, self.tiling)
        if not s.modes:
            return EquivalenceReport(self.tiling.N, (0.0, 0.0), (0.0, 0.0), 0.0, 0.0, 0.0)
        O_mult = sum(integ.observed(s) for integ in self._pieces)
        return EquivalenceReport(self.tiling.N, energy_pair(s), energy_pair(s_bar),
                                 self._on_T.observed(s), self._on_R.observed(s_bar), O_mult)


def equivalence_check(s: WaveState, t: Tiling, s_bar_region: Region, T: float,
                      space_order: int = 20, time_nodes_per_period: int = 16) -> EquivalenceReport:
    """Both sides of the tile/rectangle observability comparison for one state."""
    if s.domain is not Domain.TRIANGLE:
        raise ValueError("equivalence_check expects a state on T")
    if not s.modes:
        return EquivalenceReport(t.N, (0.0, 0.0), (0.0, 0.0), 0.0, 0.0, 0.0)
    return EquivalenceChecker(t, s_bar_region, T, s.modes, space_order, time_nodes_per_period).check(s)
