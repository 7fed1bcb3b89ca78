"""Rigid motions, polygonal regions and the six-tile covering of the rectangle.

Regions are exact predicates over vectorized point arrays of shape ``(n, 2)``.
Each region also knows how to split itself into triangles for quadrature and
how far a point is from its boundary, which the Monte-Carlo checks use to
discard points in a thin band where membership is numerically ambiguous.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

SQRT3 = float(np.sqrt(3.0))

#: Vertices of the half-equilateral triangle T.
V0 = np.array([0.0, 0.0])
V1 = np.array([1.0 / SQRT3, 0.0])
V2 = np.array([0.0, 1.0])

#: Largest strip width for which the strip region is defined (incenter offset).
ALPHA_MAX = 1.0 / (3.0 + SQRT3)

BOUNDARY_EPS = 1e-9


def as_points(p) -> np.ndarray:
    """Return ``p`` as a float array of shape (n, 2)."""
    arr = np.asarray(p, dtype=float)
    if arr.ndim == 1:
        arr = arr.reshape(1, 2)
    if arr.shape[-1] != 2:
        raise ValueError(f"points must have trailing dimension 2, got {arr.shape}")
    return arr


# ----------------------------------------------------------------------------
# rigid transforms
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class RigidTransform:
    """x -> linear @ x + shift with an orthogonal ``linear``."""

    linear: np.ndarray
    shift: np.ndarray

    def __post_init__(self):
        lin = np.asarray(self.linear, dtype=float).reshape(2, 2)
        sh = np.asarray(self.shift, dtype=float).reshape(2)
        if np.abs(lin.T @ lin - np.eye(2)).max() > 1e-12:
            raise ValueError("linear part is not orthogonal")
        lin.setflags(write=False)
        sh.setflags(write=False)
        object.__setattr__(self, "linear", lin)
        object.__setattr__(self, "shift", sh)

    @classmethod
    def identity(cls) -> "RigidTransform":
        return cls(np.eye(2), np.zeros(2))

    @classmethod
    def rotation(cls, angle: float, center=(0.0, 0.0)) -> "RigidTransform":
        c, s = np.cos(angle), np.sin(angle)
        lin = np.array([[c, -s], [s, c]])
        center = np.asarray(center, dtype=float)
        return cls(lin, center - lin @ center)

    @classmethod
    def reflection(cls, a, b) -> "RigidTransform":
        """Reflection across the line through points ``a`` and ``b``."""
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        d = (b - a) / np.linalg.norm(b - a)
        n = np.array([-d[1], d[0]])
        lin = np.eye(2) - 2.0 * np.outer(n, n)
        return cls(lin, a - lin @ a)

    @classmethod
    def point_symmetry(cls, center) -> "RigidTransform":
        center = np.asarray(center, dtype=float)
        return cls(-np.eye(2), 2.0 * center)

    @property
    def det(self) -> float:
        return float(np.linalg.det(self.linear))

    def __call__(self, p) -> np.ndarray:
        return apply(self, p)

    def compose(self, inner: "RigidTransform") -> "RigidTransform":
        """Return ``self ∘ inner``."""
        return RigidTransform(self.linear @ inner.linear, self.linear @ inner.shift + self.shift)


def apply(t: RigidTransform, p) -> np.ndarray:
    """Evaluate ``t`` at one point (shape (2,)) or many (shape (n, 2))."""
    arr = np.asarray(p, dtype=float)
    out = arr @ t.linear.T + t.shift
    return out


def inverse(t: RigidTransform) -> RigidTransform:
    lin = t.linear.T
    return RigidTransform(lin, -lin @ t.shift)


# ----------------------------------------------------------------------------
# regions
# ----------------------------------------------------------------------------

def _segment_distance(p: np.ndarray, a: np.ndarray, b: np.ndarray) -> np.ndarray:
    ab = b - a
    L2 = float(ab @ ab)
    if L2 == 0.0:
        return np.linalg.norm(p - a, axis=1)
    s = np.clip(((p - a) @ ab) / L2, 0.0, 1.0)
    return np.linalg.norm(p - (a + s[:, None] * ab), axis=1)


def _fan(vertices: np.ndarray) -> list[np.ndarray]:
    tris = []
    for i in range(1, len(vertices) - 1):
        tri = np.array([vertices[0], vertices[i], vertices[i + 1]])
        if abs(_signed_area(tri)) > 1e-15:
            tris.append(tri)
    return tris


def _signed_area(poly: np.ndarray) -> float:
    x, y = poly[:, 0], poly[:, 1]
    return 0.5 * float(np.dot(x, np.roll(y, -1)) - np.dot(y, np.roll(x, -1)))


class Region:
    """Base class. Subclasses implement the four methods below."""

    def contains(self, p) -> np.ndarray:  # open set membership
        raise NotImplementedError

    def boundary_distance(self, p) -> np.ndarray:
        raise NotImplementedError

    def triangles(self) -> list[np.ndarray]:
        """Disjoint triangles whose union is the region (up to measure zero)."""
        raise NotImplementedError

    @property
    def bbox(self) -> tuple[np.ndarray, np.ndarray]:
        raise NotImplementedError

    @property
    def area(self) -> float:
        return float(sum(abs(_signed_area(t)) for t in self.triangles()))


@dataclass(frozen=True, eq=False)
class ConvexPolygon(Region):
    """Open convex polygon; vertices are stored counter-clockwise."""

    vertices: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.vertices, dtype=float).reshape(-1, 2)
        if len(v) < 3:
            raise ValueError("polygon needs at least 3 vertices")
        a = _signed_area(v)
        if abs(a) <= 1e-12:
            raise ValueError("degenerate polygon (area <= 1e-12)")
        if a < 0:
            v = v[::-1].copy()
        v.setflags(write=False)
        object.__setattr__(self, "vertices", v)

    def _edges(self):
        v = self.vertices
        return zip(v, np.roll(v, -1, axis=0))

    def contains(self, p) -> np.ndarray:
        p = as_points(p)
        inside = np.ones(len(p), dtype=bool)
        for a, b in self._edges():
            cross = (b[0] - a[0]) * (p[:, 1] - a[1]) - (b[1] - a[1]) * (p[:, 0] - a[0])
            inside &= cross > 0.0
        return inside

    def boundary_distance(self, p) -> np.ndarray:
        p = as_points(p)
        return np.min([_segment_distance(p, a, b) for a, b in self._edges()], axis=0)

    def triangles(self) -> list[np.ndarray]:
        return _fan(self.vertices)

    @property
    def bbox(self):
        return self.vertices.min(axis=0), self.vertices.max(axis=0)

    @property
    def area(self) -> float:
        return abs(_signed_area(self.vertices))

    def transformed(self, t: RigidTransform) -> "ConvexPolygon":
        return ConvexPolygon(apply(t, self.vertices))


def Triangle(a, b, c) -> ConvexPolygon:
    return ConvexPolygon(np.array([a, b, c], dtype=float))


def Rectangle(lo, hi) -> ConvexPolygon:
    (x0, y0), (x1, y1) = lo, hi
    if not (x0 < x1 and y0 < y1):
        raise ValueError("rectangle needs lo < hi componentwise")
    return ConvexPolygon(np.array([[x0, y0], [x1, y0], [x1, y1], [x0, y1]], dtype=float))


@dataclass(frozen=True, eq=False)
class EmptyRegion(Region):
    def contains(self, p):
        return np.zeros(len(as_points(p)), dtype=bool)

    def boundary_distance(self, p):
        return np.full(len(as_points(p)), np.inf)

    def triangles(self):
        return []

    @property
    def bbox(self):
        return np.zeros(2), np.zeros(2)

    @property
    def area(self):
        return 0.0


@dataclass(frozen=True, eq=False)
class PolygonUnion(Region):
    """Union of convex polygons.

    ``disjoint=True`` promises the parts have disjoint interiors, so their
    triangles can be concatenated for quadrature. Otherwise the union is
    computed with shapely before triangulating.
    """

    parts: tuple
    disjoint: bool = False

    def contains(self, p):
        p = as_points(p)
        out = np.zeros(len(p), dtype=bool)
        for part in self.parts:
            out |= part.contains(p)
        return out

    def boundary_distance(self, p):
        # includes seams between parts; harmless for band exclusion
        p = as_points(p)
        return np.min([part.boundary_distance(p) for part in self.parts], axis=0)

    def triangles(self):
        if self.disjoint:
            return [t for part in self.parts for t in part.triangles()]
        return _union_triangles([part.vertices for part in self.parts])

    @property
    def bbox(self):
        los, his = zip(*(part.bbox for part in self.parts))
        return np.min(los, axis=0), np.max(his, axis=0)


@dataclass(frozen=True, eq=False)
class Difference(Region):
    """``outer`` minus the closure of ``hole`` (hole assumed inside outer)."""

    outer: ConvexPolygon
    hole: Region
    pieces: tuple = ()

    def contains(self, p):
        p = as_points(p)
        inside_hole = self.hole.contains(p) | (self.hole.boundary_distance(p) == 0.0)
        return self.outer.contains(p) & ~inside_hole

    def boundary_distance(self, p):
        p = as_points(p)
        return np.minimum(self.outer.boundary_distance(p), self.hole.boundary_distance(p))

    def triangles(self):
        return [t for piece in self.pieces for t in piece.triangles()]

    @property
    def bbox(self):
        return self.outer.bbox


@dataclass(frozen=True, eq=False)
class DegeneratePoint(Region):
    """A single point viewed as a (closed) region with empty interior."""

    point: np.ndarray

    def contains(self, p):
        return np.zeros(len(as_points(p)), dtype=bool)

    def boundary_distance(self, p):
        return np.linalg.norm(as_points(p) - self.point, axis=1)

    def triangles(self):
        return []

    @property
    def bbox(self):
        return self.point, self.point


def _union_triangles(polys: Sequence[np.ndarray]) -> list[np.ndarray]:
    import shapely
    from shapely.geometry import Polygon

    merged = shapely.union_all([Polygon(v) for v in polys if len(v) >= 3])
    if merged.is_empty:
        return []
    tris = shapely.constrained_delaunay_triangles(merged)
    out = []
    for g in tris.geoms:
        xy = np.asarray(g.exterior.coords)[:3]
        if abs(_signed_area(xy)) > 1e-15:
            out.append(xy)
    return out


def half_equilateral_triangle() -> ConvexPolygon:
    return Triangle(V0, V1, V2)


def base_rectangle() -> ConvexPolygon:
    return Rectangle((0.0, 0.0), (SQRT3, 1.0))


def contains(r: Region, p) -> np.ndarray:
    """Open-set membership. Points within ~1e-12 of ∂r may go either way."""
    return r.contains(p)


# ----------------------------------------------------------------------------
# tilings
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class Tiling:
    base: ConvexPolygon
    transforms: tuple
    delta: tuple

    def __post_init__(self):
        if len(self.transforms) != len(self.delta):
            raise ValueError("need one sign per transform")
        if any(abs(d) != 1 for d in self.delta):
            raise ValueError("signs must be +1 or -1")

    @property
    def N(self) -> int:
        return len(self.transforms)

    def tiles(self) -> list[ConvexPolygon]:
        return [self.base.transformed(k) for k in self.transforms]

    def with_delta(self, delta) -> "Tiling":
        return Tiling(self.base, self.transforms, tuple(int(d) for d in delta))


@dataclass
class TilingReport:
    n_samples: int
    n_used: int
    once: float
    uncovered: float
    overlap: float
    area_defect: float

    @property
    def passed(self) -> bool:
        return self.once == 1.0 and abs(self.area_defect) < 1e-12


def build_half_equilateral_tiling(check: bool = True) -> Tiling:
    """The six rigid motions tiling (0,√3)×(0,1) by T, with δ=(1,−1,1,1,−1,1).

    K2 reflects across the hypotenuse, K3 rotates by +π/3 about (0,1), K6 is
    the point symmetry about the rectangle center and K4 = K6∘K3,
    K5 = K6∘K2.
    """
    center = np.array([SQRT3 / 2.0, 0.5])
    k1 = RigidTransform.identity()
    k2 = RigidTransform.reflection(V1, V2)
    k3 = RigidTransform.rotation(np.pi / 3.0, center=V2)
    k6 = RigidTransform.point_symmetry(center)
    k4 = k6.compose(k3)
    k5 = k6.compose(k2)
    tiling = Tiling(half_equilateral_triangle(), (k1, k2, k3, k4, k5, k6), (1, -1, 1, 1, -1, 1))
    if check:
        rep = verify_tiling(tiling, base_rectangle(), 20_000, seed=0)
        gaps = edge_identity_gaps(tiling, n_lambda=11)
        if not rep.passed or max(gaps.values()) > 1e-12:
            raise RuntimeError("half-equilateral tiling failed its own verification")
    return tiling


def exadm_tiling() -> Tiling:
    """Two-tile, non-admissible tiling of (0,1/√3)×(0,1) by T."""
    k2 = RigidTransform(-np.eye(2), np.array([1.0 / SQRT3, 1.0]))
    return Tiling(half_equilateral_triangle(), (RigidTransform.identity(), k2), (1, 1))


def uniform_points(region: Region, n: int, rng: np.random.Generator) -> np.ndarray:
    """``n`` points uniform in ``region`` by rejection from its bounding box."""
    lo, hi = region.bbox
    out = []
    have = 0
    while have < n:
        batch = rng.uniform(lo, hi, size=(max(2 * (n - have), 1024), 2))
        batch = batch[region.contains(batch)]
        out.append(batch)
        have += len(batch)
    return np.concatenate(out)[:n]


def coverage_counts(t: Tiling, p: np.ndarray, eps: float = BOUNDARY_EPS):
    """Per-point tile counts and a mask of points clear of every tile boundary."""
    p = as_points(p)
    counts = np.zeros(len(p), dtype=int)
    clear = np.ones(len(p), dtype=bool)
    for k in t.transforms:
        q = apply(inverse(k), p)
        counts += t.base.contains(q)
        clear &= t.base.boundary_distance(q) > eps
    return counts, clear


def verify_tiling(t: Tiling, target: Region, n_samples: int, seed: int,
                  eps: float = BOUNDARY_EPS) -> TilingReport:
    if n_samples < 1:
        raise ValueError("n_samples must be >= 1")
    rng = np.random.default_rng(seed)
    p = uniform_points(target, n_samples, rng)
    counts, clear = coverage_counts(t, p, eps)
    clear &= target.boundary_distance(p) > eps
    c = counts[clear]
    used = max(len(c), 1)
    return TilingReport(
        n_samples=n_samples,
        n_used=int(len(c)),
        once=float(np.sum(c == 1) / used),
        uncovered=float(np.sum(c == 0) / used),
        overlap=float(np.sum(c >= 2) / used),
        area_defect=t.N * t.base.area - target.area,
    )


def edge_points(i: int, j: int, lam) -> np.ndarray:
    """x_ij^λ = λ v_i + (1−λ) v_j on the boundary of T."""
    v = (V0, V1, V2)
    lam = np.asarray(lam, dtype=float)[:, None]
    return lam * v[i] + (1.0 - lam) * v[j]


# Identities used to show the folded trace vanishes on ∂T; tile indices are 1-based.
EDGE_EQUALITIES = (
    ((0, 1), 2, 4),
    ((0, 1), 3, 5),
    ((0, 2), 2, 3),
    ((0, 2), 4, 5),
    ((1, 2), 1, 2),
    ((1, 2), 5, 6),
)
EDGE_LANDINGS = (
    ((0, 1), (1, 6)),
    ((0, 2), (1, 6)),
    ((1, 2), (3, 4)),
)
# as printed alongside the others; contradicts K2=K3 and K4=K5 on the same edge
PRINTED_EDGE_EQUALITY = ((0, 2), 3, 5)


def _rect_boundary_distance(p: np.ndarray) -> np.ndarray:
    return np.abs(base_rectangle().boundary_distance(p))


def edge_identity_gaps(t: Tiling, n_lambda: int = 100) -> dict[str, float]:
    """Max violation of every pairwise edge identity and boundary landing."""
    lam = np.linspace(0.0, 1.0, n_lambda)
    K = t.transforms
    gaps = {}
    for (i, j), a, b in EDGE_EQUALITIES:
        x = edge_points(i, j, lam)
        gaps[f"K{a}(x{i}{j})=K{b}(x{i}{j})"] = float(np.abs(apply(K[a - 1], x) - apply(K[b - 1], x)).max())
    for (i, j), hs in EDGE_LANDINGS:
        x = edge_points(i, j, lam)
        for h in hs:
            gaps[f"K{h}(x{i}{j}) in dR"] = float(_rect_boundary_distance(apply(K[h - 1], x)).max())
    return gaps


def printed_identity_gap(t: Tiling, n_lambda: int = 100) -> float:
    (i, j), a, b = PRINTED_EDGE_EQUALITY
    x = edge_points(i, j, np.linspace(0.0, 1.0, n_lambda))
    return float(np.abs(apply(t.transforms[a - 1], x) - apply(t.transforms[b - 1], x)).max())


# ----------------------------------------------------------------------------
# observation regions
# ----------------------------------------------------------------------------

def _check_alpha(alpha: float) -> None:
    if not (0.0 < alpha <= ALPHA_MAX + 1e-15):
        raise ValueError(f"alpha must lie in (0, 1/(3+sqrt(3))] ~ (0, {ALPHA_MAX:.6f}], got {alpha}")


def r_alpha(alpha: float) -> float:
    return float(max(1.0 - alpha * (3.0 + SQRT3), 0.0))


def strip_region(alpha: float) -> Difference:
    """T minus the closed triangle r_α T + (α, α): width-α strips along ∂T."""
    _check_alpha(alpha)
    r = r_alpha(alpha)
    outer = half_equilateral_triangle()
    off = np.array([alpha, alpha])
    inner_v = np.array([V0, V1, V2]) * r + off
    if r > 0.0:
        hole = ConvexPolygon(inner_v)
    else:
        hole = DegeneratePoint(off)
    pieces = []
    ov = np.array([V0, V1, V2])
    for i in range(3):
        j = (i + 1) % 3
        quad = np.array([ov[i], ov[j], inner_v[j], inner_v[i]])
        if r == 0.0:
            quad = quad[:3]
        pieces.append(ConvexPolygon(quad))
    return Difference(outer, hole, tuple(pieces))


def rect_strip_region(alpha: float) -> PolygonUnion:
    """[(0,α)×(0,1)] ∪ [(0,√3)×(0,α)] in the rectangle."""
    _check_alpha(alpha)
    return PolygonUnion(
        (Rectangle((0.0, 0.0), (alpha, 1.0)), Rectangle((0.0, 0.0), (SQRT3, alpha))),
        disjoint=False,
    )


def _clip(subject: np.ndarray, clipper: np.ndarray) -> np.ndarray:
    """Sutherland–Hodgman clip of a polygon by a convex CCW polygon."""
    out = subject
    for a, b in zip(clipper, np.roll(clipper, -1, axis=0)):
        if len(out) == 0:
            break
        inp, out = out, []
        side = lambda q: (b[0] - a[0]) * (q[1] - a[1]) - (b[1] - a[1]) * (q[0] - a[0])
        for k in range(len(inp)):
            cur, prev = inp[k], inp[k - 1]
            sc, sp = side(cur), side(prev)
            if sc >= 0:
                if sp < 0:
                    out.append(prev + (cur - prev) * (sp / (sp - sc)))
                out.append(cur)
            elif sp >= 0:
                out.append(prev + (cur - prev) * (sp / (sp - sc)))
        out = np.array(out) if out else np.zeros((0, 2))
    return np.asarray(out)


@dataclass(frozen=True, eq=False)
class Pullback(Region):
    """Points p of the tile with K_h p ∈ s_bar for some h."""

    tiling: Tiling
    s_bar: Region
    _pieces: tuple = field(default=(), repr=False)

    def contains(self, p):
        p = as_points(p)
        hit = np.zeros(len(p), dtype=bool)
        for k in self.tiling.transforms:
            hit |= self.s_bar.contains(apply(k, p))
        return self.tiling.base.contains(p) & hit

    def boundary_distance(self, p):
        p = as_points(p)
        d = self.tiling.base.boundary_distance(p)
        for k in self.tiling.transforms:
            d = np.minimum(d, self.s_bar.boundary_distance(apply(k, p)))
        return d

    def pieces(self) -> list[list[np.ndarray]]:
        """Per tile h, the convex polygons K_h^{-1}(part) ∩ base."""
        parts = _convex_parts(self.s_bar)
        out = []
        for k in self.tiling.transforms:
            kinv = inverse(k)
            polys = []
            for part in parts:
                clipped = _clip(apply(kinv, part), self.tiling.base.vertices)
                if len(clipped) >= 3 and abs(_signed_area(clipped)) > 1e-15:
                    polys.append(clipped)
            out.append(polys)
        return out

    def triangles(self):
        polys = [poly for per_h in self.pieces() for poly in per_h]
        return _union_triangles(polys) if polys else []

    @property
    def bbox(self):
        return self.tiling.base.bbox


def _convex_parts(r: Region) -> list[np.ndarray]:
    if isinstance(r, ConvexPolygon):
        return [r.vertices]
    if isinstance(r, PolygonUnion):
        return [p.vertices for p in r.parts]
    if isinstance(r, EmptyRegion):
        return []
    if isinstance(r, Difference):
        return [p.vertices for p in r.pieces]
    raise TypeError(f"cannot decompose {type(r).__name__} into convex parts")


def pullback_union(t: Tiling, s_bar: Region) -> Pullback:
    return Pullback(t, s_bar)


@dataclass
class EqualityReport:
    n_samples: int
    n_used: int
    disagreements: int
    locations: np.ndarray

    @property
    def passed(self) -> bool:
        return self.disagreements == 0


def verify_region_equality(a: Region, b: Region, n_samples: int, boundary_eps: float,
                           seed: int) -> EqualityReport:
    if n_samples < 1 or not boundary_eps > 0:
        raise ValueError("need n_samples >= 1 and boundary_eps > 0")
    lo = np.minimum(a.bbox[0], b.bbox[0])
    hi = np.maximum(a.bbox[1], b.bbox[1])
    rng = np.random.default_rng(seed)
    p = rng.uniform(lo, hi, size=(n_samples, 2))
    clear = (a.boundary_distance(p) > boundary_eps) & (b.boundary_distance(p) > boundary_eps)
    diff = (a.contains(p) != b.contains(p)) & clear
    return EqualityReport(n_samples, int(clear.sum()), int(diff.sum()), p[diff])
