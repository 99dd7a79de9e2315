"""Dual attractors, exact convex hulls (dimension <= 3), invariant simplices.

All hull computations run in exact rational arithmetic, so membership and
invariance checks are decisions, not tolerance calls.  Degenerate point sets
(affine dimension below the ambient one) come back as lower-dimensional hulls
carried by an explicit affine chart.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import rational as rat
from .system import AffineSystem, point

MAX_WORDS = 200_000
SIDES = ("sigma", "rho", "tau", "omega")


# ---------------------------------------------------------------------------
# word machinery for the four map families

def _generators(sys: AffineSystem, side: str):
    """Linear part M (shared) and the translation of each generator map."""
    if side == "sigma":
        M = sys.R.inverse
        trans = [p for p in sys.B]
    elif side == "rho":
        M = rat.inverse(sys.R.transpose)
        trans = [rat.vec_scale(-1, rat.mat_vec(M, l)) for l in sys.L]
    elif side == "tau":
        M = sys.R.transpose
        trans = [p for p in sys.L]
    elif side == "omega":
        M = sys.R.entries
        trans = [rat.vec_scale(-1, rat.mat_vec(M, b)) for b in sys.B]
    else:
        raise ValueError(f"side must be one of {SIDES}, got {side!r}")
    return M, trans


def _word_translations(M, trans, depth: int):
    """Translations of all length-`depth` compositions g_{w1} o ... o g_{wd}."""
    n_words = len(trans) ** depth
    if n_words > MAX_WORDS:
        raise ValueError(f"{n_words} words at depth {depth} exceeds the exact-arithmetic cap")
    current = [tuple(Fraction(0) for _ in trans[0])]
    for _ in range(depth):
        current = [rat.vec_add(c, rat.mat_vec(M, t)) for c in trans for t in current]
    return current


@dataclass(frozen=True)
class AttractorSample:
    side: str
    depth: int
    points: tuple

    def array(self) -> np.ndarray:
        return np.array(self.points, dtype=float)


def attractor_points(sys: AffineSystem, side: str, depth: int) -> AttractorSample:
    """Fixed points of every depth-n word on the contractive sides (sigma, rho);
    word images of 0 on the expansive sides (tau, omega)."""
    if depth < 1:
        raise ValueError("depth must be >= 1")
    M, trans = _generators(sys, side)
    words = _word_translations(M, trans, depth)
    if side in ("sigma", "rho"):
        Mn = rat.identity(sys.dim)
        for _ in range(depth):
            Mn = rat.mat_mul(M, Mn)
        ImMn = rat.mat(tuple(
            tuple(rat.identity(sys.dim)[i][j] - Mn[i][j] for j in range(sys.dim))
            for i in range(sys.dim)))
        if rat.det(ImMn) == 0:
            raise ValueError("I - M^n is singular; the word maps are not contractions")
        pts = [rat.solve(ImMn, t) for t in words]
    else:
        pts = words
    uniq = sorted(set(tuple(p) for p in pts))
    return AttractorSample(side, depth, tuple(uniq))


def word_images(sys: AffineSystem, side: str, depth: int) -> tuple:
    """Images of 0 under every depth-n word (the orbit truncation)."""
    M, trans = _generators(sys, side)
    return tuple(sorted(set(tuple(p) for p in _word_translations(M, trans, depth))))


# ---------------------------------------------------------------------------
# exact convex hulls

@dataclass(frozen=True)
class Polytope:
    """Convex polytope in exact coordinates.

    For full-dimensional hulls the chart is the identity; otherwise `origin`
    and `basis` give the affine subspace carrying the hull, and facets live in
    the chart coordinates.  `facets` is a tuple of (normal, offset) pairs with
    the meaning  normal . u <= offset.
    """

    ambient_dim: int
    affine_dim: int
    vertices: tuple                      # ambient points, sorted
    origin: tuple
    basis: tuple                         # affine_dim ambient vectors
    facets: tuple                        # halfspaces in chart coordinates
    ring: tuple = ()                     # CCW chart vertices (affine_dim == 2)
    faces: tuple = ()                    # outward-oriented triangles (affine_dim == 3)

    def chart_coords(self, x) -> tuple | None:
        """Exact chart coordinates of ambient point x, or None when x is off
        the carrying subspace."""
        x = point(x, self.ambient_dim)
        d = rat.vec_sub(x, self.origin)
        if self.affine_dim == 0:
            return () if all(c == 0 for c in d) else None
        cols = rat.transpose(rat.mat(self.basis))      # ambient_dim x k
        pivots = rat.pivot_columns(rat.mat(self.basis))
        sub = rat.mat(tuple(tuple(cols[i][j] for j in range(self.affine_dim))
                            for i in pivots))
        u = rat.solve(sub, tuple(d[i] for i in pivots))
        recon = tuple(sum(self.basis[j][i] * u[j] for j in range(self.affine_dim))
                      for i in range(self.ambient_dim))
        if tuple(recon) != tuple(d):
            return None
        return u

    def contains(self, x, strict: bool = False) -> bool:
        u = self.chart_coords(x)
        if u is None:
            return False
        if strict and self.affine_dim < self.ambient_dim:
            return False
        for n, c in self.facets:
            v = rat.dot(n, u)
            if v > c or (strict and v == c):
                return False
        return True

    def bounding_box(self):
        """Per-ambient-axis exact (min, max)."""
        return tuple((min(v[i] for v in self.vertices), max(v[i] for v in self.vertices))
                     for i in range(self.ambient_dim))

    def vertex_array(self) -> np.ndarray:
        return np.array(self.vertices, dtype=float)


def _affine_frame(pts):
    """Origin plus a maximal independent set of difference vectors."""
    origin = pts[0]
    basis = []
    for p in pts[1:]:
        d = rat.vec_sub(p, origin)
        if rat.rank(rat.mat(basis + [d])) > len(basis):
            basis.append(d)
    return origin, basis


def _hull_1d(us):
    umin, umax = min(us), max(us)
    facets = (((Fraction(1),), umax), ((Fraction(-1),), umin * -1))
    return (umin, umax), facets


def _cross2(o, a, b):
    return (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])


def _hull_2d(us):
    """Monotone chain; returns CCW ring of chart points."""
    pts = sorted(set(us))
    if len(pts) <= 2:
        return tuple(pts)
    lower = []
    for p in pts:
        while len(lower) >= 2 and _cross2(lower[-2], lower[-1], p) <= 0:
            lower.pop()
        lower.append(p)
    upper = []
    for p in reversed(pts):
        while len(upper) >= 2 and _cross2(upper[-2], upper[-1], p) <= 0:
            upper.pop()
        upper.append(p)
    return tuple(lower[:-1] + upper[:-1])


def _facets_2d(ring):
    facets = []
    k = len(ring)
    for i in range(k):
        a, b = ring[i], ring[(i + 1) % k]
        e = rat.vec_sub(b, a)
        n = (e[1], -e[0])                      # outward for CCW
        facets.append((n, rat.dot(n, a)))
    return tuple(facets)


def _orient3(a, b, c, p):
    m = rat.mat([rat.vec_sub(b, a), rat.vec_sub(c, a), rat.vec_sub(p, a)])
    return rat.det(m)


def _hull_3d(us):
    """Incremental hull; returns outward-oriented triangle list (chart points)."""
    pts = sorted(set(us))
    # initial non-degenerate tetrahedron
    a = pts[0]
    b = next(p for p in pts if p != a)
    c = next(p for p in pts if rat.rank(rat.mat([rat.vec_sub(b, a), rat.vec_sub(p, a)])) == 2)
    d = next(p for p in pts if _orient3(a, b, c, p) != 0)
    if _orient3(a, b, c, d) > 0:
        a, b, c = a, c, b
    faces = [(a, b, c), (a, d, b), (b, d, c), (a, c, d)]
    for p in pts:
        if p in (a, b, c, d):
            continue
        visible = [f for f in faces if _orient3(*f, p) > 0]
        if not visible:
            continue
        visible_set = set(visible)
        kept_edges = {(g[i], g[(i + 1) % 3])
                      for g in faces if g not in visible_set for i in range(3)}
        horizon = [(f[i], f[(i + 1) % 3])
                   for f in visible for i in range(3)
                   if (f[(i + 1) % 3], f[i]) in kept_edges]
        faces = [f for f in faces if f not in visible_set]
        for (u, v) in horizon:
            faces.append((u, v, p))
    return tuple(faces)


def _normalize_halfspace(n, c):
    """Scale (n, c) by a positive rational so entries become coprime integers."""
    den = 1
    for x in tuple(n) + (c,):
        den = den * x.denominator // math.gcd(den, x.denominator)
    ints = [int(x * den) for x in tuple(n) + (c,)]
    g = 0
    for v in ints:
        g = math.gcd(g, abs(v))
    g = g or 1
    ints = [Fraction(v, g) for v in ints]
    return tuple(ints[:-1]), ints[-1]


def _facets_3d(faces):
    facets = {}
    for (a, b, c) in faces:
        e1, e2 = rat.vec_sub(b, a), rat.vec_sub(c, a)
        n = (e1[1] * e2[2] - e1[2] * e2[1],
             e1[2] * e2[0] - e1[0] * e2[2],
             e1[0] * e2[1] - e1[1] * e2[0])
        facets[_normalize_halfspace(n, rat.dot(n, a))] = None
    return tuple(facets.keys())


def _filter_vertices(candidates, facets, k):
    """True vertices support >= k independent facet normals with equality."""
    out = []
    for v in candidates:
        active = [n for (n, c) in facets if rat.dot(n, v) == c]
        if active and rat.rank(rat.mat(active)) >= k:
            out.append(v)
    return out


def convex_hull(points) -> Polytope:
    """Exact convex hull of rational points in dimension <= 3.

    Degenerate inputs return the hull of their affine span, flagged through
    `affine_dim` and carried by the chart (origin, basis).
    """
    pts = sorted(set(tuple(point(p)) for p in points))
    if not pts:
        raise ValueError("convex hull of an empty point set")
    ambient = len(pts[0])
    origin, basis = _affine_frame(pts)
    k = len(basis)
    if k > 3:
        raise ValueError("exact hulls are implemented for affine dimension <= 3")

    if k == 0:
        return Polytope(ambient, 0, (pts[0],), pts[0], (), ())

    # exact chart coordinates of every input point
    probe = Polytope(ambient, k, (), origin, tuple(basis), ())
    us = [probe.chart_coords(p) for p in pts]

    if k == 1:
        (umin, umax), facets = _hull_1d([u[0] for u in us])
        chart_vs = [(umin,), (umax,)]
        ring, faces = (), ()
    elif k == 2:
        ring = _hull_2d(us)
        facets = _facets_2d(ring)
        chart_vs = _filter_vertices(ring, facets, 2)
        faces = ()
    else:
        faces = _hull_3d(us)
        facets = _facets_3d(faces)
        cand = sorted(set(itertools.chain.from_iterable(faces)))
        chart_vs = _filter_vertices(cand, facets, 3)
        ring = ()

    def to_ambient(u):
        return tuple(origin[i] + sum(basis[j][i] * u[j] for j in range(k))
                     for i in range(ambient))

    vertices = tuple(sorted(to_ambient(u) for u in chart_vs))

    if k == ambient:
        # rewrite halfspaces, ring and faces in ambient coordinates so the
        # chart becomes the identity
        cols = rat.transpose(rat.mat(basis))
        cols_inv_t = rat.transpose(rat.inverse(cols))
        amb_facets = []
        for n, c in facets:
            a = rat.mat_vec(cols_inv_t, n)
            amb_facets.append(_normalize_halfspace(a, c + rat.dot(a, origin)))
        ring = tuple(to_ambient(u) for u in ring)
        faces = tuple(tuple(to_ambient(u) for u in f) for f in faces)
        zero = tuple(Fraction(0) for _ in range(ambient))
        return Polytope(ambient, k, vertices, zero, rat.identity(ambient),
                        tuple(amb_facets), ring=ring, faces=faces)

    return Polytope(ambient, k, vertices, origin, tuple(basis), tuple(facets),
                    ring=tuple(ring), faces=tuple(faces))


def hull_volume(P: Polytope) -> Fraction:
    """Exact ambient-dimensional volume (0 for degenerate hulls)."""
    if P.affine_dim < P.ambient_dim:
        return Fraction(0)
    if P.ambient_dim == 1:
        vals = [v[0] for v in P.vertices]
        return max(vals) - min(vals)
    if P.ambient_dim == 2:
        ring = P.ring
        s = Fraction(0)
        for i in range(len(ring)):
            a, b = ring[i], ring[(i + 1) % len(ring)]
            s += a[0] * b[1] - b[0] * a[1]
        return abs(s) / 2
    s = Fraction(0)
    for (a, b, c) in P.faces:
        s += rat.det(rat.mat([a, b, c]))
    return abs(s) / 6


def simplex_Y(sys: AffineSystem, r=1) -> Polytope:
    """Invariant simplex with vertices 0 and -(rR - I)^{-1} l over nonzero l.

    Requires the scaled matrix rR to be a positive integer multiple of the
    identity (the only shape for which the simplex identity is proven); any
    other matrix raises and the caller should fall back to hulls of deep
    attractor samples.
    """
    r = rat.as_fraction(r)
    M = tuple(tuple(r * e for e in row) for row in sys.R.entries)
    d = sys.dim
    c = M[0][0]
    for i in range(d):
        for j in range(d):
            want = c if i == j else Fraction(0)
            if M[i][j] != want:
                raise ValueError("simplex construction needs rR = c*I; "
                                 "use convex_hull(attractor_points(..., 'rho', depth)) instead")
    if c.denominator != 1 or c < 2:
        raise ValueError("simplex construction needs an integer scale >= 2")
    MmI = tuple(tuple(M[i][j] - (1 if i == j else 0) for j in range(d)) for i in range(d))
    verts = [sys.zero()]
    for l in sys.L:
        if l == sys.zero():
            continue
        verts.append(rat.vec_scale(-1, rat.solve(MmI, l)))
    return convex_hull(verts)


@dataclass
class InvarianceReport:
    polytope: Polytope
    rows: list          # (l, vertex, s, image, inside)

    @property
    def passed(self) -> bool:
        return all(r[-1] for r in self.rows)

    def violations(self):
        return [r for r in self.rows if not r[-1]]


def invariance_check(sys: AffineSystem, P: Polytope) -> InvarianceReport:
    """Check rho_l-invariance of P exactly, including the midpoints
    R*^{-1}(v - s l) for s in {0, 1/2, 1}."""
    Rti = rat.inverse(sys.R.transpose)
    rows = []
    svals = (Fraction(0), Fraction(1, 2), Fraction(1))
    for l in sys.L:
        for v in P.vertices:
            for s in svals:
                img = rat.mat_vec(Rti, rat.vec_sub(v, rat.vec_scale(s, l)))
                rows.append((l, v, s, img, P.contains(img)))
    return InvarianceReport(P, rows)


def hausdorff_dimension(sys: AffineSystem):
    """ln N / ln r for similitudes R = r * (orthogonal matrix); None otherwise."""
    RtR = rat.mat_mul(rat.transpose(sys.R.entries), sys.R.entries)
    s = RtR[0][0]
    for i in range(sys.dim):
        for j in range(sys.dim):
            want = s if i == j else Fraction(0)
            if RtR[i][j] != want:
                return None
    return math.log(sys.N) / (0.5 * math.log(float(s)))


def support_hull(sys: AffineSystem, depth: int = 4) -> Polytope:
    """Convex hull of the depth-n sigma-side fixed points (the support side)."""
    return convex_hull(attractor_points(sys, "sigma", depth).points)


def dual_hull(sys: AffineSystem, depth: int = 4) -> Polytope:
    """Convex hull of the depth-n rho-side fixed points (the hull Y)."""
    return convex_hull(attractor_points(sys, "rho", depth).points)


def polytope_to_json(P: Polytope) -> dict:
    """Exact-vertex JSON form of a polytope ('p/q' strings)."""
    return {
        "ambient_dim": P.ambient_dim,
        "affine_dim": P.affine_dim,
        "vertices": [[rat.format_fraction(c) for c in v] for v in P.vertices],
    }


def hull_diameter(P: Polytope) -> float:
    best = Fraction(0)
    for a, b in itertools.combinations(P.vertices, 2):
        d = rat.dot(rat.vec_sub(a, b), rat.vec_sub(a, b))
        if d > best:
            best = d
    return math.sqrt(float(best))
