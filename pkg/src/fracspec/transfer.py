"""Transfer operator on grid functions over the hull Y, fixed-point iteration,
the Lebesgue second fixed point, and the contractivity constants."""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np
from scipy import optimize

from . import geometry, rational as rat
from .geometry import Polytope
from .system import AffineSystem, chi_B_batch

DEFAULT_PAD = 0.05
MIN_RESOLUTION = 8


# ---------------------------------------------------------------------------
# grid functions (with an affine chart for degenerate hulls)

@dataclass
class Chart:
    """Affine parametrization u -> origin + u @ basis of the carrying subspace."""
    origin: np.ndarray           # (ambient,)
    basis: np.ndarray            # (k, ambient), rows independent

    @property
    def k(self) -> int:
        return self.basis.shape[0]

    def ambient(self, U: np.ndarray) -> np.ndarray:
        return self.origin + np.atleast_2d(U) @ self.basis

    def param(self, X: np.ndarray, tol: float | None = 1e-9) -> np.ndarray:
        X = np.atleast_2d(X) - self.origin
        pinv = self.basis.T @ np.linalg.inv(self.basis @ self.basis.T)
        U = X @ pinv
        if tol is not None:
            resid = np.abs(U @ self.basis - X).max() if X.size else 0.0
            if resid > tol:
                raise ValueError(f"point leaves the hull's carrying subspace "
                                 f"(residual {resid:.2e})")
        return U

    def metric(self) -> np.ndarray:
        return self.basis @ self.basis.T


def identity_chart(dim: int) -> Chart:
    return Chart(np.zeros(dim), np.eye(dim))


class GridFunction:
    """Real samples on a uniform rectangular grid in chart coordinates,
    with multilinear interpolation."""

    def __init__(self, axes, values, chart: Chart):
        self.axes = tuple(np.asarray(a, dtype=float) for a in axes)
        self.chart = chart
        self.values = np.asarray(values, dtype=float)
        if self.values.shape != tuple(len(a) for a in self.axes):
            raise ValueError("value array does not match the grid axes")
        if any(len(a) < MIN_RESOLUTION for a in self.axes):
            raise ValueError(f"resolution must be >= {MIN_RESOLUTION} per axis")
        self.spacing = tuple(float(a[1] - a[0]) for a in self.axes)

    @property
    def k(self) -> int:
        return len(self.axes)

    def node_params(self) -> np.ndarray:
        grids = np.meshgrid(*self.axes, indexing="ij")
        return np.stack([g.ravel() for g in grids], axis=-1)

    def node_points(self) -> np.ndarray:
        return self.chart.ambient(self.node_params())

    def interp_params(self, U: np.ndarray) -> np.ndarray:
        U = np.atleast_2d(U)
        idx = []
        frac = []
        for d, axis in enumerate(self.axes):
            lo, h, n = axis[0], self.spacing[d], len(axis)
            s = (U[:, d] - lo) / h
            out = (s < -1e-9) | (s > n - 1 + 1e-9)
            if out.any():
                bad = U[np.argmax(out)]
                raise ValueError(f"interpolation point {self.chart.ambient(bad[None])[0]} "
                                 f"escapes the grid box")
            s = np.clip(s, 0.0, n - 1)
            i = np.minimum(s.astype(int), n - 2)
            idx.append(i)
            frac.append(s - i)
        out = np.zeros(U.shape[0])
        for corner in itertools.product((0, 1), repeat=self.k):
            w = np.ones(U.shape[0])
            flat = np.zeros(U.shape[0], dtype=int)
            for d in range(self.k):
                w = w * (frac[d] if corner[d] else 1.0 - frac[d])
                flat = flat * len(self.axes[d]) + idx[d] + corner[d]
            out += w * self.values.ravel()[flat]
        return out

    def interp(self, X: np.ndarray) -> np.ndarray:
        """Multilinear interpolation at ambient points (m, ambient_dim)."""
        return self.interp_params(self.chart.param(X))

    def with_values(self, values) -> "GridFunction":
        return GridFunction(self.axes, values, self.chart)

    def value_at_zero(self) -> float:
        return float(self.interp(np.zeros((1, len(self.chart.origin))))[0])

    def param_of_ambient_zero(self) -> np.ndarray:
        return self.chart.param(np.zeros((1, len(self.chart.origin))))[0]

    def rows(self) -> list:
        """(ambient coords..., value) per node, for grid dumps."""
        pts = self.node_points()
        vals = self.values.ravel()
        return [tuple(p) + (float(v),) for p, v in zip(pts.tolist(), vals)]

    def quadratic_bump(self, amplitude: float = 0.5) -> "GridFunction":
        """1 plus a quadratic perturbation vanishing at the ambient origin."""
        u0 = self.param_of_ambient_zero()
        pts = self.node_params()
        vals = 1.0 + amplitude * ((pts - u0) ** 2).sum(axis=1)
        return self.with_values(vals.reshape(self.values.shape))


def grid_frame(sys: AffineSystem, resolution: int, pad: float = DEFAULT_PAD,
               hull: Polytope | None = None) -> GridFunction:
    """Constant-1 grid over the hull's (padded) bounding box, in the hull's
    chart, with the origin snapped onto the node lattice and the box grown
    until every rho_l image of it stays inside."""
    hull = hull if hull is not None else geometry.dual_hull(sys, 4)
    if hull.affine_dim == sys.dim:
        chart = identity_chart(sys.dim)
        vertices_u = hull.vertex_array()
    else:
        origin = np.array(hull.origin, dtype=float)
        basis = np.array(hull.basis, dtype=float).reshape(hull.affine_dim, sys.dim)
        chart = Chart(origin, basis)
        vertices_u = chart.param(hull.vertex_array())
    u0 = chart.param(np.zeros((1, sys.dim)))[0]

    S = np.array(rat.inverse(sys.R.transpose), dtype=float)
    Ls = sys.l_array()
    for attempt in range(6):
        axes = []
        for d in range(chart.k):
            lo = vertices_u[:, d].min()
            hi = vertices_u[:, d].max()
            width = max(hi - lo, 1e-9)
            lo -= pad * width
            hi += pad * width
            # lattice through the parameter image of the ambient origin
            h = (hi - lo) / (resolution - 2)
            i_lo = math.floor((lo - u0[d]) / h)
            axes.append(u0[d] + h * (i_lo + np.arange(resolution)))
        frame = GridFunction(axes, np.ones([resolution] * chart.k), chart)
        corners_u = np.array(list(itertools.product(*[(a[0], a[-1]) for a in axes])))
        corners = chart.ambient(corners_u)
        images = np.concatenate([(corners - l) @ S.T for l in Ls], axis=0)
        try:
            U = chart.param(images)
        except ValueError:
            raise ValueError("the rho_l images leave the hull's carrying subspace; "
                             "this system has no invariant grid chart")
        ok = all((U[:, d] >= axes[d][0] - 1e-12).all() and
                 (U[:, d] <= axes[d][-1] + 1e-12).all() for d in range(chart.k))
        if ok:
            return frame
        pad *= 1.7
    raise ValueError("could not find a self-mapped grid box for this system")


# ---------------------------------------------------------------------------
# the operator and its iteration

def apply_C(sys: AffineSystem, Q: GridFunction) -> GridFunction:
    """(CQ)(t) = sum_l |chi_B(t - l)|^2 Q(R*^{-1}(t - l)) at the grid nodes."""
    S = np.array(rat.inverse(sys.R.transpose), dtype=float)
    nodes = Q.node_points()
    total = np.zeros(nodes.shape[0])
    for l in sys.l_array():
        shifted = nodes - l
        w = np.abs(chi_B_batch(sys, shifted)) ** 2
        total += w * Q.interp(shifted @ S.T)
    return Q.with_values(total.reshape(Q.values.shape))


@dataclass
class FixedPointResult:
    final: GridFunction
    residuals: list
    converged: bool
    diverged: bool

    def residual_ratios(self) -> np.ndarray:
        r = np.asarray(self.residuals)
        return r[1:] / np.maximum(r[:-1], 1e-300)


def iterate_fixed_point(sys: AffineSystem, Q0: GridFunction,
                        max_iters: int = 200, tol: float = 1e-8) -> FixedPointResult:
    """Iterate C from Q0 (normalized to Q0(0) = 1), recording sup-norm residuals.

    Residual growth over ten consecutive iterations flags divergence without
    raising; convergent runs stop once the residual drops below `tol`.
    """
    if abs(Q0.value_at_zero() - 1.0) > 1e-8:
        raise ValueError("Q0 must be normalized to Q0(0) = 1")
    Q = Q0
    residuals = []
    growth = 0
    diverged = False
    for _ in range(max_iters):
        QN = apply_C(sys, Q)
        r = float(np.abs(QN.values - Q.values).max())
        residuals.append(r)
        Q = QN
        if len(residuals) >= 2 and r > residuals[-2]:
            growth += 1
            if growth >= 10:
                diverged = True
                break
        else:
            growth = 0
        if r < tol:
            break
    converged = bool(residuals and residuals[-1] < tol)
    return FixedPointResult(Q, residuals, converged, diverged)


# ---------------------------------------------------------------------------
# the Lebesgue-measure fixed point

def lebesgue_Q(t, n_terms: int = 4000):
    """sin^2(pi t)/pi^2 * sum_{n>=0} (t - n)^{-2}, summed directly with an
    integral tail correction; equals the completeness sum of the Lebesgue
    system over the nonnegative integers."""
    t = np.asarray(t, dtype=float)
    scalar = t.ndim == 0
    t = np.atleast_1d(t)
    if (t > n_terms / 2).any():
        raise ValueError("argument too large for the configured series length")
    n = np.arange(n_terms + 1)
    main = (np.sinc(t[:, None] - n[None, :]) ** 2).sum(axis=1)
    tail = (np.sin(np.pi * t) / np.pi) ** 2 / (n_terms + 0.5 - t)
    out = main + tail
    return float(out[0]) if scalar else out


# ---------------------------------------------------------------------------
# gradient norms of grid functions

def _gradient_norm_field(Q: GridFunction) -> np.ndarray:
    """Pointwise Euclidean norm of the ambient gradient at the nodes."""
    grads = np.gradient(Q.values, *Q.spacing) if Q.k > 1 else \
        [np.gradient(Q.values, Q.spacing[0])]
    G = np.stack([g.ravel() for g in grads], axis=-1)       # d/du
    Ginv = np.linalg.inv(Q.chart.metric())
    sq = np.einsum("ni,ij,nj->n", G, Ginv, G)
    return np.sqrt(np.maximum(sq, 0.0))


def grad_norm(Q: GridFunction, flavor: str = "sup", domain: Polytope | None = None) -> float:
    """Sup or integral norm of |grad Q| over the grid (optionally restricted
    to nodes inside `domain`)."""
    field = _gradient_norm_field(Q)
    if domain is not None:
        pts = Q.node_points()
        mask = np.array([contains_float(domain, p) for p in pts])
        field = field[mask]
    if flavor == "sup":
        return float(field.max())
    if flavor == "l1":
        cell = float(np.prod(Q.spacing)) * math.sqrt(np.linalg.det(Q.chart.metric()))
        return float(field.sum() * cell)
    raise ValueError("flavor must be 'sup' or 'l1'")


def contains_float(P: Polytope, x, tol: float = 1e-9) -> bool:
    """Floating-point polytope membership (chart residual + facets)."""
    x = np.asarray(x, dtype=float)
    if P.affine_dim == 0:
        return bool(np.abs(x - np.array(P.origin, dtype=float)).max() <= tol)
    origin = np.array(P.origin, dtype=float)
    basis = np.array(P.basis, dtype=float).reshape(P.affine_dim, P.ambient_dim)
    chart = Chart(origin, basis)
    try:
        u = chart.param(x[None], tol=math.sqrt(tol))[0]
    except ValueError:
        return False
    for nrm, c in P.facets:
        if float(np.dot(np.array(nrm, dtype=float), u)) > float(c) + tol:
            return False
    return True


# ---------------------------------------------------------------------------
# contractivity constants

def gamma_1d(R: int, b=Fraction(1, 2)) -> float:
    """Contractivity constant of the two-digit family: depends only on the
    integer scale, with the sup of |sin| over the invariant interval saturating
    to 1 at |R| = 2."""
    if int(R) != R or abs(R) <= 1:
        raise ValueError("the scale must be an integer with |R| >= 2")
    R = int(R)
    a = abs(R)
    if R > 0:
        s = 1.0 if a == 2 else math.sin(math.pi / (a - 1))
    else:
        s = abs(math.sin(math.pi / (R * R - 1)))
    return (math.pi / (2 * a)) * s + 1.0 / a


def gamma_eiffel(r: int) -> float:
    """Gradient-norm operator bound (1/r)(1 + 3 pi/(2(r-1)^3) sin(pi/(r-1)))
    of the tower family; the sin factor saturates to 1 at r = 2."""
    if int(r) != r or r < 2:
        raise ValueError("r must be an integer >= 2")
    r = int(r)
    s = 1.0 if r == 2 else math.sin(math.pi / (r - 1))
    return (1.0 / r) * (1.0 + 3.0 * math.pi / (2.0 * (r - 1) ** 3) * s)


def _sin_sup_on_interval(qmin: Fraction, qmax: Fraction) -> float:
    """sup |sin(2 pi q)| over q in [qmin, qmax], exact peak detection."""
    lo = 2 * qmin - Fraction(1, 2)
    hi = 2 * qmax - Fraction(1, 2)
    if math.floor(hi) >= math.ceil(lo):       # contains 1/4 + k/2
        return 1.0
    return max(abs(math.sin(2 * math.pi * float(qmin))),
               abs(math.sin(2 * math.pi * float(qmax))))


@dataclass
class BetaResult:
    beta: float
    sin_sup: float
    diam_B: float
    beta_sampled: float
    sample_agrees: bool          # exact vs sampled within 1%


def beta_constant(sys: AffineSystem, Y: Polytope) -> BetaResult:
    """2 pi diam(B) max_{b,b',l} ||sin(2 pi (b-b')(. - l))||_{inf, Y}.

    The sin argument is linear over the polytope, so its range is pinned by
    the vertices exactly and the sup has a closed form on that interval; a
    sampled maximization cross-checks the value.
    """
    diam_sq = max((rat.dot(rat.vec_sub(p, q), rat.vec_sub(p, q))
                   for p in sys.B for q in sys.B), default=Fraction(0))
    diam_B = math.sqrt(float(diam_sq))
    sin_sup = 0.0
    for bi in range(sys.N):
        for bj in range(sys.N):
            if bi == bj:
                continue
            d = rat.vec_sub(sys.B[bi], sys.B[bj])
            for l in sys.L:
                qs = [rat.dot(d, rat.vec_sub(v, l)) for v in Y.vertices]
                sin_sup = max(sin_sup, _sin_sup_on_interval(min(qs), max(qs)))
    beta = 2 * math.pi * diam_B * sin_sup

    sampled = _beta_sampled(sys, Y)
    agrees = sampled <= sin_sup * (1 + 1e-9) and sampled >= sin_sup - 0.01 * max(sin_sup, 1e-12)
    return BetaResult(beta, sin_sup, diam_B, 2 * math.pi * diam_B * sampled, agrees)


def _beta_sampled(sys: AffineSystem, Y: Polytope, base: int = 32, cap: int = 32768):
    k = max(Y.affine_dim, 1)
    n = base
    while n ** k > cap:
        n = max(2, n // 2)
    if Y.affine_dim == 0:
        pts = np.array(Y.origin, dtype=float)[None]
    else:
        origin = np.array(Y.origin, dtype=float)
        basis = np.array(Y.basis, dtype=float).reshape(Y.affine_dim, Y.ambient_dim)
        chart = Chart(origin, basis)
        us = chart.param(Y.vertex_array())
        axes = [np.linspace(us[:, d].min(), us[:, d].max(), n) for d in range(Y.affine_dim)]
        mesh = np.meshgrid(*axes, indexing="ij")
        U = np.stack([g.ravel() for g in mesh], axis=-1)
        keep = np.ones(len(U), dtype=bool)
        for nrm, c in Y.facets:
            keep &= U @ np.array(nrm, dtype=float) <= float(c) + 1e-12
        pts = np.concatenate([Y.vertex_array(), chart.ambient(U[keep])], axis=0)

    best = 0.0
    bs = sys.b_array()
    ls = sys.l_array()
    for i in range(sys.N):
        for j in range(sys.N):
            if i == j:
                continue
            d = bs[i] - bs[j]
            for l in ls:
                vals = np.abs(np.sin(2 * np.pi * ((pts - l) @ d)))
                best = max(best, float(vals.max()))
    # one bisection refinement around the incumbent is subsumed by the exact
    # interval evaluation; the sample is a cross-check only
    return best


@dataclass
class ContractivityReport:
    beta: float
    gamma_sup: float
    gamma_L1: float
    gamma_L1_sharp: float
    sharp_valid: bool
    norms: dict
    beta_detail: BetaResult
    gamma_L1_detfree: float | None = None   # mixed-norm diagnostic, see gamma_supnorm

    def to_dict(self) -> dict:
        return {
            "beta": self.beta,
            "gamma_sup": self.gamma_sup,
            "gamma_L1": self.gamma_L1,
            "gamma_L1_sharp": self.gamma_L1_sharp,
            "sharp_valid": self.sharp_valid,
            "gamma_L1_detfree": self.gamma_L1_detfree,
            "norms": dict(self.norms),
            "beta_sample_agrees": self.beta_detail.sample_agrees,
        }


def overlaps_measure_zero(sys: AffineSystem, Y: Polytope, tol: float = 1e-9) -> bool:
    """True when Y and Y - l have interiors that miss each other for every
    nonzero l (checked by linear programming on the facet systems)."""
    if Y.affine_dim < Y.ambient_dim:
        return True
    nu = Y.ambient_dim
    A = np.array([[float(c) for c in nrm] for nrm, _ in Y.facets])
    b = np.array([float(c) for _, c in Y.facets])
    for l in sys.L:
        lv = np.array([float(c) for c in l])
        if not lv.any():
            continue
        A_ub = np.vstack([np.hstack([A, np.ones((len(A), 1))]),
                          np.hstack([A, np.ones((len(A), 1))])])
        b_ub = np.concatenate([b, b - A @ lv])
        c_obj = np.zeros(nu + 1)
        c_obj[-1] = -1.0
        res = optimize.linprog(c_obj, A_ub=A_ub, b_ub=b_ub,
                               bounds=[(None, None)] * nu + [(None, None)],
                               method="highs")
        if res.status == 0 and -res.fun > tol:
            return False
    return True


def gamma_supnorm(sys: AffineSystem, Y: Polytope | None = None) -> ContractivityReport:
    """All contractivity constants of the transfer operator on the hull Y.

    `gamma_L1_detfree` is the determinant-free diagnostic
    N vol(Y) [(1 - 1/N) beta ||R^{-1}||_op max|l| + N ||R^{-1}||_hs]: it bounds
    the integral gradient norm of CQ by the supremum gradient norm over the
    union of the rho_l images, so it compares mixed norms and certifies
    nothing by itself; None when Y is degenerate.
    """
    Y = Y if Y is not None else geometry.dual_hull(sys, 4)
    beta_res = beta_constant(sys, Y)
    Rinv = np.array(sys.R.inverse, dtype=float)
    op = float(np.linalg.norm(Rinv, 2))
    hs = float(np.linalg.norm(Rinv, "fro"))
    det_abs = abs(float(sys.R.det))
    max_l = math.sqrt(max((float(rat.dot(l, l)) for l in sys.L), default=0.0))
    N = sys.N
    first = beta_res.beta * op * max_l
    bracket = (1 - 1 / N) * first + N * hs
    gamma_sup = (N - 1) ** 2 / N * first + hs
    gamma_l1 = det_abs * bracket
    gamma_l1_sharp = det_abs * ((1 - 1 / N) * first + hs)
    sharp_ok = overlaps_measure_zero(sys, Y)
    vol = geometry.hull_volume(Y)
    detfree = float(N * vol * bracket) if vol > 0 else None
    norms = {
        "op_norm_Rinv": op,
        "hs_norm_Rinv": hs,
        "abs_det_R": det_abs,
        "max_l_norm": max_l,
        "diam_B": beta_res.diam_B,
        "det_times_hs": det_abs * hs,
    }
    return ContractivityReport(beta_res.beta, gamma_sup, gamma_l1,
                               gamma_l1_sharp, sharp_ok, norms, beta_res,
                               gamma_L1_detfree=detfree)


def gamma_L1(sys: AffineSystem, Y: Polytope | None = None):
    """The integral-norm bound and, when the shifted hulls don't overlap,
    its sharper variant (None otherwise)."""
    rep = gamma_supnorm(sys, Y)
    return rep.gamma_L1, (rep.gamma_L1_sharp if rep.sharp_valid else None)
