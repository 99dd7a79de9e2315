"""Fourier side of self-similar measures: truncated products with tail bounds,
exact moments, word quadrature, catalog zero sets, convolution."""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import geometry, rational as rat
from .system import AffineSystem, chi_B_batch

DEFAULT_TAIL_TOL = 1e-10
MAX_PRODUCT_DEPTH = 200


@dataclass
class FourierEvaluation:
    """One value of the transform: truncated product plus its tail bound."""
    value: complex
    truncation_depth: int
    tail_bound: float


def _contraction_data(S: np.ndarray):
    """Smallest power kappa with ||S^kappa||_op < 1, plus the geometric data
    (rho, c) bounding ||S^n t|| <= c rho^{floor(n/kappa)} ||t||."""
    rho = None
    powers = [np.eye(S.shape[0])]
    for k in range(1, 9):
        powers.append(powers[-1] @ S)
        nrm = float(np.linalg.norm(powers[-1], 2))
        if nrm < 1.0:
            kappa, rho = k, nrm
            break
    if rho is None:
        raise ValueError("no power of the inverse transpose contracts; system is not expansive")
    c = max(float(np.linalg.norm(powers[j], 2)) for j in range(kappa))
    return kappa, rho, c


class SelfSimilarMeasure:
    """The probability measure carried by (R, B); only the B side is used."""

    def __init__(self, sys: AffineSystem, tail_tol: float = DEFAULT_TAIL_TOL):
        if not sys.R.is_expansive():
            raise ValueError("transform evaluation needs an expansive matrix "
                             "(tail bound unavailable otherwise)")
        self.system = sys
        self.dim = sys.dim
        self.tail_tol = tail_tol
        self._S = np.array(rat.inverse(sys.R.transpose), dtype=float)
        self._kappa, self._rho, self._c = _contraction_data(self._S)
        self._b_max = math.sqrt(max(
            float(rat.dot(b, b)) for b in sys.B))

    # -- tail machinery ----------------------------------------------------
    def tail_bound(self, depth: int, t_norm: float) -> float:
        """sum_{n >= depth} 2 pi max_b|b| ||R*^{-n} t||, via the contraction data."""
        if self._b_max == 0.0:
            return 0.0
        geo = self._kappa * self._rho ** (depth // self._kappa) / (1.0 - self._rho)
        return 2.0 * math.pi * self._b_max * self._c * t_norm * geo

    def depth_for(self, t_norm: float, tol: float | None = None) -> int:
        tol = self.tail_tol if tol is None else tol
        d = 1
        while self.tail_bound(d, t_norm) >= tol and d < MAX_PRODUCT_DEPTH:
            d += 1
        return d

    # -- evaluation --------------------------------------------------------
    def _prep(self, T) -> np.ndarray:
        T = np.asarray(T, dtype=float)
        if self.dim == 1:
            return T[..., None]            # any shape, elementwise
        if T.ndim == 0 or T.shape[-1] != self.dim:
            raise ValueError(f"frequency array must have trailing axis {self.dim}")
        return T

    def mu_hat_batch(self, T, depth: int | None = None):
        """Transform values for an array of frequencies.

        In one dimension `T` is elementwise; above, its trailing axis must be
        the ambient dimension.  Returns (values, tail_bound) with a single
        conservative tail bound taken at the largest norm in the batch.
        """
        T = self._prep(T)
        t_norm = float(np.sqrt((T ** 2).sum(axis=-1)).max()) if T.size else 0.0
        if depth is None:
            depth = self.depth_for(t_norm)
        vals = np.ones(T.shape[:-1], dtype=complex)
        S = T.copy()
        for _ in range(depth):
            vals = vals * chi_B_batch(self.system, S)
            S = S @ self._S.T
        return vals, self.tail_bound(depth, t_norm)

    def mu_hat(self, t, depth: int | None = None) -> FourierEvaluation:
        tv = np.asarray(t, dtype=float).reshape(-1)
        if tv.shape[0] != self.dim:
            raise ValueError(f"expected a {self.dim}-vector, got shape {tv.shape}")
        if depth is None:
            depth = self.depth_for(float(np.linalg.norm(tv)))
        arg = tv[0] if self.dim == 1 else tv.reshape(1, self.dim)
        vals, tail = self.mu_hat_batch(arg, depth)
        value = complex(vals if np.ndim(vals) == 0 else vals[0])
        return FourierEvaluation(value, depth, tail)

    # -- quadrature ---------------------------------------------------------
    def atoms(self, depth: int) -> np.ndarray:
        """All N^depth depth-d word images of 0 under the sigma maps."""
        n_atoms = self.system.N ** depth
        if n_atoms > 20_000_000:
            raise ValueError(f"{n_atoms} quadrature atoms is beyond reason")
        Rinv = np.array(self.system.R.inverse, dtype=float)
        bs = self.system.b_array()
        a = np.zeros((1, self.dim))
        for _ in range(depth):
            a = (a @ Rinv.T)[None, :, :] + bs[:, None, :]
            a = a.reshape(-1, self.dim)
        return a

    def integrate(self, f, depth: int):
        """Word quadrature N^{-d} sum_w f(sigma_w(0)) of a continuous f.

        `f` gets the whole atom array: shape (n,) in one dimension, (n, dim)
        above; it may return complex values.
        """
        a = self.atoms(depth)
        if self.dim == 1:
            a = a[:, 0]
        return np.mean(f(a), axis=0)

    def support_diameter(self, depth: int = 4) -> float:
        return geometry.hull_diameter(geometry.support_hull(self.system, depth))

    def moments(self, k_max: int):
        return moments(self.system, k_max)


# ---------------------------------------------------------------------------
# exact moments

def _poly_mul(p, q, dim):
    out = {}
    for ka, ca in p.items():
        for kb, cb in q.items():
            k = tuple(ka[i] + kb[i] for i in range(dim))
            out[k] = out.get(k, Fraction(0)) + ca * cb
    return out


def _affine_power(i, k, Rinv, b, dim):
    """((R^{-1} x + b)_i)^k as a polynomial in x."""
    lin = {tuple(1 if j == m else 0 for j in range(dim)): Rinv[i][m]
           for m in range(dim) if Rinv[i][m] != 0}
    if b[i] != 0:
        lin[tuple(0 for _ in range(dim))] = b[i]
    out = {tuple(0 for _ in range(dim)): Fraction(1)}
    for _ in range(k):
        out = _poly_mul(out, lin, dim)
    return out


def _multi_indices(dim, degree):
    if dim == 1:
        return [(degree,)]
    out = []
    for first in range(degree + 1):
        out.extend((first,) + rest for rest in _multi_indices(dim - 1, degree - first))
    return out


def moments(sys: AffineSystem, k_max: int) -> dict:
    """Exact rational moments m_k = int x^k dmu for all |k| <= k_max.

    The self-similarity turns each total degree into a small linear system in
    the same-degree moments with lower-degree data on the right-hand side;
    expansivity keeps those systems nonsingular.
    """
    dim, N = sys.dim, sys.N
    Rinv = sys.R.inverse
    table = {tuple(0 for _ in range(dim)): Fraction(1)}
    for degree in range(1, k_max + 1):
        idxs = _multi_indices(dim, degree)
        pos = {k: i for i, k in enumerate(idxs)}
        n = len(idxs)
        A = [[Fraction(0)] * n for _ in range(n)]
        rhs = [Fraction(0)] * n
        for row, k in enumerate(idxs):
            for b in sys.B:
                poly = {tuple(0 for _ in range(dim)): Fraction(1)}
                for i in range(dim):
                    if k[i]:
                        poly = _poly_mul(poly, _affine_power(i, k[i], Rinv, b, dim), dim)
                for alpha, coef in poly.items():
                    if sum(alpha) == degree:
                        A[row][pos[alpha]] += coef / N
                    else:
                        rhs[row] += coef * table[alpha] / N
        M = rat.mat(tuple(tuple((1 if r == c else 0) - A[r][c] for c in range(n))
                          for r in range(n)))
        sol = rat.solve(M, tuple(rhs))
        for k, v in zip(idxs, sol):
            table[k] = v
    return table


# ---------------------------------------------------------------------------
# closed forms and zero sets

def mu2_closed_form(t):
    """e^{i pi t} sin(pi t)/(pi t) with the removable singularity at 0."""
    t = np.asarray(t, dtype=float)
    val = np.exp(1j * np.pi * t) * np.sinc(t)
    return complex(val) if val.ndim == 0 else val


@dataclass(frozen=True)
class ZeroSetPredicate:
    """Zero set {scale^n / (2 offset) * (odd integers) : n >= 0} of the
    transform of a two-digit measure with digits {0, offset} at `scale`."""
    scale: int
    offset: Fraction
    tag: str = ""

    def member(self, t) -> bool:
        t = rat.as_fraction(t) if not isinstance(t, Fraction) else t
        if t == 0:
            return False
        u = 2 * abs(self.offset) * abs(t)
        base = abs(self.scale)
        while u >= 1:
            if u.denominator == 1 and u.numerator % 2 == 1:
                return True
            u = u / base
        return False


ZERO_SETS = {
    "mu2": ZeroSetPredicate(2, Fraction(1, 2), "mu2"),
    "mu4": ZeroSetPredicate(4, Fraction(1, 2), "mu4"),
    "mu3": ZeroSetPredicate(3, Fraction(2, 3), "mu3"),
}


def zero_set_member(predicate, t) -> bool:
    """Exact membership in a catalog zero set; `predicate` is a tag or a
    ZeroSetPredicate."""
    if isinstance(predicate, str):
        if predicate not in ZERO_SETS:
            raise KeyError(f"unknown zero set {predicate!r}; have {sorted(ZERO_SETS)}")
        predicate = ZERO_SETS[predicate]
    return predicate.member(t)


# ---------------------------------------------------------------------------
# convolution

class ConvolvedMeasure:
    """Convolution of two measures: transforms multiply, tail bounds add."""

    def __init__(self, a, b):
        if a.dim != b.dim:
            raise ValueError("convolution needs equal ambient dimensions")
        self.parts = (a, b)
        self.dim = a.dim

    def mu_hat_batch(self, T, depth=None):
        va, ta = self.parts[0].mu_hat_batch(T, depth)
        vb, tb = self.parts[1].mu_hat_batch(T, depth)
        return va * vb, ta + tb

    def mu_hat(self, t, depth=None) -> FourierEvaluation:
        ea = self.parts[0].mu_hat(t, depth)
        eb = self.parts[1].mu_hat(t, depth)
        return FourierEvaluation(ea.value * eb.value,
                                 max(ea.truncation_depth, eb.truncation_depth),
                                 ea.tail_bound + eb.tail_bound)

    def atoms(self, depth: int) -> np.ndarray:
        aa = self.parts[0].atoms(depth)
        ab = self.parts[1].atoms(depth)
        s = aa[:, None, :] + ab[None, :, :]
        return s.reshape(-1, self.dim)

    def integrate(self, f, depth: int):
        a = self.atoms(depth)
        if self.dim == 1:
            a = a[:, 0]
        return np.mean(f(a), axis=0)

    def support_diameter(self, depth: int = 4) -> float:
        return sum(p.support_diameter(depth) for p in self.parts)


def convolve(a, b) -> ConvolvedMeasure:
    return ConvolvedMeasure(a, b)


# ---------------------------------------------------------------------------
# transform profile emitter

def transform_profile(meas, ts, depth: int | None = None) -> list:
    """Rows (t..., re, im, abs, tail_bound) of the transform along `ts`;
    entries of `ts` may be floats, exact rationals or 'p/q' strings."""
    rows = []
    for t in ts:
        if isinstance(t, (str, int, Fraction)):
            tv = (float(rat.as_fraction(t)),)
        else:
            tv = tuple(float(rat.as_fraction(c)) if isinstance(c, (str, int, Fraction))
                       else float(c) for c in (t if hasattr(t, "__len__") else (t,)))
        ev = meas.mu_hat(tv, depth)
        rows.append(tv + (ev.value.real, ev.value.imag, abs(ev.value), ev.tail_bound))
    return rows


def write_transform_csv(meas, ts, fh, depth: int | None = None) -> None:
    cols = [f"t{i + 1}" for i in range(meas.dim)] + ["re", "im", "abs", "tail_bound"]
    fh.write(",".join(cols) + "\n")
    for row in transform_profile(meas, ts, depth):
        fh.write(",".join(f"{x:.17g}" for x in row) + "\n")


# ---------------------------------------------------------------------------
# analytic growth check

@dataclass
class GrowthBoundRow:
    s: tuple
    norm_sq: float
    bound: float

    @property
    def ok(self) -> bool:
        return self.norm_sq <= self.bound * (1 + 1e-12)


def growth_bound_check(measure, samples, depth: int = 12) -> list[GrowthBoundRow]:
    """Check ||e_{t+is}||^2 = int e^{-4 pi s.x} dmu <= e^{4 pi m ||s||} at the
    given imaginary parts, with m the support diameter."""
    m = measure.support_diameter()
    rows = []
    for s in samples:
        sv = np.atleast_1d(np.asarray(s, dtype=float))
        if measure.dim == 1:
            val = measure.integrate(lambda x: np.exp(-4 * np.pi * sv[0] * x), depth)
        else:
            val = measure.integrate(lambda x: np.exp(-4 * np.pi * (x @ sv)), depth)
        bound = math.exp(4 * math.pi * m * float(np.linalg.norm(sv)))
        rows.append(GrowthBoundRow(tuple(sv.tolist()), float(np.real(val)), bound))
    return rows
