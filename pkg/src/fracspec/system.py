"""Affine scaling systems (R, B, L): axioms, masks, dual maps, catalog.

A system is an expansive nu x nu rational matrix R together with two finite
point sets B (spatial digits) and L (frequency digits) of equal size, paired
by the unitary matrix N^{-1/2} (e^{i 2 pi b.l}).  All data is exact rational;
floating point enters only in trigonometric evaluation and eigenvalues.
"""

from __future__ import annotations

import cmath
import json
import math
import re
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import rational as rat

EXPANSIVE_MARGIN = 1e-9
UNITARITY_TOL = 1e-12
DEFAULT_N_CHECK = 12

Point = tuple  # tuple of Fractions, length = ambient dimension


def point(coords, dim=None) -> Point:
    p = rat.vec(coords if hasattr(coords, "__len__") else (coords,))
    if dim is not None and len(p) != dim:
        raise ValueError(f"point {p} has dimension {len(p)}, expected {dim}")
    return p


def _unit_phase(q: Fraction) -> complex:
    """e^{i 2 pi q} for exact rational q, with the phase reduced mod 1 first."""
    q = q - math.floor(q)
    return cmath.exp(2j * math.pi * float(q))


class ScalingMatrix:
    """Expansive scaling matrix with cached exact determinant/inverse/transpose."""

    def __init__(self, entries):
        self.entries = rat.mat(entries)
        n = len(self.entries)
        if any(len(r) != n for r in self.entries):
            raise ValueError("scaling matrix must be square")
        self.dim = n
        self.det = rat.det(self.entries)
        if self.det == 0:
            raise ValueError("scaling matrix is singular")
        self.inverse = rat.inverse(self.entries)
        self.transpose = rat.transpose(self.entries)

    def apply(self, v: Point) -> Point:
        return rat.mat_vec(self.entries, v)

    def apply_transpose(self, v: Point) -> Point:
        return rat.mat_vec(self.transpose, v)

    def apply_inverse(self, v: Point) -> Point:
        return rat.mat_vec(self.inverse, v)

    def to_float(self) -> np.ndarray:
        return np.array(self.entries, dtype=float)

    def eigenvalue_moduli(self) -> list[float]:
        """Moduli of the eigenvalues, via the characteristic polynomial for
        dimension <= 3 and a numeric eigensolver above that; triangular
        matrices read their diagonal exactly."""
        n = self.dim
        a = self.entries
        if all(a[i][j] == 0 for i in range(n) for j in range(n) if i > j) or \
           all(a[i][j] == 0 for i in range(n) for j in range(n) if i < j):
            return sorted(abs(float(a[i][i])) for i in range(n))
        if n == 1:
            roots = [complex(a[0][0])]
        elif n == 2:
            tr, d = a[0][0] + a[1][1], self.det
            roots = np.roots([1.0, -float(tr), float(d)])
        elif n == 3:
            tr = a[0][0] + a[1][1] + a[2][2]
            m2 = (a[1][1] * a[2][2] - a[1][2] * a[2][1]
                  + a[0][0] * a[2][2] - a[0][2] * a[2][0]
                  + a[0][0] * a[1][1] - a[0][1] * a[1][0])
            roots = np.roots([1.0, -float(tr), float(m2), -float(self.det)])
        else:
            roots = np.linalg.eigvals(self.to_float())
        return sorted(abs(complex(z)) for z in roots)

    def is_expansive(self, margin: float = EXPANSIVE_MARGIN) -> bool:
        return self.eigenvalue_moduli()[0] > 1.0 + margin

    def is_integer(self) -> bool:
        return all(e.denominator == 1 for row in self.entries for e in row)

    def __repr__(self):
        rows = "; ".join(" ".join(rat.format_fraction(e) for e in r) for r in self.entries)
        return f"ScalingMatrix([{rows}])"


@dataclass(frozen=True)
class AffineSystem:
    """The triple (R, B, L) in dimension dim with N = #B = #L."""

    dim: int
    R: ScalingMatrix
    B: tuple
    L: tuple
    name: str = ""

    def __post_init__(self):
        if self.R.dim != self.dim:
            raise ValueError("R dimension does not match system dimension")
        for p in self.B + self.L:
            if len(p) != self.dim:
                raise ValueError(f"point {p} has wrong dimension (expected {self.dim})")
        if len(set(self.B)) != len(self.B) or len(set(self.L)) != len(self.L):
            raise ValueError("B and L must consist of distinct points")

    @property
    def N(self) -> int:
        return len(self.B)

    def zero(self) -> Point:
        return tuple(Fraction(0) for _ in range(self.dim))

    def b_array(self) -> np.ndarray:
        return np.array(self.B, dtype=float).reshape(len(self.B), self.dim)

    def l_array(self) -> np.ndarray:
        return np.array(self.L, dtype=float).reshape(len(self.L), self.dim)

    def __repr__(self):
        label = self.name or "system"
        return f"AffineSystem({label}: dim={self.dim}, N={self.N})"


def make_system(R, B, L, name="") -> AffineSystem:
    if isinstance(R, ScalingMatrix):
        Rm = R
    elif isinstance(R, (int, Fraction, str)):
        Rm = ScalingMatrix([[R]])
    else:
        Rm = ScalingMatrix(R)
    dim = Rm.dim
    return AffineSystem(dim, Rm,
                        tuple(point(b, dim) for b in B),
                        tuple(point(l, dim) for l in L), name)


def _system_1d(R, B, L, name="") -> AffineSystem:
    Rm = ScalingMatrix([[R]])
    return AffineSystem(1, Rm, tuple(point((b,)) for b in B),
                        tuple(point((l,)) for l in L), name)


# ---------------------------------------------------------------------------
# mask and Hadamard pairing

def hadamard_matrix(B, L) -> np.ndarray:
    """N^{-1/2} (e^{i 2 pi b.l})_{b in B, l in L} as a complex array."""
    if len(B) != len(L):
        raise ValueError(f"#B = {len(B)} and #L = {len(L)} differ")
    n = len(B)
    H = np.empty((n, n), dtype=complex)
    for j, b in enumerate(B):
        for k, l in enumerate(L):
            H[j, k] = _unit_phase(rat.dot(b, l))
    return H / math.sqrt(n)


def unitarity_defect(H: np.ndarray) -> float:
    H = np.asarray(H)
    if H.ndim != 2 or H.shape[0] != H.shape[1]:
        raise ValueError("unitarity defect needs a square matrix")
    G = H.conj().T @ H - np.eye(H.shape[0])
    return float(np.abs(G).max())


def chi_B(sys: AffineSystem, t) -> complex:
    """The mask (1/N) sum_b e^{i 2 pi b.t}; exact phase reduction for rational t."""
    if all(isinstance(c, (int, Fraction)) for c in t):
        tv = rat.vec(t)
        return sum(_unit_phase(rat.dot(b, tv)) for b in sys.B) / sys.N
    tv = np.asarray(t, dtype=float)
    return complex(np.exp(2j * np.pi * (sys.b_array() @ tv)).sum() / sys.N)


def chi_B_batch(sys: AffineSystem, T: np.ndarray) -> np.ndarray:
    """Mask values for an array of frequency vectors, shape (..., dim)."""
    T = np.asarray(T, dtype=float)
    phases = T @ sys.b_array().T          # (..., N)
    return np.exp(2j * np.pi * phases).sum(axis=-1) / sys.N


def chi_B_sq_grad(sys: AffineSystem, t) -> np.ndarray:
    """Analytic gradient of |chi_B|^2 at t:
    -(2 pi / N^2) sum_{b,b'} (b - b') sin(2 pi (b - b').t)."""
    tv = np.asarray(t, dtype=float)
    bs = sys.b_array()
    diffs = bs[:, None, :] - bs[None, :, :]
    s = np.sin(2 * np.pi * (diffs @ tv))
    return -(2 * np.pi / sys.N ** 2) * (diffs * s[..., None]).sum(axis=(0, 1))


# ---------------------------------------------------------------------------
# the four affine map families

def _require_member(p: Point, family, label: str):
    if tuple(p) not in set(family):
        raise ValueError(f"{tuple(p)} is not a point of {label}")


def map_sigma(sys: AffineSystem, b, x) -> Point:
    """sigma_b(x) = R^{-1} x + b."""
    b = point(b, sys.dim)
    _require_member(b, sys.B, "B")
    return rat.vec_add(sys.R.apply_inverse(point(x, sys.dim)), b)


def map_omega(sys: AffineSystem, b, x) -> Point:
    """omega_b(x) = R(x - b), the inverse of sigma_b."""
    b = point(b, sys.dim)
    _require_member(b, sys.B, "B")
    return sys.R.apply(rat.vec_sub(point(x, sys.dim), b))


def map_tau(sys: AffineSystem, l, x) -> Point:
    """tau_l(x) = R* x + l."""
    l = point(l, sys.dim)
    _require_member(l, sys.L, "L")
    return rat.vec_add(sys.R.apply_transpose(point(x, sys.dim)), l)


def map_rho(sys: AffineSystem, l, t) -> Point:
    """rho_l(t) = R*^{-1}(t - l), the inverse of tau_l."""
    l = point(l, sys.dim)
    _require_member(l, sys.L, "L")
    Rti = rat.inverse(sys.R.transpose)
    return rat.mat_vec(Rti, rat.vec_sub(point(t, sys.dim), l))


# ---------------------------------------------------------------------------
# validation

MANDATORY_AXIOMS = ("cardinality", "zero_in_B", "zero_in_L",
                    "expansive", "hadamard", "compatibility")


@dataclass
class AxiomCheck:
    passed: bool
    witness: object = None
    mandatory: bool = True


@dataclass
class ValidationReport:
    checks: dict
    n_check: int

    @property
    def passed(self) -> bool:
        return all(c.passed for name, c in self.checks.items() if c.mandatory)

    def to_dict(self) -> dict:
        return {
            "passed": self.passed,
            "n_check": self.n_check,
            "axioms": {
                name: {"passed": c.passed, "mandatory": c.mandatory,
                       "witness": _jsonable(c.witness)}
                for name, c in self.checks.items()
            },
        }

    def summary_lines(self) -> list[str]:
        lines = []
        for name, c in self.checks.items():
            tag = "pass" if c.passed else ("FAIL" if c.mandatory else "no  ")
            extra = f"  [{c.witness}]" if c.witness is not None else ""
            lines.append(f"  {name:<20} {tag}{extra}")
        lines.append(f"  overall: {'pass' if self.passed else 'FAIL'}")
        return lines


def _jsonable(w):
    if isinstance(w, Fraction):
        return rat.format_fraction(w)
    if isinstance(w, tuple):
        return [_jsonable(x) for x in w]
    if isinstance(w, list):
        return [_jsonable(x) for x in w]
    return w


def validate_system(sys: AffineSystem, n_check: int = DEFAULT_N_CHECK) -> ValidationReport:
    """Check every axiom of the triple; compatibility runs in exact arithmetic.

    Mandatory axioms decide the overall verdict.  The span, integrality and
    cardinality-versus-determinant checks are informational: they gate the
    basis theorems, not the validity of the system itself.
    """
    if n_check < 1:
        raise ValueError("n_check must be a positive integer")
    checks: dict[str, AxiomCheck] = {}
    zero = sys.zero()

    checks["cardinality"] = AxiomCheck(len(sys.B) == len(sys.L),
                                       (len(sys.B), len(sys.L)))
    checks["zero_in_B"] = AxiomCheck(zero in sys.B)
    checks["zero_in_L"] = AxiomCheck(zero in sys.L)

    moduli = sys.R.eigenvalue_moduli()
    checks["expansive"] = AxiomCheck(moduli[0] > 1.0 + EXPANSIVE_MARGIN,
                                     [round(m, 12) for m in moduli])

    if checks["cardinality"].passed:
        defect = unitarity_defect(hadamard_matrix(sys.B, sys.L))
        checks["hadamard"] = AxiomCheck(defect <= UNITARITY_TOL, defect)
    else:
        checks["hadamard"] = AxiomCheck(False, "skipped: cardinality mismatch")

    failures = []
    for n in range(1, n_check + 1):
        Rn = sys.R.entries
        for _ in range(n - 1):
            Rn = rat.mat_mul(Rn, sys.R.entries)
        for b in sys.B:
            Rnb = rat.mat_vec(Rn, b)
            for l in sys.L:
                v = rat.dot(Rnb, l)
                if v.denominator != 1:
                    failures.append((n, tuple(map(rat.format_fraction, b)),
                                     tuple(map(rat.format_fraction, l)),
                                     rat.format_fraction(v)))
    checks["compatibility"] = AxiomCheck(not failures, failures[:5] or None)

    nonzero_l = [l for l in sys.L if l != zero]
    r = rat.rank(rat.mat(nonzero_l)) if nonzero_l else 0
    checks["l_spans"] = AxiomCheck(r == sys.dim, r, mandatory=False)

    bad_l = [l for l in sys.L
             if any(c.denominator != 1 for c in l)]
    checks["l_integral"] = AxiomCheck(
        not bad_l,
        [tuple(map(rat.format_fraction, l)) for l in bad_l] or None,
        mandatory=False)

    checks["n_less_than_det"] = AxiomCheck(
        sys.N < abs(sys.R.det), (sys.N, rat.format_fraction(abs(sys.R.det))),
        mandatory=False)

    return ValidationReport(checks, n_check)


# ---------------------------------------------------------------------------
# catalog

def two_digit_system(R: int, b, name="") -> AffineSystem:
    """One-dimensional system with B = {0, b} and the dual L = {0, 1/|2b|}."""
    b = rat.as_fraction(b)
    if b == 0:
        raise ValueError("b must be nonzero")
    z0 = 1 / abs(2 * b)
    return _system_1d(R, (Fraction(0), b), (Fraction(0), z0),
                      name or f"two-digit(R={R}, b={rat.format_fraction(b)})")


def eiffel_system(r: int = 2) -> AffineSystem:
    """Three-dimensional tower system with R = r I and four digits."""
    if r < 2:
        raise ValueError("eiffel scale r must be an integer >= 2")
    h = Fraction(1, 2)
    B = ((0, 0, 0), (h, 0, 0), (0, h, 0), (0, 0, h))
    L = ((0, 0, 0), (1, 1, 0), (1, 0, 1), (0, 1, 1))
    Rm = [[r, 0, 0], [0, r, 0], [0, 0, r]]
    return make_system(Rm, B, L, name=f"eiffel({r})")


def planar_collapse_system() -> AffineSystem:
    h, q = Fraction(1, 2), Fraction(2, 3)
    B = ((0, 0), (h, 0), (0, h))
    L = ((0, 0), (q, -q), (-q, q))
    return make_system([[6, 0], [0, 6]], B, L, name="planar-collapse")


_CATALOG = {
    "scale4": lambda: two_digit_system(4, Fraction(1, 2), name="scale4"),
    "scale2": lambda: two_digit_system(2, Fraction(1, 2), name="scale2"),
    "triadic": lambda: _system_1d(3, (Fraction(0), Fraction(2, 3)),
                                  (Fraction(0), Fraction(3, 4)), "triadic"),
    "eiffel": eiffel_system,
    "planar-collapse": planar_collapse_system,
}


def builtin_catalog() -> dict:
    """Named systems, exactly as printed in the source material; 'eiffel'
    takes an optional integer scale."""
    return dict(_CATALOG)


def get_system(name: str, r=None) -> AffineSystem:
    m = re.fullmatch(r"(\w[\w-]*)\((\d+)\)", name.strip())
    if m:
        name, r = m.group(1), int(m.group(2))
    name = name.strip()
    if name not in _CATALOG:
        raise KeyError(f"unknown system {name!r}; available: {', '.join(sorted(_CATALOG))}")
    factory = _CATALOG[name]
    if name == "eiffel":
        return factory(r) if r is not None else factory()
    if r is not None:
        base = factory()
        scaled = [[rat.as_fraction(r) * e for e in row] for row in base.R.entries]
        return make_system(scaled, base.B, base.L, name=f"{base.name}*r{r}")
    return factory()


# ---------------------------------------------------------------------------
# JSON system files: exact rationals only

def system_to_json(sys: AffineSystem) -> dict:
    fmt = rat.format_fraction
    return {
        "dim": sys.dim,
        "R": [[fmt(e) for e in row] for row in sys.R.entries],
        "B": [[fmt(c) for c in p] for p in sys.B],
        "L": [[fmt(c) for c in p] for p in sys.L],
    }


def system_from_json(data: dict, name="") -> AffineSystem:
    try:
        dim = int(data["dim"])
        R = [[rat.as_fraction(e) for e in row] for row in data["R"]]
        B = [tuple(rat.as_fraction(c) for c in p) for p in data["B"]]
        L = [tuple(rat.as_fraction(c) for c in p) for p in data["L"]]
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed system definition: {exc}") from exc
    if len(R) != dim or any(len(row) != dim for row in R):
        raise ValueError("R must be a dim x dim matrix")
    sysm = make_system(R, B, L, name=name)
    return sysm


def load_system_file(path: str) -> AffineSystem:
    with open(path) as fh:
        data = json.load(fh)
    return system_from_json(data, name=path)
