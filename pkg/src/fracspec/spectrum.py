"""Candidate spectra P(L): enumeration, digit expansions, Gram matrices,
completeness partial sums, maximal orthogonal families."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import geometry, rational as rat
from .measure import SelfSimilarMeasure, ZeroSetPredicate
from .system import AffineSystem, point

MAX_EXACT_POINTS = 2_000_000
MAX_FLOAT_POINTS = 6_000_000
Q1_DEPTH_CAP = 14
Q1_EPS_CONV = 1e-6
EPS_PASS = 0.02
EPS_FAIL = 0.05


# ---------------------------------------------------------------------------
# enumeration

@dataclass(frozen=True)
class SpectrumEnumeration:
    """All depth-n spectrum points with their digit words.

    `points` holds (point, word) pairs sorted lexicographically by coordinates;
    words are digit tuples with trailing zero digits stripped.
    """
    depth: int
    points: tuple
    collision_count: int

    def coords(self) -> tuple:
        return tuple(p for p, _ in self.points)

    def array(self) -> np.ndarray:
        return np.array([p for p, _ in self.points], dtype=float)


def enumerate_P(sys: AffineSystem, depth: int) -> SpectrumEnumeration:
    """Exact expansion of all N^depth words l_0 + R* l_1 + ... + R*^{d-1} l_{d-1}."""
    if depth < 0:
        raise ValueError("depth must be >= 0")
    if sys.N ** depth > MAX_EXACT_POINTS:
        raise ValueError("too many words for exact enumeration at this depth")
    zero = sys.zero()
    entries = [(zero, ())]
    power = rat.identity(sys.dim)          # R*^k
    for _ in range(depth):
        scaled = [rat.mat_vec(power, l) for l in sys.L]
        entries = [(rat.vec_add(lam, scaled[i]), word + (sys.L[i],))
                   for (lam, word) in entries for i in range(sys.N)]
        power = rat.mat_mul(sys.R.transpose, power)
    seen = {}
    for lam, word in entries:
        seen.setdefault(lam, word)
    collisions = len(entries) - len(seen)
    cleaned = sorted((lam, _strip(word, zero)) for lam, word in seen.items())
    return SpectrumEnumeration(depth, tuple(cleaned), collisions)


def _strip(word, zero):
    k = len(word)
    while k and word[k - 1] == zero:
        k -= 1
    return word[:k]


def reconstruct(sys: AffineSystem, word) -> tuple:
    """Exact point of a digit word: sum_k R*^k word[k]."""
    lam = sys.zero()
    power = rat.identity(sys.dim)
    for digit in word:
        lam = rat.vec_add(lam, rat.mat_vec(power, point(digit, sys.dim)))
        power = rat.mat_mul(sys.R.transpose, power)
    return lam


def spectrum_layers(sys: AffineSystem, depth: int):
    """Float coordinates of P(L) grouped by first appearance depth.

    Yields (d, new_points) where new_points has shape (n, dim); the union over
    d = 0..depth is the full depth-`depth` enumeration.  Assumes digit
    uniqueness (no dedupe is attempted).
    """
    Rt = np.array(sys.R.transpose, dtype=float)
    Ls = sys.l_array()
    nonzero = [Ls[i] for i in range(sys.N) if any(c != 0 for c in sys.L[i])]
    all_pts = np.zeros((1, sys.dim))
    yield 0, all_pts
    power = np.eye(sys.dim)
    for d in range(1, depth + 1):
        if len(all_pts) * sys.N > MAX_FLOAT_POINTS:
            raise ValueError("spectrum layer exceeds the point cap")
        blocks = [all_pts + (power @ l) for l in nonzero]
        new = np.concatenate(blocks, axis=0)
        yield d, new
        all_pts = np.concatenate([all_pts, new], axis=0)
        power = Rt @ power


def digits_of(sys: AffineSystem, lam, max_depth: int = 24):
    """Digit word of a spectrum point, or None when no unique expansion of
    length <= max_depth ends at 0 (failure value, not an exception).

    Cyclic peel sequences are pruned: they can never terminate, and any
    completion through a revisited point has a shorter acyclic form, so
    uniqueness is certified over the acyclic expansions.
    """
    lam = point(lam if hasattr(lam, "__len__") else (lam,), sys.dim)
    zero = sys.zero()
    Rti = rat.inverse(sys.R.transpose)
    lattice_den = 1
    if sys.R.is_integer():
        for l in sys.L:
            for c in l:
                lattice_den = lattice_den * c.denominator // math.gcd(lattice_den, c.denominator)

    def off_lattice(p):
        if not sys.R.is_integer():
            return False
        return any(lattice_den % c.denominator for c in p)

    # failure depths are monotone: failing with some budget fails every
    # smaller one, so dead branches are cached and cycles pruned by path
    failed_at: dict = {}
    words: dict = {}

    def expand(p, budget, path):
        if p == zero:
            return ()
        if budget == 0 or off_lattice(p) or p in path:
            return None
        if p in words and len(words[p]) <= budget:
            return words[p]
        if failed_at.get(p, -1) >= budget:
            return None
        path = path | {p}
        found = None
        for l in sys.L:
            rest = expand(rat.mat_vec(Rti, rat.vec_sub(p, l)), budget - 1, path)
            if rest is not None:
                if found is not None:
                    return None          # ambiguous expansion
                found = (l,) + rest
        if found is None:
            failed_at[p] = max(failed_at.get(p, -1), budget)
        else:
            words[p] = found
        return found

    return expand(lam, max_depth, frozenset())


def uniform_discreteness(enum: SpectrumEnumeration) -> float:
    """Exact minimum pairwise distance of the enumerated points."""
    if enum.collision_count:
        raise ValueError("enumeration has collisions; separation is zero")
    pts = enum.coords()
    if len(pts) < 2:
        return math.inf
    best = None
    for i in range(len(pts)):
        for j in range(i + 1, len(pts)):
            d = rat.dot(rat.vec_sub(pts[i], pts[j]), rat.vec_sub(pts[i], pts[j]))
            if best is None or d < best:
                best = d
    return math.sqrt(float(best))


# ---------------------------------------------------------------------------
# Gram matrices

@dataclass
class GramReport:
    points: tuple
    matrix: np.ndarray
    tail_bound: float
    max_offdiag: float
    worst_pair: tuple

    @property
    def max_diag_defect(self) -> float:
        return float(np.abs(np.diag(self.matrix) - 1.0).max())


def _as_measure(m):
    return SelfSimilarMeasure(m) if isinstance(m, AffineSystem) else m


def gram_matrix(measure, points, fourier_depth: int | None = None) -> GramReport:
    """Inner products of exponentials: entry (i, j) is the transform at
    lambda_j - lambda_i."""
    measure = _as_measure(measure)
    pts = [np.atleast_1d(np.asarray(p, dtype=float)) for p in points]
    arr = np.stack(pts)
    if len({tuple(p) for p in arr.round(12).tolist()}) != len(pts):
        raise ValueError("Gram points must be pairwise distinct")
    diffs = arr[None, :, :] - arr[:, None, :]
    if measure.dim == 1:
        diffs = diffs[..., 0]
    vals, tail = measure.mu_hat_batch(diffs, fourier_depth)
    G = np.asarray(vals)
    off = np.abs(G - np.diag(np.diag(G)))
    top = float(off.max())
    tied = np.argwhere(off >= top - 1e-12)
    i, j = min(map(tuple, tied))
    return GramReport(tuple(map(tuple, arr.tolist())), G, tail,
                      top, (tuple(arr[i].tolist()), tuple(arr[j].tolist())))


# ---------------------------------------------------------------------------
# completeness partial sums

@dataclass
class Q1Profile:
    """Partial sums of sum_{lambda} |mu_hat(t - lambda)|^2 per enumeration depth."""
    tpoints: np.ndarray
    partial_sums: np.ndarray      # shape (m, depths+1), cumulative
    increments: np.ndarray        # shape (m, depths)
    depth: int
    eps_conv: float | None

    def values(self) -> np.ndarray:
        return self.partial_sums[:, -1]

    def last_increments(self) -> np.ndarray:
        return self.increments[:, -1]

    def stabilized_depth(self, eps: float) -> list:
        """First depth with increment below eps per point (None if never)."""
        out = []
        for row in self.increments:
            idx = np.nonzero(row < eps)[0]
            out.append(int(idx[0]) + 1 if idx.size else None)
        return out

    @property
    def monotone(self) -> bool:
        return bool((self.increments >= -1e-15).all())


def _prep_tpoints(dim, tpoints) -> np.ndarray:
    T = np.asarray(tpoints, dtype=float)
    if dim == 1:
        T = T.reshape(-1, 1)
    else:
        T = T.reshape(-1, dim)
    return T


def q1_profile(system: AffineSystem, tpoints, p_depth: int = Q1_DEPTH_CAP,
               measure=None, fourier_depth: int | None = None,
               eps_conv: float | None = None, chunk: int | None = None) -> Q1Profile:
    """Shared engine: accumulate the completeness partial sums layer by layer.

    With `eps_conv` set, the layer loop stops early once every probe point's
    increment falls below it (partial sums are monotone, so later layers only
    add nonnegative mass).
    """
    measure = _as_measure(measure) if measure is not None else SelfSimilarMeasure(system)
    T = _prep_tpoints(system.dim, tpoints)
    m = T.shape[0]
    if chunk is None:
        chunk = max(1024, 6_000_000 // max(m, 1))   # bounds the (m, chunk) scratch
    sums = [np.zeros(m)]
    incs = []
    for d, layer in spectrum_layers(system, p_depth):
        inc = np.zeros(m)
        for start in range(0, len(layer), chunk):
            block = layer[start:start + chunk]
            diffs = T[:, None, :] - block[None, :, :]
            if system.dim == 1:
                diffs = diffs[..., 0]
            vals, _ = measure.mu_hat_batch(diffs, fourier_depth)
            inc += (np.abs(vals) ** 2).sum(axis=1)
        if d == 0:
            sums[0] = inc
            continue
        incs.append(inc)
        sums.append(sums[-1] + inc)
        if eps_conv is not None and d >= 1 and (inc < eps_conv).all():
            break
    return Q1Profile(T, np.stack(sums, axis=1), np.stack(incs, axis=1),
                     len(incs), eps_conv)


@dataclass
class Q1Result:
    value: float
    last_increment: float
    partial_sums: np.ndarray
    depth: int

    @property
    def monotone(self) -> bool:
        return bool(np.all(np.diff(self.partial_sums) >= -1e-15))


def q1(system: AffineSystem, t, p_depth: int, measure=None,
       fourier_depth: int | None = None) -> Q1Result:
    """Partial sum of the completeness function at one point, to the given
    enumeration depth, with the final increment as a convergence certificate."""
    prof = q1_profile(system, [t], p_depth,
                      measure=measure, fourier_depth=fourier_depth)
    return Q1Result(float(prof.values()[0]), float(prof.last_increments()[0]),
                    prof.partial_sums[0], prof.depth)


VERDICT_BASIS = "BASIS-CONSISTENT"
VERDICT_INCOMPLETE = "INCOMPLETE"
VERDICT_INDETERMINATE = "INDETERMINATE"


@dataclass
class CompletenessReport:
    verdict: str
    profile: Q1Profile
    eps_pass: float
    eps_fail: float
    eps_conv: float
    grad_at_zero: np.ndarray

    def low_points(self):
        vals = self.profile.values()
        stab = self.profile.stabilized_depth(self.eps_conv)
        return [(tuple(self.profile.tpoints[i]), float(vals[i]))
                for i in range(len(vals))
                if stab[i] is not None and vals[i] <= 1 - self.eps_fail]


def completeness_test(system: AffineSystem, grid, measure=None,
                      eps_pass: float = EPS_PASS, eps_fail: float = EPS_FAIL,
                      eps_conv: float = Q1_EPS_CONV, p_depth_cap: int = Q1_DEPTH_CAP,
                      fourier_depth: int | None = None,
                      fd_step: float = 1e-3) -> CompletenessReport:
    """Run the partial-sum verdict over a grid inside the hull.

    INCOMPLETE when a stabilized point sits at or below 1 - eps_fail;
    BASIS-CONSISTENT when every point stabilized at or above 1 - eps_pass;
    INDETERMINATE otherwise (the depth cap bound before stabilization).
    """
    prof = q1_profile(system, grid, p_depth_cap, measure=measure,
                      fourier_depth=fourier_depth, eps_conv=eps_conv)
    vals = prof.values()
    stab = prof.stabilized_depth(eps_conv)
    stabilized = [s is not None for s in stab]
    if any(st and v <= 1 - eps_fail for st, v in zip(stabilized, vals)):
        verdict = VERDICT_INCOMPLETE
    elif all(stabilized) and (vals >= 1 - eps_pass).all():
        verdict = VERDICT_BASIS
    else:
        verdict = VERDICT_INDETERMINATE

    # central finite-difference gradient of the partial sum at the origin
    grad = np.empty(system.dim)
    for j in range(system.dim):
        stencil = []
        for s in (+fd_step, -fd_step):
            e = np.zeros(system.dim)
            e[j] = s
            stencil.append(e if system.dim > 1 else e[0])
        p2 = q1_profile(system, stencil, prof.depth, measure=measure,
                        fourier_depth=fourier_depth)
        v = p2.values()
        grad[j] = (v[0] - v[1]) / (2 * fd_step)
    return CompletenessReport(verdict, prof, eps_pass, eps_fail, eps_conv, grad)


# ---------------------------------------------------------------------------
# maximal orthogonal families

def max_orthogonal_family(orthogonal, candidates, fourier_depth: int | None = None,
                          tol: float = 1e-6) -> tuple:
    """Maximum subset of `candidates` whose pairwise differences are
    orthogonal directions.

    `orthogonal` decides a pair: a ZeroSetPredicate (exact membership of the
    difference), a measure (transform magnitude at the difference <= tol), or
    any callable taking two candidates.
    """
    cands = list(candidates)
    n = len(cands)
    if n > 64:
        raise ValueError("exact clique search is capped at 64 candidates")
    if n == 0:
        return ()

    if isinstance(orthogonal, ZeroSetPredicate):
        def connected(a, b):
            return orthogonal.member(rat.as_fraction(a) - rat.as_fraction(b))
    elif hasattr(orthogonal, "mu_hat"):
        def connected(a, b):
            da = np.atleast_1d(np.asarray(a, dtype=float)) - np.atleast_1d(np.asarray(b, dtype=float))
            return abs(orthogonal.mu_hat(da, fourier_depth).value) <= tol
    else:
        connected = orthogonal

    adj = [set() for _ in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            if connected(cands[i], cands[j]):
                adj[i].add(j)
                adj[j].add(i)

    best: list[int] = []

    def expand(clique, allowed):
        nonlocal best
        if len(clique) + len(allowed) <= len(best):
            return
        if not allowed:
            if len(clique) > len(best):
                best = clique[:]
            return
        pivot = max(allowed, key=lambda v: len(adj[v] & allowed))
        for v in sorted(allowed - adj[pivot]):
            expand(clique + [v], allowed & adj[v])
            allowed = allowed - {v}
            if len(clique) + len(allowed) <= len(best):
                return

    expand([], set(range(n)))
    return tuple(cands[i] for i in sorted(best))


# ---------------------------------------------------------------------------
# isometric coefficient splitting

def hardy_embedding(sys: AffineSystem, coeffs: dict, split_depth: int,
                    max_depth: int = 24) -> dict:
    """Partition spectrum-indexed coefficients by their leading digit words.

    Returns {prefix: {reduced_point: coefficient}} where prefix is the tuple
    of the first `split_depth` digits and the reduced point is the remaining
    expansion; the squared-coefficient mass is preserved exactly because the
    digit expansion is unique.
    """
    zero = sys.zero()
    Rti = rat.inverse(sys.R.transpose)
    comps: dict = {}
    for lam, c in coeffs.items():
        p = point(lam if hasattr(lam, "__len__") else (lam,), sys.dim)
        word = digits_of(sys, p, max_depth)
        if word is None:
            raise ValueError(f"{lam} has no unique digit expansion (depth {max_depth})")
        padded = word + (zero,) * max(0, split_depth - len(word))
        prefix = padded[:split_depth]
        rest = p
        for digit in prefix:
            rest = rat.mat_vec(Rti, rat.vec_sub(rest, digit))
        comps.setdefault(prefix, {})[rest] = comps.get(prefix, {}).get(rest, 0) + c
    return comps


def embedding_mass(coeffs: dict) -> float:
    return float(sum(abs(c) ** 2 for c in coeffs.values()))


def component_mass(components: dict) -> float:
    return float(sum(abs(c) ** 2 for part in components.values() for c in part.values()))


# ---------------------------------------------------------------------------
# derivative identities at the origin

@dataclass
class ProjectionCheck:
    order: int
    fd_value: float
    reference: float

    @property
    def abs_error(self) -> float:
        return abs(self.fd_value - self.reference)

    @property
    def rel_error(self) -> float:
        scale = max(abs(self.reference), 1e-30)
        return self.abs_error / scale


def projection_norm_checks(system: AffineSystem, j: int = 0, n_order: int = 1,
                           p_depth: int = 10, fd_step: float = 1e-3,
                           measure=None, quad_depth: int | None = None) -> ProjectionCheck:
    """Match finite differences of the completeness sum at 0 against the
    projection-norm identity computed by quadrature.

    Order 1 checks the vanishing gradient; order 2 checks
    d^2/dt_j^2 = 8 pi^2 (||A x_j||^2 - ||x_j||^2), the coordinate projected
    onto the exponential span (both sides computed by independent routes).

    The quadrature atoms must resolve the largest enumerated frequency or the
    discrete coefficients alias; the default depth leaves a four-level margin
    over `p_depth` where the atom budget allows it.
    """
    if n_order not in (1, 2):
        raise ValueError("n_order must be 1 or 2")
    measure = _as_measure(measure) if measure is not None else SelfSimilarMeasure(system)
    if quad_depth is None:
        branching = measure.parts[0].system.N * measure.parts[1].system.N \
            if hasattr(measure, "parts") else measure.system.N
        quad_depth = p_depth + 4
        while branching ** quad_depth > 400_000 and quad_depth > 2:
            quad_depth -= 1

    def qval(ts):
        prof = q1_profile(system, ts, p_depth, measure=measure)
        return prof.values()

    h = fd_step
    dim = system.dim

    def axis_pts(*offsets):
        pts = np.zeros((len(offsets), dim))
        pts[:, j] = offsets
        return pts if dim > 1 else pts[:, 0]

    if n_order == 1:
        v = qval(axis_pts(h, -h, h / 2, -h / 2))
        d_h = (v[0] - v[1]) / (2 * h)
        d_h2 = (v[2] - v[3]) / h
        fd = (4 * d_h2 - d_h) / 3
        return ProjectionCheck(1, float(fd), 0.0)

    v = qval(axis_pts(h, 0.0, -h, h / 2, -h / 2))
    d_h = (v[0] - 2 * v[1] + v[2]) / h ** 2
    d_h2 = (v[3] - 2 * v[1] + v[4]) / (h / 2) ** 2
    fd = (4 * d_h2 - d_h) / 3

    atoms = measure.atoms(quad_depth)
    xj = atoms[:, j]
    x_norm_sq = float(np.mean(xj ** 2))
    proj = 0.0
    lam_chunk = max(1, 8_000_000 // max(len(atoms), 1))
    for _, layer in spectrum_layers(system, p_depth):
        for start in range(0, len(layer), lam_chunk):
            block = layer[start:start + lam_chunk]
            phases = np.exp(-2j * np.pi * (block @ atoms.T))     # (n, n_atoms)
            coefs = phases @ xj / len(xj)
            proj += float((np.abs(coefs) ** 2).sum())
    reference = 8 * math.pi ** 2 * (proj - x_norm_sq)
    return ProjectionCheck(2, float(fd), reference)
