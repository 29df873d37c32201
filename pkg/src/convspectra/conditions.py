"""Hypothesis checkers: defect/remainder/concentration series, contraction
margins, three-series diagnostics, and the interval coupling sampler.

Series terms are exact rationals; only the convergence verdicts are
heuristic (and say so).  A caller who owns an analytic tail bound can pass
it in to upgrade the verdict to "certified".
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from itertools import product as cartesian

import numpy as np

from .errors import (
    DimensionMismatch,
    DimensionTooLarge,
    IndexOutOfRange,
    ValidationError,
)
from .exactmat import IntMatrix, invert, spectral_norm_upper
from .measures import DiscreteMeasure, clip_to_ball, mass_outside_ball
from .triples import DigitSet

VERDICT_CONVERGED = "converged-numerically"
VERDICT_CERTIFIED = "certified"
VERDICT_DIVERGING = "diverging"
VERDICT_INCONCLUSIVE = "inconclusive"


@dataclass(frozen=True)
class SeriesDiagnostics:
    name: str
    indices: tuple  # the level indices the terms belong to
    terms: tuple  # exact rationals (or rational vectors)
    partial_sums: tuple  # same kind, cumulative
    verdict: str
    bound_used: str
    tail_bound: float | None = None


@dataclass(frozen=True)
class PccSeriesDiagnostics(SeriesDiagnostics):
    min_margin: float = 0.0
    margin_ok: bool = False


@dataclass(frozen=True)
class RbcSplit:
    b1: DigitSet  # digits landing inside R[-1/2,1/2)^d
    b2: DigitSet  # the remainder


@dataclass(frozen=True)
class ContractivityReport:
    max_norm_upper: float
    at_level: int
    declared: Fraction | None
    verdict: str  # verified | unverified-tail | fails
    detail: str


# ===== generic series plumbing =====


def _digits_provider(s):
    """Accept a TripleSequence, a callable k -> DigitSet, or a plain list."""
    digits = getattr(s, "digits", None)
    if callable(digits):
        return digits
    if callable(s):
        return s
    items = list(s)

    def at(k: int) -> DigitSet:
        if not 1 <= k <= len(items):
            raise IndexOutOfRange(f"level {k} outside explicit list of {len(items)}")
        return items[k - 1]

    return at


def _loglog_slope(points):
    n = len(points)
    mx = sum(p[0] for p in points) / n
    my = sum(p[1] for p in points) / n
    sxx = sum((p[0] - mx) ** 2 for p in points)
    if sxx == 0:
        return None
    return sum((p[0] - mx) * (p[1] - my) for p in points) / sxx


def _scalar_verdict(indices, fterms):
    """Heuristic read of finitely many nonnegative terms.  Not a proof."""
    n = len(fterms)
    tail = fterms[n // 2 :]
    if all(t == 0.0 for t in tail):
        return VERDICT_CONVERGED, "tail terms identically zero"
    ratios = [
        tail[i + 1] / tail[i]
        for i in range(len(tail) - 1)
        if tail[i] > 0 and tail[i + 1] > 0
    ]
    if len(ratios) >= 3 and max(ratios) <= 0.95:
        return VERDICT_CONVERGED, f"geometric tail, ratio <= {max(ratios):.3f}"
    pts = [
        (math.log(k), math.log(t))
        for k, t in zip(indices[n // 2 :], tail)
        if t > 0 and k > 0
    ]
    if len(pts) >= 4:
        slope = _loglog_slope(pts)
        if slope is not None:
            if slope < -1.05:
                return VERDICT_CONVERGED, f"power-law tail fit, slope {slope:.2f}"
            if slope > -0.95:
                return VERDICT_DIVERGING, f"tail decays too slowly, slope {slope:.2f}"
    return VERDICT_INCONCLUSIVE, "no tail pattern recognised"


def _finish_scalar_series(name, indices, terms, tail_bound):
    partials, acc = [], Fraction(0)
    for t in terms:
        acc += t
        partials.append(acc)
    if tail_bound is not None:
        nxt = (indices[-1] + 1) if indices else 1
        tb = float(tail_bound(nxt)) if callable(tail_bound) else float(tail_bound)
        verdict, used = VERDICT_CERTIFIED, f"declared tail bound {tb:.3e} beyond level {nxt - 1}"
    else:
        tb = None
        verdict, used = _scalar_verdict(indices, [float(t) for t in terms])
    return SeriesDiagnostics(
        name=name,
        indices=tuple(indices),
        terms=tuple(terms),
        partial_sums=tuple(partials),
        verdict=verdict,
        bound_used=used,
        tail_bound=tb,
    )


# ===== equivalence defect (symmetric-difference series) =====


def defect_term(a: DigitSet, b: DigitSet) -> Fraction:
    """max{ #(B\\A)/#B, #(A\\B)/#A } for one pair of digit sets."""
    sa, sb = a.as_set(), b.as_set()
    shared = len(sa & sb)
    return max(
        Fraction(len(sb) - shared, len(sb)), Fraction(len(sa) - shared, len(sa))
    )


def equivalence_defect(s1, s2, upto: int, tail_bound=None) -> SeriesDiagnostics:
    """Per-level normalized symmetric-difference terms between two digit
    sequences, with exact partial sums and a heuristic tail verdict."""
    if upto < 1:
        raise ValidationError("need upto >= 1")
    f1, f2 = _digits_provider(s1), _digits_provider(s2)
    indices = list(range(1, upto + 1))
    terms = []
    for k in indices:
        a, b = f1(k), f2(k)
        if a.dim != b.dim:
            raise DimensionMismatch(f"level {k}: dimensions {a.dim} vs {b.dim}")
        terms.append(defect_term(a, b))
    return _finish_scalar_series("equivalence-defect", indices, terms, tail_bound)


# ===== remainder split: digits outside R[-1/2,1/2)^d =====


def _diag_positive(r: IntMatrix):
    if not r.is_diagonal():
        return None
    ds = [r.rows[i][i] for i in range(r.dim)]
    if any(d <= 0 for d in ds):
        return None
    return ds


def _box_bounds(ds):
    # integer x satisfies -1/2 <= x/d < 1/2  iff  -(d//2) <= x <= (d-1)//2
    return [(-(d // 2), (d - 1) // 2) for d in ds]


def _count_outside_box(r: IntMatrix, b: DigitSet) -> int:
    ds = _diag_positive(r)
    if ds is not None:
        bounds = _box_bounds(ds)
        if r.dim == 2:
            # unrolled: this loop sees ~k^2 digits per level on long sweeps
            (lo0, hi0), (lo1, hi1) = bounds
            far = 0
            for x0, x1 in b.vectors:
                if x0 < lo0 or x0 > hi0 or x1 < lo1 or x1 > hi1:
                    far += 1
            return far
        far = 0
        for v in b.vectors:
            for x, (lo, hi) in zip(v, bounds):
                if x < lo or x > hi:
                    far += 1
                    break
        return far
    inv = invert(r)
    half = Fraction(1, 2)
    far = 0
    for v in b.vectors:
        if any(not (-half <= c < half) for c in inv.matvec(v)):
            far += 1
    return far


def rbc_split(r: IntMatrix, b: DigitSet) -> RbcSplit:
    """Partition digits by whether R^{-1}b lands in [-1/2,1/2)^d (half-open)."""
    if r.dim != b.dim:
        raise DimensionMismatch("matrix and digit set dimensions differ")
    ds = _diag_positive(r)
    inside, outside = [], []
    if ds is not None:
        bounds = _box_bounds(ds)
        for v in b.vectors:
            ok = True
            for x, (lo, hi) in zip(v, bounds):
                if x < lo or x > hi:
                    ok = False
                    break
            (inside if ok else outside).append(v)
    else:
        inv = invert(r)
        half = Fraction(1, 2)
        for v in b.vectors:
            c = inv.matvec(v)
            if all(-half <= x < half for x in c):
                inside.append(v)
            else:
                outside.append(v)
    # filtered subsequences of a sorted tuple stay sorted
    return RbcSplit(
        b1=DigitSet._trusted(b.dim, tuple(inside)),
        b2=DigitSet._trusted(b.dim, tuple(outside)),
    )


def rbc_series(seq, upto: int, tail_bound=None) -> SeriesDiagnostics:
    """Terms #B_{k,2}/#B_k, the fraction of digits outside R_k[-1/2,1/2)^d."""
    if upto < 1:
        raise ValidationError("need upto >= 1")
    indices = list(range(1, upto + 1))
    terms = []
    for k in indices:
        b = seq.digits(k)
        terms.append(Fraction(_count_outside_box(seq.matrix(k), b), len(b)))
    return _finish_scalar_series("rbc", indices, terms, tail_bound)


# ===== concentration margin and split =====


def _pcc_sup_sq(r: IntMatrix) -> Fraction:
    """Exact square of the cube sup: max over vertices xi of d * |R^{-T}xi|_2^2."""
    d = r.dim
    if d > 20:
        raise DimensionTooLarge(f"vertex enumeration needs 2^{d} points")
    inv_t = invert(r).transpose()
    best = Fraction(0)
    for signs in cartesian((1, -1), repeat=d):
        v = inv_t.matvec(signs)
        s = sum(x * x for x in v)
        if s > best:
            best = s
    return d * best


def pcc_sup(r: IntMatrix) -> float:
    """sup over unit-cube frequencies and the radius-sqrt(d)/2 ball of the
    contracted pairing; equals the vertex maximum of sqrt(d)*|R^{-T}xi|_2."""
    return math.sqrt(float(_pcc_sup_sq(r)))


def pcc_split(r: IntMatrix, b: DigitSet, l) -> tuple[DigitSet, DigitSet]:
    """Split digits by the strict criterion |R^{-1}b|_1 < (1-l)/2.

    The cube sup of (R^{-1}b).xi over xi in [-1,1]^d is exactly the l1 norm,
    so this single inequality decides membership for every xi at once.
    """
    lf = Fraction(l)
    if not 0 < lf < 1:
        raise ValidationError(f"need 0 < l < 1, got {lf}")
    if r.dim != b.dim:
        raise DimensionMismatch("matrix and digit set dimensions differ")
    thr = (1 - lf) / 2
    near, far = [], []
    ds = _diag_positive(r)
    if ds is not None:
        lcm = math.lcm(*ds)
        w = [lcm // d for d in ds]
        # |R^{-1}v|_1 < p/q  <=>  q * sum w_i|v_i| < p * lcm
        rhs = thr.numerator * lcm
        q = thr.denominator
        for v in b.vectors:
            acc = 0
            for x, wi in zip(v, w):
                acc += wi * (x if x >= 0 else -x)
            (near if q * acc < rhs else far).append(v)
    else:
        inv = invert(r)
        for v in b.vectors:
            if sum(abs(c) for c in inv.matvec(v)) < thr:
                near.append(v)
            else:
                far.append(v)
    return (
        DigitSet._trusted(b.dim, tuple(near)),
        DigitSet._trusted(b.dim, tuple(far)),
    )


def pcc_series(seq, l, subseq=None, upto: int | None = None, tail_bound=None) -> PccSeriesDiagnostics:
    """Far-digit fraction series along a subsequence, plus the uniform margin
    min_k (1 - l - pcc_sup(R_k)), which must stay positive."""
    lf = Fraction(l)
    if not 0 < lf < 1:
        raise ValidationError(f"need 0 < l < 1, got {lf}")
    if subseq is not None:
        indices = list(subseq)
        if not indices or any(
            indices[i] >= indices[i + 1] for i in range(len(indices) - 1)
        ):
            raise ValidationError("subsequence must be nonempty and increasing")
    else:
        if upto is None or upto < 1:
            raise ValidationError("need upto >= 1 when no subsequence is given")
        indices = list(range(1, upto + 1))
    one_minus_sq = (1 - lf) ** 2
    terms = []
    min_margin = math.inf
    margin_ok = True
    for k in indices:
        r = seq.matrix(k)
        b = seq.digits(k)
        _, far = pcc_split(r, b, lf)
        terms.append(Fraction(len(far), len(b)))
        sup_sq = _pcc_sup_sq(r)
        if sup_sq >= one_minus_sq:  # exact comparison of squares
            margin_ok = False
        min_margin = min(min_margin, 1.0 - float(lf) - math.sqrt(float(sup_sq)))
    base = _finish_scalar_series(f"pcc[l={lf}]", indices, terms, tail_bound)
    return PccSeriesDiagnostics(
        name=base.name,
        indices=base.indices,
        terms=base.terms,
        partial_sums=base.partial_sums,
        verdict=base.verdict,
        bound_used=base.bound_used,
        tail_bound=base.tail_bound,
        min_margin=min_margin,
        margin_ok=margin_ok,
    )


# ===== three-series diagnostics =====


def three_series(seq, r, upto: int):
    """Tail-mass / truncated-mean / truncated-variance terms for the level
    measures eta_k (uniform on the k-th scaled digit set), truncated to the
    closed ball of radius r with outside mass moved to the origin."""
    radius = Fraction(r)
    if radius <= 0:
        raise ValidationError("truncation radius must be positive")
    if upto < 1:
        raise ValidationError("need upto >= 1")
    indices = list(range(1, upto + 1))
    mass_terms, mean_terms, var_terms = [], [], []
    for k in indices:
        atoms = seq.scaled_digit_atoms(k)
        w = Fraction(1, len(atoms))
        eta = DiscreteMeasure.make([(a, w) for a in atoms], seq.dim)
        mass_terms.append(mass_outside_ball(eta, radius))
        clipped = clip_to_ball(eta, radius)
        mean_terms.append(clipped.mean())
        var_terms.append(clipped.variance_total())

    s1 = _finish_scalar_series("tail-mass", indices, mass_terms, None)
    s3 = _finish_scalar_series("truncated-variance", indices, var_terms, None)

    # vector series: cumulative sums, Cauchy increments in l2 over last quarter
    partials = []
    acc = tuple(Fraction(0) for _ in range(seq.dim))
    for t in mean_terms:
        acc = tuple(p + q for p, q in zip(acc, t))
        partials.append(acc)
    incs = [math.sqrt(float(sum(x * x for x in t))) for t in mean_terms]
    quarter = incs[(3 * len(incs)) // 4 :]
    if all(i < 1e-10 for i in quarter):
        verdict, used = VERDICT_CONVERGED, "l2 increments < 1e-10 over last quarter"
    else:
        verdict, used = (
            VERDICT_INCONCLUSIVE,
            f"largest recent l2 increment {max(quarter):.3e}",
        )
    s2 = SeriesDiagnostics(
        name="truncated-mean",
        indices=tuple(indices),
        terms=tuple(mean_terms),
        partial_sums=tuple(partials),
        verdict=verdict,
        bound_used=used,
    )
    return s1, s2, s3


# ===== uniform contractivity =====


def contractivity_report(seq, upto: int, tol: float = 1e-12) -> ContractivityReport:
    """Scan max_k ||R_k^{-1}||_2 (certified upper bounds) and combine with the
    sequence's declared tail bound."""
    if upto < 1:
        raise ValidationError("need upto >= 1")
    worst, at = -math.inf, 0
    for k in range(1, upto + 1):
        u = spectral_norm_upper(invert(seq.matrix(k)), tol=tol)
        if u > worst:
            worst, at = u, k
    declared = seq.declared_contractivity
    if worst >= 1.0:
        verdict, detail = "fails", f"level {at} has ||R^{-1}|| upper bound {worst}"
    elif declared is None:
        verdict, detail = (
            "unverified-tail",
            f"scan of {upto} levels < 1 but no declared bound for the tail",
        )
    elif declared >= 1:
        verdict, detail = "fails", f"declared bound {declared} is not < 1"
    elif worst > float(declared) + tol:
        verdict, detail = (
            "fails",
            f"scan max {worst} exceeds declared bound {float(declared)}",
        )
    else:
        verdict, detail = "verified", f"scan max {worst} <= declared {float(declared)}"
    return ContractivityReport(
        max_norm_upper=worst, at_level=at, declared=declared, verdict=verdict, detail=detail
    )


# ===== interval coupling sampler =====

_Q = 1 << 53  # draws are exact integers u, representing x = u / 2^53
_FAST_SET_LIMIT = 1000  # int64 slot arithmetic is overflow-safe below this


@dataclass(frozen=True)
class LevelCoupling:
    k: int
    exact_p: Fraction
    mismatches: int
    draws: int

    @property
    def empirical(self) -> float:
        return self.mismatches / self.draws


@dataclass(frozen=True)
class CouplingReport:
    levels: tuple
    exact_partials: tuple
    empirical_partials: tuple
    x_sums: np.ndarray  # (draws, dim) float partial sums per draw
    y_sums: np.ndarray
    seed: int
    draws: int
    dim: int


def _aligned_tables(a: DigitSet, b: DigitSet):
    """Order both sets with the shared elements first, in the same order.

    Returns (ax, ay, s) with len(ax) <= len(ay); callers track whether the
    roles were swapped."""
    sa, sb = a.as_set(), b.as_set()
    shared = sorted(sa & sb)
    ax = shared + sorted(sa - sb)
    ay = shared + sorted(sb - sa)
    swapped = len(ax) > len(ay)
    if swapped:
        ax, ay = ay, ax
    return ax, ay, len(shared), swapped


def coupling_eval(a: DigitSet, b: DigitSet, x: Fraction):
    """Exact evaluation of the coupled pair (X, Y) at one rational x in [0,1).

    Mirrors the integer sampler arithmetic; exists so tests can integrate the
    construction exhaustively over a midpoint grid."""
    if not 0 <= x < 1:
        raise ValidationError("x must lie in [0, 1)")
    ax, ay, s, swapped = _aligned_tables(a, b)
    m, n = len(ax), len(ay)
    i0 = math.floor(x * m)
    aligned = (x - Fraction(i0, m)) < Fraction(1, n)
    xv = ax[i0]
    if aligned:
        yv = ay[i0]
    else:
        yv = ay[m + math.floor(x * n) - i0 - 1]
    return (yv, xv) if swapped else (xv, yv)


def _level_draws(seed: int, k: int, draws: int) -> np.ndarray:
    gen = np.random.Generator(np.random.Philox(key=[seed, k]))
    return gen.integers(0, _Q, size=draws, dtype=np.int64)


def _sample_level(ax, ay, s, u: np.ndarray):
    """Vectorised coupled evaluation; returns (x_idx, y_idx, mismatch_mask)."""
    m, n = len(ax), len(ay)
    if max(m, n) <= _FAST_SET_LIMIT:
        i0 = (u * m) >> 53
        rem = u * m - (i0 << 53)
        aligned = n * rem < (m << 53)
        fill = ((u * n) >> 53) - i0 - 1 + m
        y_idx = np.where(aligned, i0, fill)
        mism = ~(aligned & (i0 < s))
        return i0, y_idx, mism
    # big sets: same stream, Python integer arithmetic (no int64 headroom)
    x_idx = np.empty(len(u), dtype=np.int64)
    y_idx = np.empty(len(u), dtype=np.int64)
    mism = np.empty(len(u), dtype=bool)
    for j, uv in enumerate(u.tolist()):
        i0 = (uv * m) // _Q
        aligned = n * (uv * m - i0 * _Q) < m * _Q
        x_idx[j] = i0
        y_idx[j] = i0 if aligned else (uv * n) // _Q - i0 - 1 + m
        mism[j] = not (aligned and i0 < s)
    return x_idx, y_idx, mism


def coupled_sample(
    s1, s2, upto: int, draws: int, rng_seed: int, scale_by=None
) -> CouplingReport:
    """Empirical mismatch frequencies for the interval coupling, level by
    level, plus the coupled partial-sum samples for both sequences.

    `scale_by` (optional) maps a level index to a matrix applied to both
    digit sets before summing, e.g. a prefix inverse so the partial sums
    follow the scaled summands instead of the raw digits."""
    if upto < 1 or draws < 1:
        raise ValidationError("need upto >= 1 and draws >= 1")
    f1, f2 = _digits_provider(s1), _digits_provider(s2)
    levels = []
    exact_partials, empirical_partials = [], []
    acc_exact, acc_emp = Fraction(0), 0.0
    x_sums = y_sums = None
    dim = None
    for k in range(1, upto + 1):
        a, b = f1(k), f2(k)
        if a.dim != b.dim:
            raise DimensionMismatch(f"level {k}: dimensions {a.dim} vs {b.dim}")
        if dim is None:
            dim = a.dim
            x_sums = np.zeros((draws, dim))
            y_sums = np.zeros((draws, dim))
        ax, ay, s, swapped = _aligned_tables(a, b)
        u = _level_draws(rng_seed, k, draws)
        x_idx, y_idx, mism = _sample_level(ax, ay, s, u)
        if scale_by is not None:
            sc = scale_by(k)
            va = np.array([[float(c) for c in sc.matvec(v)] for v in ax])
            vb = np.array([[float(c) for c in sc.matvec(v)] for v in ay])
        else:
            va = np.array([[float(c) for c in v] for v in ax])
            vb = np.array([[float(c) for c in v] for v in ay])
        if swapped:
            x_sums += vb[y_idx]
            y_sums += va[x_idx]
        else:
            x_sums += va[x_idx]
            y_sums += vb[y_idx]
        n = len(ay)
        exact_p = Fraction(n - s, n)
        mcount = int(mism.sum())
        levels.append(LevelCoupling(k=k, exact_p=exact_p, mismatches=mcount, draws=draws))
        acc_exact += exact_p
        acc_emp += mcount / draws
        exact_partials.append(acc_exact)
        empirical_partials.append(acc_emp)
    return CouplingReport(
        levels=tuple(levels),
        exact_partials=tuple(exact_partials),
        empirical_partials=tuple(empirical_partials),
        x_sums=x_sums,
        y_sums=y_sums,
        seed=rng_seed,
        draws=draws,
        dim=dim,
    )
