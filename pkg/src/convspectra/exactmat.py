"""Exact integer/rational linear algebra for small expanding matrices.

Everything in this module is exact: matrices are tuples of Fractions or ints,
inverses come from Gauss-Jordan elimination over Q, and the two certified
numeric routines (spectral_norm_upper, expansive_check) reduce to counting
real roots of exact characteristic polynomials with Sturm chains, so the
floats they return carry genuine one-sided guarantees.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

from .errors import (
    DimensionMismatch,
    DimensionUnsupported,
    IndexOutOfRange,
    SingularMatrix,
)

IntVector = tuple  # tuple[int, ...]
RatVector = tuple  # tuple[Fraction, ...]

DEFAULT_NORM_TOL = 1e-12


def _as_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    raise TypeError(f"expected int or Fraction, got {type(x).__name__}")


# ===== matrices =====


@dataclass(frozen=True)
class IntMatrix:
    """Square matrix with integer entries, stored as a tuple of row tuples."""

    rows: tuple

    def __post_init__(self):
        d = len(self.rows)
        if d == 0:
            raise DimensionMismatch("matrix must have at least one row")
        norm = []
        for row in self.rows:
            if len(row) != d:
                raise DimensionMismatch("matrix must be square")
            for x in row:
                if not isinstance(x, int) or isinstance(x, bool):
                    raise TypeError("IntMatrix entries must be ints")
            norm.append(tuple(row))
        object.__setattr__(self, "rows", tuple(norm))

    @property
    def dim(self) -> int:
        return len(self.rows)

    @classmethod
    def identity(cls, d: int) -> "IntMatrix":
        return cls(tuple(tuple(1 if i == j else 0 for j in range(d)) for i in range(d)))

    @classmethod
    def diagonal(cls, entries) -> "IntMatrix":
        e = tuple(entries)
        return cls(tuple(tuple(e[i] if i == j else 0 for j in range(len(e))) for i in range(len(e))))

    def transpose(self) -> "IntMatrix":
        return IntMatrix(tuple(zip(*self.rows)))

    def matvec(self, v) -> IntVector:
        if len(v) != self.dim:
            raise DimensionMismatch("vector length != matrix dimension")
        return tuple(sum(r[j] * v[j] for j in range(self.dim)) for r in self.rows)

    def matmul(self, other: "IntMatrix") -> "IntMatrix":
        if self.dim != other.dim:
            raise DimensionMismatch("matrix dimensions differ")
        cols = other.transpose().rows
        return IntMatrix(
            tuple(tuple(sum(a * b for a, b in zip(row, col)) for col in cols) for row in self.rows)
        )

    def det(self) -> int:
        d = _rat_det([[Fraction(x) for x in row] for row in self.rows])
        assert d.denominator == 1
        return d.numerator

    def is_diagonal(self) -> bool:
        return all(x == 0 for i, row in enumerate(self.rows) for j, x in enumerate(row) if i != j)

    def is_triangular(self) -> bool:
        upper = all(x == 0 for i, row in enumerate(self.rows) for j, x in enumerate(row) if i > j)
        lower = all(x == 0 for i, row in enumerate(self.rows) for j, x in enumerate(row) if i < j)
        return upper or lower

    def to_rat(self) -> "RatMatrix":
        return RatMatrix(tuple(tuple(Fraction(x) for x in row) for row in self.rows))


@dataclass(frozen=True)
class RatMatrix:
    """Square matrix with Fraction entries."""

    rows: tuple

    def __post_init__(self):
        d = len(self.rows)
        if d == 0:
            raise DimensionMismatch("matrix must have at least one row")
        norm = []
        for row in self.rows:
            if len(row) != d:
                raise DimensionMismatch("matrix must be square")
            norm.append(tuple(_as_fraction(x) for x in row))
        object.__setattr__(self, "rows", tuple(norm))

    @property
    def dim(self) -> int:
        return len(self.rows)

    @classmethod
    def identity(cls, d: int) -> "RatMatrix":
        return cls(tuple(tuple(Fraction(1 if i == j else 0) for j in range(d)) for i in range(d)))

    def transpose(self) -> "RatMatrix":
        return RatMatrix(tuple(zip(*self.rows)))

    def matvec(self, v) -> RatVector:
        if len(v) != self.dim:
            raise DimensionMismatch("vector length != matrix dimension")
        w = tuple(_as_fraction(x) for x in v)
        return tuple(sum(r[j] * w[j] for j in range(self.dim)) for r in self.rows)

    def matmul(self, other: "RatMatrix") -> "RatMatrix":
        if self.dim != other.dim:
            raise DimensionMismatch("matrix dimensions differ")
        cols = other.transpose().rows
        return RatMatrix(
            tuple(tuple(sum(a * b for a, b in zip(row, col)) for col in cols) for row in self.rows)
        )

    def det(self) -> Fraction:
        return _rat_det([list(row) for row in self.rows])

    def is_diagonal(self) -> bool:
        return all(x == 0 for i, row in enumerate(self.rows) for j, x in enumerate(row) if i != j)

    def is_zero(self) -> bool:
        return all(x == 0 for row in self.rows for x in row)


def _coerce_rat(m) -> RatMatrix:
    if isinstance(m, IntMatrix):
        return m.to_rat()
    if isinstance(m, RatMatrix):
        return m
    raise TypeError(f"expected IntMatrix or RatMatrix, got {type(m).__name__}")


def _rat_det(rows) -> Fraction:
    """Determinant by fraction Gaussian elimination (exact)."""
    d = len(rows)
    det = Fraction(1)
    for col in range(d):
        pivot = next((r for r in range(col, d) if rows[r][col] != 0), None)
        if pivot is None:
            return Fraction(0)
        if pivot != col:
            rows[pivot], rows[col] = rows[col], rows[pivot]
            det = -det
        det *= rows[col][col]
        inv = 1 / Fraction(rows[col][col])
        for r in range(col + 1, d):
            f = rows[r][col] * inv
            if f:
                rows[r] = [a - f * b for a, b in zip(rows[r], rows[col])]
    return det


def invert(m) -> RatMatrix:
    """Exact inverse over Q via Gauss-Jordan; raises SingularMatrix."""
    rm = _coerce_rat(m)
    d = rm.dim
    aug = [list(row) + [Fraction(1 if i == j else 0) for j in range(d)] for i, row in enumerate(rm.rows)]
    for col in range(d):
        pivot = next((r for r in range(col, d) if aug[r][col] != 0), None)
        if pivot is None:
            raise SingularMatrix("matrix has determinant zero")
        aug[pivot], aug[col] = aug[col], aug[pivot]
        inv = 1 / aug[col][col]
        aug[col] = [x * inv for x in aug[col]]
        for r in range(d):
            if r != col and aug[r][col]:
                f = aug[r][col]
                aug[r] = [a - f * b for a, b in zip(aug[r], aug[col])]
    return RatMatrix(tuple(tuple(row[d:]) for row in aug))


def adjugate(m: IntMatrix) -> tuple:
    """(det, adj) with adj·m = det·I, both exact integers."""
    det = m.det()
    if det == 0:
        raise SingularMatrix("matrix has determinant zero")
    inv = invert(m)
    rows = tuple(tuple((x * det).numerator for x in row) for row in inv.rows)
    for row, irow in zip(rows, inv.rows):
        for x, f in zip(row, irow):
            assert Fraction(x, det) == f
    return det, IntMatrix(rows)


def product_range(seq, p: int, q: int) -> IntMatrix:
    """R_q · R_{q-1} · ... · R_{p+1} for any object exposing matrix(k); p == q gives I."""
    if not (0 <= p <= q):
        raise IndexOutOfRange(f"need 0 <= p <= q, got p={p}, q={q}")
    length = getattr(seq, "length", None)
    if length is not None and q > length:
        raise IndexOutOfRange(f"q={q} exceeds sequence length {length}")
    if p == q:
        dim = getattr(seq, "dim", None)
        if dim is None:
            dim = seq.matrix(1).dim
        return IntMatrix.identity(dim)
    acc = seq.matrix(p + 1)
    for k in range(p + 2, q + 1):
        acc = seq.matrix(k).matmul(acc)
    return acc


# ===== rational polynomial toolkit (ascending coefficient lists) =====


def poly_trim(p):
    p = list(p)
    while len(p) > 1 and p[-1] == 0:
        p.pop()
    if not p:
        return [Fraction(0)]
    return p


def poly_eval(p, x: Fraction) -> Fraction:
    acc = Fraction(0)
    for c in reversed(p):
        acc = acc * x + c
    return acc


def poly_deriv(p):
    return poly_trim([c * i for i, c in enumerate(p)][1:] or [Fraction(0)])


def poly_divmod(a, b):
    a = list(a)
    b = poly_trim(list(b))
    if b == [Fraction(0)] or b == [0]:
        raise ZeroDivisionError("polynomial division by zero")
    q = [Fraction(0)] * max(1, len(a) - len(b) + 1)
    r = [Fraction(f) for f in a]
    dlead = Fraction(b[-1])
    while len(poly_trim(r)) >= len(b) and poly_trim(r) != [Fraction(0)]:
        r = poly_trim(r)
        if len(r) < len(b):
            break
        shift = len(r) - len(b)
        f = r[-1] / dlead
        q[shift] += f
        for i, c in enumerate(b):
            r[shift + i] -= f * c
        r = r[:-1]
    return poly_trim(q), poly_trim([Fraction(c) for c in r])


def poly_gcd(a, b):
    a, b = poly_trim(list(a)), poly_trim(list(b))
    while poly_trim(b) != [Fraction(0)] and poly_trim(b) != [0]:
        _, r = poly_divmod(a, b)
        a, b = b, r
    a = poly_trim(a)
    if a[-1] != 0:
        a = [c / a[-1] for c in a]
    return a


def make_squarefree(p):
    g = poly_gcd(p, poly_deriv(p))
    if len(g) == 1:
        return poly_trim(list(p))
    q, r = poly_divmod(p, g)
    assert poly_trim(r) == [Fraction(0)]
    return q


def sturm_chain(p):
    chain = [poly_trim(list(p)), poly_deriv(p)]
    while len(chain[-1]) > 1 or chain[-1][0] != 0:
        _, r = poly_divmod(chain[-2], chain[-1])
        r = poly_trim(r)
        if r == [Fraction(0)] or r == [0]:
            break
        chain.append([-c for c in r])
    return chain


def _sign_variations(chain, x: Fraction) -> int:
    signs = []
    for p in chain:
        v = poly_eval(p, x)
        if v != 0:
            signs.append(1 if v > 0 else -1)
    return sum(1 for a, b in zip(signs, signs[1:]) if a != b)


def count_real_roots(p, a: Fraction, b: Fraction) -> int:
    """Distinct real roots of squarefree p in the open interval (a, b).

    Requires p(a) != 0 and p(b) != 0.
    """
    if poly_eval(p, a) == 0 or poly_eval(p, b) == 0:
        raise ValueError("Sturm endpoints must not be roots")
    chain = sturm_chain(p)
    return _sign_variations(chain, a) - _sign_variations(chain, b)


def charpoly(m) -> list:
    """Monic characteristic polynomial det(λI − m), ascending Fraction coefficients.

    Faddeev–LeVerrier over exact rationals.
    """
    a = _coerce_rat(m)
    n = a.dim
    ident = RatMatrix.identity(n)
    mk = RatMatrix(tuple(tuple(Fraction(0) for _ in range(n)) for _ in range(n)))
    coeffs = [Fraction(1)]  # coefficient of λ^n
    for k in range(1, n + 1):
        mk = a.matmul(mk)
        mk = RatMatrix(
            tuple(
                tuple(mk.rows[i][j] + coeffs[-1] * ident.rows[i][j] for j in range(n))
                for i in range(n)
            )
        )
        am = a.matmul(mk)
        ck = -sum(am.rows[i][i] for i in range(n)) / k
        coeffs.append(ck)
    # det(λI − A) = Σ_k coeffs[k] λ^{n−k}; convert to ascending order
    return list(reversed(coeffs))


# ===== certified spectral norm upper bound =====


def _gershgorin_upper(g: RatMatrix) -> Fraction:
    return max(sum(abs(x) for x in row) for row in g.rows)


def spectral_norm_upper(m, tol: float = DEFAULT_NORM_TOL) -> float:
    """Certified upper bound u for the spectral norm: ‖m‖₂ ≤ u ≤ ‖m‖₂ + tol.

    The Gram matrix G = mᵀm is formed exactly; the largest eigenvalue of G is
    bracketed by Sturm-count bisection on the exact characteristic polynomial,
    and the returned float is the upward-rounded square root of the upper end.
    """
    if not (tol > 0):
        raise ValueError("tol must be positive")
    rm = _coerce_rat(m)
    if rm.is_zero():
        return 0.0
    if rm.is_diagonal():
        top = max(abs(x) for row in rm.rows for x in row)
        return math.nextafter(float(top), math.inf)
    g = rm.transpose().matmul(rm)
    p = make_squarefree(charpoly(g))
    hi = _gershgorin_upper(g) + 1  # strictly above every eigenvalue
    lo = Fraction(-1)  # strictly below (G is PSD)
    s_lo, s_hi = 0.0, math.sqrt(float(hi))
    for _ in range(300):
        if s_hi - s_lo <= tol / 2:
            break
        mid = (lo + hi) / 2
        if poly_eval(p, mid) == 0:
            # mid is a simple root (p squarefree); divide it out to ask
            # whether any root lies above it.
            q, _ = poly_divmod(p, [-mid, Fraction(1)])
            if len(q) > 1 and count_real_roots(q, mid, hi) >= 1:
                lo = mid
            else:
                lo = hi = mid
                break
        elif count_real_roots(p, mid, hi) >= 1:
            lo = mid
        else:
            hi = mid
        s_lo = math.sqrt(max(float(lo), 0.0))
        s_hi = math.sqrt(float(hi))
    u = math.sqrt(float(hi))
    return math.nextafter(math.nextafter(u, math.inf), math.inf)


# ===== certified expansiveness check =====


@dataclass(frozen=True)
class ExpansiveReport:
    """Verdict plus the certificate behind it.

    method is "triangular-exact" (eigenvalues are the diagonal, compared
    exactly) or "modulus-polynomial" (Sturm count on the exact polynomial
    whose roots are all pairwise eigenvalue products; min |λ|² is always a
    real root, bracketed in modulus_sq_bracket).
    """

    expansive: bool
    method: str
    modulus_sq_bracket: tuple  # (lo, hi) floats bracketing min |eigenvalue|²
    detail: str


def _sylvester_resultant(pa, pb) -> Fraction:
    """Res(pa, pb) for ascending-coefficient polynomials with exact degrees."""
    pa = poly_trim(list(pa))
    pb = poly_trim(list(pb))
    m, n = len(pa) - 1, len(pb) - 1
    if m == 0 and n == 0:
        return Fraction(1)
    if m == 0:
        return pa[0] ** n
    if n == 0:
        return pb[0] ** m
    size = m + n
    da = list(reversed(pa))  # descending
    db = list(reversed(pb))
    rows = []
    for i in range(n):
        rows.append([Fraction(0)] * i + [Fraction(c) for c in da] + [Fraction(0)] * (size - m - 1 - i))
    for i in range(m):
        rows.append([Fraction(0)] * i + [Fraction(c) for c in db] + [Fraction(0)] * (size - n - 1 - i))
    return _rat_det(rows)


def _lagrange_interpolate(points):
    """Exact polynomial (ascending Fractions) through (x_i, y_i) pairs."""
    n = len(points)
    coeffs = [Fraction(0)] * n
    for i, (xi, yi) in enumerate(points):
        # build the basis polynomial Π_{j≠i} (x − x_j)/(x_i − x_j)
        basis = [Fraction(1)]
        denom = Fraction(1)
        for j, (xj, _) in enumerate(points):
            if j == i:
                continue
            basis = [Fraction(0)] + basis  # multiply by x
            for t in range(len(basis) - 1):
                basis[t] -= xj * basis[t + 1]
            denom *= xi - xj
        scale = yi / denom
        for t, c in enumerate(basis):
            coeffs[t] += scale * c
    return poly_trim(coeffs)


def _modulus_product_poly(p):
    """h(u) = Π_{i,j} (u − λ_i λ_j) for monic p with roots λ_i, exact.

    h(u) = Res_λ(p(λ), λ^d p(u/λ)) evaluated at d²+1 integer points and
    interpolated; h is monic of degree d².
    """
    d = len(p) - 1
    points = []
    for u in range(d * d + 1):
        uf = Fraction(u)
        # λ^d p(u/λ): ascending coefficient at degree j is a_{d−j} u^{d−j}
        g = [p[d - j] * uf ** (d - j) for j in range(d + 1)]
        points.append((uf, _sylvester_resultant(p, g)))
    h = _lagrange_interpolate(points)
    assert len(h) == d * d + 1 and h[-1] == 1, "modulus product polynomial must be monic"
    return h


def _cauchy_root_bound(p) -> Fraction:
    lead = p[-1]
    return 1 + max(abs(c / lead) for c in p[:-1])


def _bracket_smallest_positive_root(h, upper: Fraction, tol: float):
    """(lo, hi] bracketing the smallest real root of squarefree h in (0, upper]."""
    lo, hi = Fraction(0), upper
    if poly_eval(h, hi) == 0:
        # h has integer coefficients and is monic, so the non-integer
        # rational hi + 1/3 cannot be a root.
        hi = hi + Fraction(1, 3)
    for _ in range(200):
        if float(hi) - float(lo) <= tol * max(1.0, float(hi)):
            break
        mid = (lo + hi) / 2
        if poly_eval(h, mid) == 0:
            return mid, mid
        if count_real_roots(h, lo, mid) >= 1:
            hi = mid
        else:
            lo = mid
    return lo, hi


def _roots_in_open_zero(h, b: Fraction) -> int:
    """Roots of squarefree h in (0, b); h(0) != 0 required."""
    return count_real_roots(h, Fraction(0), b)


def expansive_check(m: IntMatrix, tol: float = DEFAULT_NORM_TOL) -> ExpansiveReport:
    """Certified check that every eigenvalue of m has modulus > 1.

    Triangular matrices are decided exactly from the diagonal.  Otherwise
    (d ≤ 4 only) the polynomial h(u) = Π(u − λ_i λ_j) is computed exactly;
    all moduli exceed 1 iff h(1) ≠ 0 and h has no real root in (0, 1).
    """
    if not isinstance(m, IntMatrix):
        raise TypeError("expansive_check expects an IntMatrix")
    if m.is_triangular():
        diag = [m.rows[i][i] for i in range(m.dim)]
        mods = sorted(abs(x) for x in diag)
        ok = mods[0] > 1
        lo = float(mods[0] ** 2)
        return ExpansiveReport(
            expansive=ok,
            method="triangular-exact",
            modulus_sq_bracket=(lo, lo),
            detail=f"diagonal entries {diag}",
        )
    if m.dim > 4:
        raise DimensionUnsupported(
            "certified expansiveness is implemented for triangular matrices or d <= 4"
        )
    det = m.det()
    if det == 0:
        return ExpansiveReport(False, "singular", (0.0, 0.0), "determinant is zero")
    p = charpoly(m)
    h = _modulus_product_poly(p)
    h_at_1 = poly_eval(h, Fraction(1))
    hsf = make_squarefree(h)
    assert poly_eval(hsf, Fraction(0)) != 0  # det != 0 rules out zero products
    if h_at_1 == 0:
        # some eigenvalue product equals 1 exactly: a modulus <= 1 exists
        return ExpansiveReport(
            False, "modulus-polynomial", (0.0, 1.0), "an eigenvalue pair multiplies to 1"
        )
    inside = _roots_in_open_zero(hsf, Fraction(1))
    upper = _cauchy_root_bound(hsf)
    lo, hi = _bracket_smallest_positive_root(hsf, upper, tol)
    report = ExpansiveReport(
        expansive=inside == 0,
        method="modulus-polynomial",
        modulus_sq_bracket=(float(lo), float(hi)),
        detail=(
            f"char poly {[str(c) for c in p]}; roots of the pair-product polynomial in (0,1): {inside}"
        ),
    )
    return report
