"""Candidate spectra: level-by-level construction, the Q-function criterion,
exact finite-level verification, and the equi-positivity grid scan with its
quantitative floor.
"""
from __future__ import annotations

import math
from collections.abc import Mapping
from dataclasses import dataclass, field
from fractions import Fraction
from itertools import product as cartesian

import numpy as np

from ._phases import common_denominator, exact_phase_matrix, unit_exponentials
from .errors import (
    BoundViolation,
    EpsilonOutOfRange,
    GridTooLarge,
    MilestoneGap,
    NonUniformWeights,
    SizeMismatch,
    ThetaOutOfRange,
    TripleInvalid,
    TruncationTooLarge,
    ValidationError,
)
from .exactmat import invert, product_range
from .measures import DiscreteMeasure, fourier_many, tail_fourier_product

DEFAULT_EXACTNESS_TOL = 1e-9
DEFAULT_SPECTRUM_CAP = 1_000_000
DEFAULT_FAIL_TOL = 1e-12
DEFAULT_GRID_CAP = 4_000_000


# ===== spectrum construction =====


@dataclass(frozen=True)
class SpectrumLevels:
    dim: int
    milestones: tuple  # milestone indices actually used
    levels: tuple  # per level: sorted tuple of integer vectors
    chooser: str
    k_choices: tuple  # ((level_index j, lambda), k) records for nonzero k

    def level_sets(self):
        return [frozenset(l) for l in self.levels]

    def final(self):
        return self.levels[-1]


def _k_search_box(radius: int, dim: int):
    box = list(cartesian(range(-radius, radius + 1), repeat=dim))
    box.sort(key=lambda k: (sum(abs(c) for c in k), k))
    return box


def _window_spectrum_digits(seq, p: int, q: int):
    """Composed spectrum digits L_{p+1} + R_{p+1}^T L_{p+2} + ... over (p, q]."""
    vectors = list(seq.spectrum_digits(p + 1).vectors)
    mt = None
    for i in range(p + 2, q + 1):
        prev_t = seq.matrix(i - 1).transpose()
        mt = prev_t if mt is None else mt.matmul(prev_t)
        step = [mt.matvec(l) for l in seq.spectrum_digits(i).vectors]
        vectors = [
            tuple(a + b for a, b in zip(v, w)) for v in vectors for w in step
        ]
    return vectors


def build_spectrum(
    seq,
    milestones,
    k_chooser="zero",
    *,
    search_radius: int = 2,
    search_depth: int = 2,
    delta0=None,
    max_atoms: int = DEFAULT_SPECTRUM_CAP,
) -> SpectrumLevels:
    """Grow candidate spectra level by level.

    Each step Minkowski-adds the (p, q] window of composed spectrum digits,
    optionally shifted inside their residue classes by per-vector integer
    choices k, then maps the result through the transposed prefix product.
    The default chooser takes every k = 0; "windowed-search" scores k over a
    box by the truncated tail transform; a mapping {(lambda, j): k} replays
    fixed choices.  k = 0 is always forced at lambda = 0.

    When ``delta0`` is given, each requested milestone is advanced to the
    first index where every previously built vector scales strictly inside
    the radius-delta0/2 ball (exact rational comparison).
    """
    ms = [int(m) for m in milestones]
    if not ms or any(m < 1 for m in ms):
        raise ValidationError("milestones must be positive indices")
    if any(ms[i] >= ms[i + 1] for i in range(len(ms) - 1)):
        raise ValidationError("milestones must be strictly increasing")
    if seq.length is not None and ms[-1] > seq.length:
        raise MilestoneGap(f"milestone {ms[-1]} exceeds sequence length {seq.length}")

    if k_chooser == "zero":
        mode, table = "zero", None
    elif k_chooser == "windowed-search":
        mode, table = "windowed", None
        if search_radius < 0 or search_depth < 1:
            raise ValidationError("windowed search needs radius >= 0, depth >= 1")
    elif isinstance(k_chooser, Mapping):
        mode, table = "table", dict(k_chooser)
    else:
        raise ValidationError(f"unknown k_chooser {k_chooser!r}")

    dim = seq.dim
    zero_vec = (0,) * dim
    half_delta_sq = None
    if delta0 is not None:
        d0 = Fraction(delta0)
        if d0 <= 0:
            raise ValidationError("delta0 must be positive")
        half_delta_sq = (d0 / 2) ** 2

    # every level used must carry a validated triple (triple() raises on failure)
    def ensure_levels_valid(p, q):
        for i in range(p + 1, q + 1):
            seq.triple(i)

    lam_prev = [zero_vec]
    levels = []
    used_milestones = []
    k_records = []
    p = 0
    for j, requested in enumerate(ms, start=1):
        q = max(requested, p + 1)
        if half_delta_sq is not None:
            while True:
                if seq.length is not None and q > seq.length:
                    raise MilestoneGap(
                        f"no admissible milestone >= {requested} within length {seq.length}"
                    )
                inv_t = invert(seq.prefix_matrix(q)).transpose()
                ok = all(
                    sum(c * c for c in inv_t.matvec(lam)) < half_delta_sq
                    for lam in lam_prev
                )
                if ok:
                    break
                q += 1
        elif seq.length is not None and q > seq.length:
            raise MilestoneGap(f"milestone {q} exceeds sequence length {seq.length}")

        ensure_levels_valid(p, q)
        block = _window_spectrum_digits(seq, p, q)
        if len(lam_prev) * len(block) > max_atoms:
            raise TruncationTooLarge(
                f"level {j} would hold {len(lam_prev) * len(block)} vectors "
                f"(cap {max_atoms})"
            )
        rt_window = product_range(seq, p, q).transpose()
        rt_prefix = seq.prefix_matrix(p).transpose()

        if mode == "windowed":
            inv_win_t = invert(product_range(seq, p, q)).transpose()
            depth_left = search_depth
            if seq.length is not None:
                depth_left = min(search_depth, seq.length - q)
            box = _k_search_box(search_radius, dim)

        mapped = []
        for lam in block:
            if lam == zero_vec:
                k = zero_vec
            elif mode == "zero":
                k = zero_vec
            elif mode == "table":
                k = tuple(table.get((lam, j), zero_vec))
                if len(k) != dim:
                    raise ValidationError(f"k table entry for {lam} has wrong dimension")
            else:  # windowed
                if depth_left < 1:
                    k = zero_vec
                else:
                    base = inv_win_t.matvec(lam)
                    best_k, best_score = zero_vec, -1.0
                    for cand in box:
                        xi = tuple(b + c for b, c in zip(base, cand))
                        score = abs(tail_fourier_product(seq, q, depth_left, xi))
                        if score > best_score + 1e-15:
                            best_k, best_score = cand, score
                    k = best_k
            if k != zero_vec:
                k_records.append(((j, lam), k))
                shift = rt_window.matvec(k)
                lam = tuple(a + b for a, b in zip(lam, shift))
            mapped.append(rt_prefix.matvec(lam))

        new_level = {
            tuple(a + b for a, b in zip(prev, v)) for prev in lam_prev for v in mapped
        }
        if len(new_level) != len(lam_prev) * len(block):
            raise TripleInvalid(
                f"level {j} collided: {len(new_level)} vectors from "
                f"{len(lam_prev)}x{len(block)} products"
            )
        lam_prev = sorted(new_level)
        levels.append(tuple(lam_prev))
        used_milestones.append(q)
        p = q

    return SpectrumLevels(
        dim=dim,
        milestones=tuple(used_milestones),
        levels=tuple(levels),
        chooser=mode,
        k_choices=tuple(k_records),
    )


def write_levels(sp: SpectrumLevels, stream) -> None:
    """One integer vector per line; level boundaries are comment lines."""
    stream.write(f"# spectrum dim={sp.dim} chooser={sp.chooser}\n")
    for j, (m, level) in enumerate(zip(sp.milestones, sp.levels), start=1):
        stream.write(f"# level {j}: milestone {m}, {len(level)} vectors\n")
        for v in level:
            stream.write(" ".join(str(c) for c in v) + "\n")


def read_levels(stream) -> SpectrumLevels:
    dim = None
    chooser = "unknown"
    milestones = []
    levels = []
    current = None
    for line in stream:
        line = line.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if body.startswith("spectrum"):
                for tok in body.split():
                    if tok.startswith("dim="):
                        dim = int(tok[4:])
                    elif tok.startswith("chooser="):
                        chooser = tok[8:]
            elif body.startswith("level"):
                if current is not None:
                    levels.append(tuple(current))
                current = []
                toks = body.replace(",", " ").split()
                if "milestone" in toks:
                    milestones.append(int(toks[toks.index("milestone") + 1]))
            continue
        if current is None:
            current = []
        vec = tuple(int(t) for t in line.split())
        if dim is None:
            dim = len(vec)
        elif len(vec) != dim:
            raise ValidationError(f"vector {vec} does not match dim {dim}")
        current.append(vec)
    if current is not None:
        levels.append(tuple(current))
    if not levels:
        raise ValidationError("no spectrum vectors found")
    if len(milestones) != len(levels):
        milestones = list(range(1, len(levels) + 1))
    return SpectrumLevels(
        dim=dim,
        milestones=tuple(milestones),
        levels=tuple(tuple(sorted(l)) for l in levels),
        chooser=chooser,
        k_choices=(),
    )


# ===== the Q criterion =====


def q_eval(m: DiscreteMeasure, lambda_set, xi) -> float:
    """Q(xi) = sum over the candidate set of |mu_hat(xi + lambda)|^2."""
    lams = list(lambda_set)
    if not lams:
        return 0.0
    xif = tuple(Fraction(x) for x in xi)
    pts = [tuple(x + l for x, l in zip(xif, lam)) for lam in lams]
    vals = fourier_many(m, pts)
    return float(np.sum(np.abs(vals) ** 2))


def q_eval_many(m: DiscreteMeasure, lambda_set, xis) -> np.ndarray:
    lams = list(lambda_set)
    if not lams:
        return np.zeros(len(list(xis)))
    xs = [tuple(Fraction(c) for c in xi) for xi in xis]
    pts = [
        tuple(x + l for x, l in zip(xi, lam)) for xi in xs for lam in lams
    ]
    vals = fourier_many(m, pts).reshape(len(xs), len(lams))
    return np.sum(np.abs(vals) ** 2, axis=1)


@dataclass(frozen=True)
class ExactnessResult:
    ok: bool
    deviation: float
    size: int


def spectrum_exactness(
    m: DiscreteMeasure, lambda_set, tol: float = DEFAULT_EXACTNESS_TOL
) -> ExactnessResult:
    """Finite criterion: for an n-atom equal-weight measure and n candidate
    frequencies, spectrality means the normalized exponential matrix is
    unitary.  Returns the max Gram deviation from the identity."""
    lams = sorted(set(tuple(int(c) for c in v) for v in lambda_set))
    n = len(m)
    if any(w != Fraction(1, n) for w in m.weights):
        raise NonUniformWeights(
            "exactness criterion supports equal-weight measures only"
        )
    if len(lams) != n:
        raise SizeMismatch(f"{len(lams)} candidate vectors vs {n} atoms")
    den_a, rows_a = m._phase_data
    phases = exact_phase_matrix(lams, 1, rows_a, den_a)
    e = unit_exponentials(phases) / math.sqrt(n)
    gram = e @ e.conj().T
    dev = float(np.abs(gram - np.eye(n)).max())
    return ExactnessResult(ok=dev <= tol, deviation=dev, size=n)


# ===== equi-positivity scan =====


@dataclass(frozen=True)
class EquiPositivityReport:
    status: str  # "witnessed" | "failed"
    epsilon0: float  # defensible lower bound (includes truncation floor)
    scanned_epsilon0: float  # raw grid minimum over the truncated tails
    delta0: float  # radius of the scanned y-ball
    tail_starts: tuple
    depth: int
    k_window: int
    scanned_xs: str
    per_x_witness: dict  # (start, x) -> (k, min |nu_hat| over the y-ball)
    failed_at: tuple | None
    truncation_floor: float | None
    truncation_note: str


def _pitch_grid(pitch: Fraction, dim: int):
    """pitch * Z^d intersected with [-1/2, 1/2)^d, exact."""
    lo = math.ceil(Fraction(-1, 2) / pitch)
    axis = []
    n = lo
    while n * pitch < Fraction(1, 2):
        axis.append(n * pitch)
        n += 1
    return [tuple(v) for v in cartesian(axis, repeat=dim)]


def _ball_grid(pitch: Fraction, radius: Fraction, dim: int):
    """pitch * Z^d intersected with the open ball |y|_2 < radius, exact."""
    r2 = radius * radius
    reach = math.floor(radius / pitch)
    axis = [n * pitch for n in range(-reach, reach + 1)]
    return [
        tuple(v)
        for v in cartesian(axis, repeat=dim)
        if sum(c * c for c in v) < r2
    ]


def _exp_table(w_vectors, points):
    """Matrix exp(-2 pi i w.p) over rational vectors w (rows) x points (cols)."""
    den_w, rows_w = common_denominator(w_vectors)
    den_p, rows_p = common_denominator(points)
    return unit_exponentials(exact_phase_matrix(rows_w, den_w, rows_p, den_p))


def truncation_tail_floor(
    c: float, depth: int, dim: int, xi_max: float, terms: int = 200
):
    """Lower bound for the product of the mask moduli a depth-truncated scan
    ignores.  Valid when every ignored digit set sits inside its half-open
    box after scaling by its own matrix: the j-th tail factor then averages
    unit exponentials with phases within +-theta_j where
    theta_j = pi sqrt(d) xi_max c^{j-1}, so it is at least cos(theta_j)
    while theta_j < pi/2.  Returns (floor, note); floor is None when the
    bound does not apply."""
    if not 0 < c < 1:
        return None, "no contraction ratio declared; truncation error unbounded"
    acc = 0.0
    for j in range(depth + 1, depth + 1 + terms):
        theta = math.pi * math.sqrt(dim) * xi_max * c ** (j - 1)
        if theta >= math.pi / 2:
            return None, (
                f"phase bound {theta:.3f} at tail factor {j} is not below pi/2; "
                "no truncation floor at this depth"
            )
        acc += math.log(math.cos(theta))
        if theta < 1e-18:
            break
    floor = math.exp(acc)
    note = (
        f"ignored factors beyond depth {depth} bounded below by {floor:.15g} "
        f"(assumes in-box digits and contraction ratio {c:g})"
    )
    return floor, note


def _probe_in_box(seq, starts, depth: int, probe: int = 4):
    """First ignored level whose digits leave the half-open box, or None."""
    from .conditions import rbc_split  # local import: avoid a module cycle

    seen = set()
    for start in starts:
        top = start + depth + probe
        if seq.length is not None:
            top = min(top, seq.length)
        for i in range(start + depth + 1, top + 1):
            if i in seen:
                continue
            seen.add(i)
            if len(rbc_split(seq.matrix(i), seq.digits(i)).b2):
                return i
    return None


def equi_positivity_scan(
    seq,
    tail_starts,
    depth: int,
    x_grid,
    y_radius,
    k_window: int = 0,
    *,
    y_pitch=None,
    fail_tol: float = DEFAULT_FAIL_TOL,
    grid_cap: int = DEFAULT_GRID_CAP,
) -> EquiPositivityReport:
    """Scan |nu_hat(x + y + k)| for the depth-truncated tails over a rational
    grid, maximizing over a small k-box and minimizing over the y-ball.

    ``x_grid`` is either a pitch (number) or an explicit list of rational
    vectors in [-1/2, 1/2)^d.  k = 0 is forced at x = 0.  The report carries
    the worst witnessed value and, when a contraction ratio is declared, a
    floor for the ignored deeper factors.
    """
    if depth < 1:
        raise ValidationError("depth must be >= 1")
    if k_window < 0:
        raise ValidationError("k_window must be >= 0")
    starts = [int(s) for s in tail_starts]
    if not starts or any(s < 0 for s in starts):
        raise ValidationError("tail starts must be nonnegative")
    dim = seq.dim
    rad = Fraction(y_radius)
    if rad <= 0:
        raise ValidationError("y_radius must be positive")

    if isinstance(x_grid, (int, float, Fraction, str)):
        pitch = Fraction(x_grid)
        if pitch <= 0:
            raise ValidationError("x grid pitch must be positive")
        xs = _pitch_grid(pitch, dim)
        xs_note = f"pitch {pitch} on [-1/2,1/2)^{dim}: {len(xs)} points"
    else:
        xs = [tuple(Fraction(c) for c in v) for v in x_grid]
        if not xs:
            raise ValidationError("empty x grid")
        xs_note = f"explicit grid: {len(xs)} points"
    yp = Fraction(y_pitch) if y_pitch is not None else rad / 8
    ys = _ball_grid(yp, rad, dim)
    if not ys:
        raise ValidationError("y grid is empty; shrink the pitch")
    if len(xs) * len(ys) > grid_cap:
        raise GridTooLarge(f"{len(xs)} x {len(ys)} grid points exceed cap {grid_cap}")
    ks = _k_search_box(k_window, dim)

    zero_x = tuple(Fraction(0) for _ in range(dim))
    witnesses = {}
    failed_at = None
    scanned_min = math.inf

    for start in starts:
        if seq.length is not None and start + depth > seq.length:
            raise MilestoneGap(
                f"tail start {start} + depth {depth} exceeds sequence length {seq.length}"
            )
        # per-level tables over the (x, y) product grid, one slab per k
        prod = np.ones((len(ks), len(xs), len(ys)), dtype=complex)
        for j in range(1, depth + 1):
            inv = invert(product_range(seq, start, start + j))
            digits = seq.digits(start + j)
            w = [inv.matvec(b) for b in digits.vectors]
            ax = _exp_table(w, xs)  # (nb, nx)
            ay = _exp_table(w, ys)  # (nb, ny)
            nb = len(w)
            for ki, k in enumerate(ks):
                if any(k):
                    shift = _exp_table(w, [tuple(Fraction(c) for c in k)])[:, 0]
                    axk = ax * shift[:, None]
                else:
                    axk = ax
                prod[ki] *= (axk.T @ ay) / nb
        mags = np.abs(prod)  # (nk, nx, ny)
        per_k_min = mags.min(axis=2)  # (nk, nx)
        for xi_idx, x in enumerate(xs):
            if x == zero_x:
                k_idx = 0  # _k_search_box puts 0 first
            else:
                k_idx = int(np.argmax(per_k_min[:, xi_idx]))
            val = float(per_k_min[k_idx, xi_idx])
            witnesses[(start, x)] = (ks[k_idx], val)
            if val <= fail_tol and failed_at is None:
                failed_at = (start, x)
            scanned_min = min(scanned_min, val)

    floor, note = (None, "no contraction ratio declared")
    c = seq.declared_contractivity
    if c is not None:
        xi_max = math.sqrt(dim) * (0.5 + k_window) + float(rad)
        floor, note = truncation_tail_floor(float(c), depth, dim, xi_max)
        if floor is not None:
            bad = _probe_in_box(seq, starts, depth)
            if bad is not None:
                floor, note = None, (
                    f"level {bad} digit set leaves its half-open box; "
                    "truncation floor withheld"
                )
    status = "failed" if failed_at is not None else "witnessed"
    eps = 0.0 if failed_at is not None else scanned_min
    if floor is not None:
        eps *= floor
    return EquiPositivityReport(
        status=status,
        epsilon0=eps,
        scanned_epsilon0=0.0 if failed_at is not None else scanned_min,
        delta0=float(rad),
        tail_starts=tuple(starts),
        depth=depth,
        k_window=k_window,
        scanned_xs=xs_note,
        per_x_witness=witnesses,
        failed_at=failed_at,
        truncation_floor=floor,
        truncation_note=note,
    )


# ===== quantitative helpers =====


def cos_bound(theta: float) -> float:
    """Lower bound cos(theta/2) for the modulus of any average of unit
    exponentials whose phases all lie within an arc of width theta < pi."""
    if not 0 <= theta < math.pi:
        raise ThetaOutOfRange(f"need 0 <= theta < pi, got {theta}")
    return math.cos(theta / 2)


@dataclass(frozen=True)
class TailConstant:
    value: float  # partial sum of ln cos(eps^j), j = 0..terms
    lo: float  # certified bracket: lo <= true constant <= hi
    hi: float
    terms: int


def tail_constant_C(epsilon: float, terms: int) -> TailConstant:
    """Partial sum of sum_j ln cos(eps^j) with a certified tail bracket
    (|tail| <= sum_{j>terms} eps^{2j}, since -ln cos x <= x^2 on [0,1])."""
    if not 0 < epsilon < 1:
        raise EpsilonOutOfRange(f"need 0 < epsilon < 1, got {epsilon}")
    if terms < 0:
        raise ValidationError("terms must be >= 0")
    total = 0.0
    for j in range(terms + 1):
        total += math.log(math.cos(epsilon**j))
    tail = epsilon ** (2 * (terms + 1)) / (1 - epsilon**2)
    return TailConstant(value=total, lo=total - tail, hi=total, terms=terms)


def perturbation_bound(phi1_to_phi2_tv: float, epsilon0: float) -> float:
    """Transfer an equi-positivity constant across a total-variation distance."""
    if phi1_to_phi2_tv < 0:
        raise ValidationError("total variation cannot be negative")
    if phi1_to_phi2_tv >= epsilon0:
        raise BoundViolation(
            f"tv distance {phi1_to_phi2_tv} is not below epsilon0 {epsilon0}"
        )
    return epsilon0 - phi1_to_phi2_tv


@dataclass(frozen=True)
class FloorReport:
    epsilon0_floor: float
    r_value: float
    a_value: float
    j_index: int
    c_bracket: tuple
    checked_levels: tuple
    valid: bool
    detail: str


def equi_positivity_floor(
    seq,
    l,
    tail_start: int = 0,
    *,
    a=None,
    check_depth: int = 16,
    c_terms: int = 80,
) -> FloorReport:
    """Numeric evaluation of the constructive lower bound e^C r^{J-1} a for
    tails of a concentration-compliant sequence with margin l.

    r = cos_bound((1 - l/2) pi); J is the first index where the phase bound
    (3 d pi / 4) c^{J-1} drops below c per extra level; a must satisfy
    (1-a) r - a > a and dominate the far-digit fractions of the checked
    levels (verified exactly level by level)."""
    from .conditions import pcc_split  # local import: avoid a module cycle

    lf = Fraction(l)
    if not 0 < lf < 1:
        raise ValidationError(f"need 0 < l < 1, got {lf}")
    c = seq.declared_contractivity
    if c is None:
        raise ValidationError("sequence declares no contraction ratio")
    cf = float(c)
    if not 0 < cf < 1:
        raise ValidationError("declared contraction ratio must be in (0, 1)")
    d = seq.dim
    theta = (1 - float(lf) / 2) * math.pi
    r = cos_bound(theta)
    if a is None:
        a = r / (2 * (r + 2))
    af = float(a)
    if not (1 - af) * r - af > af:
        raise BoundViolation(
            f"a = {af:g} violates the smallness requirement (1-a)r - a > a"
        )
    arg = 4.0 / (3.0 * d * math.pi)
    jj = 1 if arg >= 1 else 1 + math.ceil(math.log(arg) / math.log(cf))
    tc = tail_constant_C(cf, c_terms)
    floor = math.exp(tc.lo) * r ** (jj - 1) * af
    checked = []
    valid = True
    bad = None
    top = tail_start + check_depth
    if seq.length is not None:
        top = min(top, seq.length)
    a_frac = Fraction(af)
    for k in range(tail_start + 1, top + 1):
        b = seq.digits(k)
        _, far = pcc_split(seq.matrix(k), b, lf)
        frac = Fraction(len(far), len(b))
        checked.append((k, frac))
        if frac > a_frac and bad is None:
            valid = False
            bad = k
    detail = (
        f"far-digit fractions checked exactly for levels {tail_start + 1}..{top}"
        + ("" if valid else f"; level {bad} exceeds a = {af:g}")
    )
    return FloorReport(
        epsilon0_floor=floor,
        r_value=r,
        a_value=af,
        j_index=jj,
        c_bracket=(tc.lo, tc.hi),
        checked_levels=tuple(checked),
        valid=valid,
        detail=detail,
    )
