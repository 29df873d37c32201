"""Exact finitely-supported probability measures and their Fourier transforms.

Atoms are rational vectors, weights are positive rationals summing to exactly
one.  Fourier evaluation reduces the phase mod 1 in exact integer arithmetic
before any floating-point call, so large integer atoms cost no accuracy.
"""
from __future__ import annotations

import cmath
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property

import numpy as np

from ._phases import common_denominator, exact_phase_matrix, unit_exponentials
from .errors import DimensionMismatch, TruncationTooLarge, ValidationError
from .exactmat import RatMatrix, invert, product_range
from .triples import DigitSet

DEFAULT_ATOM_CAP = 1_000_000

_TWO_PI = 2.0 * math.pi


def _as_frac_vec(v, dim=None):
    t = tuple(Fraction(x) for x in v)
    if dim is not None and len(t) != dim:
        raise DimensionMismatch(f"expected a vector of length {dim}, got {len(t)}")
    return t


@dataclass(frozen=True)
class DiscreteMeasure:
    dim: int
    atoms: tuple  # sorted tuples of Fraction
    weights: tuple  # positive Fractions summing to 1

    @classmethod
    def make(cls, pairs, dim: int | None = None) -> "DiscreteMeasure":
        acc: dict = {}
        for atom, w in pairs:
            a = _as_frac_vec(atom, dim)
            if dim is None:
                dim = len(a)
            w = Fraction(w)
            if w < 0:
                raise ValidationError(f"negative weight {w} at atom {a}")
            if w == 0:
                continue
            acc[a] = acc.get(a, Fraction(0)) + w
        if dim is None or not acc:
            raise ValidationError("a measure needs at least one weighted atom")
        total = sum(acc.values())
        if total != 1:
            raise ValidationError(f"weights sum to {total}, expected exactly 1")
        atoms = tuple(sorted(acc))
        return cls(dim, atoms, tuple(acc[a] for a in atoms))

    def __len__(self) -> int:
        return len(self.atoms)

    def mean(self):
        out = [Fraction(0)] * self.dim
        for a, w in zip(self.atoms, self.weights):
            for i in range(self.dim):
                out[i] += w * a[i]
        return tuple(out)

    def second_moment(self) -> Fraction:
        return sum(
            (w * sum(x * x for x in a) for a, w in zip(self.atoms, self.weights)),
            Fraction(0),
        )

    def variance_total(self) -> Fraction:
        """Trace of the covariance: E|X|^2 - |EX|^2 (always >= 0)."""
        m = self.mean()
        return self.second_moment() - sum(x * x for x in m)

    @cached_property
    def _phase_data(self):
        den, rows = common_denominator(self.atoms)
        return den, rows

    @cached_property
    def _float_weights(self):
        return np.array([float(w) for w in self.weights])


def point_mass(atom, dim: int | None = None) -> DiscreteMeasure:
    return DiscreteMeasure.make([(atom, Fraction(1))], dim)


def uniform_on(digits: DigitSet, transform: RatMatrix | None = None) -> DiscreteMeasure:
    """Equal weights on a digit set, optionally mapped through a rational matrix."""
    n = len(digits)
    w = Fraction(1, n)
    if transform is None:
        pairs = [(v, w) for v in digits.vectors]
    else:
        pairs = [(transform.matvec(v), w) for v in digits.vectors]
    return DiscreteMeasure.make(pairs, digits.dim)


def pushforward(m: DiscreteMeasure, transform: RatMatrix) -> DiscreteMeasure:
    return DiscreteMeasure.make(
        ((transform.matvec(a), w) for a, w in zip(m.atoms, m.weights))
    )


def convolve(a: DiscreteMeasure, b: DiscreteMeasure) -> DiscreteMeasure:
    if a.dim != b.dim:
        raise DimensionMismatch("cannot convolve measures of different dimensions")
    acc: dict = {}
    for xa, wa in zip(a.atoms, a.weights):
        for xb, wb in zip(b.atoms, b.weights):
            key = tuple(p + q for p, q in zip(xa, xb))
            prev = acc.get(key)
            acc[key] = wa * wb if prev is None else prev + wa * wb
    atoms = tuple(sorted(acc))
    return DiscreteMeasure(a.dim, atoms, tuple(acc[x] for x in atoms))


def mass_outside_ball(m: DiscreteMeasure, radius) -> Fraction:
    """Exact mass carried by atoms with |x|_2 > radius (strict)."""
    r2 = Fraction(radius) ** 2
    return sum(
        (w for a, w in zip(m.atoms, m.weights) if sum(x * x for x in a) > r2),
        Fraction(0),
    )


def clip_to_ball(m: DiscreteMeasure, radius) -> DiscreteMeasure:
    """Move all mass outside the closed ball of the given radius to the origin."""
    r2 = Fraction(radius) ** 2
    zero = tuple(Fraction(0) for _ in range(m.dim))
    pairs = []
    moved = Fraction(0)
    for a, w in zip(m.atoms, m.weights):
        if sum(x * x for x in a) > r2:
            moved += w
        else:
            pairs.append((a, w))
    if moved:
        pairs.append((zero, moved))
    return DiscreteMeasure.make(pairs, m.dim)


# ===== truncations of the infinite convolution =====


@dataclass(frozen=True)
class TailTruncation:
    start: int  # tail begins after this level
    depth: int  # number of tail levels included
    measure: DiscreteMeasure


def _capped_product(sizes, max_atoms: int) -> int:
    proj = 1
    for s in sizes:
        proj *= s
        if proj > max_atoms:
            raise TruncationTooLarge(
                f"projected support of {proj} atoms exceeds the cap of {max_atoms}"
            )
    return proj


def mu_truncate(seq, k: int, *, max_atoms: int = DEFAULT_ATOM_CAP) -> DiscreteMeasure:
    """Convolution of the first k scaled digit measures (k = 0 gives a point mass)."""
    if k < 0:
        raise ValidationError(f"truncation level must be >= 0, got {k}")
    result = point_mass((0,) * seq.dim)
    proj = 1
    for j in range(1, k + 1):
        d = seq.digits(j)
        proj = _capped_product([proj, len(d)], max_atoms)
        result = convolve(result, uniform_on(d, seq.prefix_inverse(j)))
    return result


def nu_tail_truncate(
    seq, start: int, depth: int, *, max_atoms: int = DEFAULT_ATOM_CAP
) -> TailTruncation:
    """Finite stretch of the tail measure after `start`, rescaled to start at level 1."""
    if start < 0 or depth < 0:
        raise ValidationError("tail start and depth must be >= 0")
    result = point_mass((0,) * seq.dim)
    proj = 1
    for j in range(1, depth + 1):
        d = seq.digits(start + j)
        proj = _capped_product([proj, len(d)], max_atoms)
        scale = invert(product_range(seq, start, start + j))
        result = convolve(result, uniform_on(d, scale))
    return TailTruncation(start=start, depth=depth, measure=result)


# ===== Fourier transforms =====


def fourier(m: DiscreteMeasure, xi) -> complex:
    """Fourier transform at one rational frequency, phases reduced exactly.

    Atoms whose phase is an exact integer contribute through a rational
    subtotal, so e.g. the transform at zero frequency is exactly 1.
    """
    x = _as_frac_vec(xi, m.dim)
    exact = Fraction(0)
    rest = 0j
    for a, w in zip(m.atoms, m.weights):
        dot = sum(p * q for p, q in zip(a, x))
        t = dot - math.floor(dot)
        if t == 0:
            exact += w
        else:
            rest += float(w) * cmath.exp(-1j * _TWO_PI * float(t))
    return complex(float(exact)) + rest


def fourier_many(m: DiscreteMeasure, xis) -> np.ndarray:
    """Vectorised transform at many rational frequencies."""
    vecs = [_as_frac_vec(x, m.dim) for x in xis]
    if not vecs:
        return np.zeros(0, dtype=complex)
    den_x, rows_x = common_denominator(vecs)
    den_a, rows_a = m._phase_data
    phases = exact_phase_matrix(rows_x, den_x, rows_a, den_a)
    return unit_exponentials(phases) @ m._float_weights


def mask(digits: DigitSet, xi) -> complex:
    """Uniform exponential average (1/#B) sum_b e^{-2 pi i b.xi}."""
    return fourier(uniform_on(digits), xi)


def mask_many(digits: DigitSet, xis) -> np.ndarray:
    return fourier_many(uniform_on(digits), xis)


def tail_fourier_product(seq, start: int, depth: int, xi) -> complex:
    """Product formula for the truncated tail transform; independent of
    nu_tail_truncate + fourier, used to cross-check it."""
    x = _as_frac_vec(xi, seq.dim)
    out = complex(1.0)
    for j in range(1, depth + 1):
        m_inv_t = invert(product_range(seq, start, start + j)).transpose()
        out *= mask(seq.digits(start + j), m_inv_t.matvec(x))
    return out


def write_csv(m: DiscreteMeasure, stream) -> None:
    """Exact CSV dump: rational coordinates and weights as p/q strings."""
    cols = [f"x{i + 1}" for i in range(m.dim)] + ["weight"]
    stream.write(",".join(cols) + "\n")
    for a, w in zip(m.atoms, m.weights):
        stream.write(",".join(str(x) for x in list(a) + [w]) + "\n")
