"""Exact phase reduction shared by Fourier, mask, and Gram evaluations.

A phase is a rational number (a·b)/(den_a·den_b) that only matters mod 1.
Reduction happens in exact integer arithmetic *before* any float conversion,
so digits as large as 8^k (k+1)! cost no precision.  An int64 numpy fast path
covers the common case; Python big ints cover the rest.
"""
from __future__ import annotations

from fractions import Fraction
from math import gcd

import numpy as np

_INT64_SAFE = 2**62


def common_denominator(vectors):
    """(den, rows): den > 0 and rows[i] = den * vectors[i] as exact int tuples."""
    den = 1
    for v in vectors:
        for x in v:
            q = x.denominator if isinstance(x, Fraction) else 1
            den = den * q // gcd(den, q)
    rows = []
    for v in vectors:
        rows.append(tuple(int(x * den) if isinstance(x, Fraction) else int(x) * den for x in v))
    return den, rows


def exact_phase_matrix(nums_a, den_a: int, nums_b, den_b: int) -> np.ndarray:
    """Float matrix of frac((a_i · b_j) / (den_a · den_b)) with exact reduction.

    nums_* are sequences of equal-length int tuples; den_* are positive ints.
    Entries of the result lie in (-1, 1); only their value mod 1 is meaningful.
    """
    assert den_a > 0 and den_b > 0
    na, nb = len(nums_a), len(nums_b)
    if na == 0 or nb == 0:
        return np.zeros((na, nb), dtype=np.float64)
    modulus = den_a * den_b
    max_a = max((abs(x) for row in nums_a for x in row), default=0)
    max_b = max((abs(x) for row in nums_b for x in row), default=0)
    d = len(nums_a[0])
    bound = d * max_a * max_b
    if bound < _INT64_SAFE:
        a = np.array(nums_a, dtype=np.int64)
        b = np.array(nums_b, dtype=np.int64)
        prod = a @ b.T
        if modulus < _INT64_SAFE:
            return np.mod(prod, modulus).astype(np.float64) / float(modulus)
        # |prod| < 2^62 <= modulus: the value is already in (-1, 1).
        if modulus.bit_length() > 1020:
            # beyond double range; true phases are below double resolution
            return np.zeros((na, nb), dtype=np.float64)
        return prod.astype(np.float64) / float(modulus)
    out = np.empty((na, nb), dtype=np.float64)
    for i, ra in enumerate(nums_a):
        for j, rb in enumerate(nums_b):
            n = sum(x * y for x, y in zip(ra, rb)) % modulus
            out[i, j] = n / modulus  # int/int true division is correctly rounded
    return out


def unit_exponentials(phases: np.ndarray) -> np.ndarray:
    """exp(-2πi · phases), vectorized."""
    return np.exp((-2j * np.pi) * phases)
