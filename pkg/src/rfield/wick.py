"""Gaussian moment oracle.

For zero-mean jointly Gaussian smeared observables every joint moment is a
sum over perfect matchings of the index multiset (Isserlis' theorem), and
the characteristic function is ``exp(-lambda^T C lambda / 2)``.
"""

from __future__ import annotations

import functools
import math
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import MomentOrderError, SingularCovarianceError

MAX_ORDER = 12
# joint_density needs lambda_min > PD_RTOL * lambda_max
PD_RTOL = 1e-12


def _as_cov(C, exact=False) -> np.ndarray:
    C = np.asarray(C, dtype=object if exact else float)
    if C.ndim != 2 or C.shape[0] != C.shape[1]:
        raise ValueError(f"covariance must be square, got shape {C.shape}")
    return C


def wick_moment(C, indices: Sequence[int], max_order: int = MAX_ORDER) -> float:
    """E[chi_{i1} ... chi_{in}] by exact enumeration of pairings.

    Pairings are enumerated recursively (first index paired with each other
    position) and sub-results are memoized on the sorted multiset of the
    remaining indices, so repeated indices cost far less than (2n-1)!!.
    A covariance of ``Fraction`` entries (object dtype) is summed exactly and
    the moment is returned as a ``Fraction``.
    """
    exact = np.asarray(C).dtype == object
    C = _as_cov(C, exact)
    idx = tuple(int(i) for i in indices)
    if len(idx) > max_order:
        raise MomentOrderError(f"order {len(idx)} exceeds the cap of {max_order}")
    n = C.shape[0]
    if any(not 0 <= i < n for i in idx):
        raise IndexError(f"indices {idx} out of range for a {n}x{n} covariance")
    if len(idx) % 2:
        return Fraction(0) if exact else 0.0
    table = C.tolist()

    @functools.lru_cache(maxsize=None)
    def pairings(rest: tuple):
        if not rest:
            return 1
        first, others = rest[0], rest[1:]
        total = 0
        seen = set()
        for pos, j in enumerate(others):
            # equal partners give identical remainders; count them once, weighted
            if j in seen:
                continue
            seen.add(j)
            mult = others.count(j)
            remainder = others[:pos] + others[pos + 1 :]
            total += mult * table[first][j] * pairings(remainder)
        return total

    total = pairings(tuple(sorted(idx)))
    return Fraction(total) if exact else float(total)


def double_factorial(n: int) -> int:
    return math.prod(range(n, 0, -2)) if n > 0 else 1


def char_function(C, lam) -> float:
    """E[exp(i lambda . chi)] = exp(-lambda^T C lambda / 2)."""
    C = _as_cov(C)
    lam = np.atleast_1d(np.asarray(lam, dtype=float))
    if lam.shape != (C.shape[0],):
        raise ValueError(f"lambda must have length {C.shape[0]}")
    return float(np.exp(-0.5 * lam @ C @ lam))


def joint_density(C, values) -> float:
    """Zero-mean multivariate normal density at ``values``."""
    C = _as_cov(C)
    v = np.atleast_1d(np.asarray(values, dtype=float))
    if v.shape != (C.shape[0],):
        raise ValueError(f"values must have length {C.shape[0]}")
    eig = np.linalg.eigvalsh(C)
    if eig.max() <= 0 or eig.min() <= PD_RTOL * eig.max():
        raise SingularCovarianceError(
            "covariance is not strictly positive definite; drop linearly dependent observables"
        )
    L = np.linalg.cholesky(C)
    y = np.linalg.solve(L, v)
    logdet = 2.0 * np.sum(np.log(np.diag(L)))
    k = C.shape[0]
    return float(np.exp(-0.5 * y @ y - 0.5 * logdet - 0.5 * k * math.log(2 * math.pi)))
