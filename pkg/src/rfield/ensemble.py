"""Streaming ensemble statistics with exact, order-independent accumulation.

Every running sum is kept exactly: each double is split into an integer
mantissa and a binary exponent and the mantissas are summed per exponent in
arbitrary-precision integers.  Sums are therefore independent of sample
order and of how an ensemble is split across workers, and merging two
accumulators is exact.
"""

from __future__ import annotations

import math
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Sequence

import numpy as np

from .errors import ObservableMismatchError
from .kernels import SpectralKernel
from .sampler import (
    FieldSample,
    Lattice,
    band_for,
    band_modes,
    packet_on_lattice,
    smear,
    smeared_values,
    smearing_weights,
)

_EXP_OFFSET = 1100
_EXP_SPAN = 2200
# 2**53 * 512 < 2**63, so int64 group sums cannot overflow
_MAX_ROWS = 512


class ExactSum:
    """Exact column sums of a stream of float rows."""

    def __init__(self, ncols: int):
        self.ncols = ncols
        self._acc: dict[int, int] = defaultdict(int)

    def add(self, rows: np.ndarray):
        rows = np.asarray(rows, dtype=float)
        if rows.ndim == 1:
            rows = rows[None, :]
        if rows.shape[1] != self.ncols:
            raise ValueError("column count mismatch")
        if not np.all(np.isfinite(rows)):
            raise ValueError("non-finite value in accumulated statistics")
        for start in range(0, rows.shape[0], _MAX_ROWS):
            self._add_block(rows[start : start + _MAX_ROWS])

    def _add_block(self, rows):
        mant, expo = np.frexp(rows)
        ints = np.ldexp(mant, 53).astype(np.int64).ravel()
        keys = (np.arange(self.ncols)[None, :] * _EXP_SPAN + expo + _EXP_OFFSET).ravel()
        order = np.argsort(keys, kind="stable")
        keys, ints = keys[order], ints[order]
        starts = np.flatnonzero(np.r_[True, keys[1:] != keys[:-1]])
        sums = np.add.reduceat(ints, starts)
        acc = self._acc
        for key, s in zip(keys[starts].tolist(), sums.tolist()):
            acc[key] += s

    def merge(self, other: "ExactSum") -> "ExactSum":
        if other.ncols != self.ncols:
            raise ValueError("column count mismatch")
        out = ExactSum(self.ncols)
        for src in (self._acc, other._acc):
            for key, s in src.items():
                out._acc[key] += s
        return out

    def exact(self) -> list[Fraction]:
        cols: list[list[tuple[int, int]]] = [[] for _ in range(self.ncols)]
        for key, s in self._acc.items():
            if s:
                col, e = divmod(key, _EXP_SPAN)
                cols[col].append((e - _EXP_OFFSET - 53, s))
        out = []
        for terms in cols:
            if not terms:
                out.append(Fraction(0))
                continue
            emin = min(e for e, _ in terms)
            total = sum(s << (e - emin) for e, s in terms)
            out.append(Fraction(total) * Fraction(2) ** emin)
        return out

    def means(self, count: int) -> np.ndarray:
        return np.array([float(s / count) for s in self.exact()])


@dataclass
class EnsembleStats:
    """Running moments and characteristic-function estimates of smeared observables.

    Columns: means, second moments (upper triangle), third and fourth powers,
    ``cos``/``sin`` of ``lambda chi`` per observable and lambda, the declared
    product moments, and the declared sign products ``sgn chi_i sgn chi_j``.
    """

    observables: tuple
    lambdas: tuple = (0.25, 0.5, 1.0, 2.0)
    moments: tuple = ()
    sign_pairs: tuple = ()
    count: int = 0
    _sums: ExactSum = field(default=None, repr=False)

    def __post_init__(self):
        self.observables = tuple(self.observables)
        self.lambdas = tuple(float(x) for x in self.lambdas)
        self.moments = tuple(tuple(int(i) for i in m) for m in self.moments)
        self.sign_pairs = tuple((int(i), int(j)) for i, j in self.sign_pairs)
        n = len(self.observables)
        for idx in self.moments + self.sign_pairs:
            if any(not 0 <= i < n for i in idx):
                raise ValueError(f"index tuple {idx} out of range for {n} observables")
        if self._sums is None:
            self._sums = ExactSum(self.ncols)

    @property
    def n(self) -> int:
        return len(self.observables)

    @property
    def ncols(self) -> int:
        n, nl = self.n, len(self.lambdas)
        return n + n * (n + 1) // 2 + 2 * n + 2 * n * nl + len(self.moments) + len(self.sign_pairs)

    @property
    def defined(self) -> bool:
        return self.count > 0

    def _features(self, chi: np.ndarray) -> np.ndarray:
        n = self.n
        iu = np.triu_indices(n)
        parts = [chi, (chi[:, :, None] * chi[:, None, :])[:, iu[0], iu[1]], chi**3, chi**4]
        if self.lambdas:
            arg = chi[:, :, None] * np.asarray(self.lambdas)[None, None, :]
            parts += [np.cos(arg).reshape(len(chi), -1), np.sin(arg).reshape(len(chi), -1)]
        for idx in self.moments:
            parts.append(np.prod(chi[:, list(idx)], axis=1)[:, None])
        sgn = np.sign(chi)
        for i, j in self.sign_pairs:
            parts.append((sgn[:, i] * sgn[:, j])[:, None])
        return np.concatenate(parts, axis=1)

    def add_values(self, chi) -> "EnsembleStats":
        """Accumulate smeared values, shape ``(samples, n_observables)``."""
        chi = np.asarray(chi, dtype=float)
        if chi.ndim == 1:
            chi = chi[None, :]
        if chi.shape[1] != self.n:
            raise ObservableMismatchError(f"expected {self.n} observables, got {chi.shape[1]}")
        self._sums.add(self._features(chi))
        self.count += chi.shape[0]
        return self

    def merge(self, other: "EnsembleStats") -> "EnsembleStats":
        if (other.observables, other.lambdas, other.moments, other.sign_pairs) != (
            self.observables, self.lambdas, self.moments, self.sign_pairs
        ):
            raise ObservableMismatchError("cannot merge statistics of different observables")
        return EnsembleStats(
            self.observables, self.lambdas, self.moments, self.sign_pairs,
            self.count + other.count, self._sums.merge(other._sums),
        )

    # --- estimators (NaN while the ensemble is empty)

    def _columns(self) -> np.ndarray:
        if not self.defined:
            return np.full(self.ncols, np.nan)
        return self._sums.means(self.count)

    def _split(self):
        c = self._columns()
        n, nl = self.n, len(self.lambdas)
        cuts = np.cumsum([n, n * (n + 1) // 2, n, n, n * nl, n * nl, len(self.moments)])
        return np.split(c, cuts)

    @property
    def mean(self) -> np.ndarray:
        return self._split()[0]

    @property
    def second_moment(self) -> np.ndarray:
        n = self.n
        m2 = np.empty((n, n))
        iu = np.triu_indices(n)
        m2[iu] = self._split()[1]
        m2[(iu[1], iu[0])] = self._split()[1]
        return m2

    @property
    def covariance(self) -> np.ndarray:
        mu = self.mean
        return self.second_moment - np.outer(mu, mu)

    @property
    def variance(self) -> np.ndarray:
        return np.diag(self.covariance).copy()

    @property
    def excess_kurtosis(self) -> np.ndarray:
        parts = self._split()
        mu, m3, m4 = parts[0], parts[2], parts[3]
        m2 = np.diag(self.second_moment)
        var = m2 - mu**2
        c4 = m4 - 4 * mu * m3 + 6 * mu**2 * m2 - 3 * mu**4
        return c4 / var**2 - 3.0

    @property
    def charfun(self) -> np.ndarray:
        """Empirical E[exp(i lambda chi)], shape ``(n_observables, n_lambdas)``."""
        parts = self._split()
        shape = (self.n, len(self.lambdas))
        return parts[4].reshape(shape) + 1j * parts[5].reshape(shape)

    def moment(self, idx) -> float:
        return float(self._split()[6][self.moments.index(tuple(idx))])

    def sign_correlation(self, i: int, j: int) -> float:
        return float(self._split()[7][self.sign_pairs.index((i, j))])


def accumulate(stats: EnsembleStats, sample: FieldSample, observables: Sequence) -> EnsembleStats:
    """Smear one field sample against the declared observables and add it."""
    if tuple(observables) != stats.observables:
        raise ObservableMismatchError("observables differ from those declared at creation")
    chi = np.array([[smear(sample, f) for f in observables]])
    return stats.add_values(chi)


# ---------------------------------------------------------------------------
# ensemble generation


@dataclass(frozen=True)
class EnsembleSpec:
    kernels: tuple
    lattice: Lattice
    observables: tuple
    seed: int
    samples: int
    lambdas: tuple = (0.25, 0.5, 1.0, 2.0)
    moments: tuple = ()
    sign_pairs: tuple = ()
    block: int = 500

    def empty(self) -> list:
        return [EnsembleStats(self.observables, self.lambdas, self.moments, self.sign_pairs) for _ in self.kernels]

    def blocks(self) -> list[tuple[int, int]]:
        return [(s, min(s + self.block, self.samples)) for s in range(0, self.samples, self.block)]


def _run_blocks(spec: EnsembleSpec, blocks) -> list:
    out = spec.empty()
    band = band_for(spec.lattice, spec.observables)
    weights = smearing_weights(spec.observables, spec.lattice, band)
    for start, stop in blocks:
        etas = band_modes(spec.kernels, spec.lattice, band, spec.seed, np.arange(start, stop))
        for stats, eta in zip(out, etas):
            stats.add_values(smeared_values(eta, weights))
    return out


def run_ensembles(
    kernels: Sequence[SpectralKernel],
    lattice: Lattice,
    observables: Sequence,
    seed: int,
    samples: int,
    *,
    lambdas=(0.25, 0.5, 1.0, 2.0),
    moments=(),
    sign_pairs=(),
    workers: int = 1,
    block: int = 500,
) -> list[EnsembleStats]:
    """Ensemble statistics of smeared observables, one entry per kernel.

    All kernels share the unit mode draws of each member, so each entry is
    exactly what a single-kernel run with the same seed produces.  Only modes
    inside the observables' spectral support are drawn.  The result does not
    depend on ``workers`` or ``block``.
    """
    spec = EnsembleSpec(
        tuple(kernels), lattice, tuple(observables), int(seed), int(samples),
        tuple(lambdas), tuple(moments), tuple(sign_pairs), int(block),
    )
    if samples < 0:
        raise ValueError("samples must be >= 0")
    for f in spec.observables:
        packet_on_lattice(f, lattice)  # fail on support overflow before any sampling
    blocks = spec.blocks()
    if workers <= 1 or len(blocks) <= 1:
        return _run_blocks(spec, blocks)
    chunks = [blocks[i::workers] for i in range(workers)]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(_run_blocks, [spec] * len(chunks), chunks))
    result = parts[0]
    for part in parts[1:]:
        result = [a.merge(b) for a, b in zip(result, part)]
    return result


def run_ensemble(kernel: SpectralKernel, lattice: Lattice, observables, seed: int, samples: int, **kw) -> EnsembleStats:
    return run_ensembles([kernel], lattice, observables, seed, samples, **kw)[0]
