"""Gaussian random fields on a periodic lattice by spectral synthesis.

Normalization: with box volume ``V = (N a)^d`` a sample is

    Phi(x) = (1/V) sum_k eta_k exp(i k.x),    E|eta_k|^2 = V S(k),

so that the single-site variance is ``(1/V) sum_k S(k)`` and the variance of
``chi_f = a^d sum_x Phi(x) f(x)`` tends to ``int d^dk/(2pi)^d |f~|^2 S`` as
``a -> 0`` and ``N a -> inf``.

Randomness is counter based.  Ensemble member ``m`` of master seed ``s`` owns
the Philox stream keyed by ``s + 2**64 m``; the half-spectrum modes are
ordered by Chebyshev radius ``max_i |n_i|`` and mode number ``j`` in that
order is built (Box-Muller) from raw words ``2j`` and ``2j + 1``.  A sample is
therefore a pure function of ``(seed, member, kernel, lattice)``, and a
band-limited draw of the first ``J`` modes reproduces the full sample's mode
amplitudes bit for bit.
"""

from __future__ import annotations

import functools
import math
from dataclasses import dataclass

import numpy as np

from .errors import InfraredDivergenceError, RFieldError, SupportOverflowError
from .kernels import SpectralKernel, mode_variance
from .smearing import Combination, TestFunction, _as_combination

# |x - x0| <= SUPPORT_SIGMAS * sigma must lie inside the box
SUPPORT_SIGMAS = 8.0
_TWO_POW_M53 = 2.0**-53
_SEED_LIMIT = 2**64


@dataclass(frozen=True)
class Lattice:
    dimension: int
    sites: int
    spacing: float

    def __post_init__(self):
        if self.dimension not in (1, 2, 3):
            raise ValueError(f"dimension must be 1, 2 or 3, got {self.dimension}")
        n = self.sites
        if n < 4 or n & (n - 1):
            raise ValueError(f"sites per axis must be a power of two >= 4, got {n}")
        if not (math.isfinite(self.spacing) and self.spacing > 0):
            raise ValueError(f"spacing must be > 0, got {self.spacing}")

    @property
    def length(self) -> float:
        return self.sites * self.spacing

    @property
    def volume(self) -> float:
        return self.length**self.dimension

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.sites,) * self.dimension

    @property
    def half_shape(self) -> tuple[int, ...]:
        return (self.sites,) * (self.dimension - 1) + (self.sites // 2 + 1,)

    @property
    def dk(self) -> float:
        return 2 * math.pi / self.length

    def wavenumbers(self) -> np.ndarray:
        """k_n = 2 pi n / (N a) in FFT order, n in [-N/2, N/2)."""
        return 2 * math.pi * np.fft.fftfreq(self.sites, d=self.spacing)

    def coordinates(self) -> np.ndarray:
        """Site positions, shape ``shape + (d,)``; sites sit at ``j a``, j in [0, N)."""
        axis = np.arange(self.sites) * self.spacing
        return np.stack(np.meshgrid(*([axis] * self.dimension), indexing="ij"), axis=-1)

    def describe(self) -> dict:
        return {"dimension": self.dimension, "sites": self.sites, "spacing": self.spacing}


@dataclass(frozen=True)
class FieldSample:
    lattice: Lattice
    values: np.ndarray
    seed: int
    member: int
    kernel: dict


@dataclass(frozen=True)
class _Band:
    """Prefix of the mode order; self-contained under k -> -k."""

    flat: np.ndarray  # flat indices into the half-spectrum array
    kabs: np.ndarray  # |k| of each mode
    partner: np.ndarray  # position of -k inside the band, -1 if -k is not stored
    multiplicity: np.ndarray  # 1 on the self-conjugate planes, 2 elsewhere

    def __len__(self):
        return self.flat.size


@functools.lru_cache(maxsize=32)
def _mode_order(d: int, n: int):
    """Half-spectrum flat indices sorted by Chebyshev radius, and the sorted radii."""
    half = (n,) * (d - 1) + (n // 2 + 1,)
    idx = np.indices(half).reshape(d, -1)
    signed = np.where(idx[:-1] >= n // 2, idx[:-1] - n, idx[:-1]) if d > 1 else idx[:0]
    radius = np.abs(idx[-1])
    if d > 1:
        radius = np.maximum(radius, np.abs(signed).max(axis=0))
    order = np.argsort(radius, kind="stable")
    return order, radius[order]


@functools.lru_cache(maxsize=64)
def _band(d: int, n: int, spacing: float, radius: int) -> _Band:
    order, radii = _mode_order(d, n)
    count = int(np.searchsorted(radii, radius, side="right"))
    flat = order[:count]
    half = (n,) * (d - 1) + (n // 2 + 1,)
    idx = np.array(np.unravel_index(flat, half))
    k = np.zeros(count)
    freq = 2 * math.pi * np.fft.fftfreq(n, d=spacing)
    for ax in range(d):
        k += freq[idx[ax]] ** 2
    last = idx[-1]
    on_plane = (last == 0) | (last == n // 2)
    partner = np.full(count, -1)
    if on_plane.any():
        neg = idx.copy()
        neg[:-1] = (-idx[:-1]) % n
        neg_flat = np.ravel_multi_index(tuple(neg), half)
        pos = {int(f): i for i, f in enumerate(flat)}
        for i in np.flatnonzero(on_plane):
            partner[i] = pos[int(neg_flat[i])]
    mult = np.where(on_plane, 1.0, 2.0)
    return _Band(flat, np.sqrt(k), partner, mult)


def full_band(lattice: Lattice) -> _Band:
    return _band(lattice.dimension, lattice.sites, lattice.spacing, lattice.sites // 2)


def band_for(lattice: Lattice, observables) -> _Band:
    """Smallest mode prefix holding every observable's spectral support."""
    kmax = max(_as_combination(f).kmax for f in observables)
    radius = min(lattice.sites // 2, int(math.ceil(kmax / lattice.dk)))
    return _band(lattice.dimension, lattice.sites, lattice.spacing, radius)


def _check_seed(seed: int):
    if not (0 <= int(seed) < _SEED_LIMIT):
        raise ValueError("seed must be an unsigned 64-bit integer")


def unit_modes(seed: int, members, count: int) -> np.ndarray:
    """Complex unit normals (E|z|^2 = 2) for the first ``count`` ordered modes.

    Row ``r`` belongs to ensemble member ``members[r]``.
    """
    _check_seed(seed)
    members = np.atleast_1d(np.asarray(members, dtype=np.int64))
    words = np.empty((members.size, 2 * count), dtype=np.uint64)
    for row, m in enumerate(members.tolist()):
        words[row] = np.random.Philox(key=int(seed) + (int(m) << 64)).random_raw(2 * count)
    bits = words >> np.uint64(11)
    u1 = bits[:, 0::2].astype(np.float64)
    u1 += 0.5
    u1 *= _TWO_POW_M53
    theta = bits[:, 1::2].astype(np.float64)
    theta *= 2 * math.pi * _TWO_POW_M53
    rad = np.sqrt(-2.0 * np.log(u1))
    z = np.empty(u1.shape, dtype=complex)
    z.real = rad * np.cos(theta)
    z.imag = rad * np.sin(theta)
    return z


def _hermitian(z: np.ndarray, band: _Band) -> np.ndarray:
    """Impose eta_{-k} = conj(eta_k) on the planes where both are stored."""
    sel = np.flatnonzero(band.partner >= 0)
    if sel.size == 0:
        return z
    out = z.copy()
    out[:, sel] = (z[:, sel] + np.conj(z[:, band.partner[sel]])) * (1.0 / math.sqrt(2.0))
    return out


def mode_amplitudes(kernel: SpectralKernel, lattice: Lattice, band: _Band) -> np.ndarray:
    """sqrt(V S(k) / 2) per band mode; zero mode dropped when requested."""
    if kernel.dimension != lattice.dimension:
        raise RFieldError(
            f"kernel dimension {kernel.dimension} does not match lattice dimension {lattice.dimension}"
        )
    k = band.kabs
    s = np.zeros_like(k)
    zero = k == 0
    if kernel.mass == 0 and zero.any() and not kernel.exclude_zero_mode:
        raise InfraredDivergenceError(
            "massless kernel has no normalizable k = 0 mode; enable exclude_zero_mode"
        )
    keep = ~zero if kernel.exclude_zero_mode else np.ones_like(zero)
    s[keep] = mode_variance(kernel, k[keep])
    return np.sqrt(0.5 * lattice.volume * s)


def band_modes(kernels, lattice: Lattice, band: _Band, seed: int, members):
    """Mode amplitudes ``eta`` per kernel for a block of members, shape (members, band)."""
    z = _hermitian(unit_modes(seed, members, len(band)), band)
    return [z * mode_amplitudes(k, lattice, band) for k in kernels]


def sample_field(kernel: SpectralKernel, lattice: Lattice, seed: int, member: int = 0) -> FieldSample:
    """One real field realization; deterministic in (seed, member, kernel, lattice)."""
    values = synthesize(kernel, lattice, seed, [member])[0]
    return FieldSample(lattice, values, int(seed), int(member), kernel.describe())


def half_spectrum(kernel: SpectralKernel, lattice: Lattice, seed: int, members) -> np.ndarray:
    band = full_band(lattice)
    (eta,) = band_modes([kernel], lattice, band, seed, members)
    spec = np.zeros((eta.shape[0], int(np.prod(lattice.half_shape))), dtype=complex)
    spec[:, band.flat] = eta
    return spec.reshape((eta.shape[0],) + lattice.half_shape)


def full_spectrum(half: np.ndarray, lattice: Lattice) -> np.ndarray:
    """Extend one half spectrum to the full FFT grid via eta_{-k} = conj(eta_k)."""
    n, d = lattice.sites, lattice.dimension
    full = np.zeros(lattice.shape, dtype=complex)
    full[..., : n // 2 + 1] = half
    idx = np.indices(lattice.shape)
    upper = idx[-1] > n // 2
    neg = tuple((-idx[ax][upper]) % n for ax in range(d))
    full[upper] = np.conj(full[neg])
    return full


def synthesize(kernel: SpectralKernel, lattice: Lattice, seed: int, members) -> np.ndarray:
    """Real fields for several members, shape ``(members,) + lattice.shape``."""
    spec = half_spectrum(kernel, lattice, seed, members)
    axes = tuple(range(1, lattice.dimension + 1))
    return np.fft.irfftn(spec, s=lattice.shape, axes=axes) / lattice.spacing**lattice.dimension


def check_support(f, lattice: Lattice):
    for _, p in _as_combination(f).terms:
        reach = SUPPORT_SIGMAS * p.width
        for x0 in p.center:
            if x0 - reach < 0 or x0 + reach > lattice.length:
                raise SupportOverflowError(
                    f"packet at {p.center} with width {p.width} reaches outside the box "
                    f"[0, {lattice.length}] (needs {SUPPORT_SIGMAS} sigma on each side)"
                )


def packet_on_lattice(f, lattice: Lattice) -> np.ndarray:
    f = _as_combination(f)
    if f.dimension != lattice.dimension:
        raise RFieldError("test-function dimension does not match the lattice")
    if any(np.iscomplexobj(np.asarray(c)) and np.imag(c) != 0 for c, _ in f.terms):
        raise ValueError("smearing functions must be real")
    check_support(f, lattice)
    return np.real(f(lattice.coordinates()))


def smear(sample: FieldSample, f) -> float:
    """chi_f = a^d sum_x Phi(x) f(x)."""
    weights = packet_on_lattice(f, sample.lattice)
    a_d = sample.lattice.spacing**sample.lattice.dimension
    return float(a_d * np.sum(sample.values * weights))


def smearing_weights(observables, lattice: Lattice, band: _Band) -> np.ndarray:
    """Rows G with chi = Re(eta @ G.T), the mode-space form of a^d sum_x Phi f."""
    rows = []
    n_d = lattice.sites**lattice.dimension
    axes = tuple(range(lattice.dimension))
    for f in observables:
        grid = packet_on_lattice(f, lattice)
        F = np.fft.rfftn(grid, axes=axes).reshape(-1)[band.flat]
        rows.append(band.multiplicity * np.conj(F) / n_d)
    return np.array(rows)


def smeared_values(eta: np.ndarray, weights: np.ndarray) -> np.ndarray:
    return eta.real @ weights.real.T - eta.imag @ weights.imag.T
