"""Per-mode spectral variances of the three Gaussian field states.

All three states of the free Klein-Gordon field considered here are
stationary, zero-mean Gaussian random fields, so each is fully described by
the variance ``S(k)`` of the Fourier mode at wave number ``|k|``:

* vacuum:            ``S(k) = hbar / (2 omega)``
* classical Gibbs:   ``S(k) = kT / omega**2``
* quantum thermal:   ``S(k) = hbar / (2 omega) * coth(hbar omega / (2 kT))``

with ``omega = sqrt(k**2 + m**2)`` and ``c = 1``.  The quantum thermal
variance is the reciprocal of the tanh-weighted Gaussian exponent, which is
why it interpolates between the classical state (``hbar omega << kT``) and
the vacuum (``hbar omega >> kT``).
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from .errors import InfraredDivergenceError, KernelError, NoCrossoverError

# below this the coth / x*coth series beats 1/tanh
_SERIES_CUTOFF = 1e-4


class Kind(str, enum.Enum):
    VACUUM = "vacuum"
    CLASSICAL_GIBBS = "classical"
    QUANTUM_THERMAL = "quantum_thermal"

    @classmethod
    def parse(cls, name: str) -> "Kind":
        aliases = {
            "vac": cls.VACUUM,
            "gibbs": cls.CLASSICAL_GIBBS,
            "classical_gibbs": cls.CLASSICAL_GIBBS,
            "thermal": cls.QUANTUM_THERMAL,
            "qt": cls.QUANTUM_THERMAL,
        }
        if isinstance(name, cls):
            return name
        key = str(name).strip().lower().replace("-", "_")
        if key in aliases:
            return aliases[key]
        try:
            return cls(key)
        except ValueError:
            choices = ", ".join(k.value for k in cls)
            raise KernelError(f"unknown kernel {name!r}; choose one of {choices}") from None


@dataclass(frozen=True)
class SpectralKernel:
    """Immutable description of one Gaussian field state.

    ``kT`` is ignored for the vacuum.  ``exclude_zero_mode`` only matters to
    the lattice sampler: it drops the k = 0 mode, which is the only way to
    sample a massless classical Gibbs state.
    """

    kind: Kind
    mass: float = 1.0
    hbar: float = 1.0
    kT: float = 0.0
    dimension: int = 1
    exclude_zero_mode: bool = False

    def __post_init__(self):
        if not isinstance(self.kind, Kind):
            object.__setattr__(self, "kind", Kind.parse(self.kind))
        if not (math.isfinite(self.mass) and self.mass >= 0):
            raise KernelError(f"mass must be finite and >= 0, got {self.mass}")
        if not (math.isfinite(self.hbar) and self.hbar > 0):
            raise KernelError(f"hbar must be finite and > 0, got {self.hbar}")
        if self.dimension not in (1, 2, 3):
            raise KernelError(f"dimension must be 1, 2 or 3, got {self.dimension}")
        if self.kind is Kind.QUANTUM_THERMAL and not self.kT > 0:
            if self.kT == 0:
                raise KernelError(
                    "quantum thermal kernel needs kT > 0; at kT = 0 request the Vacuum kernel instead"
                )
            raise KernelError(f"kT must be > 0, got {self.kT}")
        if self.kind is Kind.CLASSICAL_GIBBS and not self.kT > 0:
            raise KernelError(f"classical Gibbs kernel needs kT > 0, got {self.kT}")
        if not math.isfinite(self.kT):
            raise KernelError(f"kT must be finite, got {self.kT}")

    @classmethod
    def vacuum(cls, mass=1.0, hbar=1.0, dimension=1, **kw):
        return cls(Kind.VACUUM, mass=mass, hbar=hbar, dimension=dimension, **kw)

    @classmethod
    def classical(cls, mass=1.0, kT=1.0, hbar=1.0, dimension=1, **kw):
        return cls(Kind.CLASSICAL_GIBBS, mass=mass, hbar=hbar, kT=kT, dimension=dimension, **kw)

    @classmethod
    def quantum_thermal(cls, mass=1.0, hbar=1.0, kT=1.0, dimension=1, **kw):
        return cls(Kind.QUANTUM_THERMAL, mass=mass, hbar=hbar, kT=kT, dimension=dimension, **kw)

    def describe(self) -> dict:
        return {
            "kind": self.kind.value,
            "mass": self.mass,
            "hbar": self.hbar,
            "kT": self.kT,
            "dimension": self.dimension,
            "exclude_zero_mode": self.exclude_zero_mode,
        }

    def ir_power(self) -> int:
        """Power p with S(k) ~ k**-p as k -> 0 when the mass vanishes."""
        return 1 if self.kind is Kind.VACUUM else 2


def omega(k, mass):
    k = np.abs(np.asarray(k, dtype=float))
    return np.sqrt(k * k + mass * mass)


def coth(x):
    """coth(x) for x > 0, using ``1/x + x/3`` below 1e-4."""
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore"):
        return np.where(np.abs(x) < _SERIES_CUTOFF, 1.0 / x + x / 3.0, 1.0 / np.tanh(x))


def xcoth(x):
    """x * coth(x), finite at x = 0."""
    x = np.asarray(x, dtype=float)
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(np.abs(x) < _SERIES_CUTOFF, 1.0 + x * x / 3.0, x / np.tanh(x))


def _scalar_or_array(value, like):
    return float(value) if np.ndim(like) == 0 else value


def _check_ir(w, what):
    if np.any(w == 0):
        raise InfraredDivergenceError(f"{what} diverges at k = 0 for a massless field")


def thermal_argument(kernel: SpectralKernel, k):
    """x = hbar omega / (2 kT)."""
    if not kernel.kT > 0:
        raise KernelError("thermal ratios need kT > 0")
    return kernel.hbar * omega(k, kernel.mass) / (2.0 * kernel.kT)


def mode_variance(kernel: SpectralKernel, k):
    """Variance S(|k|) of the Fourier mode at wave number ``k``.

    ``k`` is a wave number (or array of them); only ``|k|`` matters.  For
    wave vectors pass ``np.linalg.norm(kvec, axis=-1)``.
    """
    w = omega(k, kernel.mass)
    _check_ir(w, f"{kernel.kind.value} mode variance")
    if kernel.kind is Kind.VACUUM:
        s = kernel.hbar / (2.0 * w)
    elif kernel.kind is Kind.CLASSICAL_GIBBS:
        s = kernel.kT / (w * w)
    else:
        x = kernel.hbar * w / (2.0 * kernel.kT)
        s = kernel.hbar / (2.0 * w) * coth(x)
    return _scalar_or_array(s, k)


def mode_variance_fn(kernel: SpectralKernel):
    """Scalar ``k -> S(|k|)`` closure built on ``math``; same values as :func:`mode_variance`.

    Quadrature calls the weight tens of thousands of times per integral, where
    NumPy's per-call overhead dominates.
    """
    m2, hbar, kT = kernel.mass**2, kernel.hbar, kernel.kT
    what = f"{kernel.kind.value} mode variance"

    def _w(k):
        w = math.sqrt(k * k + m2)
        if w == 0:
            raise InfraredDivergenceError(f"{what} diverges at k = 0 for a massless field")
        return w

    if kernel.kind is Kind.VACUUM:
        return lambda k: hbar / (2.0 * _w(k))
    if kernel.kind is Kind.CLASSICAL_GIBBS:
        return lambda k: kT / _w(k) ** 2

    def quantum_thermal(k):
        w = _w(k)
        x = hbar * w / (2.0 * kT)
        c = 1.0 / x + x / 3.0 if x < _SERIES_CUTOFF else 1.0 / math.tanh(x)
        return hbar / (2.0 * w) * c

    return quantum_thermal


def variance_ratio_to_classical(kernel: SpectralKernel, k):
    """S_quantum_thermal / S_classical = x coth(x); tends to 1 at low k."""
    _check_ir(omega(k, kernel.mass), "classical mode variance")
    return _scalar_or_array(xcoth(thermal_argument(kernel, k)), k)


def variance_ratio_to_vacuum(kernel: SpectralKernel, k):
    """S_quantum_thermal / S_vacuum = coth(x); decreases to 1 at high k."""
    _check_ir(omega(k, kernel.mass), "vacuum mode variance")
    return _scalar_or_array(coth(thermal_argument(kernel, k)), k)


def crossover_wavenumber(kernel: SpectralKernel) -> float:
    """Wave number where hbar omega = 2 kT, i.e. where S_classical = S_vacuum."""
    if not (kernel.kT > 0):
        raise KernelError("crossover needs kT > 0")
    k_omega = 2.0 * kernel.kT / kernel.hbar
    if kernel.mass > k_omega:
        raise NoCrossoverError(
            f"hbar*m = {kernel.hbar * kernel.mass} exceeds 2kT = {2 * kernel.kT}: "
            "quantum fluctuations dominate at every k"
        )
    return math.sqrt(k_omega * k_omega - kernel.mass * kernel.mass)
