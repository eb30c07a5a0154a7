"""Gaussian test functions, the mass-shell inner product and smeared covariances.

Test functions are Gaussian packets with a cosine carrier,

    f(x) = A exp(-|x - x0|**2 / (2 sigma**2)) cos(k0 . x),

whose Fourier transform (convention ``f~(k) = int f(x) exp(-i k.x) d^d x``)
is a sum of two shifted Gaussians.  Every spectral integral of the form

    int d^d k / (2 pi)^d  g~*(k) f~(k) W(|k|) exp(-i omega (t_f - t_g))

is reduced analytically over directions, leaving a one-dimensional adaptive
quadrature in ``|k|``.  The direction average of ``exp(k . w)`` for complex
``w`` over a sphere of radius ``r`` is ``cosh(z)``, ``I0(z)`` and
``sinh(z)/z`` in one, two and three dimensions, with ``z = r sqrt(w . w)``.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np
from scipy import integrate, special

from .errors import InfraredDivergenceError, QuadratureError, RFieldError
from .kernels import SpectralKernel, mode_variance_fn

# |k|max = max(|k0| + TAIL_SIGMAS / sigma); the Gaussian tail beyond is < 1e-30
TAIL_SIGMAS = 12.0
EPSABS = 1e-10
EPSREL = 1e-8
QUAD_LIMIT = 200
# relative size of g~*(0) f~(0) below which a massless IR singularity is treated as absent
IR_ZERO_TOL = 1e-12

_SOLID_ANGLE = {1: 2.0, 2: 2.0 * math.pi, 3: 4.0 * math.pi}


def _as_vector(v, d=None) -> tuple[float, ...]:
    arr = np.atleast_1d(np.asarray(v, dtype=float))
    if arr.ndim != 1:
        raise ValueError(f"expected a vector, got shape {arr.shape}")
    if d is not None and arr.size == 1 and d > 1:
        arr = np.full(d, arr[0]) if arr[0] == 0 else arr
    return tuple(float(x) for x in arr)


@dataclass(frozen=True)
class TestFunction:
    """Gaussian wave packet ``A exp(-|x - x0|^2 / 2 sigma^2) cos(k0 . x)``.

    ``time`` is the equal-time slice the packet lives on.
    """

    __test__ = False  # keep pytest from collecting this class

    center: tuple[float, ...]
    width: float
    carrier: tuple[float, ...] | None = None
    amplitude: float = 1.0
    time: float = 0.0

    def __post_init__(self):
        center = _as_vector(self.center)
        d = len(center)
        if d not in (1, 2, 3):
            raise ValueError(f"test functions live in 1, 2 or 3 dimensions, got {d}")
        carrier = (0.0,) * d if self.carrier is None else _as_vector(self.carrier, d)
        if len(carrier) != d:
            raise ValueError("carrier and center must have the same dimension")
        if not (math.isfinite(self.width) and self.width > 0):
            raise ValueError(f"width must be finite and > 0, got {self.width}")
        if not (math.isfinite(self.amplitude) and math.isfinite(self.time)):
            raise ValueError("amplitude and time must be finite")
        if not all(map(math.isfinite, center + carrier)):
            raise ValueError("center and carrier must be finite")
        object.__setattr__(self, "center", center)
        object.__setattr__(self, "carrier", carrier)
        object.__setattr__(self, "width", float(self.width))
        object.__setattr__(self, "amplitude", float(self.amplitude))
        object.__setattr__(self, "time", float(self.time))

    @property
    def dimension(self) -> int:
        return len(self.center)

    @property
    def kmax(self) -> float:
        return float(np.linalg.norm(self.carrier)) + TAIL_SIGMAS / self.width

    def __call__(self, x):
        """Evaluate at points ``x`` of shape ``(..., d)`` (or ``(...)`` when d = 1)."""
        x = np.asarray(x, dtype=float)
        if self.dimension == 1 and (x.ndim == 0 or x.shape[-1] != 1):
            x = x[..., None]
        x0 = np.asarray(self.center)
        k0 = np.asarray(self.carrier)
        r2 = np.sum((x - x0) ** 2, axis=-1)
        return self.amplitude * np.exp(-r2 / (2 * self.width**2)) * np.cos(x @ k0)

    def fourier_transform(self, k):
        return fourier_transform(self, k)

    def as_combination(self) -> "Combination":
        return Combination(((1.0, self),))

    def __mul__(self, c):
        return self.as_combination() * c

    __rmul__ = __mul__

    def __add__(self, other):
        return self.as_combination() + other

    def __neg__(self):
        return self.as_combination() * -1.0

    def __sub__(self, other):
        return self + (-1.0) * other

    def to_dict(self) -> dict:
        return {
            "center": list(self.center),
            "width": self.width,
            "carrier": list(self.carrier),
            "amplitude": self.amplitude,
            "time": self.time,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "TestFunction":
        return cls(
            center=data["center"],
            width=data["width"],
            carrier=data.get("carrier"),
            amplitude=data.get("amplitude", 1.0),
            time=data.get("time", 0.0),
        )

    _KEYS = {"x0": "center", "sigma": "width", "k0": "carrier", "A": "amplitude", "t": "time"}

    def format(self) -> str:
        """Compact ``x0=..,sigma=..,k0=..,A=..,t=..`` form; vector components joined by ``:``."""
        vec = lambda v: ":".join(repr(c) for c in v)
        return (
            f"x0={vec(self.center)},sigma={self.width!r},k0={vec(self.carrier)},"
            f"A={self.amplitude!r},t={self.time!r}"
        )

    @classmethod
    def parse(cls, text: str) -> "TestFunction":
        kw = {}
        for item in text.split(","):
            if not item.strip():
                continue
            key, _, value = item.partition("=")
            key = key.strip()
            name = cls._KEYS.get(key, key)
            if name not in ("center", "width", "carrier", "amplitude", "time"):
                raise ValueError(f"unknown test-function field {key!r}")
            if name in ("center", "carrier"):
                kw[name] = [float(c) for c in value.split(":")]
            else:
                kw[name] = float(value)
        if "center" not in kw or "width" not in kw:
            raise ValueError("a test function needs at least x0 and sigma")
        return cls(**kw)


@dataclass(frozen=True)
class Combination:
    """Finite linear combination ``sum c_i f_i`` of packets, complex coefficients allowed."""

    terms: tuple[tuple[complex, TestFunction], ...]

    def __post_init__(self):
        dims = {f.dimension for _, f in self.terms}
        if len(dims) > 1:
            raise ValueError("all packets in a combination must share a dimension")

    @property
    def dimension(self) -> int:
        return self.terms[0][1].dimension

    @property
    def kmax(self) -> float:
        return max(f.kmax for _, f in self.terms)

    def __mul__(self, c):
        return Combination(tuple((c * a, f) for a, f in self.terms))

    __rmul__ = __mul__

    def __add__(self, other):
        other = _as_combination(other)
        return Combination(self.terms + other.terms)

    def __neg__(self):
        return self * -1.0

    def __sub__(self, other):
        return self + _as_combination(other) * -1.0

    def __call__(self, x):
        return sum(a * f(x) for a, f in self.terms)

    def fourier_transform(self, k):
        return sum(a * fourier_transform(f, k) for a, f in self.terms)


def _as_combination(f) -> Combination:
    if isinstance(f, Combination):
        return f
    if isinstance(f, TestFunction):
        return f.as_combination()
    raise TypeError(f"expected TestFunction or Combination, got {type(f).__name__}")


def fourier_transform(f: TestFunction, k):
    """Closed-form ``f~(k)``; ``k`` has shape ``(..., d)`` (or any shape when d = 1)."""
    k = np.asarray(k, dtype=float)
    d = f.dimension
    if d == 1 and (k.ndim == 0 or k.shape[-1] != 1):
        k = k[..., None]
    x0 = np.asarray(f.center)
    k0 = np.asarray(f.carrier)
    s2 = f.width**2
    norm = 0.5 * f.amplitude * (2 * math.pi * s2) ** (d / 2)
    out = 0
    for s in (1.0, -1.0):
        q = k - s * k0
        out = out + np.exp(-0.5 * s2 * np.sum(q * q, axis=-1) - 1j * (q @ x0))
    return norm * out


# ---------------------------------------------------------------------------
# radial reduction


@dataclass
class _PairTerms:
    """Per-term constants of ``g~*(k) f~(k)`` after expanding both into Gaussians."""

    pref: np.ndarray  # complex prefactor, includes exp(-c0)
    alpha: np.ndarray  # half the curvature of the Gaussian in |k|
    q: np.ndarray  # sqrt(w . w), Re >= 0
    dt: np.ndarray  # t_f - t_g
    dimension: int
    kmax: float
    points: list = field(default_factory=list)


def _pair_terms(g: Combination, f: Combination) -> _PairTerms:
    d = f.dimension
    if g.dimension != d:
        raise ValueError("test functions must share a dimension")
    pref, alpha, q, dt, points = [], [], [], [], set()
    for cg, pg in g.terms:
        for cf, pf in f.terms:
            sg2, sf2 = pg.width**2, pf.width**2
            kg, kf = np.asarray(pg.carrier), np.asarray(pf.carrier)
            xg, xf = np.asarray(pg.center), np.asarray(pf.center)
            base = (
                np.conj(cg) * cf * 0.25 * pg.amplitude * pf.amplitude
                * (2 * math.pi) ** d * (pg.width * pf.width) ** d
            )
            c0 = 0.5 * (sg2 * kg @ kg + sf2 * kf @ kf)
            delta = xg - xf
            for s in (1.0, -1.0):
                for sp in (1.0, -1.0):
                    b = s * sg2 * kg + sp * sf2 * kf
                    phase0 = -s * (kg @ xg) + sp * (kf @ xf)
                    w2 = complex(b @ b - delta @ delta, 2.0 * (b @ delta))
                    root = cmath.sqrt(w2)
                    if root.real < 0:
                        root = -root
                    pref.append(base * cmath.exp(1j * phase0 - c0))
                    alpha.append(0.5 * (sg2 + sf2))
                    q.append(root)
                    dt.append(pf.time - pg.time)
            points.update((float(np.linalg.norm(kg)), float(np.linalg.norm(kf))))
    kmax = max(g.kmax, f.kmax)
    return _PairTerms(
        np.array(pref, dtype=complex),
        np.array(alpha),
        np.array(q, dtype=complex),
        np.array(dt),
        d,
        kmax,
        sorted(p for p in points if 0 < p < kmax),
    )


def _scaled_average(z: np.ndarray, d: int) -> np.ndarray:
    """Direction average of exp(k.w) divided by exp(Re z)."""
    if d == 1:
        return 0.5 * (np.exp(1j * z.imag) + np.exp(-2 * z.real - 1j * z.imag))
    if d == 2:
        return special.ive(0, z)
    out = np.ones_like(z)
    nz = z != 0
    zz = z[nz]
    out[nz] = np.exp(1j * zz.imag) * (-np.expm1(-2 * zz)) / (2 * zz)
    return out


def _radial_integrand(pt: _PairTerms, weight: Callable[[float], float], mass: float):
    d = pt.dimension
    measure = _SOLID_ANGLE[d] / (2 * math.pi) ** d
    timed = bool(np.any(pt.dt != 0))

    def integrand(r: float) -> complex:
        z = r * pt.q
        vals = pt.pref * np.exp(-pt.alpha * r * r + z.real) * _scaled_average(z, d)
        if timed:
            vals = vals * np.exp(-1j * math.sqrt(r * r + mass * mass) * pt.dt)
        return complex(vals.sum()) * weight(r) * measure * r ** (d - 1)

    return integrand


def _quad_complex(func, a, b, points, epsabs, epsrel, real_only=False) -> complex:
    parts = [0.0, 0.0]
    picks = (lambda z: z.real,) if real_only else (lambda z: z.real, lambda z: z.imag)
    for n, pick in enumerate(picks):
        res = integrate.quad(
            lambda r: pick(func(r)), a, b,
            epsabs=epsabs, epsrel=epsrel, limit=QUAD_LIMIT,
            points=points or None, full_output=1,
        )
        if len(res) == 4:
            raise QuadratureError(f"quadrature did not converge: {res[3].splitlines()[0]}")
        parts[n] = res[0]
    return complex(parts[0], parts[1])


def _ir_check(g: Combination, f: Combination, mass: float, power: int):
    d = f.dimension
    if mass > 0 or power < d:
        return
    zero = np.zeros(d)
    at_zero = abs(np.conj(g.fourier_transform(zero)) * f.fourier_transform(zero))
    scale = sum(abs(c) * abs(p.amplitude) * (2 * math.pi * p.width**2) ** (d / 2) for c, p in g.terms)
    scale *= sum(abs(c) * abs(p.amplitude) * (2 * math.pi * p.width**2) ** (d / 2) for c, p in f.terms)
    if at_zero > IR_ZERO_TOL * scale:
        raise InfraredDivergenceError(
            f"massless spectral integral diverges at k = 0 in d = {d}: "
            "the test functions' transforms must vanish at k = 0"
        )


def spectral_integral(
    g,
    f,
    weight: Callable[[float], float],
    *,
    mass: float,
    ir_power: int = 1,
    epsabs: float = EPSABS,
    epsrel: float = EPSREL,
    real_only: bool = False,
) -> complex:
    """``int d^dk/(2pi)^d g~*(k) f~(k) weight(|k|) exp(-i omega (t_f - t_g))``.

    ``real_only`` skips the imaginary part (returned as 0).
    """
    g, f = _as_combination(g), _as_combination(f)
    _ir_check(g, f, mass, ir_power)
    pt = _pair_terms(g, f)
    integrand = _radial_integrand(pt, weight, mass)
    return _quad_complex(integrand, 0.0, pt.kmax, pt.points, epsabs, epsrel, real_only)


def inner_product(g, f, mass: float, hbar: float, **quad_kw) -> complex:
    """Mass-shell Hermitian inner product ``(g, f) = hbar int g~* f~ / (2 omega)``.

    Antilinear in ``g``, linear in ``f``.  Packets on different time slices
    pick up the positive-frequency phase ``exp(-i omega (t_f - t_g))``.
    """
    if mass < 0:
        raise ValueError("mass must be >= 0")
    weight = lambda r: hbar / (2.0 * math.sqrt(r * r + mass * mass))
    return spectral_integral(g, f, weight, mass=mass, ir_power=1, **quad_kw)


def commutator_defect(g, f, mass: float, hbar: float, **quad_kw) -> complex:
    """``(g, f) - (f, g) = 2i Im (g, f)``.

    This is the quantum commutator of the smeared fields; the random-field
    observables always commute, so this quantifies exactly what they drop.
    """
    if g is f or g == f:
        return 0j
    return 2j * inner_product(g, f, mass, hbar, **quad_kw).imag


def kernel_weight(kernel: SpectralKernel) -> Callable[[float], float]:
    s = mode_variance_fn(kernel)
    if kernel.exclude_zero_mode:
        # a single lattice mode carries measure zero in the continuum
        return lambda r: 0.0 if r == 0 else s(r)
    return s


def smeared_variance(f, kernel: SpectralKernel, **quad_kw) -> float:
    """``Var(chi_f) = int d^dk/(2pi)^d |f~|^2 S(k)``."""
    return covariance_matrix([f], kernel, **quad_kw)[0, 0]


def covariance_matrix(fs: Sequence, kernel: SpectralKernel, **quad_kw) -> np.ndarray:
    """Equal-time covariance ``C_ij = int d^dk/(2pi)^d f~_i* S f~_j`` of smeared observables."""
    fs = [_as_combination(f) for f in fs]
    if not fs:
        raise ValueError("need at least one test function")
    times = {p.time for f in fs for _, p in f.terms}
    if len(times) > 1:
        raise ValueError("covariance_matrix needs all test functions on one time slice")
    dims = {f.dimension for f in fs}
    if len(dims) > 1:
        raise ValueError("all test functions must share a dimension")
    if kernel.dimension != dims.pop():
        raise RFieldError("kernel dimension does not match the test functions")
    weight = kernel_weight(kernel)
    n = len(fs)
    cov = np.empty((n, n))
    for i in range(n):
        for j in range(i, n):
            val = spectral_integral(
                fs[i], fs[j], weight, mass=kernel.mass, ir_power=kernel.ir_power(), real_only=True, **quad_kw
            )
            cov[i, j] = cov[j, i] = val.real
    return cov


def gram_matrix(fs: Sequence, mass: float, hbar: float, **quad_kw) -> np.ndarray:
    """Complex matrix of inner products ``G_ij = (f_i, f_j)``."""
    n = len(fs)
    out = np.empty((n, n), dtype=complex)
    for i in range(n):
        for j in range(n):
            out[i, j] = inner_product(fs[i], fs[j], mass, hbar, **quad_kw)
    return out


def is_psd(cov: np.ndarray, rtol: float = 1e-10) -> bool:
    cov = np.asarray(cov, dtype=float)
    if not np.allclose(cov, cov.T, rtol=0, atol=rtol * max(np.trace(cov), 1e-300)):
        return False
    return bool(np.linalg.eigvalsh(cov).min() >= -rtol * np.trace(cov))
