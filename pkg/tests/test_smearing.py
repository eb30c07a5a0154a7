import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from oracles import S_numpy, packet_ft, spectral_integral_grid
from strategies import packet_pairs, packets
from rfield.errors import InfraredDivergenceError, QuadratureError, RFieldError
from rfield.kernels import SpectralKernel
from rfield.smearing import (
    Combination,
    TestFunction,
    commutator_defect,
    covariance_matrix,
    fourier_transform,
    gram_matrix,
    inner_product,
    is_psd,
    smeared_variance,
    spectral_integral,
)

KERNELS = {
    "vacuum": SpectralKernel.vacuum(),
    "classical": SpectralKernel.classical(kT=0.5),
    "quantum_thermal": SpectralKernel.quantum_thermal(kT=0.5),
}

# int dk/2pi |f~|^2 S(k) for f = exp(-x^2/2), m = 1, hbar = 1, kT = 0.5 (mpmath, 30 digits)
FROZEN_VARIANCE = {
    "vacuum": 0.76205469288695476501,
    "classical": 0.67164671082336758522,
    "quantum_thermal": 0.94172131310070424643,
}


def _tuple(f: TestFunction):
    return (f.center, f.width, f.carrier, f.amplitude)


def test_fourier_transform_matches_direct_integral():
    f = TestFunction([0.7], 1.3, [2.0], 1.5)
    for k in (-3.0, 0.0, 0.4, 2.0):
        re = integrate.quad(lambda x: f(x) * math.cos(k * x), -30, 30, limit=400)[0]
        im = integrate.quad(lambda x: -f(x) * math.sin(k * x), -30, 30, limit=400)[0]
        assert fourier_transform(f, k) == pytest.approx(complex(re, im), abs=1e-10)


@given(packets(), st.lists(st.floats(-5, 5), min_size=3, max_size=3))
def test_fourier_transform_matches_oracle(f, k):
    kv = np.array(k[: f.dimension])
    assert complex(f.fourier_transform(kv)) == pytest.approx(complex(packet_ft(*_tuple(f), kv)), rel=1e-12, abs=1e-300)


@pytest.mark.parametrize("kind", list(KERNELS))
def test_frozen_centred_variance(kind):
    var = smeared_variance(TestFunction([0.0], 1.0), KERNELS[kind])
    assert var == pytest.approx(FROZEN_VARIANCE[kind], rel=1e-12)


@pytest.mark.parametrize("d", [1, 2, 3])
@pytest.mark.parametrize("dt", [0.0, 0.9])
def test_spectral_integral_against_grid_oracle(d, dt):
    g = TestFunction([0.3] * d, 1.2, [1.0] + [0.0] * (d - 1), 1.0)
    f = TestFunction([-0.4] + [0.2] * (d - 1), 0.8, [0.5] + [0.7] * (d - 1), 2.0, dt)
    S = lambda k: S_numpy("quantum_thermal", k)
    got = spectral_integral(g, f, S, mass=1.0)
    ref = spectral_integral_grid(_tuple(g), _tuple(f), S, dt=dt, panels=40 if d == 3 else 120)
    assert abs(got - ref) <= 1e-10 * abs(ref)


@given(packet_pairs(time=True))
def test_conjugate_symmetry(pair):
    g, f = pair
    gf = inner_product(g, f, 1.0, 1.0)
    fg = inner_product(f, g, 1.0, 1.0)
    scale = math.sqrt(inner_product(g, g, 1, 1).real * inner_product(f, f, 1, 1).real)
    assert abs(gf - fg.conjugate()) <= 1e-9 * scale + 1e-14


@given(packets(time=True))
def test_positive_norm(f):
    ff = inner_product(f, f, 1.0, 1.0)
    assert ff.real > 0 and abs(ff.imag) <= 1e-12 * ff.real


@settings(max_examples=25)
@given(packet_pairs(), st.complex_numbers(max_magnitude=3, allow_nan=False, allow_infinity=False))
def test_antilinear_first_slot(pair, c):
    g, f = pair
    lhs = inner_product(c * g, f, 1.0, 1.0)
    rhs = c.conjugate() * inner_product(g, f, 1.0, 1.0)
    norm = abs(c) * math.sqrt(inner_product(g, g, 1, 1).real * inner_product(f, f, 1, 1).real)
    assert abs(lhs - rhs) <= 1e-9 * norm + 1e-14


def test_combination_arithmetic():
    f, g = TestFunction([0.0], 1.0), TestFunction([1.0], 0.5, [1.0])
    h = 2 * f - g
    assert isinstance(h, Combination)
    x = np.linspace(-2, 2, 7)
    assert np.allclose(h(x), 2 * f(x) - g(x))
    k = np.array([0.3, -1.0])
    assert np.allclose(h.fourier_transform(k), 2 * f.fourier_transform(k) - g.fourier_transform(k))


def test_equal_time_commutator_vanishes_and_unequal_does_not():
    g = TestFunction([0.0], 1.0, [1.0])
    f = TestFunction([2.0], 0.7, [0.0])
    assert abs(commutator_defect(g, f, 1.0, 1.0)) < 1e-12
    f_later = TestFunction([2.0], 0.7, [0.0], time=1.5)
    assert abs(commutator_defect(g, f_later, 1.0, 1.0)) > 1e-3
    assert commutator_defect(f, f, 1.0, 1.0) == 0


def test_commutator_decays_with_spacelike_separation():
    g = TestFunction([0.0], 0.5)
    vals = [abs(commutator_defect(g, TestFunction([x], 0.5, time=1.0), 1.0, 1.0)) for x in (0.0, 6.0, 12.0)]
    assert vals[0] > vals[1] > vals[2]


def test_massless_infrared_divergence():
    f = TestFunction([0.0], 1.0)
    with pytest.raises(InfraredDivergenceError):
        smeared_variance(f, SpectralKernel.vacuum(mass=0.0))
    with pytest.raises(InfraredDivergenceError):
        smeared_variance(TestFunction([0.0, 0.0], 1.0), SpectralKernel.classical(mass=0.0, kT=1.0, dimension=2))
    # kT / k^2 against the k^2 dk measure is integrable in three dimensions
    assert smeared_variance(TestFunction([0.0] * 3, 1.0), SpectralKernel.classical(mass=0.0, kT=1.0, dimension=3)) > 0
    # 1/|k| is integrable in three dimensions
    v = smeared_variance(TestFunction([0.0, 0.0, 0.0], 1.0), SpectralKernel.vacuum(mass=0.0, dimension=3))
    ref = 4 * math.pi * integrate.quad(lambda k: k * k * (2 * math.pi) ** 3 * math.exp(-k * k) / (2 * k), 0, 20)[0]
    assert v == pytest.approx(ref / (2 * math.pi) ** 3, rel=1e-10)
    # a carrier far from zero pushes f~(0) below the IR tolerance
    far = TestFunction([0.0], 2.0, [10.0])
    assert smeared_variance(far, SpectralKernel.vacuum(mass=0.0)) > 0


def test_covariance_matrix_psd_and_symmetric():
    rng = np.random.default_rng(4)
    fs = [TestFunction(rng.uniform(-2, 2, 2), rng.uniform(0.5, 2), rng.uniform(-1, 1, 2)) for _ in range(5)]
    C = covariance_matrix(fs, SpectralKernel.quantum_thermal(kT=0.5, dimension=2))
    assert np.array_equal(C, C.T) and is_psd(C)


def test_covariance_requires_common_time_and_dimension():
    with pytest.raises(ValueError):
        covariance_matrix([TestFunction([0.0], 1.0), TestFunction([0.0], 1.0, time=1.0)], KERNELS["vacuum"])
    with pytest.raises(RFieldError):
        covariance_matrix([TestFunction([0.0, 0.0], 1.0)], KERNELS["vacuum"])
    with pytest.raises(ValueError):
        covariance_matrix([], KERNELS["vacuum"])


def test_gram_matrix_hermitian():
    fs = [TestFunction([0.0], 1.0, time=0.0), TestFunction([1.0], 0.8, [1.0], time=0.5)]
    G = gram_matrix(fs, 1.0, 1.0)
    assert np.allclose(G, G.conj().T, atol=1e-12)


def test_quadrature_failure_is_reported():
    f = TestFunction([0.0], 1.0)
    with pytest.raises(QuadratureError):
        spectral_integral(f, f, lambda k: 1.0 / max(abs(k - 1.0), 1e-300) ** 0.999, mass=1.0, epsabs=1e-15, epsrel=1e-15)


def test_roundtrips():
    f = TestFunction([1.5, -2.0], 0.75, [0.1, 0.2], 2.0, 0.5)
    assert TestFunction.parse(f.format()) == f
    assert TestFunction.from_dict(f.to_dict()) == f
    assert TestFunction.parse("x0=1,sigma=2") == TestFunction([1.0], 2.0)
    with pytest.raises(ValueError):
        TestFunction.parse("x0=1,sigma=2,colour=3")
    with pytest.raises(ValueError):
        TestFunction.parse("sigma=2")


@pytest.mark.parametrize(
    "kw",
    [dict(center=[0.0], width=0.0), dict(center=[0.0], width=float("nan")), dict(center=[0, 0, 0, 0], width=1.0),
     dict(center=[0.0], width=1.0, carrier=[1.0, 2.0])],
)
def test_invalid_packets(kw):
    with pytest.raises(ValueError):
        TestFunction(**kw)
