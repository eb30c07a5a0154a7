import math
from fractions import Fraction

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from rfield import diagnostics
from rfield.ensemble import EnsembleStats, ExactSum, accumulate, run_ensemble, run_ensembles
from rfield.errors import ObservableMismatchError, SupportOverflowError
from rfield.kernels import SpectralKernel
from rfield.sampler import FieldSample, Lattice, sample_field
from rfield.smearing import TestFunction, covariance_matrix

LAT = Lattice(1, 1024, 0.1)
F1 = TestFunction([51.2], 1.0)
F2 = TestFunction([53.0], 0.8, [1.0])
QT = SpectralKernel.quantum_thermal(kT=0.5)

finite = st.floats(-1e12, 1e12, allow_nan=False, allow_infinity=False)


@given(st.lists(st.lists(finite, min_size=3, max_size=3), min_size=1, max_size=40), st.randoms())
def test_exact_sum_is_order_invariant(rows, rnd):
    a = ExactSum(3)
    a.add(np.array(rows))
    shuffled = rows[:]
    rnd.shuffle(shuffled)
    b = ExactSum(3)
    for r in shuffled:
        b.add(np.array(r))
    assert a.exact() == b.exact()
    assert a.exact() == [sum((Fraction(r[c]) for r in rows), Fraction(0)) for c in range(3)]


def test_exact_sum_cancellation():
    s = ExactSum(1)
    s.add(np.array([[1e300], [1.0], [-1e300], [1e-300]]))
    assert s.exact()[0] == Fraction(1) + Fraction(1e-300)
    with pytest.raises(ValueError):
        s.add(np.array([[np.inf]]))


def test_merge_equals_single_stream():
    rng = np.random.default_rng(0)
    rows = rng.normal(size=(1500, 2))
    whole = EnsembleStats([F1, F2]).add_values(rows)
    parts = [EnsembleStats([F1, F2]).add_values(rows[i::3]) for i in range(3)]
    merged = parts[0].merge(parts[1]).merge(parts[2])
    assert merged.count == 1500
    assert np.array_equal(merged.covariance, whole.covariance)
    assert np.array_equal(merged.charfun, whole.charfun)


def test_empty_ensemble_is_undefined():
    s = EnsembleStats([F1])
    assert not s.defined
    assert np.isnan(s.mean).all() and np.isnan(s.charfun).all() and np.isnan(s.variance).all()


def test_constant_pseudo_sample():
    s = EnsembleStats([F1])
    const = FieldSample(LAT, np.full(LAT.shape, 0.75), 0, 0, {})
    for _ in range(7):
        accumulate(s, const, [F1])
    expect = 0.75 * 0.1 * np.sum(F1(LAT.coordinates()))
    assert s.count == 7
    assert s.mean[0] == pytest.approx(expect, rel=1e-14)
    assert s.variance[0] == pytest.approx(0.0, abs=1e-12)


def test_accumulate_checks_observables():
    s = EnsembleStats([F1])
    with pytest.raises(ObservableMismatchError):
        accumulate(s, sample_field(QT, LAT, 0), [F2])
    with pytest.raises(ObservableMismatchError):
        s.add_values(np.zeros((3, 2)))
    with pytest.raises(ObservableMismatchError):
        s.merge(EnsembleStats([F2]))


def test_accumulate_agrees_with_run_ensemble():
    stream = EnsembleStats([F1, F2])
    for m in range(5):
        accumulate(stream, sample_field(QT, LAT, 3, m), [F1, F2])
    fast = run_ensemble(QT, LAT, [F1, F2], 3, 5)
    assert np.allclose(stream.second_moment, fast.second_moment, rtol=1e-10)


def test_declared_index_validation():
    with pytest.raises(ValueError):
        EnsembleStats([F1], moments=[(0, 1)])


def test_shared_draws_match_single_kernel_runs():
    kernels = [SpectralKernel.vacuum(), QT]
    joint = run_ensembles(kernels, LAT, [F1, F2], 5, 1200)
    for k, stats in zip(kernels, joint):
        alone = run_ensemble(k, LAT, [F1, F2], 5, 1200)
        assert np.array_equal(alone.covariance, stats.covariance)


def test_workers_and_blocks_do_not_change_results():
    one = run_ensemble(QT, LAT, [F1, F2], 9, 3000, workers=1, moments=[(0, 0, 1, 1)], sign_pairs=[(0, 1)])
    two = run_ensemble(QT, LAT, [F1, F2], 9, 3000, workers=2, moments=[(0, 0, 1, 1)], sign_pairs=[(0, 1)])
    assert one.count == two.count == 3000
    assert np.array_equal(one.covariance, two.covariance)
    assert np.array_equal(one.charfun, two.charfun)
    assert one.moment((0, 0, 1, 1)) == two.moment((0, 0, 1, 1))
    assert one.sign_correlation(0, 1) == two.sign_correlation(0, 1)
    odd_block = run_ensemble(QT, LAT, [F1, F2], 9, 3000, block=333)
    assert np.array_equal(one.covariance, odd_block.covariance)


def test_support_checked_before_sampling():
    with pytest.raises(SupportOverflowError):
        run_ensemble(QT, LAT, [TestFunction([1.0], 1.0)], 0, 10)


def test_statistics_against_oracles():
    M = 40_000
    stats = run_ensemble(QT, LAT, [F1, F2], 12, M)
    C = covariance_matrix([F1, F2], QT)
    for i in range(2):
        assert abs(diagnostics.mean_zscore(stats, i, C[i, i])) < 4
        assert abs(diagnostics.variance_zscore(stats, i, C[i, i])) < 4
        assert abs(diagnostics.kurtosis_zscore(stats, i)) < 4
        for row in diagnostics.charfun_zscores(stats, i, C[i, i]):
            assert abs(row["z_re"]) < 4 and abs(row["z_im"]) < 4
    assert abs(diagnostics.covariance_zscore(stats, 0, 1, C)) < 4
