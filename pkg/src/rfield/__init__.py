"""Classical Gaussian random fields equivalent to the free Klein-Gordon field.

Spectral kernels for the vacuum, classical Gibbs and quantum thermal states,
smeared observables and their covariances, lattice sampling, a Wick moment
oracle, and Bell marginal-feasibility tools.
"""

from .bell import MarginalSet, chsh_value, field_chsh, joint_feasible, sign_correlator
from .ensemble import EnsembleStats, accumulate, run_ensemble, run_ensembles
from .kernels import (
    Kind,
    SpectralKernel,
    crossover_wavenumber,
    mode_variance,
    variance_ratio_to_classical,
    variance_ratio_to_vacuum,
)
from .sampler import FieldSample, Lattice, sample_field, smear
from .smearing import TestFunction, commutator_defect, covariance_matrix, fourier_transform, inner_product
from .wick import char_function, joint_density, wick_moment

__version__ = "0.1.0"
