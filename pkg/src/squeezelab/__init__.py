"""Squeezed vacuum states under loss: Gaussian, Wigner and Fock-basis descriptions,
the below-threshold OPO spectrum, and synthetic homodyne data."""

__version__ = "0.1.0"

from ._accel import BACKEND
from .errors import ConvergenceError, SqueezeLabError, ValidationError
from .fock import (
    DensityMatrix,
    PhotonDistribution,
    conditional_mean_given_click,
    density_matrix,
    oracle_density_matrix,
    oscillation_contrast,
    photon_distribution,
)
from .gaussian import (
    Convention,
    GaussianState,
    GridSpec,
    LossChannel,
    WignerGrid,
    apply_loss,
    db_to_linear,
    infer_loss,
    mean_photon_number,
    purity,
    wigner_eval,
)
from .homodyne import HomodyneConfig, HomodyneTrace, estimate_variance, simulate, sweep_trace
from .spectrum import (
    SpectrumData,
    SpectrumModel,
    fit_spectrum,
    model_variances,
    spectral_photon_rate,
    squeezing_bandwidth,
)
