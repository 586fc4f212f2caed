"""Random matrix model with quenched and dynamical fluctuations coupled to fermions."""

__version__ = "0.1.0"

from .errors import NumericError, ParameterError
from .core import (
    EnsembleParams,
    RegimeReport,
    RngStream,
    eigenvalues_hermitian,
    fermi_midpoint,
    regime_check,
    sample_displaced_block_spectra,
    sample_hermitian_gaussian,
    sample_joint_ground,
    split_spectrum,
)
from .analytic import (
    GapPrediction,
    Sector,
    delta_mu_theory,
    density_finite_n,
    density_occupied,
    density_semicircle,
    effective_stiffness,
    erfc,
    fermi_level,
    fermi_width,
    gap_prediction,
    semicircle_cdf,
    support_radius,
)
