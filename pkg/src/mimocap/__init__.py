"""Ergodic capacity of MIMO links with residual transceiver hardware impairments."""

from mimocap.asymptotics import (
    DeterministicEquivalent,
    LowSnrMetrics,
    capacity_large_nr,
    capacity_large_nt,
    deterministic_equivalent,
    low_snr_capacity_approx,
    low_snr_metrics,
)
from mimocap.closedform import (
    SpectrumCoefficients,
    build_spectrum_coefficients,
    capacity_ceiling,
    eigen_pdf,
    ergodic_capacity_closed,
    ergodic_capacity_quadrature,
)
from mimocap.errors import DomainError, NoCeilingError, NumericalError, UnsupportedConfigurationError
from mimocap.model import IDEAL, AntennaConfig, ImpairmentConfig, SnrSpec, db_to_linear, linear_to_db
from mimocap.montecarlo import CapacityEstimate, estimate_ergodic_capacity

__version__ = "0.1.0"
