"""Time-domain vibronic spectra on an emulated trapped-ion simulator."""

from ._core import (
    ConfigError,
    DomainError,
    NoiseSpec,
    NumericalError,
    So2Params,
    TruncationError,
    UnitMap,
    __version__,
    analytic_so2_autocorrelation,
    coherent_bsb_population,
    dft_spectrum,
    fourier_pade,
    map_units,
    poisson_sticks,
    run_config,
    run_so2,
    validate_config,
)

__all__ = [
    "ConfigError",
    "DomainError",
    "NoiseSpec",
    "NumericalError",
    "So2Params",
    "TruncationError",
    "UnitMap",
    "__version__",
    "analytic_so2_autocorrelation",
    "coherent_bsb_population",
    "dft_spectrum",
    "fourier_pade",
    "map_units",
    "poisson_sticks",
    "run_config",
    "run_so2",
    "validate_config",
]
