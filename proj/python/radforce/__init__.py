"""Radiation-pressure forces on multilevel atoms."""

from ._core import (
    Error,
    FieldSet,
    PlaneWave,
    Solution,
    SolverOptions,
    Transition,
    clebsch_gordan,
    covariance_residual,
    doppler_shift,
    floquet_exponents,
    oracle_rates,
    polarization,
    rotate_field,
    run,
    saturation_params,
    single_wave_rate,
    solve,
    wigner_small_d,
)

__version__ = "0.1.0"

__all__ = [
    "Error",
    "FieldSet",
    "PlaneWave",
    "Solution",
    "SolverOptions",
    "Transition",
    "clebsch_gordan",
    "covariance_residual",
    "doppler_shift",
    "floquet_exponents",
    "oracle_rates",
    "polarization",
    "rotate_field",
    "run",
    "saturation_params",
    "single_wave_rate",
    "solve",
    "wigner_small_d",
]
