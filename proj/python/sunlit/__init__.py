"""Solar-altitude conditioned image generation toolkit."""

from ._core import (
    BinScheme,
    ContractError,
    DomainError,
    Error,
    IoError,
    NumericError,
    ParseError,
    PipelineError,
    RangeError,
    __version__,
    default_scheme,
    delta_sigma,
    denormalize,
    estimate_noise_sigma,
    frechet_gaussian,
    generate_scene,
    julian_day,
    normalize,
    recommended_scheme,
    resample_balanced,
    run_cli,
    solar_altitude,
    spearman,
)

__all__ = [name for name in dir() if not name.startswith("_")]
