from ._core import (
    ConfigError,
    ParameterError,
    canonical_config,
    cell,
    homogenize,
    laminate_vbar,
    phase_value,
    sample,
    sample_poisson,
    sample_random_parking,
    self_check,
    yosida,
)

__all__ = [
    "ConfigError",
    "ParameterError",
    "canonical_config",
    "cell",
    "homogenize",
    "laminate_vbar",
    "phase_value",
    "sample",
    "sample_poisson",
    "sample_random_parking",
    "self_check",
    "yosida",
]
