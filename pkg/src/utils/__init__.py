"""Utility functions and constants."""

from .errors import (
    SpaneError,
    ConfigError,
    DataError,
    ManifestError,
    FormatError,
    DimensionError,
    PolicyError,
    InsufficientDataError,
)
from .seeding import fnv1a_64, derive_seed, derived_rng
