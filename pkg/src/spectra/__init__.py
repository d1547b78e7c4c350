"""Spectral sets of symmetric matrices built from locally symmetric sets of eigenvalue vectors."""

from .perm_core import Partition, Permutation, parse_cycles, apply, much_smaller, meet, Order
from .spectral import eigenvalues, lift_point, random_orthogonal, orbit_dimension
from .manifolds import (
    estimate_spectral_dimension,
    predicted_spectral_dimension,
    characteristic_permutation,
    dimension_check,
)

__version__ = "0.1.0"
