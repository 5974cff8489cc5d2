"""Computational laboratory for TASEP with a block of slow particles.

Modules
-------
core      domain types, initial data, space-like partial order
sim       exact kinetic Monte Carlo (the ground-truth oracle)
hydro     closed-form macroscopic quantities
numerics  contour quadrature, Hermite/Airy, Fredholm determinants
fkernel   exact finite-time determinantal kernels and joint laws
akernel   asymptotic limit kernels and their Fredholm distributions
scaling   regime classification, scaling maps, limit-law dispatch
cli       experiment harness (simulate | exact | compare | tables | diagram)
"""

__version__ = "0.1.0"

from .core import (  # noqa: F401
    INFINITE_M,
    NotSpaceLike,
    SpaceLikeSequence,
    SpaceTimePoint,
    SystemSpec,
    WallLabelError,
    initial_position,
    is_space_like,
    precedes,
    sort_space_like,
)
