"""Generalized Kakutani splitting, renewal counts and lattice profiles for interval branch systems."""

__version__ = "0.1.0"

from .branch_systems import (  # noqa: E402
    BranchSystem,
    Conjugacy,
    affine,
    build_conjugated_system,
    dyadic,
    golden,
    kakutani,
    map_word,
    validate_system,
)
from .symbolic import CodedPoint, ExactLog  # noqa: E402

__all__ = [
    "BranchSystem",
    "CodedPoint",
    "Conjugacy",
    "ExactLog",
    "affine",
    "build_conjugated_system",
    "dyadic",
    "golden",
    "kakutani",
    "map_word",
    "validate_system",
]
