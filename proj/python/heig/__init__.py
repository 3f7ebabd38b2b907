"""Spectral divide-and-conquer eigensolver for symmetric banded matrices."""

from ._core import (
    GapTooSmallError,
    Hodlr,
    Solution,
    StructuralError,
    TruncationConfig,
    banded_from_spectrum,
    clement_eigenvalues,
    gap_spectrum,
    named_matrix,
    solve,
    spectral_projector,
    toeplitz121_eigenvalues,
)

__all__ = [
    "GapTooSmallError",
    "Hodlr",
    "Solution",
    "StructuralError",
    "TruncationConfig",
    "banded_from_spectrum",
    "clement_eigenvalues",
    "gap_spectrum",
    "named_matrix",
    "solve",
    "spectral_projector",
    "toeplitz121_eigenvalues",
]
