"""Truncated Fourier-mode state spaces with Sobolev-weighted norms.

The spatial domain is the torus, so frequencies are integer vectors and the
state space is finite-dimensional.  All generators in this package act
diagonally on these modes, which makes every norm a weighted sum over the
frequency lattice.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np


class DimensionError(ValueError):
    """A vector does not match the mode grid / space it is used with."""


class UnsupportedExponentError(ValueError):
    """An l^q exponent outside [2, inf] was requested."""


@dataclass(frozen=True)
class ModeGrid:
    """Integer frequency lattice {k : |k|_inf <= cutoff} in `dimension` axes.

    Frequencies are ordered lexicographically, so the layout is deterministic
    and reproducible across runs.
    """

    cutoff: int
    dimension: int = 1
    frequencies: np.ndarray = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if self.cutoff < 1:
            raise ValueError(f"cutoff must be a positive integer, got {self.cutoff}")
        if self.dimension not in (1, 2, 3):
            raise ValueError(f"dimension must be 1, 2 or 3, got {self.dimension}")
        axes = [np.arange(-self.cutoff, self.cutoff + 1)] * self.dimension
        mesh = np.meshgrid(*axes, indexing="ij")
        freqs = np.stack([m.ravel() for m in mesh], axis=1).astype(np.int64)
        object.__setattr__(self, "frequencies", freqs)
        self.frequencies.setflags(write=False)

    @property
    def size(self) -> int:
        return (2 * self.cutoff + 1) ** self.dimension

    def abs_squared(self) -> np.ndarray:
        """|k|^2 (Euclidean) for every frequency, shape (size,)."""
        return np.sum(self.frequencies.astype(np.float64) ** 2, axis=1)

    def zero_index(self) -> int:
        """Position of the zero frequency in the lexicographic layout."""
        return (self.size - 1) // 2


@dataclass(frozen=True)
class SobolevWeight:
    """Per-mode weight (1+|k|^2)^lambda defining the H^lambda norm."""

    lam: float

    def __post_init__(self):
        if not math.isfinite(self.lam):
            raise ValueError("smoothness exponent must be finite")

    def values(self, grid: ModeGrid) -> np.ndarray:
        return (1.0 + grid.abs_squared()) ** self.lam


@dataclass(frozen=True)
class StateVector:
    """Complex coefficients of a state, one per frequency of `grid`."""

    grid: ModeGrid
    coefficients: np.ndarray

    def __post_init__(self):
        coeffs = np.asarray(self.coefficients, dtype=np.complex128)
        if coeffs.shape != (self.grid.size,):
            raise DimensionError(
                f"expected {self.grid.size} coefficients, got shape {coeffs.shape}"
            )
        if not np.all(np.isfinite(coeffs.view(np.float64))):
            raise ValueError("state coefficients must be finite")
        object.__setattr__(self, "coefficients", coeffs)
        self.coefficients.setflags(write=False)

    @classmethod
    def zero(cls, grid: ModeGrid) -> "StateVector":
        return cls(grid, np.zeros(grid.size, dtype=np.complex128))

    @classmethod
    def single_mode(cls, grid: ModeGrid, frequency, value=1.0) -> "StateVector":
        freq = np.atleast_1d(np.asarray(frequency, dtype=np.int64))
        match = np.all(grid.frequencies == freq[None, :], axis=1)
        idx = np.nonzero(match)[0]
        if idx.size != 1:
            raise ValueError(f"frequency {frequency} not on the grid")
        coeffs = np.zeros(grid.size, dtype=np.complex128)
        coeffs[idx[0]] = value
        return cls(grid, coeffs)


@dataclass(frozen=True)
class SequenceSpace:
    """Finite l^q space of real vectors with its 2-smoothness constant.

    l^q with 2 <= q < inf is (2, sqrt(q-1))-smooth; q = inf is accepted for
    the max norm (no smoothness constant is used there).
    """

    q: float
    dim: int

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dim must be a positive integer")
        if self.q != math.inf and self.q < 2:
            raise UnsupportedExponentError(
                f"l^q exponent must satisfy q >= 2 or q = inf, got {self.q}"
            )

    @property
    def smoothness_constant(self) -> float:
        """D = sqrt(q-1); equals 1 exactly for the Hilbert case q = 2."""
        if self.q == math.inf:
            raise UnsupportedExponentError("no 2-smoothness constant for q = inf")
        return math.sqrt(self.q - 1.0)


def sobolev_norm(state: StateVector, weight: SobolevWeight) -> float:
    """H^lambda norm sqrt(sum_k (1+|k|^2)^lambda |x_k|^2)."""
    w = weight.values(state.grid)
    return float(np.sqrt(np.sum(w * np.abs(state.coefficients) ** 2)))


def weighted_norm(values: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """Sobolev norm on raw coefficient arrays; reduces over the last axis.

    Hot-path variant of :func:`sobolev_norm` used by the simulation code.
    """
    return np.sqrt(np.sum(weights * np.abs(values) ** 2, axis=-1))


def lq_norm(vector, space: SequenceSpace) -> float:
    """Standard l^q norm of a real vector; q = inf gives the max norm."""
    v = np.asarray(vector, dtype=np.float64)
    if v.shape != (space.dim,):
        raise DimensionError(f"expected length {space.dim}, got shape {v.shape}")
    if space.q == math.inf:
        return float(np.max(np.abs(v)))
    return float(np.sum(np.abs(v) ** space.q) ** (1.0 / space.q))


def lq_norm_rows(matrix: np.ndarray, q: float) -> np.ndarray:
    """Row-wise l^q norms; vectorized helper for random searches."""
    a = np.abs(matrix)
    if q == math.inf:
        return np.max(a, axis=-1)
    return np.sum(a**q, axis=-1) ** (1.0 / q)


def two_point_smoothness_violation(x, y, space: SequenceSpace, constant: float | None = None) -> float:
    """Signed slack ||x+y||^2 + ||x-y||^2 - 2||x||^2 - 2 D^2 ||y||^2.

    Nonpositive values certify the two-point smoothness inequality for the
    pair; `constant` overrides D = sqrt(q-1) so tests can probe whether the
    natural constant is essentially sharp.
    """
    x = np.asarray(x, dtype=np.float64)
    y = np.asarray(y, dtype=np.float64)
    if x.shape != y.shape:
        raise DimensionError(f"shape mismatch {x.shape} vs {y.shape}")
    d = space.smoothness_constant if constant is None else constant
    return (
        lq_norm(x + y, space) ** 2
        + lq_norm(x - y, space) ** 2
        - 2.0 * lq_norm(x, space) ** 2
        - 2.0 * d * d * lq_norm(y, space) ** 2
    )


def two_point_violation_rows(x: np.ndarray, y: np.ndarray, q: float, d: float) -> np.ndarray:
    """Vectorized two-point slack for batches of pairs (rows of x, y)."""
    return (
        lq_norm_rows(x + y, q) ** 2
        + lq_norm_rows(x - y, q) ** 2
        - 2.0 * lq_norm_rows(x, q) ** 2
        - 2.0 * d * d * lq_norm_rows(y, q) ** 2
    )
