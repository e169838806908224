"""Discrete contraction-plus-martingale recursions f_j = V_j f_{j-1} + dg_j.

The generators here are built so that every conditional quantity entering the
right-hand sides of the moment bounds is available in closed form: increments
are a scalar symmetric (or centered exponential) variable times a predictable
coefficient and a unit direction, so the conditional variances are known
pathwise and no nested simulation is ever needed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .noise import philox_generator
from .spectral import lq_norm_rows

INCREMENT_LAWS = ("rademacher", "gaussian", "exponential")
CONTRACTIONS = ("identity", "orthogonal", "scaled_gaussian", "past_rotation")


@dataclass(frozen=True)
class DiscreteRecursionSpec:
    """Configuration of one recursion experiment.

    `q` selects the norm: 2 gives the Euclidean norm (smoothness constant
    D = 1), q > 2 the l^q norm with D = sqrt(q-1).  `bernoulli_rho`
    optionally thins increments to amplitude-a jumps occurring with
    probability rho, which separates the a.s. increment bound from the
    conditional variances (the regime of the tail bound).
    `coefficient_from_past` makes the increment scale a function of the
    previous state, exercising genuinely predictable coefficients.
    """

    dim: int = 1
    steps: int = 64
    q: float = 2.0
    increment: str = "gaussian"
    contraction: str = "identity"
    contraction_norm: float = 1.0
    amplitude: float = 1.0
    bernoulli_rho: float | None = None
    coefficient_from_past: bool = False
    p: float = 2.0
    M: int = 10_000
    seed: int = 0

    def __post_init__(self):
        if self.increment not in INCREMENT_LAWS:
            raise ValueError(f"unknown increment law {self.increment!r}")
        if self.contraction not in CONTRACTIONS:
            raise ValueError(f"unknown contraction stream {self.contraction!r}")
        if self.q < 2:
            raise ValueError("norm exponent must satisfy q >= 2")
        if not (0 < self.contraction_norm <= 1.0):
            raise ValueError("contraction norm must lie in (0, 1]")
        if self.bernoulli_rho is not None and not (0 < self.bernoulli_rho <= 1):
            raise ValueError("bernoulli_rho must lie in (0, 1]")
        if self.dim < 1 or self.steps < 1:
            raise ValueError("dim and steps must be positive")

    @property
    def regime(self) -> str:
        """'symmetric' when increments are conditionally symmetric."""
        return "general" if self.increment == "exponential" else "symmetric"

    @property
    def smoothness_constant(self) -> float:
        return math.sqrt(self.q - 1.0)

    @property
    def amplitude_bound(self) -> float:
        """A.s. bound on ||dg_j|| for bounded increment laws."""
        cmax = 1.5 if self.coefficient_from_past else 1.0
        return self.amplitude * cmax

    @property
    def enumerable(self) -> bool:
        """Exhaustive sign-path enumeration is available for Rademacher
        increments without thinning and without a random contraction
        stream."""
        return (
            self.increment == "rademacher"
            and self.bernoulli_rho is None
            and self.contraction in ("identity", "past_rotation")
            and self.steps <= 12
        )


@dataclass(frozen=True)
class RecursionPaths:
    """Pathwise statistics of a batch of recursions."""

    f_star: np.ndarray  # sup_j ||f_j||
    dg_star: np.ndarray  # sup_j ||dg_j||
    s_squared: np.ndarray  # sum_j E_{j-1} ||dg_j||^2, closed form
    weights: np.ndarray | None = None  # path probabilities (enumeration only)

    def lp(self, values: np.ndarray, p: float) -> float:
        if self.weights is None:
            return float(np.mean(values**p) ** (1.0 / p))
        return float(np.sum(self.weights * values**p) ** (1.0 / p))


def _coefficient(spec: DiscreteRecursionSpec, prev_norm: np.ndarray) -> np.ndarray:
    """Predictable increment scale c_j in [1/2, 3/2]."""
    if not spec.coefficient_from_past:
        return np.ones_like(prev_norm)
    return 1.0 + 0.5 * np.sin(3.0 * prev_norm)


def _haar_orthogonal(gen: np.random.Generator, batch: int, dim: int) -> np.ndarray:
    """Batch of Haar orthogonal matrices via sign-fixed QR."""
    g = gen.standard_normal((batch, dim, dim))
    q, r = np.linalg.qr(g)
    signs = np.sign(np.einsum("bii->bi", r))
    signs[signs == 0] = 1.0
    return q * signs[:, None, :]


def _scaled_gaussian_contraction(gen: np.random.Generator, batch: int, dim: int, c: float) -> np.ndarray:
    """Dense Gaussian matrices rescaled to spectral norm c (1 - 1e-8).

    The norm is computed exactly (eigenvalues of G^T G) rather than by power
    iteration, so the contraction invariant holds to fp accuracy.
    """
    g = gen.standard_normal((batch, dim, dim))
    sigma = np.sqrt(np.linalg.eigvalsh(np.swapaxes(g, 1, 2) @ g)[:, -1])
    sigma = np.maximum(sigma, 1e-300)
    return g * (c * (1.0 - 1e-8) / sigma)[:, None, None]


def _past_rotation(f: np.ndarray, j: int, c: float) -> np.ndarray:
    """Deterministic-from-the-past contraction: a Givens rotation whose angle
    hashes the previous state (batched, applied in place of a matrix)."""
    batch, dim = f.shape
    out = f.copy()
    if dim == 1:
        return c * out
    i0 = j % dim
    i1 = (j + 1) % dim
    theta = 0.7 * j + np.sum(np.abs(f), axis=1)
    ct, st = np.cos(theta), np.sin(theta)
    out[:, i0] = ct * f[:, i0] - st * f[:, i1]
    out[:, i1] = st * f[:, i0] + ct * f[:, i1]
    return c * out


def _draw_epsilon(spec: DiscreteRecursionSpec, gen: np.random.Generator, batch: int) -> np.ndarray:
    if spec.increment == "rademacher":
        return gen.integers(0, 2, size=batch).astype(np.float64) * 2.0 - 1.0
    if spec.increment == "gaussian":
        return gen.standard_normal(batch)
    return gen.standard_exponential(batch) - 1.0  # centered, asymmetric


def replay_paths(
    spec: DiscreteRecursionSpec,
    eps: np.ndarray,
    bern: np.ndarray | None,
    vgen: np.random.Generator | None,
    weights: np.ndarray | None = None,
) -> RecursionPaths:
    """Run the recursion for given increment draws.

    Shared by the Monte Carlo driver and the exhaustive enumeration oracle,
    so both evaluate exactly the same dynamics.
    """
    batch, steps = eps.shape
    dim = spec.dim
    f = np.zeros((batch, dim))
    f_star = np.zeros(batch)
    dg_star = np.zeros(batch)
    s2 = np.zeros(batch)
    unit_var = 1.0  # all three laws have unit variance
    rho = 1.0 if spec.bernoulli_rho is None else spec.bernoulli_rho

    for j in range(steps):
        prev_norm = lq_norm_rows(f, spec.q)
        c = _coefficient(spec, prev_norm) * spec.amplitude
        jump = eps[:, j] if bern is None else eps[:, j] * bern[:, j]
        s2 += c**2 * unit_var * rho

        if spec.contraction == "identity":
            fnext = f.copy()
        elif spec.contraction == "past_rotation":
            fnext = _past_rotation(f, j, spec.contraction_norm)
        elif spec.contraction == "orthogonal":
            v = _haar_orthogonal(vgen, batch, dim) * spec.contraction_norm
            fnext = np.einsum("bij,bj->bi", v, f)
        else:
            v = _scaled_gaussian_contraction(vgen, batch, dim, spec.contraction_norm)
            fnext = np.einsum("bij,bj->bi", v, f)

        fnext[:, j % dim] += c * jump
        f = fnext
        np.maximum(dg_star, np.abs(c * jump), out=dg_star)  # ||e||_q = 1
        np.maximum(f_star, lq_norm_rows(f, spec.q), out=f_star)

    return RecursionPaths(f_star, dg_star, s2, weights)


def simulate_paths(spec: DiscreteRecursionSpec, chunk: int = 4096) -> RecursionPaths:
    """Monte Carlo paths in fixed-size chunks; the chunk layout is part of
    the determinism contract (results never depend on scheduling)."""
    parts = []
    for chunk_id, lo in enumerate(range(0, spec.M, chunk)):
        batch = min(chunk, spec.M - lo)
        igen = philox_generator(spec.seed, 101, chunk_id)
        vgen = philox_generator(spec.seed, 202, chunk_id)
        eps = _draw_epsilon(spec, igen, batch * spec.steps).reshape(batch, spec.steps)
        bern = None
        if spec.bernoulli_rho is not None:
            u = igen.random((batch, spec.steps))
            bern = (u < spec.bernoulli_rho).astype(np.float64)
        parts.append(replay_paths(spec, eps, bern, vgen))
    return RecursionPaths(
        np.concatenate([p.f_star for p in parts]),
        np.concatenate([p.dg_star for p in parts]),
        np.concatenate([p.s_squared for p in parts]),
    )


def enumerate_paths(spec: DiscreteRecursionSpec) -> RecursionPaths:
    """Exact distribution over all 2^steps Rademacher sign paths."""
    if not spec.enumerable:
        raise ValueError(
            "enumeration needs Rademacher increments, no thinning, a "
            "deterministic contraction stream, and at most 12 steps"
        )
    k = spec.steps
    total = 1 << k
    codes = np.arange(total, dtype=np.uint64)[:, None]
    bits = (codes >> np.arange(k, dtype=np.uint64)[None, :]) & 1
    eps = bits.astype(np.float64) * 2.0 - 1.0
    weights = np.full(total, 1.0 / total)
    return replay_paths(spec, eps, None, None, weights)
