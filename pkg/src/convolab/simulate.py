"""Exact per-mode reference solutions and discretisation-scheme recursions.

The reference solution is exact in law: within each fine step the pair
(stochastic-convolution increment, Brownian increment) is drawn from its
joint Gaussian distribution, so comparing a scheme run against the reference
realizes the common-random-numbers coupling of the convergence theorems with
no reference-discretisation bias.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np

from .multiplier import Multiplier, RationalScheme, stepping_factors
from .spectral import ModeGrid, SobolevWeight, StateVector, weighted_norm

if TYPE_CHECKING:  # pragma: no cover
    from .noise import PathBundle


class CovarianceError(ArithmeticError):
    """The within-step covariance came out indefinite beyond fp tolerance."""


class GridMismatchError(ValueError):
    """A run and a reference do not live on compatible time grids."""


def _phi1(z: complex) -> complex:
    """(e^z - 1)/z with a 4th-order series branch for |z| <= 1e-6.

    Above the branch point, e^z - 1 is assembled from expm1 and 2 sin^2(y/2)
    so there is no cancellation cliff for small |z|; the result is accurate
    to a few ulp uniformly in z.
    """
    if abs(z) <= 1e-6:
        return 1.0 + z * (0.5 + z * (1.0 / 6.0 + z * (1.0 / 24.0 + z / 120.0)))
    x, y = z.real, z.imag
    real = math.expm1(x) * math.cos(y) - 2.0 * math.sin(0.5 * y) ** 2
    imag = math.exp(x) * math.sin(y)
    return complex(real, imag) / z


@dataclass(frozen=True)
class OuStepLaw:
    """Joint Gaussian law of (Re I, Im I, dW) for one fine step of one mode,
    where I = g * int_0^h e^{mu (h-s)} dW_s.

    `factor` is an eigenvalue square root of `cov` with zero eigenvalues
    dropped, so sampling consumes `rank` standard normals per step.
    """

    mu: complex
    g: complex
    h: float
    cov: np.ndarray
    factor: np.ndarray
    rank: int


def ou_step_cov(mu: complex, g: complex, h: float) -> OuStepLaw:
    """Exact covariance of the per-step convolution increment and dW."""
    if h <= 0:
        raise ValueError(f"step size must be positive, got {h}")
    mu = complex(mu)
    g = complex(g)

    q_abs = (h * _phi1(2.0 * mu.real * h)).real  # E[I Ibar] / |g|^2
    q_pse = h * _phi1(2.0 * mu * h)  # E[I I] / g^2
    q_cross = h * _phi1(mu * h)  # E[I dW] / g

    a = abs(g) ** 2 * q_abs
    b = g * g * q_pse
    c = g * q_cross
    cov = np.array(
        [
            [0.5 * (a + b.real), 0.5 * b.imag, c.real],
            [0.5 * b.imag, 0.5 * (a - b.real), c.imag],
            [c.real, c.imag, h],
        ]
    )

    factor, rank = _semidefinite_factor(cov, mu, h)
    factor.setflags(write=False)
    cov.setflags(write=False)
    return OuStepLaw(mu, g, h, cov, factor, rank)


#: fixed pivot order for the square-root factor: dW first, so the Brownian
#: component is a pure function of the first normal (independent of g) and
#: scaling the forcing rescales the convolution rows exactly
_PIVOT = (2, 0, 1)


def _semidefinite_factor(cov: np.ndarray, mu: complex, h: float):
    """Square root of a PSD 3x3 covariance via Cholesky in the fixed pivot
    order.  Residual pivots in [-1e-12, 0] (relative) are clamped to zero;
    larger negativity signals a formula bug and aborts."""
    scale = max(float(np.linalg.norm(cov)), h)
    a = cov[np.ix_(_PIVOT, _PIVOT)]
    m = a.shape[0]
    low = np.zeros((m, m))
    for j in range(m):
        res = a[j, j] - np.dot(low[j, :j], low[j, :j])
        if res < -1e-12 * scale:
            raise CovarianceError(
                f"covariance indefinite (pivot residual {res:.3e}) for mu={mu}, h={h}"
            )
        if res <= 1e-14 * scale:
            continue  # zero column: the remaining residual is fp noise
        low[j, j] = np.sqrt(res)
        for i in range(j + 1, m):
            low[i, j] = (a[i, j] - np.dot(low[i, :j], low[j, :j])) / low[j, j]
    inv = np.empty(m, dtype=np.int64)
    inv[list(_PIVOT)] = np.arange(m)
    full = low[inv]
    keep = np.abs(full).max(axis=0) > 0
    return np.ascontiguousarray(full[:, keep]), int(np.sum(keep))


@dataclass(frozen=True)
class ReferenceRun:
    """Exact mild solution sampled on the bundle's fine grid; u_0 = 0."""

    grid: ModeGrid
    times: np.ndarray
    values: np.ndarray  # shape (n_ref + 1, modes), complex

    def state(self, j: int) -> StateVector:
        return StateVector(self.grid, self.values[j])


@dataclass(frozen=True)
class SchemeRun:
    """Scheme iterates u_j = r(hA)(u_{j-1} + d_j M) on a coarse grid; u_0 = 0."""

    grid: ModeGrid
    scheme: str
    n: int
    times: np.ndarray
    values: np.ndarray  # shape (n + 1, modes), complex

    def state(self, j: int) -> StateVector:
        return StateVector(self.grid, self.values[j])


def reference_values(conv: np.ndarray, efac: np.ndarray) -> np.ndarray:
    """Run u_{i+1} = efac * u_i + conv_i and return all iterates.

    conv has shape (..., modes, steps); the result has shape
    (..., steps + 1, modes).
    """
    steps = conv.shape[-1]
    out_shape = conv.shape[:-2] + (steps + 1, conv.shape[-2])
    out = np.zeros(out_shape, dtype=np.complex128)
    u = np.zeros(conv.shape[:-1], dtype=np.complex128)
    for i in range(steps):
        u = efac * u + conv[..., i]
        out[..., i + 1, :] = u
    return out


def running_sup_norm(conv: np.ndarray, efac: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """max_j ||u_j||_w over the recursion u_{j+1} = efac u_j + conv_j,
    without storing the trajectory; broadcasts over leading axes."""
    sup = np.zeros(conv.shape[:-2])
    u = np.zeros(conv.shape[:-1], dtype=np.complex128)
    for i in range(conv.shape[-1]):
        u = efac * u + conv[..., i]
        np.maximum(sup, weighted_norm(u, weights), out=sup)
    return sup


def reference_run(bundle: "PathBundle") -> ReferenceRun:
    """Exact mild solution on the fine grid, consuming the bundle's jointly
    sampled convolution increments."""
    efac = np.exp(bundle.h_ref * bundle.multiplier.symbol)
    values = reference_values(bundle.conv, efac)
    times = np.linspace(0.0, bundle.T, bundle.n_ref + 1)
    return ReferenceRun(bundle.grid, times, values)


def reference_at(bundle: "PathBundle", n: int) -> np.ndarray:
    """Exact mild solution at the n-point coarse grid, shape (n+1, modes).

    Algebraically identical to subsampling :func:`reference_run`; computed by
    aggregating the fine convolution increments with semigroup weights, which
    avoids the fine-grid recursion.
    """
    if bundle.n_ref % n != 0:
        raise GridMismatchError(f"coarse size {n} does not divide n_ref={bundle.n_ref}")
    block = bundle.n_ref // n
    mu = bundle.multiplier.symbol
    # within a coarse step, fine increment b carries weight e^{mu h_f (B-1-b)}
    w = np.exp(np.outer(mu, bundle.h_ref * np.arange(block - 1, -1, -1)))
    conv_coarse = np.einsum(
        "kjb,kb->kj", bundle.conv.reshape(bundle.grid.size, n, block), w
    )
    efac = np.exp(bundle.h_ref * block * mu)
    return reference_values(conv_coarse, efac)


def scheme_run(bundle: "PathBundle", scheme: RationalScheme, n: int) -> SchemeRun:
    """Scheme recursion u_j = r((T/n) A)(u_{j-1} + d_j M) from the bundle."""
    from .noise import aggregate_increments

    d_m = aggregate_increments(bundle, n)
    factors = stepping_factors(scheme, bundle.multiplier, bundle.T / n)
    values = _scheme_values(d_m, factors)
    times = np.linspace(0.0, bundle.T, n + 1)
    return SchemeRun(bundle.grid, scheme.name, n, times, values)


def _scheme_values(d_m: np.ndarray, factors: np.ndarray) -> np.ndarray:
    """u_{j+1} = factors * (u_j + d_m_j); d_m has shape (..., modes, n)."""
    n = d_m.shape[-1]
    out = np.zeros(d_m.shape[:-2] + (n + 1, d_m.shape[-2]), dtype=np.complex128)
    u = np.zeros(d_m.shape[:-1], dtype=np.complex128)
    for j in range(n):
        u = factors * (u + d_m[..., j])
        out[..., j + 1, :] = u
    return out


def scheme_sup_norm(d_m: np.ndarray, factors: np.ndarray, weights: np.ndarray) -> np.ndarray:
    """max_j ||u_j||_w over the scheme recursion, batched, no storage."""
    sup = np.zeros(d_m.shape[:-2])
    u = np.zeros(d_m.shape[:-1], dtype=np.complex128)
    for j in range(d_m.shape[-1]):
        u = factors * (u + d_m[..., j])
        np.maximum(sup, weighted_norm(u, weights), out=sup)
    return sup


def error_sup(ref: ReferenceRun, run: SchemeRun, err_weight: SobolevWeight) -> float:
    """max_{j=0..n} ||u(t_j) - u_j||_{H^{lambda_err}} for one sample path."""
    n_ref = ref.values.shape[0] - 1
    if n_ref % run.n != 0:
        raise GridMismatchError(
            f"run grid (n={run.n}) does not embed in the reference grid (n_ref={n_ref})"
        )
    if ref.grid.size != run.grid.size:
        raise GridMismatchError("reference and run use different mode grids")
    stride = n_ref // run.n
    diff = ref.values[::stride] - run.values
    w = err_weight.values(ref.grid)
    return float(np.max(weighted_norm(diff, w)))
