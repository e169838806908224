"""Diagonal generators, their semigroups, and rational time-stepping schemes.

Every generator here is a Fourier multiplier, so a semigroup step and a
rational-scheme step are both coefficientwise multiplications.  On diagonal
symbols every A-stable scheme is automatically contractive, even
Crank-Nicolson on the non-Hilbert sequence spaces; the non-contractivity
phenomena known for shift generators on L^p(R), p != 2, cannot occur in this
model class (documented limitation).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .spectral import ModeGrid, SobolevWeight, StateVector

MODEL_NAMES = ("heat", "transport", "schroedinger", "custom")
SCHEME_NAMES = ("splitting", "implicit_euler", "crank_nicolson")

#: aliases accepted in config files
SCHEME_ALIASES = {
    "splitting": "splitting",
    "ie": "implicit_euler",
    "implicit_euler": "implicit_euler",
    "cn": "crank_nicolson",
    "crank_nicolson": "crank_nicolson",
}


class SingularStepError(ArithmeticError):
    """A rational scheme was evaluated at (or too close to) one of its poles."""


@dataclass(frozen=True)
class Multiplier:
    """Generator A as a diagonal symbol k -> mu_k over a mode grid."""

    model: str
    grid: ModeGrid
    symbol: np.ndarray
    operator_order: int

    def __post_init__(self):
        if self.model not in MODEL_NAMES:
            raise ValueError(f"unknown model {self.model!r}")
        sym = np.asarray(self.symbol, dtype=np.complex128)
        if sym.shape != (self.grid.size,):
            raise ValueError("symbol must have one entry per grid frequency")
        object.__setattr__(self, "symbol", sym)
        self.symbol.setflags(write=False)
        if self.operator_order < 1:
            raise ValueError("operator_order must be a positive integer")

    @classmethod
    def heat(cls, grid: ModeGrid) -> "Multiplier":
        return cls("heat", grid, -grid.abs_squared().astype(np.complex128), 2)

    @classmethod
    def transport(cls, grid: ModeGrid) -> "Multiplier":
        if grid.dimension != 1:
            raise ValueError("transport model is one-dimensional only")
        return cls("transport", grid, 1j * grid.frequencies[:, 0].astype(np.float64), 1)

    @classmethod
    def schroedinger(cls, grid: ModeGrid) -> "Multiplier":
        return cls("schroedinger", grid, -1j * grid.abs_squared(), 2)

    @classmethod
    def zero(cls, grid: ModeGrid) -> "Multiplier":
        """A = 0; every catalogued scheme is exact on it."""
        return cls("custom", grid, np.zeros(grid.size, dtype=np.complex128), 1)

    @classmethod
    def custom(cls, grid: ModeGrid, symbol, operator_order: int = 1) -> "Multiplier":
        return cls("custom", grid, np.asarray(symbol, dtype=np.complex128), operator_order)

    @classmethod
    def from_name(cls, model: str, grid: ModeGrid) -> "Multiplier":
        if model == "heat":
            return cls.heat(grid)
        if model == "transport":
            return cls.transport(grid)
        if model == "schroedinger":
            return cls.schroedinger(grid)
        raise ValueError(f"unknown model {model!r}")

    @property
    def is_contractive(self) -> bool:
        """True iff Re mu_k <= 0 for all modes (semigroup of contractions)."""
        return bool(np.all(self.symbol.real <= 1e-15))


@dataclass(frozen=True)
class RationalScheme:
    """Time stepper R(h) = r(hA) with the classical order of r.

    `classical_order` is the integer l with |r(z) - e^z| = O(z^{l+1}).
    The splitting scheme uses r = exp and is exact on diagonal symbols;
    its `classical_order` is reported as infinite.
    """

    name: str
    eval: Callable[[np.ndarray], np.ndarray] = field(compare=False)
    classical_order: float

    def __call__(self, z: np.ndarray) -> np.ndarray:
        return self.eval(np.asarray(z, dtype=np.complex128))

    @classmethod
    def splitting(cls) -> "RationalScheme":
        return cls("splitting", np.exp, math.inf)

    @classmethod
    def implicit_euler(cls) -> "RationalScheme":
        def r(z):
            den = 1.0 - z
            if np.any(np.abs(den) < 1e-8):
                raise SingularStepError("implicit Euler pole 1 - z ~ 0")
            return 1.0 / den

        return cls("implicit_euler", r, 1)

    @classmethod
    def crank_nicolson(cls) -> "RationalScheme":
        def r(z):
            den = 2.0 - z
            if np.any(np.abs(den) < 1e-8):
                raise SingularStepError("Crank-Nicolson pole 2 - z ~ 0")
            return (2.0 + z) / den

        return cls("crank_nicolson", r, 2)

    @classmethod
    def custom_rational(cls, numerator, denominator, classical_order: int) -> "RationalScheme":
        """Scheme from polynomial coefficient lists (ascending powers of z)."""
        num = np.asarray(numerator, dtype=np.complex128)
        den = np.asarray(denominator, dtype=np.complex128)

        def r(z):
            p = sum(c * z**i for i, c in enumerate(num))
            q = sum(c * z**i for i, c in enumerate(den))
            if np.any(np.abs(q) < 1e-8):
                raise SingularStepError("custom scheme pole within 1e-8 of an argument")
            return p / q

        return cls("custom", r, classical_order)

    @classmethod
    def from_name(cls, name: str) -> "RationalScheme":
        canonical = SCHEME_ALIASES.get(name)
        if canonical == "splitting":
            return cls.splitting()
        if canonical == "implicit_euler":
            return cls.implicit_euler()
        if canonical == "crank_nicolson":
            return cls.crank_nicolson()
        raise ValueError(f"unknown scheme {name!r}")


def eta_order(ell: int, k: float) -> float | None:
    """Approximation order on k full operator powers for a classical-order-l
    scheme: k - 1/2 below the threshold k = (l+1)/2, k*l/(l+1) above it.

    Returns None at the excluded threshold itself, where no order is
    catalogued.
    """
    thr = (ell + 1) / 2.0
    if k == thr:
        return None
    if k < thr:
        return k - 0.5
    if k <= ell + 1:
        return k * ell / (ell + 1.0)
    raise ValueError(f"smoothness index k={k} outside (0, {ell + 1}]")


@dataclass(frozen=True)
class OrderCatalogEntry:
    """Predicted order of |r(tA/n)^n - e^{tA}| on a fractional domain."""

    scheme: str
    model: str
    smoothness: float  # full operator powers carried by the source space
    predicted_order: float | None


def predicted_probe_order(scheme: RationalScheme, mult: Multiplier, weight_gap: float) -> OrderCatalogEntry:
    """Catalog lookup for the deterministic order probe.

    `weight_gap` is the Sobolev-exponent gap lambda_Y - lambda_X; dividing by
    the operator order converts it to full powers of A.  Analytic (heat)
    generators use the analytic catalog, order nu on nu powers for
    nu in (0, l]; everything else uses the classical-order table.
    """
    k = weight_gap / mult.operator_order
    if scheme.name == "splitting":
        return OrderCatalogEntry(scheme.name, mult.model, k, math.inf)
    ell = int(scheme.classical_order)
    if mult.model == "heat":
        # analytic case: Crank-Nicolson gains order 2nu on 2nu powers
        if scheme.name == "crank_nicolson":
            order = k if k <= 2 else None
        else:
            order = k if k <= ell else None
        return OrderCatalogEntry(scheme.name, mult.model, k, order)
    order = eta_order(ell, k) if 0 < k <= ell + 1 else None
    return OrderCatalogEntry(scheme.name, mult.model, k, order)


def semigroup_apply(mult: Multiplier, t: float, state: StateVector) -> StateVector:
    """Apply S(t) = e^{tA} coefficientwise; requires t >= 0."""
    if t < 0:
        raise ValueError(f"semigroup time must be nonnegative, got {t}")
    return StateVector(state.grid, np.exp(t * mult.symbol) * state.coefficients)


def scheme_step(scheme: RationalScheme, mult: Multiplier, h: float, state: StateVector) -> StateVector:
    """One step of R(h) = r(hA), coefficientwise."""
    if h <= 0:
        raise ValueError(f"step size must be positive, got {h}")
    return StateVector(state.grid, scheme(h * mult.symbol) * state.coefficients)


def stepping_factors(scheme: RationalScheme, mult: Multiplier, h: float) -> np.ndarray:
    """The per-mode factors r(h mu_k) used by a scheme run."""
    if h <= 0:
        raise ValueError(f"step size must be positive, got {h}")
    return scheme(h * mult.symbol)


def contractivity_check(scheme: RationalScheme, mult: Multiplier, h: float, tol: float = 1e-12):
    """Check max_k |r(h mu_k)| <= 1 + tol on the grid; returns (ok, max)."""
    factors = stepping_factors(scheme, mult, h)
    worst = float(np.max(np.abs(factors)))
    return worst <= 1.0 + tol, worst


def _stable_power(factors: np.ndarray, n: int) -> np.ndarray:
    """factors**n via exp(n log r); avoids order-of-accumulation drift for
    n up to 2^14 and underflows cleanly when |r| < 1."""
    out = np.zeros_like(factors)
    nz = factors != 0
    with np.errstate(divide="ignore", over="ignore", under="ignore"):
        out[nz] = np.exp(n * np.log(factors[nz]))
    return out


@dataclass(frozen=True)
class OrderProbeResult:
    n_values: np.ndarray
    sup_errors: np.ndarray
    slope: float | None  # None marks an exact scheme (all errors ~ 0)
    intercept: float | None
    prediction: OrderCatalogEntry
    error_constant: float  # max_n sup_error * n^measured_order, 0 if exact

    @property
    def exact(self) -> bool:
        return self.slope is None


def order_probe(
    scheme: RationalScheme,
    mult: Multiplier,
    source_weight: SobolevWeight,
    target_weight: SobolevWeight,
    t: float,
    n_values,
) -> OrderProbeResult:
    """Deterministic decay probe for |r(tA/n)^n - e^{tA}| from H^{lam_Y} to
    H^{lam_X}, realized as a weighted sup over the symbol.

    The probe evaluates, per n, sup_k |r(t mu_k / n)^n - e^{t mu_k}| *
    (1+|k|^2)^{(lam_X - lam_Y)/2} and fits the log-log slope.
    """
    if source_weight.lam < target_weight.lam:
        raise ValueError("source smoothness must dominate the target")
    n_values = np.asarray(sorted(int(n) for n in n_values), dtype=np.int64)
    if n_values.size < 3:
        raise ValueError("order probe needs at least 3 values of n for a fit")
    if t <= 0:
        raise ValueError("probe horizon t must be positive")

    gap = source_weight.lam - target_weight.lam
    damp = (1.0 + mult.grid.abs_squared()) ** (-gap / 2.0)
    exact = np.exp(t * mult.symbol)
    sup_errors = np.empty(n_values.size)
    for i, n in enumerate(n_values):
        approx = _stable_power(scheme(t * mult.symbol / n), int(n))
        sup_errors[i] = np.max(np.abs(approx - exact) * damp)

    prediction = predicted_probe_order(scheme, mult, gap)
    floor = 1e-13 * max(1.0, float(np.max(np.abs(exact) * damp)))
    if np.all(sup_errors <= floor):
        return OrderProbeResult(n_values, sup_errors, None, None, prediction, 0.0)

    logn = np.log(n_values.astype(np.float64))
    loge = np.log(np.maximum(sup_errors, 1e-300))
    slope, intercept = np.polyfit(logn, loge, 1)
    const = float(np.max(sup_errors * n_values.astype(np.float64) ** (-slope)))
    return OrderProbeResult(n_values, sup_errors, float(slope), float(intercept), prediction, const)
