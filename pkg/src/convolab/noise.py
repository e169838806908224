"""Seeded cylindrical Brownian paths on a dyadic fine grid.

A bundle couples, per mode and per fine step, the Brownian increment and the
exact stochastic-convolution increment by sampling their joint Gaussian law.
All schemes and the exact reference consume the same bundle (common random
numbers), so error statistics have exactly the distribution the convergence
theorems bound.

Randomness is counter-based: the Philox stream for Monte Carlo sample m is
keyed by (master seed, m), so output is independent of execution order and
worker count.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .multiplier import Multiplier
from .simulate import ou_step_cov
from .spectral import ModeGrid, SobolevWeight

_MAGIC = b"CVLB"
_FORMAT_VERSION = 1


class MeshError(ValueError):
    """A coarse grid size does not divide the fine grid size."""


class ConfigError(ValueError):
    """Invalid bundle or forcing configuration."""


def philox_generator(master_seed: int, *path: int) -> np.random.Generator:
    """Counter-based generator keyed by (master seed, *path).

    Distinct paths give statistically independent streams; the mapping is a
    pure function of its arguments.
    """
    seq = np.random.SeedSequence([int(master_seed), *[int(p) for p in path]])
    return np.random.Generator(np.random.Philox(key=seq.generate_state(2, np.uint64)))


@dataclass(frozen=True)
class ForcingSpec:
    """Deterministic mode-diagonal forcing g, constant in time by default.

    The default amplitude profile g^k = (1+|k|^2)^{-s/2} places g just inside
    H^sigma for every sigma < s - d/2 (`regularity_target` in the untruncated
    limit).  An optional piecewise-constant time profile on the fine grid
    multiplies every mode.
    """

    grid: ModeGrid
    amplitudes: np.ndarray
    decay: float | None = None
    profile: np.ndarray | None = None

    def __post_init__(self):
        amps = np.asarray(self.amplitudes, dtype=np.complex128)
        if amps.shape != (self.grid.size,):
            raise ConfigError("forcing needs one amplitude per grid frequency")
        if not np.all(np.isfinite(amps.view(np.float64))):
            raise ConfigError("forcing amplitudes must be finite")
        if not np.any(amps != 0):
            raise ConfigError("forcing must excite at least one mode")
        object.__setattr__(self, "amplitudes", amps)
        self.amplitudes.setflags(write=False)
        if self.profile is not None:
            prof = np.asarray(self.profile, dtype=np.float64)
            if prof.ndim != 1 or prof.size < 1:
                raise ConfigError("time profile must be a nonempty 1-d array")
            object.__setattr__(self, "profile", prof)
            self.profile.setflags(write=False)

    @classmethod
    def from_decay(cls, grid: ModeGrid, decay: float, profile=None) -> "ForcingSpec":
        amps = (1.0 + grid.abs_squared()) ** (-decay / 2.0)
        return cls(grid, amps.astype(np.complex128), decay, profile)

    @classmethod
    def single_mode(cls, grid: ModeGrid, frequency, amplitude=1.0) -> "ForcingSpec":
        amps = np.zeros(grid.size, dtype=np.complex128)
        freq = np.atleast_1d(np.asarray(frequency, dtype=np.int64))
        match = np.nonzero(np.all(grid.frequencies == freq[None, :], axis=1))[0]
        if match.size != 1:
            raise ConfigError(f"frequency {frequency} not on the grid")
        amps[match[0]] = amplitude
        return cls(grid, amps)

    @property
    def regularity_target(self) -> float | None:
        """Largest sigma with sum (1+|k|^2)^sigma |g^k|^2 < inf untruncated
        (exclusive bound); None for custom amplitude tables."""
        if self.decay is None:
            return None
        return self.decay - self.grid.dimension / 2.0

    def profile_on(self, n_ref: int) -> np.ndarray:
        """The per-fine-step multiplier, broadcast to length n_ref."""
        if self.profile is None:
            return np.ones(n_ref)
        if n_ref % self.profile.size != 0:
            raise MeshError(
                f"profile of length {self.profile.size} does not fit n_ref={n_ref}"
            )
        return np.repeat(self.profile, n_ref // self.profile.size)


def forcing_gamma_norm(forcing: ForcingSpec, weight: SobolevWeight, T: float, n_ref: int | None = None) -> float:
    """||g||_{L^2(0,T; gamma(H, H^lambda))}; in the Hilbert case the gamma
    norm is the Hilbert-Schmidt norm, so this is
    sqrt(int_0^T sum_k (1+|k|^2)^lambda |g_t^k|^2 dt), in closed form."""
    w = weight.values(forcing.grid)
    spatial = float(np.sum(w * np.abs(forcing.amplitudes) ** 2))
    if forcing.profile is None:
        time_mass = T
    else:
        steps = forcing.profile.size if n_ref is None else n_ref
        prof = forcing.profile_on(steps)
        time_mass = (T / steps) * float(np.sum(prof**2))
    return float(np.sqrt(spatial * time_mass))


@dataclass(frozen=True)
class PathBundle:
    """Jointly sampled fine-grid increments for one Monte Carlo sample.

    conv[k, i] is the exact stochastic-convolution increment of mode k over
    fine step i (forcing included); dw[k, i] is the raw Brownian increment
    with variance h_ref.  A bundle is a pure function of
    (seed, sample, grid, multiplier, forcing, n_ref, T).
    """

    seed: int
    sample: int
    grid: ModeGrid
    multiplier: Multiplier
    forcing: ForcingSpec
    n_ref: int
    T: float
    conv: np.ndarray
    dw: np.ndarray

    @property
    def h_ref(self) -> float:
        return self.T / self.n_ref

    def dump(self, path) -> None:
        """Binary sidecar for debugging reproducibility across builds.

        Layout: magic, version, seed, sample, n_ref, K, d, T, then per mode
        Re(conv), Im(conv), dw as little-endian float64.
        """
        with open(path, "wb") as fh:
            fh.write(_MAGIC)
            fh.write(
                struct.pack(
                    "<IqqqII d",
                    _FORMAT_VERSION,
                    self.seed,
                    self.sample,
                    self.n_ref,
                    self.grid.cutoff,
                    self.grid.dimension,
                    self.T,
                )
            )
            payload = np.empty((self.grid.size, 3, self.n_ref))
            payload[:, 0] = self.conv.real
            payload[:, 1] = self.conv.imag
            payload[:, 2] = self.dw
            fh.write(payload.astype("<f8").tobytes())


def read_bundle_payload(path):
    """Read a bundle sidecar; returns (header dict, conv, dw)."""
    with open(path, "rb") as fh:
        if fh.read(4) != _MAGIC:
            raise ConfigError(f"{path} is not a bundle sidecar")
        version, seed, sample, n_ref, cutoff, dim, T = struct.unpack("<IqqqII d", fh.read(44))
        if version != _FORMAT_VERSION:
            raise ConfigError(f"unsupported sidecar version {version}")
        size = (2 * cutoff + 1) ** dim
        payload = np.frombuffer(fh.read(), dtype="<f8").reshape(size, 3, n_ref)
    header = {
        "version": version, "seed": seed, "sample": sample,
        "n_ref": n_ref, "K": cutoff, "d": dim, "T": T,
    }
    return header, payload[:, 0] + 1j * payload[:, 1], payload[:, 2].copy()


def _step_factors(mult: Multiplier, forcing: ForcingSpec, h: float):
    """Per-mode padded sampling factors, shape (modes, 3, rmax)."""
    laws = [
        ou_step_cov(mu, g, h)
        for mu, g in zip(mult.symbol.tolist(), forcing.amplitudes.tolist())
    ]
    rmax = max(law.rank for law in laws)
    fac = np.zeros((len(laws), 3, rmax))
    for k, law in enumerate(laws):
        fac[k, :, : law.rank] = law.factor
    return fac, rmax


def draw_increments(gen: np.random.Generator, factors: np.ndarray, n_steps: int, profile=None):
    """Draw jointly sampled (convolution, Brownian) increments.

    `factors` has shape (modes, 3, rmax); the stream consumption layout
    (mode-major, then component, then step) is part of the bundle contract.
    Returns (conv, dw) of shape (modes, n_steps).
    """
    modes, _, rmax = factors.shape
    z = gen.standard_normal((modes, rmax, n_steps))
    parts = factors @ z
    conv = parts[:, 0] + 1j * parts[:, 1]
    if profile is not None:
        conv = conv * profile[None, :]
    return conv, np.ascontiguousarray(parts[:, 2])


def generate_bundle(
    seed: int,
    grid: ModeGrid,
    mult: Multiplier,
    forcing: ForcingSpec,
    n_ref: int,
    T: float,
    sample: int = 0,
    _factors=None,
) -> PathBundle:
    """Draw one bundle; deterministic in all arguments."""
    if n_ref < 1 or (n_ref & (n_ref - 1)) != 0:
        raise ConfigError(f"n_ref must be a power of two, got {n_ref}")
    if T <= 0:
        raise ConfigError(f"horizon must be positive, got {T}")
    if mult.grid.size != grid.size or forcing.grid.size != grid.size:
        raise ConfigError("grid, multiplier and forcing sizes disagree")

    fac, rmax = _step_factors(mult, forcing, T / n_ref) if _factors is None else _factors
    gen = philox_generator(seed, sample)
    prof = forcing.profile_on(n_ref) if forcing.profile is not None else None
    conv, dw = draw_increments(gen, fac, n_ref, prof)
    return PathBundle(seed, sample, grid, mult, forcing, n_ref, T, conv, dw)


def bundle_factors(grid: ModeGrid, mult: Multiplier, forcing: ForcingSpec, n_ref: int, T: float):
    """Precompute sampling factors shared by all samples of an experiment."""
    return _step_factors(mult, forcing, T / n_ref)


def aggregate_increments(bundle: PathBundle, n: int) -> np.ndarray:
    """Coarse martingale increments d_j M = sum of g dW over coarse step j.

    Returns shape (modes, n), complex.  Summing over j recovers M_T for
    every n.
    """
    if n < 1 or bundle.n_ref % n != 0:
        raise MeshError(f"coarse size {n} does not divide n_ref={bundle.n_ref}")
    prof = bundle.forcing.profile_on(bundle.n_ref)
    weighted = bundle.dw * prof[None, :]
    block = bundle.n_ref // n
    sums = weighted.reshape(bundle.grid.size, n, block).sum(axis=2)
    return bundle.forcing.amplitudes[:, None] * sums


def fold_increments(d_m: np.ndarray, n_coarse: int) -> np.ndarray:
    """Refold increments at some n onto a divisor grid n_coarse (exact
    regrouping of the same fine sums)."""
    modes, n = d_m.shape[-2], d_m.shape[-1]
    if n % n_coarse != 0:
        raise MeshError(f"{n_coarse} does not divide {n}")
    return d_m.reshape(*d_m.shape[:-2], modes, n_coarse, n // n_coarse).sum(axis=-1)
