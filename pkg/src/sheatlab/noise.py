"""Reproducible discrete space-time white noise on a uniform lattice.

Cell increments dW_{k,j} are independent Normal(0, dt*dx), one per time step
k and interior cell j. Generation is counter-based (numpy Philox): the key
carries the master seed, counter word 3 carries the sample index, and within
a sample the stream is consumed in a fixed (step, cell) order. Every value is
therefore a pure function of (master_seed, sample_index, step_index, cell),
bit-identical across runs, worker counts, and batch layouts; distinct samples
occupy disjoint counter blocks and are independent.

Spectral mode increments are the orthonormal sine transform of the same cell
increments, so finite-difference and spectral solvers can share one noise
realization.
"""

import math
from dataclasses import dataclass

import numpy as np
import scipy.fft

_KEY_SALT = 0x9E3779B97F4A7C15  # fixed second key word


class NoiseDomainError(ValueError):
    """Step index or parameter outside the stream's domain."""


@dataclass(frozen=True)
class GridSpec:
    """Uniform space-time lattice for paths on [0,1] x [0,horizon].

    n_interior interior nodes x_j = j*dx with dx = 1/(n_interior+1);
    n_steps = ceil(horizon/dt) time steps of size dt.
    """

    n_interior: int
    dt: float
    horizon: float

    def __post_init__(self):
        if self.n_interior < 1:
            raise NoiseDomainError("n_interior must be >= 1")
        if not (self.dt > 0) or not (self.horizon > 0):
            raise NoiseDomainError("dt and horizon must be positive")

    @property
    def dx(self):
        return 1.0 / (self.n_interior + 1)

    @property
    def n_steps(self):
        return math.ceil(self.horizon / self.dt - 1e-12)

    @property
    def x(self):
        """Interior node positions."""
        return np.arange(1, self.n_interior + 1) * self.dx

    def times(self):
        return np.arange(self.n_steps + 1) * self.dt

    def cfl_ratio(self, nu):
        """Diffusion number nu*dt/dx^2, recorded in run manifests."""
        return nu * self.dt / self.dx ** 2


@dataclass(frozen=True)
class NoiseStream:
    """One ensemble member's noise source on a grid."""

    master_seed: int
    sample_index: int
    grid: GridSpec

    def __post_init__(self):
        if not (0 <= self.sample_index < 2 ** 63):
            raise NoiseDomainError("sample_index out of range")

    def _generator(self):
        key = np.array([self.master_seed & 0xFFFFFFFFFFFFFFFF, _KEY_SALT],
                       dtype=np.uint64)
        counter = np.array([0, 0, 0, self.sample_index], dtype=np.uint64)
        return np.random.Generator(np.random.Philox(key=key, counter=counter))


def sample_block(stream: NoiseStream, n_steps: int, generator=None):
    """Cell increments for n_steps consecutive steps, shape (n_steps, n_interior).

    Consumes the stream contiguously; pass the returned generator back in to
    continue from where the block ended (the solver's chunked time loop).
    """
    g = generator if generator is not None else stream._generator()
    n = stream.grid.n_interior
    z = g.standard_normal(n_steps * n).reshape(n_steps, n)
    z *= math.sqrt(stream.grid.dt * stream.grid.dx)
    return z, g


def sample_increments(stream: NoiseStream, step_index: int):
    """Increment vector dW for one time step, Normal(0, dt*dx) per cell.

    Deterministic in (master_seed, sample_index, step_index, cell): the
    stream prefix is regenerated, so random access costs O(step_index).
    """
    if not (0 <= step_index < stream.grid.n_steps):
        raise NoiseDomainError(
            f"step_index {step_index} outside [0, {stream.grid.n_steps})")
    block, _ = sample_block(stream, step_index + 1)
    return block[step_index]


def sine_transform(values, axis=-1):
    """Orthonormal DST-I; its own inverse. Basis rows are sin(m pi x_j)."""
    return scipy.fft.dst(values, type=1, norm="ortho", axis=axis)


def spectral_increments(stream: NoiseStream, step_index: int, n_modes: int):
    """Mode increments <dW, sqrt(2) sin(n pi .)>, independent Normal(0, dt).

    Derived from sample_increments through the orthonormal sine transform so
    both solvers can share a stream; n_modes <= n_interior.
    """
    if n_modes < 1:
        raise NoiseDomainError("n_modes must be >= 1")
    if n_modes > stream.grid.n_interior:
        raise NoiseDomainError("n_modes cannot exceed n_interior")
    dw = sample_increments(stream, step_index)
    modes = sine_transform(dw) / math.sqrt(stream.grid.dx)
    return modes[:n_modes]
