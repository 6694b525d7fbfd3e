"""Time stepping for the stochastic heat equation on [0,1].

    du = nu u_xx dt + lambda sigma(u) dW,   Dirichlet or Neumann boundary.

Two independent schemes:

* semi-implicit finite differences: backward Euler in the diffusion
  (tridiagonal Cholesky solve per step), explicit multiplicative noise
  sigma(u^k) dW_k / dx evaluated at the previous step;
* spectral exponential Euler on the sine eigenbasis (Dirichlet only),
  with sigma evaluated in physical space through the orthonormal DST
  round trip and noise shared with the finite-difference scheme.

Paths store snapshots at configured observation times only. Large noise
intensities drive |u| past float range; for linear sigma the step map is
homogeneous in u, so paths carry an exact per-sample log scale offset
(values * exp(log_scale) is the physical field). Non-finite states abort
the path with the offending step reported; clamping would silently distort
genuine moment blow-up.
"""

import math
from dataclasses import dataclass, field, replace

import numpy as np
from scipy.linalg import cholesky_banded, cho_solve_banded

from .noise import GridSpec, NoiseStream, sample_block, sample_increments, sine_transform

DIRICHLET = "dirichlet"
NEUMANN = "neumann"

RENORM_THRESHOLD = 1e100
_RENORM_CHECK_EVERY = 32


class ConfigError(ValueError):
    """Invalid simulation configuration."""


class UnsupportedSchemeError(ConfigError):
    """Scheme/boundary combination outside the supported set."""


class PathDivergedError(RuntimeError):
    """Non-finite state encountered; carries step and sample indices."""

    def __init__(self, step_index, sample_index=None):
        super().__init__(
            f"non-finite state at step {step_index}"
            + ("" if sample_index is None else f", sample {sample_index}"))
        self.step_index = step_index
        self.sample_index = sample_index


@dataclass(frozen=True)
class SigmaSpec:
    """Multiplicative nonlinearity with certified Lipschitz constants.

    kind "linear": sigma(u) = k u, K_U = K_L = k.
    kind "linear_plus_sine": sigma(u) = c u + d sin(u) with c > d >= 0,
    K_U = c + d and K_L = c - d (|sin u| <= |u| gives both constants).
    Both satisfy sigma(0) = 0.
    """

    kind: str = "linear"
    k: float = 1.0
    c: float = 0.0
    d: float = 0.0

    def __post_init__(self):
        if self.kind == "linear":
            if self.k <= 0:
                raise ConfigError("linear sigma needs k > 0")
        elif self.kind == "linear_plus_sine":
            if not (self.c > self.d >= 0):
                raise ConfigError("linear_plus_sine needs c > d >= 0")
        else:
            raise ConfigError(f"unknown sigma kind {self.kind!r}")

    @classmethod
    def linear(cls, k=1.0):
        return cls(kind="linear", k=k)

    @classmethod
    def linear_plus_sine(cls, c, d):
        return cls(kind="linear_plus_sine", c=c, d=d)

    @property
    def lipschitz_upper(self):
        """K_U with |sigma(u) - sigma(v)| <= K_U |u - v|."""
        return self.k if self.kind == "linear" else self.c + self.d

    @property
    def lower_constant(self):
        """K_L with |sigma(u)| >= K_L |u|."""
        return self.k if self.kind == "linear" else self.c - self.d

    @property
    def is_homogeneous(self):
        """True when sigma commutes with scaling (exact path renormalization)."""
        return self.kind == "linear"

    def __call__(self, u):
        if self.kind == "linear":
            return self.k * u
        return self.c * u + self.d * np.sin(u)


@dataclass(frozen=True)
class InitialData:
    """Initial profile: a sine eigenmode, an interior bump, or a node table."""

    kind: str
    mode: int = 1
    gamma: float = 0.2
    values: tuple = ()

    @classmethod
    def sine(cls, mode=1):
        if mode < 1:
            raise ConfigError("sine mode must be >= 1")
        return cls(kind="sine", mode=mode)

    @classmethod
    def bump(cls, gamma=0.2):
        if not (0 < gamma < 0.5):
            raise ConfigError("bump gamma must lie in (0, 1/2)")
        return cls(kind="bump", gamma=gamma)

    @classmethod
    def table(cls, values):
        return cls(kind="table", values=tuple(float(v) for v in values))

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        if self.kind == "sine":
            return np.sin(self.mode * math.pi * x)
        if self.kind == "bump":
            # standard mollifier rescaled to [gamma, 1-gamma], peak 1 at 1/2
            s = (2.0 * x - 1.0) / (1.0 - 2.0 * self.gamma)
            out = np.zeros_like(s)
            inside = np.abs(s) < 1.0
            out[inside] = np.exp(1.0 - 1.0 / (1.0 - s[inside] ** 2))
            return out
        raise ConfigError("table initial data has no closed form; use project_initial")


def project_initial(u0: InitialData, grid: GridSpec):
    """Nodal evaluation of the initial profile on the interior grid."""
    if u0.kind == "table":
        vals = np.asarray(u0.values, dtype=float)
        if vals.shape != (grid.n_interior,):
            raise ConfigError(
                f"table length {vals.size} != n_interior {grid.n_interior}")
        return vals.copy()
    return u0(grid.x)


@dataclass(frozen=True)
class SimulationConfig:
    """Everything determining one path law (and, with a sample index, one path)."""

    grid: GridSpec
    lam: float
    sigma: SigmaSpec = field(default_factory=SigmaSpec.linear)
    u0: InitialData = field(default_factory=InitialData.bump)
    nu: float = 0.5
    boundary: str = DIRICHLET
    scheme: str = "semi_implicit"
    master_seed: int = 0
    observation_times: tuple = ()

    def __post_init__(self):
        if self.boundary not in (DIRICHLET, NEUMANN):
            raise ConfigError(f"unknown boundary {self.boundary!r}")
        if self.scheme not in ("semi_implicit", "spectral"):
            raise ConfigError(f"unknown scheme {self.scheme!r}")
        if self.scheme == "spectral" and self.boundary == NEUMANN:
            raise UnsupportedSchemeError("spectral scheme is Dirichlet only")
        if self.nu <= 0:
            raise ConfigError("nu must be positive")
        if self.lam < 0:
            raise ConfigError("lambda must be nonnegative")
        if self.grid.dt > self.grid.dx * (1 + 1e-12):
            raise ConfigError(
                "dt <= dx required: per-node noise variance dt/dx must stay <= 1")

    def observation_steps(self):
        """Observation times snapped to the step grid (deduplicated, sorted)."""
        dt = self.grid.dt
        steps = sorted({int(round(t / dt)) for t in self.observation_times})
        for k in steps:
            if not (0 <= k <= self.grid.n_steps):
                raise ConfigError(f"observation time {k * dt:g} outside horizon")
        return steps


@dataclass
class SolutionPath:
    """Snapshots of one realized trajectory at the observation times.

    Physical field at row i is values[i] * exp(log_scale[i]); log_scale is
    nonzero only when renormalization fired (linear sigma, large lambda).
    """

    config: SimulationConfig
    sample_index: int
    times: np.ndarray
    values: np.ndarray
    log_scale: np.ndarray

    def field_at(self, t):
        i = self._index(t)
        return self.values[i] * math.exp(self.log_scale[i])

    def log_abs_at(self, t):
        """log |u| per node, safe at any scale; -inf where u = 0."""
        i = self._index(t)
        with np.errstate(divide="ignore"):
            return np.log(np.abs(self.values[i])) + self.log_scale[i]

    def _index(self, t):
        hits = np.nonzero(np.isclose(self.times, t, rtol=0, atol=self.config.grid.dt / 2))[0]
        if hits.size == 0:
            raise ConfigError(f"time {t:g} not among observation times")
        return int(hits[0])


def _dirichlet_second_difference(n, dx):
    main = np.full(n, -2.0) / dx ** 2
    off = np.full(n - 1, 1.0) / dx ** 2
    return main, off


def _neumann_second_difference(n, dx):
    main = np.full(n, -2.0) / dx ** 2
    main[0] = main[-1] = -1.0 / dx ** 2  # mirror ghost closure
    off = np.full(n - 1, 1.0) / dx ** 2
    return main, off


def _implicit_factor(cfg: SimulationConfig):
    """Banded Cholesky factor of I - nu dt L for the chosen boundary closure."""
    n, dx, dt = cfg.grid.n_interior, cfg.grid.dx, cfg.grid.dt
    if cfg.boundary == DIRICHLET:
        main, off = _dirichlet_second_difference(n, dx)
    else:
        main, off = _neumann_second_difference(n, dx)
    ab = np.zeros((2, n))
    ab[1] = 1.0 - cfg.nu * dt * main
    ab[0, 1:] = -cfg.nu * dt * off
    return cholesky_banded(ab)


def _mode_decay(cfg: SimulationConfig, n_modes):
    n = np.arange(1, n_modes + 1)
    return np.exp(-cfg.nu * (n * math.pi) ** 2 * cfg.grid.dt)


def step_semi_implicit(state, stream: NoiseStream, step_index, cfg: SimulationConfig,
                       factor=None):
    """One semi-implicit step: solve (I - nu dt L) u' = u + lam sigma(u) dW/dx.

    Random access into the stream costs O(step_index); ensemble drivers use
    the contiguous block path instead and produce identical values.
    """
    state = np.asarray(state, dtype=float)
    if not np.all(np.isfinite(state)):
        raise PathDivergedError(step_index, stream.sample_index)
    if factor is None:
        factor = _implicit_factor(cfg)
    rhs = state.copy()
    if cfg.lam != 0.0:
        dw = sample_increments(stream, step_index)
        rhs += cfg.lam * cfg.sigma(state) * dw / cfg.grid.dx
    out = cho_solve_banded((factor, False), rhs, check_finite=False)
    if not np.all(np.isfinite(out)):
        raise PathDivergedError(step_index, stream.sample_index)
    return out


def step_spectral(coeffs, stream: NoiseStream, step_index, cfg: SimulationConfig):
    """One exponential Euler step on sine-mode coefficients (Dirichlet).

    a' = exp(-nu n^2 pi^2 dt) (a + lam <sigma(u), e_n> dW-projection), with
    sigma evaluated in physical space via the DST round trip.
    """
    if cfg.boundary != DIRICHLET:
        raise UnsupportedSchemeError("spectral scheme is Dirichlet only")
    coeffs = np.asarray(coeffs, dtype=float)
    n_modes = coeffs.shape[0]
    if n_modes > cfg.grid.n_interior:
        raise ConfigError("n_modes cannot exceed n_interior")
    if not np.all(np.isfinite(coeffs)):
        raise PathDivergedError(step_index, stream.sample_index)
    decay = _mode_decay(cfg, n_modes)
    sq = math.sqrt(cfg.grid.dx)
    if cfg.lam == 0.0:
        return decay * coeffs
    full = np.zeros(cfg.grid.n_interior)
    full[:n_modes] = coeffs
    u_phys = sine_transform(full) / sq
    dw = sample_increments(stream, step_index)
    modal = sine_transform(cfg.sigma(u_phys) * dw)[:n_modes] / sq
    out = decay * (coeffs + cfg.lam * modal)
    if not np.all(np.isfinite(out)):
        raise PathDivergedError(step_index, stream.sample_index)
    return out


def _to_modes(u_phys, dx):
    return sine_transform(u_phys, axis=0) * math.sqrt(dx)


def _to_physical(coeffs, dx):
    return sine_transform(coeffs, axis=0) / math.sqrt(dx)


def simulate_paths(cfg: SimulationConfig, sample_indices, chunk_steps=256):
    """Simulate a batch of paths; returns one SolutionPath per sample index.

    Pure function of (cfg, sample_index): results are bit-identical however
    samples are grouped into batches or distributed over workers. Diverging
    samples raise PathDivergedError; with linear sigma the state is instead
    rescaled in place (exact homogeneity) and the log offset accumulated.
    """
    samples = list(sample_indices)
    if not samples:
        return []
    grid = cfg.grid
    n, k = grid.n_interior, len(samples)
    obs_steps = cfg.observation_steps()
    obs_set = set(obs_steps)
    if not obs_steps:
        raise ConfigError("no observation times configured")

    u0 = project_initial(cfg.u0, grid)
    spectral = cfg.scheme == "spectral"
    if spectral:
        state = np.repeat(_to_modes(u0, grid.dx)[:, None], k, axis=1)
        decay = _mode_decay(cfg, n)[:, None]
    else:
        state = np.repeat(u0[:, None], k, axis=1)
        factor = _implicit_factor(cfg)

    log_offset = np.zeros(k)
    streams = [NoiseStream(cfg.master_seed, s, grid) for s in samples]
    gens = [st._generator() for st in streams]
    can_renorm = cfg.sigma.is_homogeneous

    snap_vals = {}
    snap_offsets = {}

    def record(step):
        phys = _to_physical(state, grid.dx) if spectral else state
        snap_vals[step] = phys.T.copy()
        snap_offsets[step] = log_offset.copy()

    if 0 in obs_set:
        record(0)

    last_step = max(obs_steps)
    scale = cfg.lam / grid.dx
    step = 0
    while step < last_step:
        block_len = min(chunk_steps, last_step - step)
        if cfg.lam != 0.0:
            noise = np.empty((block_len, n, k))
            for i, st in enumerate(streams):
                blk, gens[i] = sample_block(st, block_len, generator=gens[i])
                noise[:, :, i] = blk
        for local in range(block_len):
            # overflow to inf is legitimate here: the periodic check below
            # converts it into a PathDivergedError with the step reported
            with np.errstate(over="ignore", invalid="ignore"):
                if spectral:
                    if cfg.lam != 0.0:
                        u_phys = _to_physical(state, grid.dx)
                        modal = sine_transform(cfg.sigma(u_phys) * noise[local],
                                               axis=0) / math.sqrt(grid.dx)
                        state = decay * (state + cfg.lam * modal)
                    else:
                        state = decay * state
                else:
                    if cfg.lam != 0.0:
                        rhs = state + cfg.sigma(state) * (noise[local] * scale)
                    else:
                        rhs = state
                    state = cho_solve_banded((factor, False), rhs,
                                             check_finite=False)
            step += 1
            if step % _RENORM_CHECK_EVERY == 0 or step in obs_set:
                peak = np.max(np.abs(state), axis=0)
                bad = ~np.isfinite(peak)
                if np.any(bad):
                    raise PathDivergedError(step, samples[int(np.argmax(bad))])
                if can_renorm:
                    hot = peak > RENORM_THRESHOLD
                    if np.any(hot):
                        state[:, hot] /= peak[hot]
                        log_offset[hot] += np.log(peak[hot])
            if step in obs_set:
                record(step)

    dt = grid.dt
    paths = []
    for i, s in enumerate(samples):
        times = np.array([st * dt for st in obs_steps])
        vals = np.stack([snap_vals[st][i] for st in obs_steps])
        offs = np.array([snap_offsets[st][i] for st in obs_steps])
        paths.append(SolutionPath(config=cfg, sample_index=s, times=times,
                                  values=vals, log_scale=offs))
    return paths


def simulate_path(cfg: SimulationConfig, sample_index) -> SolutionPath:
    """Single realized trajectory; see simulate_paths."""
    return simulate_paths(cfg, [sample_index])[0]
