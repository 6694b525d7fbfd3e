"""Noise module tests: reproducibility, distributional bands, transform ties."""

import math

import numpy as np
import pytest

from sheatlab import noise as N


GRID = N.GridSpec(n_interior=32, dt=1e-3, horizon=0.1)


def stream(sample=0, seed=123):
    return N.NoiseStream(master_seed=seed, sample_index=sample, grid=GRID)


class TestGridSpec:
    def test_dx(self):
        assert GRID.dx == pytest.approx(1.0 / 33.0)

    def test_n_steps_covers_horizon(self):
        assert GRID.n_steps * GRID.dt >= GRID.horizon - GRID.dt / 2

    def test_ragged_horizon(self):
        g = N.GridSpec(n_interior=4, dt=0.3, horizon=1.0)
        assert g.n_steps == 4

    def test_validation(self):
        with pytest.raises(N.NoiseDomainError):
            N.GridSpec(n_interior=0, dt=0.1, horizon=1.0)
        with pytest.raises(N.NoiseDomainError):
            N.GridSpec(n_interior=4, dt=-0.1, horizon=1.0)


class TestReproducibility:
    def test_same_inputs_identical(self):
        a = N.sample_increments(stream(), 5)
        b = N.sample_increments(stream(), 5)
        assert np.array_equal(a, b)

    def test_block_matches_single_step(self):
        block, _ = N.sample_block(stream(), GRID.n_steps)
        for k in (0, 3, GRID.n_steps - 1):
            assert np.array_equal(block[k], N.sample_increments(stream(), k))

    def test_chunked_block_matches_full(self):
        full, _ = N.sample_block(stream(), 50)
        s = stream()
        first, g = N.sample_block(s, 20)
        second, _ = N.sample_block(s, 30, generator=g)
        assert np.array_equal(full, np.vstack([first, second]))

    def test_distinct_samples_differ(self):
        a = N.sample_increments(stream(sample=0), 0)
        b = N.sample_increments(stream(sample=1), 0)
        assert not np.array_equal(a, b)

    def test_distinct_seeds_differ(self):
        a = N.sample_increments(stream(seed=1), 0)
        b = N.sample_increments(stream(seed=2), 0)
        assert not np.array_equal(a, b)

    def test_step_out_of_range(self):
        with pytest.raises(N.NoiseDomainError):
            N.sample_increments(stream(), GRID.n_steps)
        with pytest.raises(N.NoiseDomainError):
            N.sample_increments(stream(), -1)


class TestDistribution:
    def test_mean_and_variance_bands(self):
        # ensemble of 1e5 draws at a fixed (step, cell)
        n = 100_000
        g = N.GridSpec(n_interior=4, dt=1e-3, horizon=1e-3)
        vals = np.array([
            N.sample_block(N.NoiseStream(7, s, g), 1)[0][0, 2] for s in range(n)
        ])
        var = g.dt * g.dx
        assert abs(vals.mean()) < 4 * math.sqrt(var / n)
        assert abs(vals.var() / var - 1.0) < 0.05

    def test_cross_sample_correlation(self):
        n = 100_000
        g = N.GridSpec(n_interior=1, dt=1e-3, horizon=1e-3)
        a = np.array([N.sample_block(N.NoiseStream(7, s, g), 1)[0][0, 0]
                      for s in range(n)])
        b = np.array([N.sample_block(N.NoiseStream(7, s, g), 1)[0][0, 0]
                      for s in range(n, 2 * n)])
        rho = np.corrcoef(a, b)[0, 1]
        assert abs(rho) < 4 / math.sqrt(n)

    def test_cross_cell_and_cross_step_correlation(self):
        block, _ = N.sample_block(stream(), GRID.n_steps)
        n = block.shape[0]
        r_cell = np.corrcoef(block[:, 0], block[:, 1])[0, 1]
        r_step = np.corrcoef(block[:-1, 0], block[1:, 0])[0, 1]
        assert abs(r_cell) < 4 / math.sqrt(n)
        assert abs(r_step) < 4 / math.sqrt(n)

    def test_quadratic_variation(self):
        g = N.GridSpec(n_interior=256, dt=1e-3, horizon=1.0)
        s = N.NoiseStream(99, 0, g)
        block, _ = N.sample_block(s, 1000)
        qv = np.sum(block ** 2, axis=1)
        expected = g.n_interior * g.dt * g.dx
        assert abs(qv.mean() / expected - 1.0) < 0.05


class TestSpectral:
    def test_transform_consistency(self):
        dw = N.sample_increments(stream(), 4)
        modes = N.spectral_increments(stream(), 4, GRID.n_interior)
        direct = N.sine_transform(dw) / math.sqrt(GRID.dx)
        assert np.max(np.abs(modes - direct)) < 1e-12

    def test_transform_is_projection_on_sines(self):
        # mode m equals sqrt(2) * sum_j sin(m pi x_j) dW_j
        dw = N.sample_increments(stream(), 0)
        xj = GRID.x
        for m in (1, 3, 7):
            manual = math.sqrt(2.0) * np.sum(np.sin(m * math.pi * xj) * dw)
            got = N.spectral_increments(stream(), 0, m)[m - 1]
            assert got == pytest.approx(manual, rel=1e-12, abs=1e-15)

    def test_mode_variance(self):
        n = 100_000
        g = N.GridSpec(n_interior=8, dt=1e-3, horizon=1e-3)
        vals = np.array([
            N.spectral_increments(N.NoiseStream(5, s, g), 0, 3)[2] for s in range(n)
        ])
        assert abs(vals.var() / g.dt - 1.0) < 0.05

    def test_modes_uncorrelated(self):
        n = 100_000
        g = N.GridSpec(n_interior=8, dt=1e-3, horizon=1e-3)
        pairs = np.array([
            N.spectral_increments(N.NoiseStream(5, s, g), 0, 4)[[0, 3]]
            for s in range(n)
        ])
        rho = np.corrcoef(pairs[:, 0], pairs[:, 1])[0, 1]
        assert abs(rho) < 4 / math.sqrt(n)

    def test_mode_count_validation(self):
        with pytest.raises(N.NoiseDomainError):
            N.spectral_increments(stream(), 0, 0)
        with pytest.raises(N.NoiseDomainError):
            N.spectral_increments(stream(), 0, GRID.n_interior + 1)
