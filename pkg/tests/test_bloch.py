import numpy as np
import pytest

from blochscatter.bloch import (
    AlphaGrid, BlochField, PhysicalField, bloch_forward, bloch_inverse,
    make_alpha_grid,
)
from blochscatter.spectral import singular_set

L = 2 * np.pi
LSTAR = 1.0
S_K1 = singular_set(1.0, LSTAR, (-0.5, 0.5))


def uniform_grid(M):
    return make_alpha_grid(M, S_K1, mode="uniform")


def random_field(cells, n_nodes, seed):
    rng = np.random.default_rng(seed)
    vals = rng.normal(size=(len(cells), n_nodes)) + 1j * rng.normal(size=(len(cells), n_nodes))
    return PhysicalField(cells=np.asarray(cells), values=vals, period=L)


class TestForward:
    def test_single_cell_constant_in_alpha(self):
        u = random_field([0], 20, seed=1)
        w = bloch_forward(u, uniform_grid(16))
        expect = np.sqrt(L / (2 * np.pi)) * u.values[0]
        for m in range(16):
            assert np.max(np.abs(w.values[m] - expect)) < 1e-14

    def test_single_shifted_cell_phase(self):
        u = random_field([1], 20, seed=2)
        grid = uniform_grid(16)
        w = bloch_forward(u, grid)
        for m, a in enumerate(grid.nodes):
            expect = np.sqrt(L / (2 * np.pi)) * u.values[0] * np.exp(-1j * a * L)
            assert np.max(np.abs(w.values[m] - expect)) < 1e-13

    def test_against_loop_nest_oracle(self):
        # independent direct summation, 7 cells
        cells = np.arange(-3, 4)
        u = random_field(cells, 15, seed=3)
        grid = uniform_grid(32)
        w = bloch_forward(u, grid)
        for m, a in enumerate(grid.nodes):
            acc = np.zeros(15, complex)
            for c, j in enumerate(cells):
                acc = acc + u.values[c] * np.exp(-1j * a * L * j)
            acc *= np.sqrt(L / (2 * np.pi))
            assert np.max(np.abs(w.values[m] - acc)) < 1e-13

    def test_lambda_star_periodicity_in_alpha(self):
        u = random_field(np.arange(-3, 4), 10, seed=4)
        g1 = uniform_grid(16)
        g2 = AlphaGrid(nodes=g1.nodes + LSTAR, weights=g1.weights,
                       lambda_star=LSTAR, mode="uniform")
        w1 = bloch_forward(u, g1)
        w2 = bloch_forward(u, g2)
        assert np.max(np.abs(w1.values - w2.values)) < 1e-13


class TestInverse:
    def test_constant_in_alpha_reconstructs_cell0(self):
        g = np.random.default_rng(5).normal(size=12)
        grid = uniform_grid(16)
        w = BlochField(grid=grid,
                       values=np.tile(np.sqrt(L / (2 * np.pi)) * g, (16, 1)),
                       kind="quasiperiodic")
        u = bloch_inverse(w, np.arange(-4, 5), period=L)
        i0 = 4
        assert np.max(np.abs(u.values[i0] - g)) < 1e-13
        others = np.delete(u.values, i0, axis=0)
        assert np.max(np.abs(others)) < 1e-13

    def test_roundtrip(self):
        cells = np.arange(-3, 4)
        u = random_field(cells, 25, seed=6)
        grid = uniform_grid(64)
        back = bloch_inverse(bloch_forward(u, grid), cells, period=L)
        err = np.max(np.abs(back.values - u.values)) / np.max(np.abs(u.values))
        assert err < 1e-12

    def test_single_alpha_mode(self):
        grid = uniform_grid(8)
        m0 = 3
        vals = np.zeros((8, 5), complex)
        vals[m0] = 1.0
        w = BlochField(grid=grid, values=vals, kind="quasiperiodic")
        u = bloch_inverse(w, [0, 1, 2], period=L)
        for c, j in enumerate([0, 1, 2]):
            expect = (np.sqrt(L / (2 * np.pi)) * grid.weights[m0]
                      * np.exp(1j * L * j * grid.nodes[m0]))
            assert np.max(np.abs(u.values[c] - expect)) < 1e-14

    def test_aliasing_warning(self):
        u = random_field([0], 5, seed=7)
        w = bloch_forward(u, uniform_grid(8))
        with pytest.warns(UserWarning, match="alias"):
            out = bloch_inverse(w, np.arange(-6, 7), period=L)
        assert out.aliased


class TestIsometryAdjoint:
    def test_discrete_parseval(self):
        u = random_field(np.arange(-3, 4), 30, seed=8)
        w = bloch_forward(u, uniform_grid(64))
        assert abs(w.grid_norm() - u.norm()) / u.norm() < 1e-12

    def test_adjoint_equals_inverse(self):
        # <J u, w>_grid == <u, J^{-1} w>_cells for random u, w
        cells = np.arange(-3, 4)
        grid = uniform_grid(32)
        u = random_field(cells, 18, seed=9)
        rng = np.random.default_rng(10)
        wvals = rng.normal(size=(32, 18)) + 1j * rng.normal(size=(32, 18))
        w = BlochField(grid=grid, values=wvals, kind="quasiperiodic")
        Ju = bloch_forward(u, grid)
        lhs = np.sum(grid.weights[:, None] * Ju.values * np.conj(w.values))
        Jinv_w = bloch_inverse(w, cells, period=L)
        rhs = np.sum(u.values * np.conj(Jinv_w.values))
        assert abs(lhs - rhs) / abs(lhs) < 1e-12


class TestRepresentationConversion:
    def test_exact_nodal_phases(self):
        grid = uniform_grid(8)
        rng = np.random.default_rng(11)
        x1 = rng.uniform(-np.pi, np.pi, 14)
        vals = rng.normal(size=(8, 14)) + 1j * rng.normal(size=(8, 14))
        w = BlochField(grid=grid, values=vals, kind="quasiperiodic", x1=x1)
        v = w.to_periodized()
        expect = vals * np.exp(-1j * np.outer(grid.nodes, x1))
        assert np.max(np.abs(v.values - expect)) < 1e-14
        back = v.to_quasiperiodic()
        assert np.max(np.abs(back.values - vals)) < 1e-14


class TestMakeAlphaGrid:
    def test_uniform_m4_nodes_weights(self):
        grid = uniform_grid(4)
        assert np.allclose(grid.nodes, [-0.375, -0.125, 0.125, 0.375], atol=1e-15)
        assert np.allclose(grid.weights, 0.25, atol=1e-16)

    def test_weight_sums(self):
        for mode in ("uniform", "graded"):
            g = make_alpha_grid(24, S_K1, mode=mode)
            assert abs(np.sum(g.weights) - LSTAR) < 1e-12

    def test_nodes_avoid_anomalies(self):
        for mode in ("uniform", "graded"):
            g = make_alpha_grid(40, S_K1, mode=mode)
            assert float(np.min(S_K1.min_distance(g.nodes))) > 1e-8

    def test_uniform_shifts_off_anomaly(self):
        # k = 0.125 puts an anomaly exactly on a midpoint node for M=4
        s = singular_set(0.125, 1.0, (-0.5, 0.5))
        g = make_alpha_grid(4, s, mode="uniform")
        assert float(np.min(s.min_distance(g.nodes))) > 1e-7
        assert abs(np.sum(g.weights) - 1.0) < 1e-12

    def test_graded_spacing_scales_m_squared(self):
        gaps = []
        for M in (32, 64):
            g = make_alpha_grid(M, S_K1, mode="graded")
            gaps.append(float(np.min(S_K1.min_distance(g.nodes))))
        ratio = gaps[0] / gaps[1]
        assert 3.0 < ratio < 5.3   # ~ M^{-2} node approach

    def test_too_few_nodes_error(self):
        s = singular_set(1.3, 1.0, (-0.5, 0.5))   # two anomalies
        with pytest.raises(ValueError, match="small"):
            make_alpha_grid(3, s, mode="graded")

    def test_nearest_snap(self):
        g = uniform_grid(8)
        m, d = g.nearest(0.13)
        assert abs(g.nodes[m] - 0.1875) < 1e-15
        assert abs(d - (0.1875 - 0.13)) < 1e-14
        # wraps across the dual cell
        m2, _ = g.nearest(0.5 + 0.49)   # 0.99 ~ -0.01 mod 1
        assert abs(g.nodes[m2] - (-0.0625)) < 1e-15
