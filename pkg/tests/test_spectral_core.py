import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mhs_slab import spectral_core as sc
from mhs_slab.errors import SymmetryViolation
from mhs_slab.spectral_core import AREA, SlabGrid3, TorusGrid2


def band_limited(grid, rng, modes=3):
    x, y = grid.mesh
    out = np.zeros(grid.shape)
    for m in range(-modes, modes + 1):
        for n in range(-modes, modes + 1):
            a, ph = rng.normal(), rng.uniform(0, 2 * np.pi)
            out += a * np.cos(m * x + n * y + ph)
    return out


def direct_dft(values):
    """Forward transform by explicit mode sums (no FFT)."""
    nx, ny = values.shape
    x = 2 * np.pi * np.arange(nx) / nx
    y = 2 * np.pi * np.arange(ny) / ny
    m = np.fft.fftfreq(nx, 1 / nx)
    n = np.fft.fftfreq(ny, 1 / ny)
    ex = np.exp(-1j * np.outer(m, x))
    ey = np.exp(-1j * np.outer(y, n))
    return ex @ values @ ey * (AREA / (nx * ny))


def mode_sum(coeffs):
    nx, ny = coeffs.shape
    x = 2 * np.pi * np.arange(nx) / nx
    y = 2 * np.pi * np.arange(ny) / ny
    m = np.fft.fftfreq(nx, 1 / nx)
    n = np.fft.fftfreq(ny, 1 / ny)
    out = np.zeros((nx, ny), dtype=complex)
    for i, mi in enumerate(m):
        for k, nk in enumerate(n):
            out += coeffs[i, k] * np.exp(1j * (mi * x[:, None] + nk * y[None, :]))
    return out / AREA


class TestGrids:
    def test_nodes(self):
        g = TorusGrid2(8, 6)
        assert np.allclose(g.x, 2 * np.pi * np.arange(8) / 8)
        assert g.mesh[0].shape == (8, 6)

    @pytest.mark.parametrize("nx,ny", [(3, 8), (8, 2), (7, 8)])
    def test_rejects_bad_sizes(self, nx, ny):
        with pytest.raises(ValueError):
            TorusGrid2(nx, ny)

    def test_slab_nodes_cover_both_faces(self):
        g = SlabGrid3(TorusGrid2(8, 8), 10, 2.5)
        assert g.z[0] == 0.0 and g.z[-1] == 2.5
        assert g.shape == (11, 8, 8)

    def test_slab_rejects_nonpositive_height(self):
        with pytest.raises(ValueError):
            SlabGrid3(TorusGrid2(8, 8), 10, 0.0)


class TestTransforms:
    def test_constant(self):
        c = sc.to_spectral(np.full((8, 8), 3.0))
        assert c[0, 0] == pytest.approx(AREA * 3.0, rel=1e-14)
        assert np.abs(c.ravel()[1:]).max() < 1e-12

    def test_cosine(self):
        g = TorusGrid2(8, 8)
        c = sc.to_spectral(np.cos(g.mesh[0]))
        assert c[1, 0] == pytest.approx(AREA / 2, rel=1e-14)
        assert c[-1, 0] == pytest.approx(AREA / 2, rel=1e-14)
        c[1, 0] = c[-1, 0] = 0
        assert np.abs(c).max() < 1e-12

    def test_matches_direct_dft(self):
        v = np.random.default_rng(0).normal(size=(8, 8))
        assert np.abs(sc.to_spectral(v) - direct_dft(v)).max() < 1e-12

    def test_round_trip_random(self):
        v = np.random.default_rng(1).normal(size=(8, 8))
        assert np.abs(sc.from_spectral(sc.to_spectral(v)) - v).max() < 1e-12

    def test_zero_and_cosine_inverse(self):
        g = TorusGrid2(8, 8)
        assert not np.any(sc.from_spectral(np.zeros((8, 8), complex)))
        c = np.zeros((8, 8), complex)
        c[1, 0] = c[-1, 0] = AREA / 2
        assert np.abs(sc.from_spectral(c) - np.cos(g.mesh[0])).max() < 1e-14

    def test_inverse_matches_mode_sum(self):
        rng = np.random.default_rng(2)
        c = sc.to_spectral(rng.normal(size=(8, 8)))
        assert np.abs(sc.from_spectral(c) - mode_sum(c).real).max() < 1e-12

    def test_asymmetric_coefficients_rejected(self):
        c = np.zeros((8, 8), complex)
        c[1, 0] = AREA
        with pytest.raises(SymmetryViolation):
            sc.from_spectral(c)

    @settings(max_examples=25, deadline=None)
    @given(st.sampled_from([4, 6, 8, 12, 16]), st.sampled_from([4, 8, 10]), st.integers(0, 2**31))
    def test_parseval(self, nx, ny, seed):
        v = np.random.default_rng(seed).normal(size=(nx, ny))
        lhs = np.sum(np.abs(sc.to_spectral(v)) ** 2) / AREA
        rhs = np.sum(v**2) * AREA / v.size
        assert lhs == pytest.approx(rhs, rel=1e-10)

    @settings(max_examples=25, deadline=None)
    @given(st.sampled_from([4, 8, 16, 32]), st.integers(0, 2**31))
    def test_round_trip_property(self, n, seed):
        v = np.random.default_rng(seed).normal(size=(n, n))
        assert np.abs(sc.from_spectral(sc.to_spectral(v)) - v).max() < 1e-12


class TestMultipliers:
    def setup_method(self):
        self.g = TorusGrid2(16, 16)
        self.x, self.y = self.g.mesh

    def test_identity(self):
        c = sc.to_spectral(np.sin(self.x + self.y))
        assert np.array_equal(sc.apply_multiplier(c, np.ones(self.g.shape)), c)

    def test_callable_matches_per_mode(self):
        u = band_limited(self.g, np.random.default_rng(3))
        c = sc.to_spectral(u)
        mu = lambda m, n: np.exp(-0.3 * (m**2 + n**2)) * (1 + 0.1j * m * n)  # noqa: E731
        out = sc.apply_multiplier(c, mu)
        m = np.fft.fftfreq(16, 1 / 16)
        for i in range(16):
            for k in range(16):
                expect = np.exp(-0.3 * (m[i] ** 2 + m[k] ** 2)) * (1 + 0.1j * m[i] * m[k]) * c[i, k]
                assert abs(out[i, k] - expect) < 1e-12

    def test_riesz_cosine(self):
        out = sc.from_spectral(sc.riesz_x(sc.to_spectral(np.cos(self.x))))
        assert np.abs(out - np.sin(self.x)).max() < 1e-14
        out = sc.from_spectral(sc.riesz_y(sc.to_spectral(np.cos(self.y))))
        assert np.abs(out - np.sin(self.y)).max() < 1e-14

    def test_riesz_kills_constants(self):
        c = sc.to_spectral(np.full(self.g.shape, 2.0))
        assert np.abs(sc.riesz_x(c)).max() == 0 and np.abs(sc.riesz_y(c)).max() == 0
        rx, ry = sc.riesz_symbols(self.g)
        assert rx[0, 0] == 0 and ry[0, 0] == 0

    def test_riesz_square_sum(self):
        rx, ry = sc.riesz_symbols(self.g)
        total = rx**2 + ry**2
        live = self.g.keep & self.g.nonzero
        assert np.abs(total[live] + 1).max() < 1e-15
        assert total[0, 0] == 0

    def test_op_B(self):
        c = sc.to_spectral(np.cos(self.x))
        assert np.abs(sc.from_spectral(sc.op_B_x(c)) - np.sin(self.x)).max() < 1e-14
        c2 = sc.to_spectral(np.cos(2 * self.y))
        assert np.abs(sc.from_spectral(sc.op_B_y(c2)) - 0.5 * np.sin(2 * self.y)).max() < 1e-14
        assert np.abs(sc.op_B_x(sc.to_spectral(np.ones(self.g.shape)))).max() == 0

    def test_op_B_per_mode(self):
        c = sc.to_spectral(band_limited(self.g, np.random.default_rng(4)))
        out = sc.op_B_x(c)
        m = np.fft.fftfreq(16, 1 / 16)
        for i in range(16):
            for k in range(16):
                k2 = m[i] ** 2 + m[k] ** 2
                expect = 0 if k2 == 0 or abs(m[i]) == 8 or abs(m[k]) == 8 else -1j * m[i] / k2 * c[i, k]
                assert abs(out[i, k] - expect) < 1e-12

    @pytest.mark.parametrize("op", ["riesz_x", "riesz_y", "op_B_x", "op_B_y", "t0", "t0_inv"])
    def test_real_to_real(self, op):
        u = band_limited(self.g, np.random.default_rng(5), modes=5)
        c = sc.to_spectral(u)
        fn = {
            "t0": lambda c: sc.t0_apply(c, 1.3),
            "t0_inv": lambda c: sc.t0_inverse(c, 1.3),
        }.get(op, getattr(sc, op, None))
        sc.from_spectral(fn(c))  # raises SymmetryViolation if not real

    def test_t0_origin(self):
        for L in (0.5, 1.0, 3.0):
            assert sc.slab_multiplier(np.array([0.0]), L)[0] == L / 2

    def test_t0_asymptotics(self):
        assert abs(sc.slab_multiplier(np.array([64.0]), 1.0)[0] * 64 - 1) < 1e-10

    def test_t0_closed_form(self):
        k = np.array([1e-6, 1e-3, 0.5, 1.0, 3.0, 10.0])
        L = 1.0
        # half-angle form of (cosh kL - 1) / (k sinh kL), free of cancellation
        expect = np.tanh(k * L / 2) / k
        assert np.allclose(sc.slab_multiplier(k, L), expect, rtol=1e-12, atol=0)

    def test_t0_no_overflow(self):
        val = sc.slab_multiplier(np.array([1e4]), 10.0)
        assert np.isfinite(val).all() and val[0] == pytest.approx(1e-4)

    @settings(max_examples=20, deadline=None)
    @given(st.integers(0, 2**31), st.floats(0.1, 5.0))
    def test_t0_round_trip(self, seed, L):
        u = np.random.default_rng(seed).normal(size=(16, 16))
        c = sc.to_spectral(u)
        back = sc.t0_inverse(sc.t0_apply(c, L), L)
        assert np.abs(back - c).max() <= 1e-12 * np.abs(c).max()


class TestDerivatives:
    @pytest.mark.parametrize("m", [1, 2, 5, 7])
    def test_sine_derivative(self, m):
        g = TorusGrid2(16, 16)
        x, y = g.mesh
        assert np.abs(sc.dx(np.sin(m * x)) - m * np.cos(m * x)).max() < 1e-12
        assert np.abs(sc.dy(np.sin(m * y)) - m * np.cos(m * y)).max() < 1e-12

    def test_mean(self):
        assert sc.mean(np.full((4, 8, 8), 2.0)).tolist() == [2.0] * 4


def dense_holder_k0(v, alpha, cap=2):
    """Brute force over every node pair whose periodic offset lies within ``cap`` cells."""
    nx, ny = v.shape
    h = 2 * np.pi / nx
    best = 0.0
    for i in range(nx):
        for j in range(ny):
            for p in range(nx):
                for q in range(ny):
                    di = (p - i + nx // 2) % nx - nx // 2
                    dj = (q - j + ny // 2) % ny - ny // 2
                    if (di, dj) == (0, 0) or abs(di) > cap or abs(dj) > cap:
                        continue
                    d = h * np.hypot(di, dj)
                    best = max(best, abs(v[p, q] - v[i, j]) / d**alpha)
    return np.abs(v).max() + best


class TestHolder:
    def test_zero(self):
        assert sc.holder_norm_estimate(np.zeros((8, 8)), 2, 0.5) == 0

    @pytest.mark.parametrize("k", [0, 1, 2])
    def test_constant(self, k):
        assert sc.holder_norm_estimate(np.full((8, 8), -0.7), k, 0.5) == pytest.approx(0.7)

    def test_sine_matches_dense_oracle(self):
        g = TorusGrid2(16, 16)
        v = np.sin(g.mesh[0])
        assert abs(sc.holder_norm_estimate(v, 0, 0.5) - dense_holder_k0(v, 0.5)) < 1e-6

    def test_three_dimensional(self):
        g = SlabGrid3(TorusGrid2(8, 8), 8, 1.0)
        v = np.broadcast_to(np.cos(g.base.mesh[0]), g.shape) * g.z[:, None, None]
        assert sc.holder_norm_estimate(v, 1, 0.5, dz=g.dz) > 0

    def test_argument_checks(self):
        with pytest.raises(ValueError):
            sc.holder_norm_estimate(np.zeros((8, 8)), 3, 0.5)
        with pytest.raises(ValueError):
            sc.holder_norm_estimate(np.zeros((8, 8)), 1, 1.0)
