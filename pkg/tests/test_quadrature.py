import math

import numpy as np
import pytest
from scipy import integrate

from rcm.connection import blob, polynomial_tail, truncated
from rcm.pointprocess import substream
from rcm.quadrature import (
    connection_mass,
    integrate2d,
    mean_degree_prediction,
    pair_region_integral,
    pair_region_series,
    upper_gamma,
)


def radial_mass_quad(alpha, norm=1.0, upper=None):
    """Independent route to integral(g): 1D radial quadrature with the
    substitution u = 1/r on the far part."""
    c = {1.0: 4.0, 2.0: 2.0 * math.pi, float("inf"): 8.0}[norm]
    near_hi = 1.0 if upper is None else min(1.0, upper)
    near, _ = integrate.quad(
        lambda r: -math.expm1(-(r ** -alpha)) * r, 0.0, near_hi
    )
    far = 0.0
    if upper is None or upper > 1.0:
        u_lo = 0.0 if upper is None else 1.0 / upper
        far, _ = integrate.quad(
            lambda u: -math.expm1(-(u ** alpha)) * u ** -3.0, u_lo, 1.0
        )
    return c * (near + far)


class TestIntegrate2d:
    def test_polynomial_exact_on_one_panel(self):
        res = integrate2d(lambda x, y: x ** 3 * y ** 2, (0.0, 2.0), (-1.0, 1.0))
        assert res.value == pytest.approx(8.0 / 3.0, abs=1e-12)
        assert res.converged

    def test_empty_domain(self):
        res = integrate2d(lambda x, y: x + y, (1.0, 1.0), (0.0, 2.0))
        assert res.value == 0.0 and res.converged

    def test_kink_with_seeded_break(self):
        f = lambda x, y: np.abs(x - 0.3) * (1.0 + 0.0 * y)
        exact = (0.3 ** 2 / 2 + 0.7 ** 2 / 2) * 1.0
        seeded = integrate2d(f, (0.0, 1.0), (0.0, 1.0), xbreaks=[0.3], tol=1e-12)
        assert seeded.value == pytest.approx(exact, abs=1e-12)
        assert seeded.n_panels <= 8
        blind = integrate2d(f, (0.0, 1.0), (0.0, 1.0), tol=1e-10)
        assert blind.value == pytest.approx(exact, abs=1e-9)

    def test_smooth_peak_refines(self):
        f = lambda x, y: np.exp(-50.0 * ((x - 0.2) ** 2 + (y - 0.7) ** 2))
        res = integrate2d(f, (-2.0, 2.0), (-2.0, 2.0), tol=1e-10)
        oracle, _ = integrate.dblquad(
            lambda yy, xx: math.exp(-50.0 * ((xx - 0.2) ** 2 + (yy - 0.7) ** 2)),
            -2.0, 2.0, -2.0, 2.0, epsabs=1e-12,
        )
        assert res.value == pytest.approx(oracle, abs=1e-9)


class TestConnectionMass:
    def test_closed_form_alpha4(self):
        # one-norm, dimension 2, alpha 4: mass is 2 * sqrt(pi)
        assert connection_mass(polynomial_tail(4.0)) == pytest.approx(
            3.5449077018110318, abs=1e-14
        )

    @pytest.mark.parametrize("alpha", [2.5, 3.0, 4.0, 6.0])
    @pytest.mark.parametrize("norm", [1.0, 2.0, float("inf")])
    def test_against_radial_quadrature(self, alpha, norm):
        got = connection_mass(polynomial_tail(alpha, norm=norm))
        assert got == pytest.approx(radial_mass_quad(alpha, norm), rel=1e-9)

    @pytest.mark.parametrize("cutoff", [0.5, 1.0, 3.0, 25.0])
    def test_truncated_against_radial_quadrature(self, cutoff):
        got = connection_mass(truncated(4.0, cutoff=cutoff))
        assert got == pytest.approx(radial_mass_quad(4.0, upper=cutoff), rel=1e-9)

    def test_truncated_small_alpha(self):
        # finite range keeps the mass finite even below the critical decay
        got = connection_mass(truncated(1.5, cutoff=2.0))
        assert got == pytest.approx(radial_mass_quad(1.5, upper=2.0), rel=1e-9)

    def test_blob_mass(self):
        assert connection_mass(blob(radius=1.0)) == pytest.approx(2.0, abs=1e-15)
        assert connection_mass(blob(radius=3.0, norm=2.0)) == pytest.approx(
            math.pi * 9.0, rel=1e-14
        )

    def test_divergent_mass_rejected(self):
        with pytest.raises(ValueError):
            connection_mass(polynomial_tail(2.0))
        with pytest.raises(ValueError):
            connection_mass(polynomial_tail(1.5), dim=2)

    def test_mean_degree_scales_with_intensity(self):
        k = polynomial_tail(4.0)
        assert mean_degree_prediction(2.0, k) == pytest.approx(
            2.0 * connection_mass(k), rel=1e-15
        )
        with pytest.raises(ValueError):
            mean_degree_prediction(0.0, k)


def test_upper_gamma_negative_parameter():
    for s, x in [(-0.5, 1.2), (-1.7, 0.3), (0.5, 2.0), (0.0, 1.0)]:
        oracle, _ = integrate.quad(
            lambda t: t ** (s - 1.0) * math.exp(-t), x, np.inf
        )
        assert upper_gamma(s, x) == pytest.approx(oracle, rel=1e-9)


class TestPairRegionIntegral:
    def test_blob_complement_closed_form(self):
        # unit box to its complement, blob radius 1: exactly 7/6
        res = pair_region_integral(blob(1.0), "box_complement", truncation=1.5)
        assert res.value == pytest.approx(7.0 / 6.0, abs=1e-6)

    def test_smooth_kernel_against_dblquad(self):
        k = polynomial_tail(4.0)
        got = pair_region_integral(k, "box_complement", truncation=2.0, tol=1e-10)

        def overlap(wx, wy):
            total = 0.0
            T = 2.0
            for bx0, bx1, by0, by1 in [
                (-T, 0.0, -T, 1.0 + T),
                (1.0, 1.0 + T, -T, 1.0 + T),
                (0.0, 1.0, -T, 0.0),
                (0.0, 1.0, 1.0, 1.0 + T),
            ]:
                lx = min(1.0, bx1 - wx) - max(0.0, bx0 - wx)
                ly = min(1.0, by1 - wy) - max(0.0, by0 - wy)
                total += max(0.0, lx) * max(0.0, ly)
            return total

        def f(wy, wx):
            d = abs(wx) + abs(wy)
            g = -math.expm1(-(d ** -4.0)) if d > 0 else 1.0
            return g * overlap(wx, wy)

        oracle, err = integrate.dblquad(f, -3.0, 3.0, -3.0, 3.0, epsabs=1e-10)
        assert got.value == pytest.approx(oracle, abs=1e-6)

    def test_monte_carlo_cross_check(self, seed):
        # direct 4D Monte Carlo of the A x B integral against the reduced
        # 2D quadrature, four-sigma band
        k = polynomial_tail(3.0)
        T = 2.0
        res = pair_region_integral(k, "quadrant", truncation=T, tol=1e-9)
        rng = substream(seed, "quad-mc").generator()
        n = 400_000
        u = rng.uniform(-T, 0.0, size=(n, 2))
        v = rng.uniform(0.0, T, size=(n, 2))
        g = k.of_displacement(u - v)
        area2 = (T * T) ** 2
        est = g.mean() * area2
        se = g.std(ddof=1) / math.sqrt(n) * area2
        assert abs(res.value - est) < 4.0 * se

    def test_truncated_kernel_rotated_jump(self):
        # cutoff at 1-norm distance 2; compare against the blob difference:
        # g_truncated = g_poly * indicator, and on the same region
        # integral(blob_2) - integral(truncated complement of it) has no
        # closed form, so check against a dense dblquad oracle instead
        k = truncated(4.0, cutoff=2.0)
        got = pair_region_integral(k, "box_complement", truncation=2.5, tol=1e-9)

        def overlap(wx, wy):
            total = 0.0
            T = 2.5
            for bx0, bx1, by0, by1 in [
                (-T, 0.0, -T, 1.0 + T),
                (1.0, 1.0 + T, -T, 1.0 + T),
                (0.0, 1.0, -T, 0.0),
                (0.0, 1.0, 1.0, 1.0 + T),
            ]:
                lx = min(1.0, bx1 - wx) - max(0.0, bx0 - wx)
                ly = min(1.0, by1 - wy) - max(0.0, by0 - wy)
                total += max(0.0, lx) * max(0.0, ly)
            return total

        def f(wy, wx):
            d = abs(wx) + abs(wy)
            if d > 2.0:
                return 0.0
            g = -math.expm1(-(d ** -4.0)) if d > 0 else 1.0
            return g * overlap(wx, wy)

        # integrate per quadrant so dblquad sees the jump on a boundary
        oracle = 0.0
        for sx in (-1, 1):
            for sy in (-1, 1):
                part, _ = integrate.dblquad(
                    lambda wy, wx: f(sy * wy, sx * wx), 0.0, 2.0, 0.0, 2.0,
                    epsabs=1e-11,
                )
                oracle += part
        assert got.value == pytest.approx(oracle, abs=5e-6)

    def test_config_validation(self):
        with pytest.raises(ValueError):
            pair_region_integral(blob(1.0), "diagonal", truncation=1.0)
        with pytest.raises(ValueError):
            pair_region_integral(blob(1.0), "quadrant", truncation=-1.0)


class TestSeries:
    def test_box_complement_converges_at_alpha4(self):
        report = pair_region_series(
            polynomial_tail(4.0), "box_complement", base_truncation=2.0, levels=5
        )
        assert report.converged
        # remainder scales like 1/T^2, so doubling shrinks diffs about 4x
        assert all(r > 2.0 for r in report.ratios)
        assert report.limit_estimate is not None
        assert report.limit_estimate > report.values[-1]

    def test_quadrant_converges_above_twice_dim(self):
        report = pair_region_series(
            polynomial_tail(6.0), "quadrant", base_truncation=2.0, levels=5
        )
        assert report.converged
        assert report.ratios[-1] == pytest.approx(4.0, rel=0.3)

    def test_quadrant_diverges_at_alpha4(self):
        # logarithmic growth: differences stay nearly constant
        report = pair_region_series(
            polynomial_tail(4.0), "quadrant", base_truncation=2.0, levels=5
        )
        assert not report.converged
        assert report.limit_estimate is None
        assert all(d > 0.05 for d in report.diffs)
        assert all(r < 1.5 for r in report.ratios)

    def test_level_validation(self):
        with pytest.raises(ValueError):
            pair_region_series(blob(1.0), "quadrant", levels=1)
