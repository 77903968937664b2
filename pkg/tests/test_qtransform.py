"""Calibrated transform: normalization constant, involution, kernel
columns, translation, and the high-precision spectrum route."""

import math

import numpy as np
import pytest

from qwave.qbessel import modified_q_bessel
from qwave.qgrid import BesselParams, GridFunction, build_grid, dilate
from qwave.qtransform import (
    CalibrationError,
    calibrate_normalization,
    make_plan,
    q_bessel_fourier,
    spectrum,
    translate,
)

from conftest import rel_err


class TestCalibration:
    @pytest.mark.parametrize("q", [0.3, 0.5, 0.7])
    def test_constant_closed_form(self, q):
        # at v = (0, 0) the normalization is 1 / (1 - q)
        c = calibrate_normalization(BesselParams(0.0, 0.0),
                                    build_grid(q, -20, 40))
        assert rel_err(c, 1.0 / (1.0 - q)) < 1e-9

    def test_exact_at_half(self, plan00):
        assert plan00.c_qv == pytest.approx(2.0, rel=1e-12)
        assert plan00.calibration_spread < 1e-6
        assert plan00.calibration_residual < 1e-6

    def test_probe_independent(self, grid00, plan00):
        # a different probe family must land on the same constant
        mid = 12
        probes = [GridFunction.from_pairs(grid00, [(mid + k, 1.0)])
                  for k in range(-2, 2)]
        probes.append(GridFunction.from_pairs(
            grid00, [(mid, 1.0), (mid + 3, -0.5)]))
        alt = make_plan(grid00, BesselParams(0.0, 0.0), probes=probes)
        assert rel_err(alt.c_qv, plan00.c_qv) < 1e-9

    def test_cramped_grid_fails_calibration(self):
        with pytest.raises(CalibrationError, match="grid too small"):
            make_plan(build_grid(0.5, -2, 2), BesselParams(0.0, 0.0))

    def test_sub_minimal_grid_rejected(self):
        with pytest.raises(ValueError, match="four grid points"):
            make_plan(build_grid(0.5, 0, 2), BesselParams(0.0, 0.0))


class TestTransform:
    def test_zero_maps_to_zero(self, plan00, grid00):
        out = q_bessel_fourier(GridFunction.zeros(grid00), plan00)
        assert np.all(out.values == 0.0)

    def test_linearity(self, plan00, grid00):
        f = GridFunction.from_pairs(grid00, [(0, 1.0), (3, -0.5)])
        g = GridFunction.from_pairs(grid00, [(1, 2.0), (2, 0.25)])
        combo = GridFunction(grid00, 2.0 * f.values + 3.0 * g.values)
        lhs = q_bessel_fourier(combo, plan00).values
        rhs = (2.0 * q_bessel_fourier(f, plan00).values
               + 3.0 * q_bessel_fourier(g, plan00).values)
        scale = np.max(np.abs(rhs))
        np.testing.assert_allclose(lhs, rhs, atol=1e-12 * scale)

    def test_indicator_column_is_kernel(self, plan00, grid00):
        # F[delta_0](s) = c (1-q) j(q^s) when v = (0, 0)
        q = grid00.q
        v = BesselParams(0.0, 0.0)
        out = q_bessel_fourier(
            GridFunction.from_pairs(grid00, [(0, 1.0)]), plan00)
        for s in range(0, 11):
            ref = plan00.c_qv * (1.0 - q) * modified_q_bessel(v, q ** s, q)
            assert rel_err(out.value_at(s), ref) < 1e-11

    def test_indicator_column_shifted_kernel(self, plan_shifted):
        # with beta != 0 the kernel is sampled on the shifted lattice:
        # F[delta_0](s) = c (1-q) jtilde(q^{s + beta})
        grid = plan_shifted.grid
        q = grid.q
        v = plan_shifted.v
        out = q_bessel_fourier(
            GridFunction.from_pairs(grid, [(0, 1.0)]), plan_shifted)
        for s in range(0, 11):
            ref = plan_shifted.c_qv * (1.0 - q) * modified_q_bessel(
                v, q ** (s + v.beta), q)
            assert rel_err(out.value_at(s), ref) < 1e-11

    def test_involution_on_fresh_probe(self, plan00, grid00):
        # double transform must return the input; use a probe outside
        # the calibration family
        f = GridFunction.from_pairs(grid00, [(4, 1.0), (6, -2.0), (9, 0.5)])
        back = q_bessel_fourier(q_bessel_fourier(f, plan00), plan00)
        num = math.sqrt(plan00.norm_sq(back.values - f.values))
        den = math.sqrt(plan00.norm_sq(f.values))
        assert num / den < 1e-5

    def test_grid_mismatch_rejected(self, plan00):
        other = build_grid(0.5, -5, 5)
        with pytest.raises(ValueError, match="different grids"):
            q_bessel_fourier(GridFunction.zeros(other), plan00)


class TestTranslate:
    def test_symmetry_in_the_two_points(self, plan00, grid00):
        f = GridFunction.from_pairs(grid00, [(1, 1.0)])
        t2 = translate(f, 2, plan00)
        t5 = translate(f, 5, plan00)
        assert abs(t2.value_at(5) - t5.value_at(2)) < 1e-12

    def test_double_sum_oracle(self, plan00, grid00):
        # T_{q^x} f(q^y) = c sum_s kappa(y+s) kappa(x+s) Ff(s) w(s),
        # assembled here term by term from the kernel matrix
        f = GridFunction.from_pairs(grid00, [(1, 1.0)])
        x_idx, y_idx = 1, 1
        w = plan00.weights
        ker = plan00.matrix
        Ff = plan00.c_qv * ker @ (w * f.values)
        oracle = plan00.c_qv * math.fsum(
            ker[grid00.pos(y_idx)] * w * Ff * ker[grid00.pos(x_idx)])
        got = translate(f, x_idx, plan00).value_at(y_idx)
        assert abs(got - oracle) < 1e-14

    def test_translate_by_largest_point_of_unit_mass(self, plan00, grid00):
        # translating an indicator keeps total transform mass bounded
        f = GridFunction.from_pairs(grid00, [(2, 1.0)])
        out = translate(f, 2, plan00)
        assert np.all(np.isfinite(out.values))
        assert abs(out.value_at(2)) > 0.0


class TestSpectrum:
    def test_matches_matrix_route_at_moderate_depth(self, plan00, grid00):
        f = GridFunction.from_pairs(grid00, [(0, 1.0), (2, -0.5)])
        dense = plan00.fourier_values(f.values)
        sparse = spectrum(f, plan00, 0, 10)
        for s in range(0, 11):
            assert rel_err(sparse[s], dense[grid00.pos(s)]) < 1e-12

    def test_dilation_covariance(self, plan00, grid00):
        # F[f(./q^m)](s) = q^{m(2|v|+2)} F[f](s + m), exact on the lattice
        f = GridFunction.from_pairs(grid00, [(0, 1.0), (1, -0.5)])
        m = 3
        lam = grid00.q ** (m * (2.0 * plan00.v.abs_v + 2.0))
        lhs = spectrum(dilate(f, m), plan00, -5, 5)
        rhs = spectrum(f, plan00, -5 + m, 5 + m)
        for s in range(-5, 6):
            assert rel_err(lhs[s], lam * rhs[s + m]) < 1e-14

    def test_accepts_high_precision_dict_input(self, plan00):
        import mpmath as mp
        direct = spectrum({0: mp.mpf(1), 2: mp.mpf("-0.5")}, plan00, 0, 5)
        via_fn = spectrum(GridFunction.from_pairs(
            plan00.grid, [(0, 1.0), (2, -0.5)]), plan00, 0, 5)
        for s in range(0, 6):
            assert direct[s] == via_fn[s]

    def test_zero_input_gives_zero_spectrum(self, plan00, grid00):
        out = spectrum(GridFunction.zeros(grid00), plan00, -3, 3)
        assert all(val == 0.0 for val in out.values())

    def test_mean_free_depth_beyond_float64(self, plan00, grid00):
        # a mean-free pair decays like q^{2s} in the spectrum; at depth
        # s = 30 the matrix route is pure noise while the entrywise route
        # still resolves the value
        q = grid00.q
        f = GridFunction.from_pairs(grid00, [(0, 1.0), (2, -q ** -4.0)])
        deep = spectrum(f, plan00, 28, 32)
        assert all(math.isfinite(val) and val != 0.0 for val in deep.values())
        # with the leading order cancelled the tail decays like q^{2s}
        for s in (29, 30, 31):
            assert rel_err(abs(deep[s + 1] / deep[s]), q * q) < 1e-6
