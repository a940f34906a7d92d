import unittest

import numpy as np

from instantonpy.energy import basic_alpha_energy
from instantonpy.dilation import (ROUTES, pullback_energy, pullback_energy_report, G_of_sigma, G_prime, gap,
                                  dE_dloglambda_basic, near_identity_gap, gap_regime, verify_gap_bounds,
                                  profile, chi_sobolev_norms, log_chi_derivatives, grad_log_chi_exact,
                                  grad_log_chi_closed_form, fit_grad_log_chi, dE_dloglambda_general,
                                  derivative_gap_bounds)
from instantonpy.connections import basic_connection, dilate
from instantonpy.sphere import RadialGrid
from instantonpy.flow import perturbed_basic
from instantonpy.errors import RegimeMisclassified


class TestPullbackEnergy(unittest.TestCase):

    def test_routes_agree(self):
        for alpha, lam in ((1.1, 2.0), (1.5, 10.0), (2.0, 1.3)):
            values = [pullback_energy_report(alpha, lam, route)[0] for route in ROUTES]
            for v in values[1:]:
                self.assertAlmostEqual(v / values[0], 1.0, places=8)

    def test_identity_and_inversion(self):
        self.assertAlmostEqual(pullback_energy(1.4, 1.0), basic_alpha_energy(1.4), places=10)
        self.assertAlmostEqual(pullback_energy(1.4, 3.0) / pullback_energy(1.4, 1.0 / 3.0), 1.0, places=12)

    def test_unknown_route(self):
        with self.assertRaises(ValueError):
            pullback_energy(1.2, 2.0, route='elsewhere')

    def test_alpha_outside_range(self):
        with self.assertRaises(ValueError):
            pullback_energy(2.5, 2.0)


class TestGap(unittest.TestCase):

    def test_gap_nonnegative(self):
        for alpha in (1.1, 1.5, 2.0):
            self.assertEqual(gap(alpha, 1.0), 0.0)
            for lam in (1.01, 2.0, 50.0):
                self.assertGreater(gap(alpha, lam), 0.0)

    def test_near_identity_expansion(self):
        for alpha in (1.2, 1.8):
            lam = 1.001
            self.assertAlmostEqual(gap(alpha, lam) / near_identity_gap(alpha, lam), 1.0, places=2)

    def test_derivative_matches_differences(self):
        beta, sigma, d = 0.4, 0.8, 1e-5
        fd = (G_of_sigma(sigma + d, beta) - G_of_sigma(sigma - d, beta)) / (2.0 * d)
        self.assertAlmostEqual(G_prime(sigma, beta) / fd, 1.0, places=7)
        self.assertGreater(G_prime(sigma, beta), 0.0)

    def test_log_derivative_routes(self):
        a = dE_dloglambda_basic(1.5, 2.0)
        b = dE_dloglambda_basic(1.5, 2.0, route='integral', nodes=256)
        self.assertAlmostEqual(a / b, 1.0, places=6)
        self.assertAlmostEqual(dE_dloglambda_basic(1.5, 0.5), -a, places=10)

    def test_regimes(self):
        self.assertEqual(gap_regime(2.0, 1e3), 1)
        self.assertEqual(gap_regime(1.1, 10.0), 2)
        self.assertEqual(gap_regime(1.5, 1.5), 3)
        with self.assertRaises(RegimeMisclassified):
            gap_regime(1.0, 2.0)

    def test_fitted_constants_positive(self):
        report = verify_gap_bounds([(a, l) for a in (1.2, 2.0) for l in (1.0, 1.1, 5.0, 1e4)])
        self.assertTrue(report.passed)
        self.assertEqual(report.to_dict()['samples'], 8)


class TestDerivativeGap(unittest.TestCase):

    def test_dilated_basic_is_critical_in_lambda(self):
        for lam in (1.5, 2.0):
            value = dE_dloglambda_general(dilate(basic_connection(), lam), 1.5, lam, grid=RadialGrid(256))
            self.assertLess(abs(value), 1e-6 * basic_alpha_energy(1.5))

    def test_basic_has_no_gap(self):
        report = derivative_gap_bounds(basic_connection(), 1.5, 2.0, grid=RadialGrid(64))
        self.assertEqual(report.lhs, 0.0)
        self.assertEqual(report.bound, 0.0)

    def test_perturbed_basic(self):
        grid = RadialGrid(128)
        reports = [derivative_gap_bounds(perturbed_basic(eps, [1.0, 0.5, -0.3, 0.2]), 1.5, 2.0, grid=grid)
                   for eps in (0.1, 0.01)]
        for report in reports:
            self.assertGreater(report.first, 0.0)
            self.assertGreater(report.second, 0.0)
            self.assertTrue(np.isfinite(report.ratio))
        self.assertLess(abs(reports[1].lhs), abs(reports[0].lhs))
        self.assertLess(reports[1].bound, reports[0].bound)
        self.assertTrue({'lhs', 'first_term', 'second_term', 'ratio'} <= set(reports[0].to_dict()))


class TestProfileTable(unittest.TestCase):

    def test_schema(self):
        frame = profile([1.3], np.geomspace(1.0, 10.0, 4))
        self.assertEqual(len(frame), 4)
        self.assertEqual(list(frame.columns), ['alpha', 'lambda', 'tau', 'sigma', 'G', 'Gprime', 'gap',
                                               'dE_dloglog', 'residual'])
        self.assertAlmostEqual(frame['G'].iloc[0], 1.0)
        self.assertTrue((frame['gap'] >= 0).all())


class TestChiNorms(unittest.TestCase):

    def test_identity(self):
        self.assertEqual(chi_sobolev_norms(1.0).grad_norm, 0.0)

    def test_norms_grow_with_lambda(self):
        norms = [chi_sobolev_norms(lam).grad_norm for lam in (1.5, 3.0, 30.0)]
        self.assertTrue(norms[0] < norms[1] < norms[2])
        self.assertGreater(chi_sobolev_norms(2.0).fitted_constant, 0.0)

    def test_radial_derivatives(self):
        r, lam, h = np.array([0.3, 1.0, 2.5]), 2.0, 1e-5
        d1, d2 = log_chi_derivatives(r, lam)
        up, _ = log_chi_derivatives(r + h, lam)
        down, _ = log_chi_derivatives(r - h, lam)
        np.testing.assert_allclose(d2, (up - down) / (2 * h), rtol=1e-6)


class TestChiGradientLaw(unittest.TestCase):

    def test_value_at_two(self):
        expected = 64.0 * np.pi ** 3 * (57.0 - 40.0 * np.log(4.0)) / 27.0
        self.assertAlmostEqual(chi_sobolev_norms(2.0).grad_norm ** 2 / expected, 1.0, places=9)
        self.assertAlmostEqual(grad_log_chi_exact(2.0) / expected, 1.0, places=12)

    def test_quadrature_follows_exact_law(self):
        for lam in (1.05, 1.5, 10.0, 1000.0):
            report = chi_sobolev_norms(lam)
            self.assertAlmostEqual(report.grad_norm / report.exact, 1.0, places=9)

    def test_ratio_to_power_form_is_not_constant(self):
        def ratio(lam):
            return chi_sobolev_norms(lam).grad_norm ** 2 / grad_log_chi_closed_form(lam)

        self.assertAlmostEqual(ratio(1.001), 0.05, delta=1e-3)
        self.assertAlmostEqual(ratio(2.0), 3.669868 / 24.0, places=5)
        self.assertAlmostEqual(ratio(1000.0), 0.5, delta=2e-3)

    def test_series_meets_closed_form(self):
        below = grad_log_chi_exact(np.sqrt(1.5 - 1e-9))
        above = grad_log_chi_exact(np.sqrt(1.5 + 1e-9))
        self.assertAlmostEqual(below / above, 1.0, places=8)

    def test_identity_and_inverse(self):
        self.assertEqual(grad_log_chi_exact(1.0), 0.0)
        self.assertAlmostEqual(grad_log_chi_exact(0.5) / grad_log_chi_exact(2.0), 1.0, places=12)

    def test_exponent_fit(self):
        fit = fit_grad_log_chi(np.geomspace(1.1, 100.0, 8))
        self.assertEqual(sorted(fit), ['C', 'a', 'b', 'rms_log_residual'])
        self.assertTrue(all(np.isfinite(list(fit.values()))))
        self.assertGreater(fit['a'], 0.0)
        with self.assertRaises(ValueError):
            fit_grad_log_chi([1.0, 2.0, 3.0])


if __name__ == '__main__':
    unittest.main(verbosity=2)
