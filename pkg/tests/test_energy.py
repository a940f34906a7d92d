import unittest

import numpy as np

from instantonpy.sphere import RadialGrid, SphereGrid, ConformalMap
from instantonpy.connections import Adhm, Flat, GaugeTransform, basic_connection, dilate, gauge_act, pullback
from instantonpy.energy import (basic_alpha_energy, ym_energy, ym_alpha, ym_alpha_lambda, topological_charge,
                                charge_report, lp_curvature_norm, lp_difference_norm, lower_bound_margin,
                                select_grid, integrate)
from instantonpy.flow import perturbed_basic
from instantonpy.errors import QuadratureNotConverged


class TestBasicEnergy(unittest.TestCase):

    def test_alpha_energy_closed_form(self):
        c = basic_connection()
        for alpha in (1.0, 1.1, 1.5, 2.0):
            report = ym_alpha(c, alpha, grid=RadialGrid(64))
            self.assertAlmostEqual(report.value / basic_alpha_energy(alpha), 1.0, places=10)
            self.assertLess(report.residual, 1e-6 * report.value)

    def test_yang_mills_energy(self):
        self.assertAlmostEqual(ym_energy(basic_connection()).value, 4.0 * np.pi ** 2, places=8)

    def test_translated_instanton_on_sphere_grid(self):
        c = Adhm([0.2, 0.0, -0.1, 0.0], 1.1)
        norm = lp_curvature_norm(c, 2.0, grid=SphereGrid(24, 12, 10, 16))
        self.assertAlmostEqual(norm ** 2 / (8.0 * np.pi ** 2), 1.0, places=6)

    def test_flat_connection(self):
        self.assertAlmostEqual(ym_energy(Flat()).value, 0.0)
        self.assertAlmostEqual(ym_alpha(Flat(), 1.0).value, 1.5 * 8.0 * np.pi ** 2 / 3.0, places=10)


class TestDilationWeight(unittest.TestCase):

    def test_weighted_energy_of_dilated_connection(self):
        grid = RadialGrid(256)
        for lam in (1.5, 3.0):
            value = ym_alpha_lambda(dilate(basic_connection(), lam), 1.5, lam, grid=grid).value
            self.assertAlmostEqual(value / basic_alpha_energy(1.5), 1.0, places=8)

    def test_inversion_symmetry(self):
        grid = RadialGrid(256)
        up = ym_alpha_lambda(basic_connection(), 1.3, 2.0, grid=grid).value
        down = ym_alpha_lambda(basic_connection(), 1.3, 0.5, grid=grid).value
        self.assertAlmostEqual(up / down, 1.0, places=8)

    def test_rejects_small_alpha(self):
        with self.assertRaises(ValueError):
            ym_alpha(basic_connection(), 0.5)
        with self.assertRaises(ValueError):
            ym_alpha_lambda(basic_connection(), 1.2, -1.0)


class TestCharge(unittest.TestCase):

    def test_basic_charge(self):
        self.assertAlmostEqual(topological_charge(basic_connection()), 1.0, places=10)

    def test_wedge_route_agrees(self):
        c = basic_connection()
        self.assertAlmostEqual(topological_charge(c, wedge=True), topological_charge(c), places=10)

    def test_charge_of_perturbed_profile(self):
        c = perturbed_basic(0.2, [1.0, -0.5, 0.3], nodes=64)
        self.assertAlmostEqual(topological_charge(c, grid=RadialGrid(64)), 1.0, places=6)

    def test_report(self):
        report = charge_report(basic_connection())
        self.assertEqual(report.kind, 'charge')
        self.assertIn('value', report.to_dict())


class TestLowerBound(unittest.TestCase):

    def test_perturbed_profiles_exceed_minimum(self):
        rng = np.random.default_rng(11)
        grid = RadialGrid(64)
        for _ in range(5):
            c = perturbed_basic(float(rng.uniform(0.05, 0.5)), rng=rng, nodes=64)
            for alpha in (1.0, 1.5, 2.0):
                margin, _ = lower_bound_margin(c, alpha, grid=grid)
                self.assertGreater(margin, -1e-6)

    def test_decorated_profiles_exceed_minimum(self):
        rng = np.random.default_rng(12)
        sphere = SphereGrid(24, 16, 12, 16)
        c = perturbed_basic(0.3, rng=rng, nodes=64)
        gauged = gauge_act(GaugeTransform.bump([0.4, -0.2, 0.3], [0.1, 0.0, -0.1, 0.0], 1.2), c)
        m = ConformalMap(xi2=[0.1, 0.0, 0.05, 0.0], lam=1.1, p=[0.6, 0.8, 0.0, 0.0], q=[0.0, 0.0, 0.6, 0.8])
        moved = pullback(m, gauged)
        for alpha in (1.0, 1.5, 2.0):
            radial = ym_alpha(c, alpha, grid=RadialGrid(64)).value
            self.assertAlmostEqual(ym_alpha(gauged, alpha, grid=sphere).value / radial, 1.0, places=4)
            margin, report = lower_bound_margin(moved, alpha, grid=sphere)
            self.assertGreater(margin, -1e-6 - report.residual)

    def test_difference_norm_vanishes_for_equal_connections(self):
        c = basic_connection()
        self.assertAlmostEqual(lp_difference_norm(c, c, 2.0), 0.0)


class TestQuadrature(unittest.TestCase):

    def test_grid_selection(self):
        self.assertIsInstance(select_grid(basic_connection()), RadialGrid)
        self.assertIsInstance(select_grid(Adhm([0.1, 0, 0, 0])), SphereGrid)
        with self.assertRaises(ValueError):
            select_grid(basic_connection(), route='nowhere')

    def test_unreachable_tolerance(self):
        with self.assertRaises(QuadratureNotConverged):
            ym_alpha(Adhm(None, 0.2), 1.5, grid=RadialGrid(8), tol=1e-30)

    def test_integrate_constant(self):
        value, residual = integrate(lambda p: np.ones(p.shape[:-1]), RadialGrid(16))
        self.assertAlmostEqual(value, 8.0 * np.pi ** 2 / 3.0, places=12)


if __name__ == '__main__':
    unittest.main(verbosity=2)
