import numpy as np
import unittest

from instantonpy.sphere import (VOLUME, RadialGrid, SphereGrid, BallGrid, Lattice4D, ConformalMap, CompositeMap,
                                s3_rule, round_weight, chi_lambda, dchi_dloglambda, hodge_star,
                                hodge_split, conformal_factor, conformal_apply)
from instantonpy.connections import ASD_FORM


class TestWeights(unittest.TestCase):

    def test_round_weight_is_rho_to_the_fourth(self):
        rng = np.random.default_rng(0)
        p = rng.standard_normal((20, 4))
        np.testing.assert_allclose(round_weight(p), conformal_factor(p) ** 4, rtol=1e-14)

    def test_chi_lambda_values(self):
        self.assertAlmostEqual(float(chi_lambda(np.zeros(4), 2.0)), 2.0 ** -4)
        p = np.random.default_rng(1).standard_normal((10, 4))
        np.testing.assert_allclose(chi_lambda(p, 1.0), 1.0)

    def test_chi_derivative_matches_difference(self):
        p = np.random.default_rng(2).standard_normal((10, 4))
        lam, d = 1.7, 1e-5
        fd = (chi_lambda(p, lam * np.exp(d)) - chi_lambda(p, lam * np.exp(-d))) / (2.0 * d)
        np.testing.assert_allclose(dchi_dloglambda(p, lam), fd, rtol=1e-7)

    def test_rejects_nonpositive_lambda(self):
        with self.assertRaises(ValueError):
            chi_lambda(np.zeros(4), 0.0)


class TestGrids(unittest.TestCase):

    def test_s3_weights_sum_to_area(self):
        _, w = s3_rule(16, 5, 8)
        self.assertAlmostEqual(w.sum(), 2.0 * np.pi ** 2, places=12)

    def test_radial_grid_volume(self):
        self.assertAlmostEqual(RadialGrid(16).volume_weights.sum(), VOLUME, places=12)

    def test_sphere_grid_volume(self):
        g = SphereGrid(16, 16, 2, 2)
        self.assertAlmostEqual(g.volume_weights.sum(), VOLUME, places=12)
        self.assertEqual(sum(p.shape[0] for p, _ in g.chunks(100)), g.size)

    def test_sphere_grid_integrates_polynomial_on_sphere(self):
        # the height function (|x|^2 - 1)/(|x|^2 + 1) has mean zero and mean square 1/5
        g = SphereGrid(20, 16, 2, 2)
        s = np.sum(g.points ** 2, axis=-1)
        h = (s - 1.0) / (s + 1.0)
        self.assertAlmostEqual(np.sum(g.volume_weights * h), 0.0, places=12)
        self.assertAlmostEqual(np.sum(g.volume_weights * h * h) / VOLUME, 0.2, places=12)

    def test_ball_grid_volume(self):
        # flat volume of a small chart ball around the origin, round density 16
        g = BallGrid(np.zeros(4), 1e-2, 8, 16, 4, 6)
        self.assertAlmostEqual(g.volume_weights.sum() / (16.0 * 0.5 * np.pi ** 2 * 1e-8), 1.0, places=3)

    def test_lattice_shape(self):
        L = Lattice4D(2.0, 5)
        self.assertEqual(L.shape, (5, 5, 5, 5))
        self.assertAlmostEqual(L.h, 1.0)
        self.assertTrue(np.all(np.sum(L.points ** 2, axis=-1) <= 4.0 + 1e-9))
        with self.assertRaises(ValueError):
            Lattice4D(2.0, 2)


class TestConformalMaps(unittest.TestCase):

    def test_inverse(self):
        m = ConformalMap(xi1=[0.1, 0, 0.2, 0], xi2=[0, 0.3, 0, 0], lam=1.7, p=[1, 1, 0, 0], q=[0, 0, 1, 1])
        p = np.random.default_rng(3).standard_normal((10, 4))
        np.testing.assert_allclose(m.inverse().apply(m.apply(p)), p, atol=1e-12)

    def test_inversion_inverse(self):
        m = ConformalMap(xi1=[0.5, 0, 0, 0], lam=2.0, eps=2)
        p = np.random.default_rng(4).standard_normal((10, 4))
        np.testing.assert_allclose(m.inverse().apply(m.apply(p)), p, atol=1e-10)

    def test_jacobian_matches_differences(self):
        m = ConformalMap(xi1=[0.2, 0, 0, 0.1], lam=0.8, p=[1, 0, 1, 0], eps=2)
        x = np.array([0.7, -0.3, 0.4, 0.9])
        h = 1e-6
        fd = np.stack([(m.apply(x + h * e) - m.apply(x - h * e)) / (2 * h) for e in np.eye(4)], axis=-1)
        np.testing.assert_allclose(m.jacobian(x), fd, atol=1e-6)

    def test_composite_applies_inner_first(self):
        inversion = ConformalMap(xi1=[0.3, 0, 0, 0], eps=2)
        dilation = ConformalMap.dilation(1.5)
        m = inversion.compose(dilation)
        self.assertIsInstance(m, CompositeMap)
        p = np.random.default_rng(5).standard_normal((10, 4))
        np.testing.assert_allclose(conformal_apply(m, p), inversion.apply(dilation.apply(p)), atol=1e-12)
        np.testing.assert_allclose(m.inverse().apply(m.apply(p)), p, atol=1e-10)

    def test_composite_jacobian_matches_differences(self):
        m = ConformalMap(eps=2).compose(ConformalMap(xi2=[0.2, 0, -0.1, 0], lam=0.7))
        x = np.array([0.4, 0.8, -0.2, 0.5])
        h = 1e-6
        fd = np.stack([(m.apply(x + h * e) - m.apply(x - h * e)) / (2 * h) for e in np.eye(4)], axis=-1)
        np.testing.assert_allclose(m.jacobian(x), fd, atol=1e-6)

    def test_affine_maps_compose_to_a_single_map(self):
        a = ConformalMap(xi2=[0.1, 0, 0, 0], lam=2.0, p=[0, 1, 0, 0])
        b = ConformalMap(xi1=[0, 0.2, 0, 0], lam=0.5, q=[0, 0, 1, 0])
        m = a.compose(b)
        self.assertIsInstance(m, ConformalMap)
        p = np.random.default_rng(6).standard_normal((10, 4))
        np.testing.assert_allclose(conformal_apply(m, p), a.apply(b.apply(p)), atol=1e-12)

    def test_identity(self):
        self.assertTrue(ConformalMap.identity().is_identity)
        self.assertFalse(ConformalMap.dilation(2.0).is_identity)
        with self.assertRaises(ValueError):
            ConformalMap(lam=-1.0)


class TestHodgeStar(unittest.TestCase):

    def test_basic_form_is_anti_self_dual(self):
        np.testing.assert_allclose(hodge_star(ASD_FORM), -ASD_FORM, atol=1e-14)
        plus, minus = hodge_split(ASD_FORM)
        np.testing.assert_allclose(plus, 0.0, atol=1e-14)

    def test_star_is_an_involution(self):
        F = np.random.default_rng(5).standard_normal((4, 4, 3))
        F = F - np.swapaxes(F, 0, 1)
        np.testing.assert_allclose(hodge_star(hodge_star(F)), F, atol=1e-12)


if __name__ == '__main__':
    unittest.main(verbosity=2)
