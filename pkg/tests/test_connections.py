import os
import tempfile
import unittest

import numpy as np

from instantonpy.sphere import RadialGrid, Lattice4D, ConformalMap, form2_weight
from instantonpy.connections import (Adhm, Flat, RadialProfile, GaugeTransform, BumpForm, Perturbed,
                                     LatticeField, FormField, basic_connection, gauge_act, pullback,
                                     dilate, curvature_fd, curvature_norm2, smooth_bump, ConstantPotential,
                                     radial_curvature)
from instantonpy.quaternion import bracket
from instantonpy.errors import ProfileSupportError, OutOfDomain


def points(n=20, seed=0, scale=1.0):
    return scale * np.random.default_rng(seed).standard_normal((n, 4))


class TestAdhm(unittest.TestCase):

    def test_analytic_curvature_matches_differences(self):
        c = Adhm([0.2, -0.1, 0.0, 0.3], 0.8)
        p = points()
        np.testing.assert_allclose(c.curvature(p), curvature_fd(c, p, 1e-4), atol=1e-6)

    def test_basic_round_norm_is_three(self):
        p = points(100, 1, 3.0)
        F = basic_connection().curvature(p)
        np.testing.assert_allclose(curvature_norm2(F) * form2_weight(p), 3.0, rtol=1e-12)

    def test_curvature_is_antisymmetric(self):
        F = Adhm([0.1, 0, 0, 0], 1.3).curvature(points(5))
        np.testing.assert_allclose(F, -np.swapaxes(F, -3, -2), atol=1e-15)

    def test_dilation_changes_scale(self):
        c = dilate(basic_connection(), 2.0)
        self.assertAlmostEqual(c.lam, 0.5)
        p = points()
        general = pullback(ConformalMap.dilation(2.0), basic_connection())
        np.testing.assert_allclose(general.potential(p), c.potential(p), atol=1e-12)

    def test_rejects_nonpositive_scale(self):
        with self.assertRaises(ValueError):
            Adhm(None, 0.0)


class TestRadialProfile(unittest.TestCase):

    def test_basic_profile_reproduces_basic_connection(self):
        c = RadialProfile.basic(RadialGrid(32))
        p = points(20, 2)
        np.testing.assert_allclose(c.potential(p), basic_connection().potential(p), atol=1e-12)
        np.testing.assert_allclose(c.curvature(p), basic_connection().curvature(p), atol=1e-10)

    def test_from_function(self):
        c = RadialProfile.from_function(lambda s: 1.0 / (s + 0.25), RadialGrid(64))
        p = points(10, 3, 0.7)
        np.testing.assert_allclose(c.potential(p), Adhm(None, 0.5).potential(p), rtol=1e-4, atol=1e-6)

    def test_rejects_bad_nodes(self):
        with self.assertRaises(ProfileSupportError):
            RadialProfile(np.array([0.0, 1.0, 2.0, 3.0]), np.ones(4))
        with self.assertRaises(ProfileSupportError):
            RadialProfile(np.array([0.1, 0.2]), np.ones(2))

    def test_flat_profile(self):
        f, fp = Flat().profile(np.linspace(0, 2, 5))
        self.assertFalse(f.any() or fp.any())


class TestGaugeAction(unittest.TestCase):

    def test_curvature_norm_is_gauge_invariant(self):
        t = GaugeTransform.bump([0.3, -0.2, 0.5], None, 1.5)
        c = gauge_act(t, basic_connection())
        p = points(30, 4, 0.6)
        np.testing.assert_allclose(curvature_norm2(c.curvature(p)),
                                   curvature_norm2(basic_connection().curvature(p)), rtol=1e-5)

    def test_identity_transform(self):
        c = gauge_act(GaugeTransform.identity(), basic_connection())
        p = points(10, 5)
        np.testing.assert_allclose(c.potential(p), basic_connection().potential(p), atol=1e-14)

    def test_bump_support(self):
        p = np.array([[2.0, 0, 0, 0], [0.0, 0, 0, 0]])
        np.testing.assert_allclose(smooth_bump(p, np.zeros(4), 1.0), [0.0, 1.0])


class TestForms(unittest.TestCase):

    def test_form_arithmetic(self):
        a = BumpForm(np.ones((4, 3)), None, 1.0)
        b = FormField(lambda p: np.ones(p.shape[:-1] + (4, 3)))
        p = np.zeros((1, 4))
        np.testing.assert_allclose((a + b)(p), 2.0)
        np.testing.assert_allclose((2.0 * a - b)(p), 1.0)
        np.testing.assert_allclose((-a)(p), -1.0)

    def test_perturbed_curvature_matches_differences(self):
        rng = np.random.default_rng(6)
        c = Perturbed(basic_connection(), BumpForm.random(rng, None, 1.0, 0.3), 0.7)
        p = points(10, 7, 0.3)
        np.testing.assert_allclose(c.curvature(p), curvature_fd(c, p, 1e-4), atol=1e-5)


class TestConstantPotential(unittest.TestCase):

    def test_curvature_is_the_bracket(self):
        values = np.random.default_rng(11).standard_normal((4, 3))
        c = ConstantPotential(values)
        F = c.curvature(points(5, 12))
        expected = bracket(values[:, None, :], values[None, :, :])
        np.testing.assert_allclose(F, np.broadcast_to(expected, F.shape), atol=1e-10)

    def test_commuting_components_are_flat(self):
        c = ConstantPotential(np.outer([1.0, -2.0, 0.5, 3.0], [0.0, 1.0, 0.0]))
        np.testing.assert_allclose(c.curvature(points(5, 13)), 0.0, atol=1e-10)


class TestRadialCurvature(unittest.TestCase):

    def test_constant_profile_is_the_basic_connection(self):
        profile = RadialProfile.basic(RadialGrid(16))
        p = points(20, 14, 0.8)
        np.testing.assert_allclose(radial_curvature(profile, p), basic_connection().curvature(p), atol=1e-10)

    def test_matches_differences_for_a_generic_profile(self):
        profile = RadialProfile.from_function(lambda s: 1.0 / (1.0 + s) + 0.1 * np.exp(-s), RadialGrid(48))
        p = points(10, 15, 0.7)
        np.testing.assert_allclose(radial_curvature(profile, p), curvature_fd(profile, p, 1e-4), atol=1e-5)


class TestLatticeField(unittest.TestCase):

    def setUp(self):
        self.lattice = Lattice4D(2.0, 9)
        self.field = LatticeField.from_model(basic_connection(), self.lattice)

    def test_interpolation_near_origin(self):
        p = points(10, 8, 0.2)
        np.testing.assert_allclose(self.field.potential(p), basic_connection().potential(p), atol=5e-2)

    def test_rejects_points_near_boundary(self):
        with self.assertRaises(OutOfDomain):
            self.field.potential(np.array([[1.99, 0, 0, 0]]))

    def test_save_and_load(self):
        with tempfile.TemporaryDirectory() as d:
            path = os.path.join(d, 'field.bin')
            self.field.save(path)
            self.assertTrue(os.path.isfile(path + '.json'))
            loaded = LatticeField.load(path)
        np.testing.assert_array_equal(loaded.edges, self.field.edges)
        self.assertEqual(loaded.lattice.shape, self.lattice.shape)

    def _patched(self, d, offset, data):
        path = os.path.join(d, 'field.bin')
        self.field.save(path)
        with open(path, 'r+b') as f:
            f.seek(offset)
            f.write(data)
        return path

    def test_load_rejects_other_version(self):
        with tempfile.TemporaryDirectory() as d:
            path = self._patched(d, 4, np.array([7], dtype='<u4').tobytes())
            with self.assertRaises(ValueError):
                LatticeField.load(path)

    def test_load_rejects_inconsistent_spacing(self):
        with tempfile.TemporaryDirectory() as d:
            path = self._patched(d, 16, np.array([0.25], dtype='<f8').tobytes())
            with self.assertRaises(ValueError):
                LatticeField.load(path)

    def test_load_rejects_truncated_body(self):
        with tempfile.TemporaryDirectory() as d:
            path = os.path.join(d, 'field.bin')
            self.field.save(path)
            size = os.path.getsize(path)
            with open(path, 'r+b') as f:
                f.truncate(size - 8)
            with self.assertRaises(ValueError):
                LatticeField.load(path)

    def test_shape_mismatch(self):
        with self.assertRaises(ValueError):
            LatticeField(self.lattice, np.zeros((3, 3, 3, 3, 4, 3)))


if __name__ == '__main__':
    unittest.main(verbosity=2)
