import unittest

import numpy as np

from instantonpy.sphere import BallGrid, SphereGrid, Lattice4D
from instantonpy.connections import (Adhm, BumpForm, Perturbed, Flat, LatticeField, basic_connection,
                                     smooth_bump)
from instantonpy.variational import (partials, christoffel, form_inner, two_form_inner, exterior_covariant,
                                     codifferential, dstar_F, gradient_ym_alpha_lambda, gradient_norm,
                                     gradient_pairing, energy_directional_derivative, jacobi_apply,
                                     adhm_tangent, gauge_direction, polarization_residuals,
                                     commutator_bound_check, poincare_ratio, morrey_norm, form_norm,
                                     ModuliBasis, kernel_project)
from instantonpy.errors import ZeroField


def sample(n=20, seed=0, scale=0.8):
    return scale * np.random.default_rng(seed).standard_normal((n, 4))


class TestStencils(unittest.TestCase):

    def test_partials_of_quadratic(self):
        p = sample()
        d = partials(lambda x: np.sum(x * x, axis=-1), p, 1e-2)
        np.testing.assert_allclose(d, 2.0 * p, atol=1e-10)
        d4 = partials(lambda x: np.sum(x ** 3, axis=-1), p, 1e-2, order=4)
        np.testing.assert_allclose(d4, 3.0 * p ** 2, atol=1e-9)
        with self.assertRaises(ValueError):
            partials(lambda x: x, p, 1e-2, order=3)

    def test_christoffel_symmetric_in_lower_indices(self):
        G = christoffel(sample(5))
        np.testing.assert_allclose(G, np.swapaxes(G, -2, -1), atol=1e-15)

    def test_codifferential_is_adjoint(self):
        c = basic_connection()
        a = BumpForm.random(np.random.default_rng(1), None, 0.9)
        b = BumpForm.random(np.random.default_rng(2), None, 0.9)
        grid = BallGrid(np.zeros(4), 0.9, 16, 12, 8, 12)
        lhs = rhs = 0.0
        for p, w in grid.chunks():
            da = exterior_covariant(c, a, p)
            lhs += two_form_inner(da, exterior_covariant(c, b, p), p, w)
            rhs += form_inner(a(p), codifferential(c, lambda x: exterior_covariant(c, b, x), p), p, w)
        self.assertLess(abs(lhs / rhs - 1.0), 1e-2)


class TestGradient(unittest.TestCase):

    def test_instantons_are_critical(self):
        p = sample(30, 3)
        for c in (basic_connection(), Adhm([0.2, 0.1, 0, -0.1], 0.7)):
            self.assertLess(np.abs(dstar_F(c, p)).max(), 1e-4)
        self.assertEqual(float(np.abs(dstar_F(Flat(), p)).max()), 0.0)

    def test_basic_is_critical_for_untwisted_energy(self):
        g = gradient_ym_alpha_lambda(basic_connection(), 1.5, 1.0, sample(30, 4))
        self.assertLess(np.abs(g.total).max(), 1e-4)

    def test_dilation_twist_moves_gradient(self):
        grid = SphereGrid(6, 4, 4, 6)
        self.assertGreater(gradient_norm(basic_connection(), 1.5, 3.0, grid), 1e-2)

    def test_pairing_matches_energy_difference(self):
        rng = np.random.default_rng(5)
        center = np.array([0.2, 0.0, -0.1, 0.0])
        c = Perturbed(basic_connection(), BumpForm.random(rng, center, 0.8, 0.3))
        direction = BumpForm.random(rng, center, 0.8)
        grid = BallGrid(center, 0.8, 16, 8, 8, 12)
        predicted = gradient_pairing(c, direction, 1.4, 1.5, grid)
        measured = energy_directional_derivative(c, direction, 1.4, 1.5, grid)
        self.assertLess(abs(predicted / measured - 1.0), 1e-2)

    def test_rejects_small_alpha(self):
        with self.assertRaises(ValueError):
            gradient_ym_alpha_lambda(basic_connection(), 0.9, 1.0, sample(2))


class TestJacobi(unittest.TestCase):

    def test_moduli_tangents_in_kernel(self):
        c = basic_connection()
        p = sample(10, 6, 0.6)
        for k in range(5):
            t = adhm_tangent(k)
            size = np.abs(t(p)).max()
            self.assertLess(np.abs(jacobi_apply(c, t, p)).max(), 1e-3 * size)

    def test_gauge_directions_in_kernel(self):
        c = basic_connection()
        amplitude = np.array([0.3, -0.2, 0.1])
        sigma = lambda x: np.exp(-np.sum(x * x, axis=-1))[..., None] * amplitude
        form = gauge_direction(c, sigma)
        p = sample(10, 7, 0.6)
        self.assertLess(np.abs(jacobi_apply(c, form, p)).max(), 1e-3 * np.abs(form(p)).max())

    def test_bochner_form_agrees(self):
        c = basic_connection()
        form = BumpForm.random(np.random.default_rng(8), None, 1.5)
        p = sample(10, 9, 0.4)
        np.testing.assert_allclose(jacobi_apply(c, form, p, bochner=True), jacobi_apply(c, form, p),
                                   atol=1e-3 * np.abs(jacobi_apply(c, form, p)).max())


class TestModuliBasis(unittest.TestCase):

    @classmethod
    def setUpClass(cls):
        cls.lattice = Lattice4D(3.0, 10)
        cls.basis = ModuliBasis(cls.lattice, step=1e-4)

    def test_orthonormal(self):
        np.testing.assert_allclose(self.basis.gram(), np.eye(len(self.basis)), atol=1e-10)

    def test_members_are_fixed_by_projection(self):
        for k, b in enumerate(self.basis.fields()):
            np.testing.assert_allclose(kernel_project(b, self.basis).edges, self.basis.edges[k], atol=1e-10)

    def test_projection_is_idempotent_and_contracts(self):
        xi = np.random.default_rng(31).standard_normal(self.lattice.shape + (4, 3))
        projected = kernel_project(xi, self.basis).edges
        np.testing.assert_allclose(kernel_project(projected, self.basis).edges, projected, atol=1e-10)
        rest = kernel_project(xi - projected, self.basis).edges
        self.assertLess(self.basis.ops.edge_norm(rest), 1e-10 * self.basis.ops.edge_norm(xi))
        self.assertLessEqual(self.basis.ops.edge_norm(projected), self.basis.ops.edge_norm(xi))

    def test_gauge_directions_project_to_zero(self):
        tau = smooth_bump(self.lattice.coords, np.zeros(4), 1.8)[..., None] * np.array([0.5, -1.0, 0.3])
        gauge = self.basis.ops.grad(tau)
        leak = self.basis.ops.edge_norm(kernel_project(gauge, self.basis).edges)
        self.assertLess(leak, 1e-6 * self.basis.ops.edge_norm(gauge))
        for k in range(len(self.basis)):
            self.assertLess(self.basis.gauge_residual(k), 1e-6)

    def test_rejects_other_lattice(self):
        with self.assertRaises(ValueError):
            kernel_project(LatticeField.zeros(Lattice4D(3.0, 8)), self.basis)

    def test_member_residual_converges(self):
        c = basic_connection()
        grid = BallGrid(np.zeros(4), 1.2, 4, 3, 3, 4)
        steps = (0.04, 0.02, 0.01)
        residuals = []
        for h in steps:
            member = self.basis.member(0, h)
            num = den = 0.0
            for points, weights in grid.chunks():
                num += form_norm(jacobi_apply(c, member, points, h), points, weights) ** 2
                den += form_norm(member(points), points, weights) ** 2
            residuals.append(np.sqrt(num / den))
        order = np.polyfit(np.log(steps), np.log(residuals), 1)[0]
        self.assertGreater(order, 1.5)
        self.assertLess(residuals[-1], 1e-2)


class TestIdentities(unittest.TestCase):

    def test_polarization(self):
        f_res, d_res = polarization_residuals(Adhm([0.1, 0, 0.2, 0], 0.9), basic_connection(), sample(10, 10),
                                              h=1e-2)
        self.assertLess(f_res, 1e-5)
        self.assertLess(d_res, 1e-4)

    def test_commutator_margins(self):
        rng = np.random.default_rng(12)
        n = 500
        first, second = commutator_bound_check(rng.standard_normal((n, 4, 3)), rng.standard_normal((n, 4, 4, 3)),
                                               rng.standard_normal((n, 4)))
        self.assertLessEqual(first, 0.0)
        self.assertLessEqual(second, 0.0)


class TestNorms(unittest.TestCase):

    def test_poincare_ratio(self):
        form = BumpForm.random(np.random.default_rng(13), None, 0.5)
        first, second = poincare_ratio(form, nodes=(8, 6, 4, 8))
        self.assertGreater(first, 0.0)
        self.assertGreater(second, 0.0)
        self.assertLess(first, 1.0)

    def test_poincare_ratio_of_zero(self):
        with self.assertRaises(ZeroField):
            poincare_ratio(BumpForm(np.zeros((4, 3))), nodes=(4, 4, 4, 4))

    def test_morrey_norm(self):
        one = lambda x: np.ones(x.shape[:-1])
        small = morrey_norm(one, 1.0, 0.0, [np.zeros(4)], [0.1])
        large = morrey_norm(one, 1.0, 0.0, [np.zeros(4)], [0.1, 0.5])
        self.assertGreater(large, small)
        with self.assertRaises(ValueError):
            morrey_norm(one, 0.5, 0.0, [np.zeros(4)], [0.1])


if __name__ == '__main__':
    unittest.main(verbosity=2)
