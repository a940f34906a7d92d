import os
import tempfile
import unittest

import numpy as np
import pandas as pd

from instantonpy.sphere import RadialGrid
from instantonpy.connections import Adhm, basic_connection
from instantonpy.energy import basic_alpha_energy, ym_alpha
from instantonpy.flow import (TRAJECTORY_COLUMNS, FlowConfig, RadialAnsatz, initial_state, flow_step, run_flow,
                              distance_to_basic, perturbed_basic, ansatz_closure_residual)
from instantonpy.errors import ConfigError, FlowNotConverged


class TestConfig(unittest.TestCase):

    def test_validation(self):
        with self.assertRaises(ConfigError):
            FlowConfig(alpha=0.5)
        with self.assertRaises(ConfigError):
            FlowConfig(dt_init=1e-3, dt_min=1e-2)
        with self.assertRaises(ConfigError):
            FlowConfig(modes=8, nodes=10)
        self.assertEqual(FlowConfig().to_dict()['alpha'], 1.1)


class TestAnsatz(unittest.TestCase):

    def setUp(self):
        self.ansatz = RadialAnsatz(basic_connection(), modes=4, nodes=32)

    def test_zero_coefficients_give_basic_energy(self):
        E = self.ansatz.energy(np.zeros(4), 1.3, 1.0)
        self.assertAlmostEqual(E / basic_alpha_energy(1.3), 1.0, places=10)

    def test_energy_matches_general_quadrature(self):
        c = np.array([0.05, -0.02, 0.01, 0.03])
        E = self.ansatz.energy(c, 1.5, 1.0)
        general = ym_alpha(self.ansatz.connection(c), 1.5, grid=RadialGrid(32)).value
        self.assertAlmostEqual(E / general, 1.0, places=8)

    def test_gradient_matches_differences(self):
        c = np.array([0.05, -0.02, 0.01, 0.03])
        g = self.ansatz.gradient(c, 1.5, 2.0)
        h = 1e-5
        fd = np.array([(self.ansatz.energy(c + h * e, 1.5, 2.0) - self.ansatz.energy(c - h * e, 1.5, 2.0)) / (2 * h)
                       for e in np.eye(4)])
        np.testing.assert_allclose(g, fd, rtol=1e-5, atol=1e-5)

    def test_metric_positive_definite(self):
        self.assertTrue(np.all(np.linalg.eigvalsh(self.ansatz.metric) > 0))

    def test_rejects_non_radial_start(self):
        with self.assertRaises(ValueError):
            RadialAnsatz(Adhm([0.1, 0, 0, 0], 1.0))


class TestFlow(unittest.TestCase):

    def test_step_decreases_energy(self):
        cfg = FlowConfig(alpha=1.2, modes=4, nodes=32)
        state = initial_state(perturbed_basic(0.1, [1.0, 0.5, -0.3, 0.2], nodes=32), cfg)
        before = state.history[-1]['energy']
        flow_step(state, cfg)
        self.assertLess(state.history[-1]['energy'], before)
        self.assertGreater(state.t, 0.0)

    def test_flow_returns_to_basic(self):
        cfg = FlowConfig(alpha=1.1, modes=4, nodes=32, grad_tol=1e-5, dt_init=5e-2, stall_steps=20,
                         dist_tol=1e-6, max_time=200.0)
        c0 = perturbed_basic(0.05, [1.0, -0.4, 0.2, 0.1], nodes=32)
        with tempfile.TemporaryDirectory() as d:
            path = os.path.join(d, 'trajectory.csv')
            state = run_flow(c0, cfg, trajectory_path=path)
            frame = pd.read_csv(path)
        self.assertEqual(list(frame.columns), TRAJECTORY_COLUMNS)
        energies = state.energies
        self.assertTrue(np.all(np.diff(energies) <= 1e-12 * energies[:-1]))
        self.assertLess(state.history[-1]['dist_conn'], 1e-3)
        self.assertAlmostEqual(energies[-1], basic_alpha_energy(1.1), places=4)
        np.testing.assert_allclose(frame['charge'], 1.0, atol=1e-5)

    def test_out_of_time(self):
        cfg = FlowConfig(alpha=1.1, modes=4, nodes=32, max_time=1e-2, dt_init=1e-2)
        with self.assertRaises(FlowNotConverged):
            run_flow(perturbed_basic(0.1, [1.0, 0.0, 0.0, 0.0], nodes=32), cfg)


class TestDiagnostics(unittest.TestCase):

    def test_distance_of_basic_is_zero(self):
        conn, curv = distance_to_basic(basic_connection())
        self.assertAlmostEqual(conn, 0.0)
        self.assertAlmostEqual(curv, 0.0)

    def test_distance_grows_with_perturbation(self):
        small = distance_to_basic(perturbed_basic(0.01, [1.0, 1.0], nodes=32))[0]
        large = distance_to_basic(perturbed_basic(0.1, [1.0, 1.0], nodes=32))[0]
        self.assertAlmostEqual(large / small, 10.0, places=6)

    def test_perturbation_keeps_north_pole_value(self):
        c = perturbed_basic(0.3, rng=np.random.default_rng(0), nodes=32)
        self.assertAlmostEqual(float(c.spline(np.pi)), 1.0, places=6)

    def test_symmetric_ansatz_is_closed(self):
        c = perturbed_basic(0.1, [1.0, -1.0], nodes=32)
        self.assertLess(ansatz_closure_residual(c, 1.5, 1.0), 1e-3)


if __name__ == '__main__':
    unittest.main(verbosity=2)
