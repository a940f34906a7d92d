import json
import unittest
from unittest import mock

import numpy as np

from instantonpy.config import Settings
from instantonpy import verify
from instantonpy.verify import Check, VerificationReport, run_suite, check_ids


class TestReport(unittest.TestCase):

    def test_check_serialisation(self):
        c = Check('x.y', 'anchor', np.float64(1.5), 0.0, 1e-3, np.bool_(True), {'a': np.arange(2)}, runtime=2.0)
        d = c.to_dict()
        self.assertNotIn('runtime', d)
        self.assertEqual(d['details'], {'a': [0, 1]})
        self.assertEqual(c.to_dict(timings=True)['runtime'], 2.0)

    def test_overall_pass(self):
        report = VerificationReport(Settings())
        self.assertFalse(report.passed)
        report.add(Check('a', '', 0.0, 0.0, 0.0, True))
        self.assertTrue(report.passed)
        report.add(Check('b', '', 0.0, 0.0, 0.0, False))
        self.assertFalse(report.passed)
        self.assertEqual(report.failed, ['b'])
        self.assertEqual(json.loads(report.to_json())['checks'][1]['id'], 'b')

    def test_non_finite_values_are_strings(self):
        self.assertEqual(Check('a', '', np.inf, 0.0, 0.0, False).value, 'inf')


class TestSuite(unittest.TestCase):

    def test_ids_are_unique_and_anchored(self):
        ids = check_ids()
        self.assertEqual(len(ids), len(set(ids)))
        self.assertTrue(all(f.anchor for f in verify.REGISTRY))

    def test_subset_by_prefix(self):
        report = run_suite(Settings(), only=['energy.basic_pointwise', 'profile.derivative'])
        self.assertEqual([c.id for c in report.checks], ['energy.basic_pointwise', 'profile.derivative'])
        self.assertTrue(report.passed)

    def test_deterministic(self):
        a = run_suite(Settings(seed=5), only=['energy.basic_pointwise']).to_json()
        b = run_suite(Settings(seed=5), only=['energy.basic_pointwise']).to_json()
        self.assertEqual(a, b)

    def test_crash_is_recorded(self):
        def broken(settings, rng):
            raise RuntimeError("boom")
        broken.check_id = 'broken.check'
        broken.anchor = 'always crashes'
        with mock.patch.object(verify, 'REGISTRY', [broken]):
            report = run_suite(Settings())
        self.assertFalse(report.passed)
        self.assertIn('boom', report.checks[0].details['error'])


if __name__ == '__main__':
    unittest.main(verbosity=2)
