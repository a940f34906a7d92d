"""
Acceptance suite behind ``instantonpy verify``.

Every check is a function registered with ``@check(id, anchor)``; it receives
the run Settings and its own random generator and returns a Check.  The
suite records crashes as failed checks instead of stopping.
"""
from functools import wraps
import json
import logging
import time

import numpy as np
import pandas as pd

from instantonpy import __version__
from instantonpy.sphere import RadialGrid, SphereGrid, BallGrid, Lattice4D, ConformalMap, form2_weight
from instantonpy.sphere import grad_log_chi, conformal_factor, hodge_split
from instantonpy.connections import (Adhm, BumpForm, Perturbed, GaugeTransform, basic_connection, dilate,
                                     curvature_norm2, smooth_bump, gauge_act, pullback)
from instantonpy.energy import (basic_alpha_energy, ym_alpha, ym_alpha_lambda, topological_charge,
                                lp_curvature_norm, round_norm2, integrate)
from instantonpy.dilation import (ROUTES, ANGULAR_BOX, pullback_energy_report, G_of_sigma, G_prime,
                                  verify_gap_bounds, chi_sobolev_norms, fit_grad_log_chi, derivative_gap_bounds)
from instantonpy.variational import (dstar_F, polarization_residuals, commutator_bound_check,
                                     gradient_pairing, energy_directional_derivative, jacobi_apply,
                                     form_norm, ModuliBasis, kernel_project)
from instantonpy.flow import run_flow, perturbed_basic
from instantonpy.coulomb import (coulomb_project, commute_check, gauge_act_lattice, basic_field,
                                 minimize_conformal_distance)

REPORT_VERSION = 1
ALPHAS = (1.0, 1.1, 1.5, 2.0)

REGISTRY = []


class Check(object):
    """ outcome of one acceptance check """

    def __init__(self, id, anchor, value, target, tolerance, passed, details=None, runtime=0.0):
        self.id = id
        self.anchor = anchor
        self.value = _plain(value)
        self.target = _plain(target)
        self.tolerance = _plain(tolerance)
        self.passed = bool(passed)
        self.details = _plain(details or {})
        self.runtime = float(runtime)

    def to_dict(self, timings=False):
        out = {'id': self.id, 'anchor': self.anchor, 'value': self.value, 'target': self.target,
               'tolerance': self.tolerance, 'passed': self.passed, 'details': self.details}
        if timings:
            out['runtime'] = self.runtime
        return out


def _plain(value):
    """ numpy scalars and arrays to JSON-friendly python values """
    if isinstance(value, dict):
        return {str(k): _plain(v) for k, v in value.items()}
    if isinstance(value, (list, tuple)):
        return [_plain(v) for v in value]
    if isinstance(value, np.ndarray):
        return _plain(value.tolist())
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, (np.integer,)):
        return int(value)
    if isinstance(value, (np.floating, float)):
        value = float(value)
        return value if np.isfinite(value) else repr(value)
    return value


class VerificationReport(object):
    """ the list of checks of one suite run with its settings """

    def __init__(self, settings, checks=None):
        self.settings = settings
        self.checks = list(checks or [])

    def add(self, check):
        self.checks.append(check)

    @property
    def passed(self):
        return bool(self.checks) and all(c.passed for c in self.checks)

    @property
    def failed(self):
        return [c.id for c in self.checks if not c.passed]

    def to_dict(self, timings=False):
        return {'version': REPORT_VERSION, 'instantonpy': __version__,
                'settings': _plain(self.settings.to_dict()), 'passed': self.passed,
                'checks': [c.to_dict(timings) for c in self.checks]}

    def to_json(self, timings=False):
        return json.dumps(self.to_dict(timings), sort_keys=True, indent=2)

    def to_frame(self):
        return pd.DataFrame([{'id': c.id, 'passed': c.passed, 'value': c.value, 'runtime': c.runtime}
                             for c in self.checks])

    def save(self, path, timings=False):
        with open(path, 'w') as f:
            f.write(self.to_json(timings))
            f.write('\n')
        logging.info("Verification report written to {}".format(path))


def check(id, anchor):
    """ register a check function under ``id`` with a descriptive anchor """
    def decorator(func):
        @wraps(func)
        def wrapper(settings, rng):
            value, target, tolerance, passed, details = func(settings, rng)
            return Check(id, anchor, value, target, tolerance, passed, details)
        wrapper.check_id = id
        wrapper.anchor = anchor
        REGISTRY.append(wrapper)
        return wrapper
    return decorator


def _relative(a, b):
    return abs(a - b) / max(abs(b), 1e-300)


def _order(errors, steps):
    """ observed convergence orders between consecutive step sizes """
    return [float(np.log(e0 / e1) / np.log(h0 / h1))
            for e0, e1, h0, h1 in zip(errors[:-1], errors[1:], steps[:-1], steps[1:])]


@check('energy.basic_value', 'alpha-energy of the basic connection equals 6^alpha (4/3) pi^2')
def basic_energy_value(settings, rng):
    grid = RadialGrid(settings.radial_nodes)
    errors = {a: _relative(ym_alpha(basic_connection(), a, grid=grid).value, basic_alpha_energy(a))
              for a in ALPHAS}
    worst = max(errors.values())
    return worst, 0.0, settings.tolerance, worst <= settings.tolerance, {'relative_errors': errors}


@check('energy.adhm_l2_norm', 'every ADHM instanton has ||F||^2 = 8 pi^2')
def adhm_l2_norm(settings, rng):
    grid = SphereGrid(*settings.sphere_nodes)
    samples, errors = [], []
    for _ in range(5):
        xi = rng.uniform(-0.3, 0.3, 4)
        lam = float(rng.uniform(0.7, 1.5))
        value = lp_curvature_norm(Adhm(xi, lam), 2.0, grid=grid) ** 2
        samples.append({'xi': xi, 'lambda': lam, 'norm2': value})
        errors.append(_relative(value, 8.0 * np.pi ** 2))
    worst = max(errors)
    return worst, 0.0, settings.tolerance, worst <= settings.tolerance, {'samples': samples}


@check('energy.basic_pointwise', 'the basic connection has |F|^2 = 3 everywhere')
def basic_pointwise(settings, rng):
    points = rng.standard_normal((1000, 4))
    worst = float(np.abs(round_norm2(basic_connection(), points) - 3.0).max())
    return worst, 0.0, 1e-12, worst <= 1e-12, {'points': 1000}


def _decorate(c, rng):
    """ random gauge bump followed by a random rotation, dilation and translation pullback """
    t = GaugeTransform.bump(rng.uniform(-0.5, 0.5, 3), rng.uniform(-0.3, 0.3, 4), float(rng.uniform(0.8, 1.5)))
    p, q = rng.standard_normal((2, 4))
    m = ConformalMap(xi2=rng.uniform(-0.2, 0.2, 4), lam=float(np.exp(rng.uniform(-0.2, 0.2))),
                     p=p / np.linalg.norm(p), q=q / np.linalg.norm(q))
    return pullback(m, gauge_act(t, c))


@check('energy.lower_bound', 'YM_alpha(c) >= 6^alpha (4/3) pi^2 for every connection')
def lower_bound(settings, rng):
    grid = RadialGrid(settings.radial_nodes)
    worst = np.inf
    for k in range(settings.n_random):
        eps = float(rng.uniform(0.0, 0.5))
        c = perturbed_basic(eps, rng=rng, nodes=settings.radial_nodes)
        for alpha in ALPHAS:
            margin = ym_alpha(c, alpha, grid=grid).value - basic_alpha_energy(alpha)
            worst = min(worst, margin)
    sphere = SphereGrid(24, 16, 12, 16)
    decorated = []
    for k in range(6):
        eps = float(rng.uniform(0.2, 0.5))
        c = _decorate(perturbed_basic(eps, rng=rng, nodes=settings.radial_nodes), rng)
        for alpha in ALPHAS:
            report = ym_alpha(c, alpha, grid=sphere)
            margin = report.value - basic_alpha_energy(alpha)
            decorated.append({'eps': eps, 'alpha': alpha, 'margin': margin, 'residual': report.residual})
            worst = min(worst, margin + report.residual)
    return worst, 0.0, 1e-6, worst >= -1e-6, {'connections': settings.n_random, 'decorated': decorated,
                                              'alphas': ALPHAS}


@check('charge.basic', 'the basic connection has charge one and anti-self-dual curvature')
def basic_charge(settings, rng):
    c = basic_connection()
    grid = RadialGrid(settings.radial_nodes)
    charge = topological_charge(c, grid=grid)
    translated = topological_charge(Adhm(rng.uniform(-0.3, 0.3, 4), 1.0),
                                    grid=SphereGrid(*settings.sphere_nodes))

    def self_dual(p):
        plus, _ = hodge_split(c.curvature(p))
        return curvature_norm2(plus) * form2_weight(p)

    plus_norm = float(np.sqrt(max(integrate(self_dual, grid)[0], 0.0)))
    worst = max(abs(charge - 1.0), abs(translated - 1.0))
    passed = worst <= settings.tolerance and plus_norm <= 1e-8
    return worst, 1.0, settings.tolerance, passed, {'charge': charge, 'translated_charge': translated,
                                                     'self_dual_norm': plus_norm}


@check('energy.dilation_symmetry', 'YM_alpha(c) = YM_{alpha,lambda}(lambda^* c) and lambda <-> 1/lambda')
def dilation_symmetry(settings, rng):
    grid = RadialGrid(4 * settings.radial_nodes)
    basic = basic_connection()
    rows = []
    worst = 0.0
    for alpha in ALPHAS:
        for lam in (1.5, 2.0, 3.0, 5.0):
            twisted = ym_alpha_lambda(dilate(basic, lam), alpha, lam, grid=grid).value
            forward = ym_alpha_lambda(basic, alpha, lam, grid=grid).value
            backward = ym_alpha_lambda(basic, alpha, 1.0 / lam, grid=grid).value
            e1 = _relative(twisted, basic_alpha_energy(alpha))
            e2 = _relative(forward, backward)
            worst = max(worst, e1, e2)
            rows.append({'alpha': alpha, 'lambda': lam, 'isometry': e1, 'inversion': e2})
    return worst, 0.0, settings.tolerance, worst <= settings.tolerance, {'samples': rows}


PROFILE_ALPHAS = (1.1, 1.3, 1.5, 1.7, 2.0)
PROFILE_LAMBDAS = (1.5, 2.0, 5.0, 10.0, 100.0)


@check('profile.routes', 'three quadrature routes for the dilated basic energy agree')
def profile_routes(settings, rng):
    worst = 0.0
    for alpha in PROFILE_ALPHAS:
        for lam in PROFILE_LAMBDAS:
            values = [pullback_energy_report(alpha, lam, route)[0] for route in ROUTES]
            for i in range(len(values)):
                for j in range(i + 1, len(values)):
                    worst = max(worst, _relative(values[i], values[j]))
    return worst, 0.0, settings.tolerance, worst <= settings.tolerance, {'routes': ROUTES}


@check('profile.derivative', 'the profile derivative G\' matches differences of G and is positive')
def profile_derivative(settings, rng):
    worst, smallest = 0.0, np.inf
    for alpha in PROFILE_ALPHAS:
        beta = alpha - 1.0
        for lam in PROFILE_LAMBDAS:
            sigma = beta * np.log(lam)
            d = 1e-4 * sigma
            fd = (G_of_sigma(sigma + d, beta) - G_of_sigma(sigma - d, beta)) / (2.0 * d)
            exact = G_prime(sigma, beta)
            worst = max(worst, _relative(fd, exact))
            smallest = min(smallest, exact)
    passed = worst <= 1e-6 and smallest > 0
    return worst, 0.0, 1e-6, passed, {'smallest_derivative': smallest}


@check('profile.gap_bounds', 'the gap is nonnegative with positive regime constants')
def profile_gap_bounds(settings, rng):
    samples = [(a, l) for a in PROFILE_ALPHAS for l in (1.0, 1.05, 1.2) + PROFILE_LAMBDAS + (1e4,)]
    report = verify_gap_bounds(samples)
    smallest_gap = float(report.frame['gap'].min())
    passed = report.passed and smallest_gap >= 0.0
    return smallest_gap, 0.0, 0.0, passed, report.to_dict()


@check('profile.derivative_gap', 'derivative gap at perturbed basic connections is bounded by curvature differences')
def profile_derivative_gap(settings, rng):
    grid = RadialGrid(settings.radial_nodes)
    coefficients = rng.standard_normal(4)
    rows = []
    for eps in (0.1, 0.03, 0.01):
        c = perturbed_basic(eps, coefficients, nodes=settings.radial_nodes)
        for alpha in (1.1, 1.5):
            for lam in (1.5, 3.0):
                row = derivative_gap_bounds(c, alpha, lam, grid=grid).to_dict()
                row['eps'] = eps
                rows.append(row)
    frame = pd.DataFrame(rows)
    finite = bool(np.all(np.isfinite(frame[['lhs', 'first_term', 'second_term']].values)))
    positive = bool((frame['first_term'] + frame['second_term'] > 0).all())
    by_eps = frame.groupby('eps')['ratio'].max()
    constant = float(frame['ratio'].max()) if finite and positive else np.inf
    # the fitted constant must not blow up as the perturbation shrinks
    stable = bool(by_eps.loc[0.01] <= 10.0 * max(by_eps.loc[0.1], 1e-12))
    passed = finite and positive and stable and np.isfinite(constant)
    return constant, 0.0, 0.0, passed, {'fitted_constant': constant,
                                        'constant_by_eps': {str(k): float(v) for k, v in by_eps.items()},
                                        'samples': frame.to_dict('records')}


@check('chi.gradient_norm', 'L2 norm of grad log chi_lambda against its exact law and a second quadrature route')
def chi_gradient_norm(settings, rng):
    grid = RadialGrid(4 * settings.radial_nodes)
    rows = []
    worst, worst_route = 0.0, 0.0
    for lam in (1.1, 1.5, 2.0, 10.0, 100.0):
        report = chi_sobolev_norms(lam)

        def integrand(p):
            return np.sum(grad_log_chi(p, lam) ** 2, axis=-1) / conformal_factor(p) ** 2

        round_norm, _ = integrate(integrand, grid)
        # the polar route integrates over the angular box instead of the round S^3
        direct = float(np.sqrt(round_norm * ANGULAR_BOX / (8.0 * np.pi ** 2)))
        exact_error = _relative(report.grad_norm, report.exact)
        route_error = _relative(report.grad_norm, direct)
        worst = max(worst, exact_error)
        if lam <= 10.0:
            worst_route = max(worst_route, route_error)
        rows.append({'lambda': lam, 'polar': report.grad_norm, 'round': direct, 'exact': report.exact,
                     'exact_error': exact_error, 'route_error': route_error,
                     'closed_form': report.closed_form,
                     'closed_form_ratio': report.grad_norm / report.closed_form})
    fit = fit_grad_log_chi(np.geomspace(1.1, 100.0, 12))
    tol = max(settings.tolerance, 1e-10)
    passed = worst <= tol and worst_route <= 1e-6
    return worst, 0.0, tol, passed, {'samples': rows, 'route_error': worst_route, 'exponent_fit': fit}


@check('chi.regime_constants', 'log chi_lambda Sobolev norms are bounded by log and sqrt-log regimes')
def chi_regime_constants(settings, rng):
    rows = [chi_sobolev_norms(lam).to_dict() for lam in (1.2, 1.5, 2.0, 10.0, 100.0, 1000.0)]
    constants = {}
    for row in rows:
        constants.setdefault(row['regime'], []).append(row['fitted_constant'])
    fitted = {k: max(v) for k, v in constants.items()}
    smallest = min(min(v) for v in constants.values())
    return smallest, 0.0, 0.0, smallest > 0 and all(np.isfinite(list(fitted.values()))), \
        {'fitted': fitted, 'samples': rows}


@check('variational.gradient', 'analytic gradient of YM_{alpha,lambda} matches energy differences')
def variational_gradient(settings, rng):
    rows = []
    num, den = 0.0, 0.0
    for _ in range(10):
        center = rng.uniform(-0.5, 0.5, 4)
        width = 0.8
        c = Perturbed(basic_connection(), BumpForm.random(rng, center, width, 0.3))
        direction = BumpForm.random(rng, center, width)
        alpha = float(rng.uniform(1.0, 2.0))
        lam = float(rng.uniform(1.0, 3.0))
        grid = BallGrid(center, width, 20, 10, 10, 14)
        predicted = gradient_pairing(c, direction, alpha, lam, grid, h=settings.fd_step)
        measured = energy_directional_derivative(c, direction, alpha, lam, grid)
        num += (predicted - measured) ** 2
        den += measured ** 2
        rows.append({'alpha': alpha, 'lambda': lam, 'predicted': predicted, 'measured': measured})
    error = float(np.sqrt(num / den))
    return error, 0.0, 1e-3, error <= 1e-3, {'samples': rows}


@check('variational.dstar_order', 'D^*F of an ADHM instanton vanishes at second order in the stencil')
def dstar_order(settings, rng):
    c = Adhm(rng.uniform(-0.3, 0.3, 4), float(rng.uniform(0.8, 1.2)))
    points = rng.uniform(-1.0, 1.0, (200, 4))
    steps = [0.04, 0.02, 0.01]
    errors = [float(np.abs(dstar_F(c, points, h)).max()) for h in steps]
    orders = _order(errors, steps)
    return min(orders), 2.0, 0.1, min(orders) >= 1.9, {'steps': steps, 'errors': errors}


@check('variational.polarization', 'curvature and D^*F expansions in the connection difference')
def polarization(settings, rng):
    c1 = Adhm(rng.uniform(-0.3, 0.3, 4), float(rng.uniform(0.8, 1.2)))
    c2 = basic_connection()
    points = rng.uniform(-1.0, 1.0, (100, 4))
    steps = [0.04, 0.02]
    residuals = [polarization_residuals(c1, c2, points, h, order=2) for h in steps]
    orders = [_order([r[k] for r in residuals], steps)[0] for k in range(2)]
    return min(orders), 2.0, 0.2, min(orders) >= 1.8, {'steps': steps, 'residuals': residuals}


@check('variational.commutator', 'commutator estimates against the basic curvature')
def commutator(settings, rng):
    n = 10000
    points = rng.standard_normal((n, 4))
    A = rng.standard_normal((n, 4, 3))
    B = rng.standard_normal((n, 4, 4, 3))
    first, second = commutator_bound_check(A, B, points)
    worst = max(first, second)
    return worst, 0.0, 0.0, worst <= 0.0, {'draws': n, 'margins': [first, second]}


KERNEL_STEPS = (0.04, 0.02, 0.01)


def _kernel_residual(basis, h):
    c = basic_connection()
    grid = BallGrid(np.zeros(4), 1.5, 6, 4, 4, 6)
    worst = 0.0
    for k in range(len(basis)):
        member = basis.member(k, h)
        num = den = 0.0
        for points, weights in grid.chunks(1024):
            num += form_norm(jacobi_apply(c, member, points, h), points, weights) ** 2
            den += form_norm(member(points), points, weights) ** 2
        worst = max(worst, float(np.sqrt(num / den)))
    return worst


@check('jacobi.kernel', 'moduli directions lie in the kernel of the Jacobi operator')
def jacobi_kernel(settings, rng):
    lattice = settings.lattice()
    basis = ModuliBasis(lattice, step=1e-4)
    residuals = [_kernel_residual(basis, h) for h in KERNEL_STEPS]
    order = float(np.polyfit(np.log(KERNEL_STEPS), np.log(residuals), 1)[0])
    fine = _kernel_residual(basis, settings.fd_step)
    # the kernel directions carry no gauge motion: projecting a gauge direction gives nothing
    tau = smooth_bump(lattice.coords, np.zeros(4), 0.6 * lattice.half_width)[..., None] * rng.standard_normal(3)
    gauge = basis.ops.grad(tau)
    leak = basis.ops.edge_norm(kernel_project(gauge, basis).edges) / basis.ops.edge_norm(gauge)
    gram = float(np.abs(basis.gram() - np.eye(len(basis))).max())
    passed = fine <= 1e-2 and order >= 1.5 and leak <= 1e-6 and gram <= 1e-8
    return fine, 0.0, 1e-2, passed, {'steps': list(KERNEL_STEPS), 'residuals': residuals, 'order': order,
                                     'fd_step': settings.fd_step, 'gauge_leak': leak, 'gram_defect': gram}


@check('flow.convergence', 'alpha-flow from nearby radial connections converges to the basic one')
def flow_convergence(settings, rng):
    alpha = settings.flow_alpha
    target = basic_alpha_energy(alpha)
    grid = RadialGrid(settings.radial_nodes)
    runs = []
    passed = True
    for _ in range(5):
        coefficients = rng.standard_normal(4)
        eps = 0.05
        c0 = perturbed_basic(eps, coefficients, nodes=settings.radial_nodes)
        while ym_alpha(c0, alpha, grid=grid).value > target + 0.1:
            eps *= 0.5
            c0 = perturbed_basic(eps, coefficients, nodes=settings.radial_nodes)
        state = run_flow(c0, settings.flow_config(log_every=10, dist_tol=1e-6))
        energies = state.energies
        monotone = bool(np.all(np.diff(energies) <= 1e-12 * np.abs(energies[:-1])))
        final = state.history[-1]
        ok = monotone and final['dist_conn'] <= 1e-3 and abs(final['energy'] - target) <= 1e-4
        passed = passed and ok
        runs.append({'eps': eps, 'time': state.t, 'steps': state.steps, 'energy': final['energy'],
                     'distance': final['dist_conn'], 'monotone': monotone})
    worst = max(r['distance'] for r in runs)
    return worst, 0.0, 1e-3, passed, {'runs': runs}


def _decorated_basic(lattice, rng):
    amplitude = rng.uniform(-0.5, 0.5, 3)
    sigma = smooth_bump(lattice.coords, np.zeros(4), 0.6 * lattice.half_width)[..., None] * amplitude
    return gauge_act_lattice(basic_field(lattice), sigma)


@check('coulomb.round_trip', 'Coulomb projection recovers the basic connection from a gauge orbit')
def coulomb_round_trip(settings, rng):
    lattice = settings.lattice()
    result = coulomb_project(_decorated_basic(lattice, rng), tol=settings.coulomb_tol,
                             max_outer=settings.coulomb_max_outer, lattice=lattice)
    distance = result.distance()
    passed = result.converged and result.residual <= settings.coulomb_tol and distance <= 1e-6 \
        and result.contraction < 1.0
    return distance, 0.0, 1e-6, passed, result.to_dict()


@check('coulomb.commutation', 'Coulomb projection commutes with rotations, and with dilations on gauge orbits')
def coulomb_commutation(settings, rng):
    lattice = settings.lattice()
    field = _decorated_basic(lattice, rng)
    tol = settings.coulomb_tol
    rotation = commute_check(field, ConformalMap.rotation([0.0, 1.0, 0.0, 0.0]), tol, lattice,
                             max_outer=settings.coulomb_max_outer)
    # lam^* basic - basic is radial and already in Coulomb gauge, so dilations commute on the orbit of
    # the basic connection up to the lattice discretization
    dilation = ConformalMap.dilation(1.1)
    orbit = gauge_act(GaugeTransform.bump(rng.uniform(-0.5, 0.5, 3), None, 0.6 * lattice.half_width),
                      basic_connection())
    n = max(settings.lattice_nodes, 16)
    nodes = [n - 8, n - 4, n]
    steps, orbit_values = [], []
    for count in nodes:
        grid = Lattice4D(settings.lattice_half_width, count)
        steps.append(grid.h)
        orbit_values.append(commute_check(orbit, dilation, tol, grid, max_outer=settings.coulomb_max_outer,
                                          check_support=False))
    if max(orbit_values) <= 10.0 * tol:
        order = np.inf
    else:
        order = float(np.polyfit(np.log(steps), np.log(orbit_values), 1)[0])
    converging = max(orbit_values) <= 10.0 * tol or (order >= 1.0 and orbit_values[-1] < orbit_values[0])
    bump = BumpForm.random(rng, np.zeros(4), 1.0, 0.05)
    generic = commute_check(Perturbed(basic_connection(), bump), dilation, tol, lattice,
                            max_outer=settings.coulomb_max_outer)
    if generic > 10.0 * tol:
        logging.warning("Coulomb projection of a perturbed basic connection does not commute with the "
                        "dilation: {:.3e} > {:.1e}".format(generic, 10.0 * tol))
    passed = rotation <= 10.0 * tol and converging
    return rotation, 0.0, 10.0 * tol, passed, {
        'dilation_orbit': {'nodes': nodes, 'h': steps, 'values': orbit_values, 'order': order},
        'dilation_generic': generic, 'dilation_generic_within_tolerance': generic <= 10.0 * tol}


@check('coulomb.bootstrap', 'projected distance is controlled by the curvature distance')
def coulomb_bootstrap(settings, rng):
    lattice = settings.lattice()
    bump = BumpForm.random(rng, np.zeros(4), 1.2)
    ratios = []
    for eps in (0.02, 0.05, 0.1):
        result = coulomb_project(Perturbed(basic_connection(), bump, eps), tol=settings.coulomb_tol,
                                 max_outer=settings.coulomb_max_outer, lattice=lattice)
        ratios.append(result.distance() / result.curvature_distance())
    constant = max(ratios)
    passed = all(np.isfinite(ratios)) and constant <= 10.0 * min(ratios)
    return constant, 0.0, 10.0, passed, {'ratios': ratios}


@check('coulomb.z_recovery', 'minimising the conformal distance recovers a planted map')
def z_recovery(settings, rng):
    lam = float(rng.uniform(0.8, 1.25))
    xi = rng.uniform(-0.1, 0.1, 4)
    lattice = Lattice4D(settings.lattice_half_width, 10)
    report = minimize_conformal_distance(Adhm(xi, lam), lattice=lattice, tol=settings.coulomb_tol,
                                         maxfev=600)
    planted = np.concatenate([[lam], xi])
    error = float(np.abs(np.asarray(report.parameters) - planted).max())
    return error, 0.0, 1e-3, error <= 1e-3, {'planted': planted, 'found': report.parameters,
                                             'Z': report.value}


def check_ids():
    return [f.check_id for f in REGISTRY]


def run_suite(settings, only=None):
    """Run the registered checks.

    Parameters
    ----------
    settings : Settings
    only : list of str, optional
        check ids (or id prefixes such as 'coulomb') to run

    Returns
    -------
    VerificationReport
    """
    streams = settings.streams(len(REGISTRY))
    report = VerificationReport(settings)
    for func, rng in zip(REGISTRY, streams):
        if only and not any(func.check_id == o or func.check_id.startswith(o + '.') for o in only):
            continue
        logging.info("Running check {}".format(func.check_id))
        start = time.perf_counter()
        try:
            result = func(settings, rng)
        except Exception as e:
            logging.exception("Check {} crashed".format(func.check_id))
            result = Check(func.check_id, func.anchor, None, None, None, False,
                           {'error': "{}: {}".format(type(e).__name__, e)})
        result.runtime = time.perf_counter() - start
        logging.info("{} {} ({:.1f} s)".format(func.check_id, "passed" if result.passed else "FAILED",
                                              result.runtime))
        report.add(result)
    return report
