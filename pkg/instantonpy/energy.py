"""
Yang-Mills energies, curvature L^p norms and the topological charge.

All integrals are taken over the round unit 4-sphere.  The quadrature route
follows the model: radially symmetric analytic models use the 1-D polar rule,
lattice fields use the lattice rule and every other analytic model uses the
product sphere rule.  Each report carries the node-halving residual.
"""
import json
import logging

import numpy as np

from instantonpy.sphere import (RadialGrid, SphereGrid, chi_lambda, form2_weight, round_weight,
                                hodge_split, EPSILON)
from instantonpy.connections import curvature_fd, curvature_norm2
from instantonpy.decorators import require_alpha, require_positive
from instantonpy.errors import QuadratureNotConverged

# tr(F ^ F) density against Lebesgue measure is CHARGE_CALIBRATION * eps_ijkl <F_ij, F_kl>;
# with this value the basic connection has charge one
CHARGE_CALIBRATION = -0.5

ROUTES = ('auto', 'radial', 'sphere', 'lattice')

DEFAULT_RADIAL_NODES = 64
DEFAULT_SPHERE_NODES = (40, 24, 20, 32)


def basic_alpha_energy(alpha):
    """The alpha-energy of the basic connection, 6^alpha (4/3) pi^2.

    Examples
    --------
    >>> round(basic_alpha_energy(1.0), 6)
    78.956835
    """
    return 6.0 ** alpha * 4.0 / 3.0 * np.pi ** 2


class EnergyReport(object):
    """ value of an integral over S^4 with its quadrature residual and grid """

    def __init__(self, value, alpha=1.0, lam=1.0, residual=0.0, grid=None, kind='ym'):
        self.value = float(value)
        self.alpha = float(alpha)
        self.lam = float(lam)
        self.residual = float(residual)
        self.grid = grid or {}
        self.kind = kind

    def to_dict(self):
        return {'kind': self.kind, 'value': self.value, 'alpha': self.alpha, 'lambda': self.lam,
                'residual': self.residual, 'grid': self.grid}

    def to_json(self, **kw):
        return json.dumps(self.to_dict(), **kw)

    def __float__(self):
        return self.value

    def __repr__(self):
        return "EnergyReport({kind}: {value:.12g} +/- {residual:.2e}, alpha={alpha}, lambda={lambda})".format(
            **self.to_dict())


def select_grid(c, route='auto', radial_nodes=DEFAULT_RADIAL_NODES, sphere_nodes=DEFAULT_SPHERE_NODES):
    """Quadrature grid for a model.

    Parameters
    ----------
    c : ConnectionModel or sequence of models
        all models must be evaluable on the returned grid
    route : str
        one of 'auto', 'radial', 'sphere', 'lattice'
    """
    models = c if isinstance(c, (list, tuple)) else [c]
    if route not in ROUTES:
        raise ValueError("unknown quadrature route '{}', expected one of {}".format(route, ROUTES))
    lattice_models = [m for m in models if m.uses_lattice]
    if route == 'lattice' or (route == 'auto' and lattice_models):
        if not lattice_models:
            raise ValueError("lattice route needs a lattice-backed model")
        return _lattice_of(lattice_models[0]).quadrature_grid()
    if route == 'radial' or (route == 'auto' and all(m.is_radial for m in models)):
        return RadialGrid(radial_nodes)
    return SphereGrid(*sphere_nodes)


def _lattice_of(model):
    while not hasattr(model, 'quadrature_grid'):
        model = model.base
    return model


def _curvature(c, points, fd_step):
    if fd_step:
        return curvature_fd(c, points, fd_step)
    return c.curvature(points)


def _integrate(grid, integrand):
    """ sum of integrand(points) * volume weights, chunk by chunk in a fixed order """
    partial = [np.sum(integrand(points) * weights) for points, weights in grid.chunks()]
    return float(np.sum(partial))


def integrate(integrand, grid, tol=None, coarse=True):
    """
    Integrate a pointwise function over S^4 on ``grid`` and, when ``coarse``,
    on ``grid.coarsen()`` to estimate the residual.
    """
    value = _integrate(grid, integrand)
    residual = 0.0
    if coarse and hasattr(grid, 'coarsen'):
        residual = abs(value - _integrate(grid.coarsen(), integrand))
    if tol is not None and residual > tol:
        raise QuadratureNotConverged(value, residual, tol)
    return value, residual


def round_norm2(c, points, fd_step=None):
    """ |F|^2 in the round metric at chart points """
    F = _curvature(c, points, fd_step)
    return curvature_norm2(F) * form2_weight(points)


def _report(c, integrand, alpha, lam, kind, grid, route, tol, fd_step):
    grid = grid or select_grid(c, route)
    value, residual = integrate(integrand, grid, tol)
    logging.debug("{} of {}: {:.12g} (residual {:.2e}) on {}".format(kind, c.describe(), value,
                                                                     residual, grid.describe()))
    return EnergyReport(value, alpha, lam, residual, grid.describe(), kind)


def ym_energy(c, grid=None, route='auto', tol=None, fd_step=None):
    """Yang-Mills energy (1/2) int |F|^2 dV.

    Examples
    --------
    >>> from instantonpy.connections import basic_connection
    >>> round(ym_energy(basic_connection()).value / np.pi ** 2, 8)
    4.0
    """
    return _report(c, lambda p: 0.5 * round_norm2(c, p, fd_step), 1.0, 1.0, 'ym',
                   grid, route, tol, fd_step)


@require_alpha(1.0)
def ym_alpha(c, alpha, grid=None, route='auto', tol=None, fd_step=None):
    """ alpha-energy (1/2) int (3 + |F|^2)^alpha dV """
    return _report(c, lambda p: 0.5 * (3.0 + round_norm2(c, p, fd_step)) ** alpha, alpha, 1.0,
                   'ym_alpha', grid, route, tol, fd_step)


@require_alpha(1.0)
@require_positive('lam')
def ym_alpha_lambda(c, alpha, lam, grid=None, route='auto', tol=None, fd_step=None):
    """
    Conformally weighted alpha-energy (1/2) int (3 + chi |F|^2)^alpha chi^-1 dV,
    chi = chi_lambda.  YM_alpha(c) equals YM_{alpha,lam} of the lam-dilated c.
    """
    def integrand(p):
        chi = chi_lambda(p, lam)
        return 0.5 * (3.0 + chi * round_norm2(c, p, fd_step)) ** alpha / chi

    return _report(c, integrand, alpha, lam, 'ym_alpha_lambda', grid, route, tol, fd_step)


def charge_density(F, points):
    """ (|F-|^2 - |F+|^2) in the round metric """
    plus, minus = hodge_split(F, points)
    return (curvature_norm2(minus) - curvature_norm2(plus)) * form2_weight(points)


def wedge_density(F, points):
    """ the calibrated trace pairing of F ^ F, as a density against dV """
    contraction = np.einsum('ijkl,...ijc,...klc->...', EPSILON, F, F)
    return CHARGE_CALIBRATION * contraction / round_weight(points)


def topological_charge(c, grid=None, route='auto', tol=None, fd_step=None, wedge=False):
    """
    Second Chern number (1/8 pi^2) int (|F-|^2 - |F+|^2) dV.

    ``wedge=True`` integrates the calibrated trace pairing of F ^ F instead;
    both routes agree pointwise.
    """
    density = wedge_density if wedge else charge_density
    report = _report(c, lambda p: density(_curvature(c, p, fd_step), p) / (8.0 * np.pi ** 2),
                     1.0, 1.0, 'charge', grid, route, tol, fd_step)
    return report.value


def charge_report(c, grid=None, route='auto', tol=None, fd_step=None):
    density = lambda p: charge_density(_curvature(c, p, fd_step), p) / (8.0 * np.pi ** 2)
    return _report(c, density, 1.0, 1.0, 'charge', grid, route, tol, fd_step)


@require_positive('p')
def lp_curvature_norm(c, p, grid=None, route='auto', tol=None, fd_step=None):
    """ (int |F|^p dV)^(1/p) """
    if p < 1:
        raise ValueError("L^p norm needs p >= 1, got {}".format(p))
    report = _report(c, lambda x: round_norm2(c, x, fd_step) ** (0.5 * p), 1.0, 1.0, 'lp',
                     grid, route, tol, fd_step)
    return max(report.value, 0.0) ** (1.0 / p)


@require_positive('p')
def lp_difference_norm(c1, c2, p, grid=None, route='auto', tol=None, fd_step=None):
    """ (int |F_1 - F_2|^p dV)^(1/p), both curvatures in the common chart trivialisation """
    if p < 1:
        raise ValueError("L^p norm needs p >= 1, got {}".format(p))
    grid = grid or select_grid([c1, c2], route)

    def integrand(x):
        diff = _curvature(c1, x, fd_step) - _curvature(c2, x, fd_step)
        return (curvature_norm2(diff) * form2_weight(x)) ** (0.5 * p)

    value, _ = integrate(integrand, grid, tol)
    return max(value, 0.0) ** (1.0 / p)


def lower_bound_margin(c, alpha, **kw):
    """ YM_alpha(c) - 6^alpha (4/3) pi^2, nonnegative for every connection """
    report = ym_alpha(c, alpha, **kw)
    return report.value - basic_alpha_energy(alpha), report
