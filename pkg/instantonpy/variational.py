"""
First and second variation of the conformally weighted alpha-energy.

1-forms are Im H valued arrays ``(..., 4, 3)`` of chart components and
2-forms ``(..., 4, 4, 3)``.  Derivatives are centered differences of the
model or form field at chart points; operators built from derivatives of
derivatives nest the stencils.  The L2 pairing of 1-forms is the round one,
<a, b> = int rho^-2 sum_i a_i . b_i dV, and 2-forms pair through
rho^-4 sum_{i<j}, which makes ``codifferential`` the adjoint of
``exterior_covariant``.
"""
import logging

import numpy as np
from scipy import ndimage

from instantonpy.quaternion import bracket
from instantonpy.sphere import (conformal_factor, form2_weight, chi_lambda, grad_log_chi, radius2,
                                BallGrid, Lattice4D, ball_rule)
from instantonpy.connections import (Adhm, FormField, Perturbed, LatticeField, basic_connection,
                                     form_values, shifted, curvature_norm2)
from instantonpy.coulomb import DEFAULT_LATTICE, LatticeGauge, basic_field
from instantonpy.energy import ym_alpha_lambda
from instantonpy.decorators import require_alpha, require_positive, require_at_least
from instantonpy.errors import ZeroField

DEFAULT_STEP = 1e-3
MODULI_PARAMETERS = ('lambda', 'xi1', 'xi2', 'xi3', 'xi4')


def partials(function, points, h=DEFAULT_STEP, order=2):
    """Centered partial derivatives of a pointwise function.

    Parameters
    ----------
    function : callable
        maps chart points (..., 4) to values (..., K...)
    points : array_like (..., 4)
    h : float
        stencil step
    order : int
        2 (two-point) or 4 (four-point) accuracy

    Returns
    -------
    numpy.ndarray
        d_i function, shape (..., 4, K...) with the derivative index right
        after the point axes
    """
    points = np.asarray(points, dtype=float)
    plus, minus = shifted(points, h)
    if order == 2:
        return (function(plus) - function(minus)) / (2.0 * h)
    if order == 4:
        plus2, minus2 = shifted(points, 2.0 * h)
        return (8.0 * (function(plus) - function(minus)) - (function(plus2) - function(minus2))) / (12.0 * h)
    raise ValueError("stencil order must be 2 or 4, got {}".format(order))


def log_conformal_gradient(points):
    """ d_i log rho = -2 x_i / (1 + |x|^2) """
    p = np.asarray(points, dtype=float)
    return -2.0 * p / (1.0 + radius2(p))[..., None]


def christoffel(points):
    """ Levi-Civita symbols of the round metric, indexed [..., m, k, i] for Gamma^m_ki """
    phi = log_conformal_gradient(points)
    d = np.eye(4)
    return (d[:, :, None] * phi[..., None, None, :]
            + d[:, None, :] * phi[..., None, :, None]
            - d[None, :, :] * phi[..., :, None, None])


def form_inner(a, b, points, weights):
    """ sum of weights * rho^-2 <a_i, b_i> """
    rho2 = conformal_factor(points) ** 2
    return float(np.sum(weights * np.sum(a * b, axis=(-2, -1)) / rho2))


def two_form_inner(a, b, points, weights):
    """ sum of weights * rho^-4 sum_{i<j} <a_ij, b_ij> for antisymmetric a, b """
    return float(np.sum(weights * 0.5 * form2_weight(points) * np.sum(a * b, axis=(-3, -2, -1))))


def form_norm(a, points, weights):
    return float(np.sqrt(max(form_inner(a, a, points, weights), 0.0)))


def covariant_derivative(c, form, points, h=DEFAULT_STEP, order=2):
    """ D_i Xi_j = d_i Xi_j + [Gamma_i, Xi_j], shape (..., 4, 4, 3) """
    points = np.asarray(points, dtype=float)
    d = partials(lambda p: form_values(form, p), points, h, order)
    G = c.potential(points)
    X = form_values(form, points)
    return d + bracket(G[..., :, None, :], X[..., None, :, :])


def exterior_covariant(c, form, points, h=DEFAULT_STEP, order=2):
    """ (d_c Xi)_ij = D_i Xi_j - D_j Xi_i """
    D = covariant_derivative(c, form, points, h, order)
    return D - np.swapaxes(D, -3, -2)


def codifferential(c, two_form, points, h=DEFAULT_STEP, order=2):
    """ (D^* w)_j = -rho^-2 sum_i (d_i w_ij + [Gamma_i, w_ij]) for a 2-form field w """
    points = np.asarray(points, dtype=float)
    d = partials(two_form, points, h, order)
    div = np.einsum('...iijc->...jc', d)
    G = c.potential(points)
    div = div + np.sum(bracket(G[..., :, None, :], two_form(points)), axis=-3)
    return -div / conformal_factor(points)[..., None, None] ** 2


def codifferential_form(c, form, points, h=DEFAULT_STEP, order=2):
    """ D^* Xi = -rho^-4 sum_i D_i(rho^2 Xi_i), an Im H valued function (..., 3) """
    points = np.asarray(points, dtype=float)

    def weighted(p):
        return conformal_factor(p)[..., None, None] ** 2 * form_values(form, p)

    d = partials(weighted, points, h, order)
    div = np.einsum('...iic->...c', d)
    G = c.potential(points)
    div = div + np.sum(bracket(G, weighted(points)), axis=-2)
    return -div / conformal_factor(points)[..., None] ** 4


def dstar_F(c, points, h=DEFAULT_STEP, order=2):
    """Covariant divergence of the curvature on the round sphere.

    Vanishes for Yang-Mills connections, in particular every ADHM instanton.

    Examples
    --------
    >>> from instantonpy.connections import Flat
    >>> float(np.abs(dstar_F(Flat(), np.zeros((1, 4)))).max())
    0.0
    """
    return codifferential(c, c.curvature, points, h, order)


class GradientField(object):
    """
    Pointwise L2 gradient of YM_{alpha,lambda}, kept in its parts:
    total = prefactor * (dstar + theta1 + theta2), prefactor = (3 + chi |F|^2)^(alpha - 1).
    """

    def __init__(self, dstar, theta1, theta2, prefactor):
        self.dstar = dstar
        self.theta1 = theta1
        self.theta2 = theta2
        self.prefactor = prefactor
        self.total = prefactor[..., None, None] * (dstar + theta1 + theta2)

    @property
    def unweighted(self):
        """ dstar + theta1 + theta2, same zero set as ``total`` """
        return self.dstar + self.theta1 + self.theta2

    def norm(self, points, weights):
        return form_norm(self.total, points, weights)


@require_alpha(1.0)
@require_positive('lam')
def gradient_ym_alpha_lambda(c, alpha, lam, points, h=DEFAULT_STEP, order=2):
    """Gradient of YM_{alpha,lambda} at chart points.

    With dE(a) = 2 alpha <a, total> for every compactly supported 1-form a.

    Parameters
    ----------
    c : ConnectionModel
    alpha : float
        alpha >= 1
    lam : float
        dilation weight of chi_lambda
    points : array_like (..., 4)
    h : float
        stencil step for the derivatives of the curvature

    Returns
    -------
    GradientField
    """
    points = np.asarray(points, dtype=float)
    F = c.curvature(points)
    dF = partials(c.curvature, points, h, order)
    G = c.potential(points)
    s = radius2(points)
    W = form2_weight(points)
    rho2 = conformal_factor(points) ** 2
    sumF2 = curvature_norm2(F)
    f2 = W * sumF2

    divF = np.einsum('...iijc->...jc', dF) + np.sum(bracket(G[..., :, None, :], F), axis=-3)
    dstar = -divF / rho2[..., None, None]

    chi = chi_lambda(points, lam)
    coeff = chi * (alpha - 1.0) / (3.0 + chi * f2)
    dW = 0.5 * ((1.0 + s) ** 3)[..., None] * points
    df2 = dW * sumF2[..., None] + 2.0 * W[..., None] * np.einsum('...kijc,...ijc->...k', dF, F)
    theta1 = -(coeff / rho2)[..., None, None] * np.einsum('...i,...ijc->...jc', df2, F)
    theta2 = -(coeff * f2 / rho2)[..., None, None] * np.einsum('...i,...ijc->...jc',
                                                               grad_log_chi(points, lam), F)
    prefactor = (3.0 + chi * f2) ** (alpha - 1.0)
    return GradientField(dstar, theta1, theta2, prefactor)


def gradient_norm(c, alpha, lam, grid, h=DEFAULT_STEP, chunk=4096):
    """ L2 norm of the gradient over a quadrature grid """
    total = 0.0
    for points, weights in grid.chunks(chunk):
        g = gradient_ym_alpha_lambda(c, alpha, lam, points, h)
        total += form_inner(g.total, g.total, points, weights)
    return float(np.sqrt(total))


def gradient_pairing(c, form, alpha, lam, grid, h=DEFAULT_STEP, chunk=4096):
    """ 2 alpha <a, grad> on ``grid``, the first variation predicted by the gradient """
    total = 0.0
    for points, weights in grid.chunks(chunk):
        g = gradient_ym_alpha_lambda(c, alpha, lam, points, h)
        total += form_inner(form_values(form, points), g.total, points, weights)
    return 2.0 * alpha * total


def energy_directional_derivative(c, form, alpha, lam, grid, eps=1e-3):
    """ centered difference of the discretised YM_{alpha,lambda} along c + t a """
    up = ym_alpha_lambda(Perturbed(c, form, eps), alpha, lam, grid=grid).value
    down = ym_alpha_lambda(Perturbed(c, form, -eps), alpha, lam, grid=grid).value
    return (up - down) / (2.0 * eps)


def _adjoint_curvature(F, X):
    """ sum_i [F_ij, X_i] """
    return np.sum(bracket(F, X[..., :, None, :]), axis=-3)


def levi_civita_derivative(c, form, points, h=DEFAULT_STEP):
    """ T_ij = D_i Xi_j - Gamma^m_ij Xi_m, the derivative coupled to the round metric """
    points = np.asarray(points, dtype=float)
    D = covariant_derivative(c, form, points, h)
    X = form_values(form, points)
    phi = log_conformal_gradient(points)
    T = D - phi[..., None, :, None] * X[..., :, None, :] - phi[..., :, None, None] * X[..., None, :, :]
    dot = np.einsum('...m,...mc->...c', phi, X)
    return T + np.eye(4)[:, :, None] * dot[..., None, None, :]


def second_levi_civita(c, form, points, h=DEFAULT_STEP):
    """ (nabla_k T)_ij, shape (..., 4, 4, 4, 3) indexed [k, i, j] """
    points = np.asarray(points, dtype=float)
    T = lambda p: levi_civita_derivative(c, form, p, h)
    T0 = T(points)
    G = c.potential(points)
    out = partials(T, points, h) + bracket(G[..., :, None, None, :], T0[..., None, :, :, :])
    Gam = christoffel(points)
    out -= np.einsum('...mki,...mjc->...kijc', Gam, T0)
    out -= np.einsum('...mkj,...imc->...kijc', Gam, T0)
    return out


def rough_laplacian(c, form, points, h=DEFAULT_STEP):
    """ trace of the second covariant derivative, g^ki nabla_k nabla_i Xi """
    points = np.asarray(points, dtype=float)
    T = lambda p: levi_civita_derivative(c, form, p, h)
    T0 = T(points)
    G = c.potential(points)
    div = np.einsum('...iijc->...jc', partials(T, points, h))
    div = div + np.sum(bracket(G[..., :, None, :], T0), axis=-3)
    phi = log_conformal_gradient(points)
    sym = np.einsum('...m,...mjc->...jc', phi, T0) + np.einsum('...m,...jmc->...jc', phi, T0)
    trace = np.einsum('...iic->...c', T0)
    total = div + sym - phi[..., :, None] * trace[..., None, :]
    return total / conformal_factor(points)[..., None, None] ** 2


def jacobi_apply(c, form, points, h=DEFAULT_STEP, bochner=False):
    """Jacobi operator of the Yang-Mills energy at c applied to a 1-form.

    The second variation form is -D^* d_c Xi - rho^-2 sum_i [F_ij, Xi_i];
    ``bochner=True`` evaluates the equivalent
    Lap Xi + D D^* Xi - 3 Xi - 2 rho^-2 sum_i [F_ij, Xi_i]
    with the rough Laplacian of the round metric.
    """
    points = np.asarray(points, dtype=float)
    X = form_values(form, points)
    rho2 = conformal_factor(points) ** 2
    ad = _adjoint_curvature(c.curvature(points), X) / rho2[..., None, None]
    if not bochner:
        two = lambda p: exterior_covariant(c, form, p, h)
        return -codifferential(c, two, points, h) - ad
    scalar = lambda p: codifferential_form(c, form, p, h)
    G = c.potential(points)
    ddstar = partials(scalar, points, h) + bracket(G, scalar(points)[..., None, :])
    return rough_laplacian(c, form, points, h) + ddstar - 3.0 * X - 2.0 * ad


def adhm_tangent(k, step=1e-3, xi=None, lam=1.0):
    """ centered difference of the ADHM family in its k-th parameter (lambda, xi1..xi4) """
    xi = np.zeros(4) if xi is None else np.asarray(xi, dtype=float)
    if k == 0:
        up, down = Adhm(xi, lam + step), Adhm(xi, lam - step)
    else:
        e = np.zeros(4)
        e[k - 1] = step
        up, down = Adhm(xi + e, lam), Adhm(xi - e, lam)
    return FormField(lambda p: (up.potential(p) - down.potential(p)) / (2.0 * step))


class NodeField(object):
    """ quintic B-spline interpolant of an Im H node field on a Lattice4D, C^4 across knots """
    order = 5

    def __init__(self, lattice, values):
        self.lattice = lattice
        self.values = np.asarray(values, dtype=float)
        self.coeffs = [ndimage.spline_filter(self.values[..., c], order=self.order, mode='mirror')
                       for c in range(3)]

    def __call__(self, points):
        p = np.asarray(points, dtype=float)
        idx = ((p.reshape(-1, 4) + self.lattice.half_width) / self.lattice.h).T
        out = np.stack([ndimage.map_coordinates(coeff, idx, order=self.order, mode='mirror', prefilter=False)
                        for coeff in self.coeffs], axis=-1)
        return out.reshape(p.shape[:-1] + (3,))


def gauge_direction(c, sigma, h=DEFAULT_STEP):
    """ the infinitesimal gauge motion D_c sigma of a node field or function sigma """
    def function(p):
        G = c.potential(p)
        return partials(sigma, p, h) + bracket(G, sigma(p)[..., None, :])
    return FormField(function)


def _orthonormalize(vectors, inner, passes=2):
    """ Gram-Schmidt; returns the coefficient matrix against ``vectors`` and the basis """
    n = len(vectors)
    C = np.eye(n)
    basis = [np.array(v, dtype=float) for v in vectors]
    for _ in range(passes):
        for k in range(n):
            for j in range(k):
                proj = inner(basis[k], basis[j])
                basis[k] = basis[k] - proj * basis[j]
                C[k] = C[k] - proj * C[j]
            norm = np.sqrt(inner(basis[k], basis[k]))
            if not norm > 0:
                raise ZeroField("moduli direction {} is degenerate".format(MODULI_PARAMETERS[k]))
            basis[k] = basis[k] / norm
            C[k] = C[k] / norm
    return C, basis


class ModuliBasis(object):
    """
    Orthonormal tangent directions of the ADHM family at the basic connection,
    moved into the Coulomb gauge of the basic connection on a lattice.

    ``edges[k]`` are the lattice samples used for inner products and
    projections; ``member(k)`` is the same direction as an analytic form field
    (ADHM tangent plus the spline-interpolated gauge correction).
    """

    def __init__(self, lattice=None, step=1e-3, cg_tol=1e-10, maxiter=5000):
        lattice = lattice or Lattice4D(*DEFAULT_LATTICE)
        self.lattice = lattice
        self.step = step
        self.ops = LatticeGauge(lattice, basic_field(lattice).edges)
        self.tangents = [adhm_tangent(k, step) for k in range(len(MODULI_PARAMETERS))]
        self.gauges = []
        raw = []
        for name, tangent in zip(MODULI_PARAMETERS, self.tangents):
            edges = LatticeField.from_model(tangent, lattice).edges
            rhs = -self.ops.div(edges)
            rhs[~self.ops.free] = 0.0
            sigma, iterations = self.ops.solve(rhs, tol=cg_tol, maxiter=maxiter)
            logging.debug("Moduli direction {}: Coulomb correction in {} CG iterations".format(
                name, iterations))
            self.gauges.append(sigma)
            raw.append(edges + self.ops.grad(sigma))
        self.coefficients, self.edges = _orthonormalize(raw, self.ops.edge_inner)
        logging.info("Moduli basis on {}".format(lattice.describe()))

    def __len__(self):
        return len(self.edges)

    def __iter__(self):
        return iter(self.fields())

    def fields(self):
        return [LatticeField(self.lattice, e) for e in self.edges]

    def gram(self):
        n = len(self.edges)
        return np.array([[self.ops.edge_inner(self.edges[a], self.edges[b]) for b in range(n)]
                         for a in range(n)])

    def gauge_residual(self, k):
        """ ||D^*_basic b_k|| over the free nodes """
        return self.ops.node_norm(self.ops.div(self.edges[k]))

    def member(self, k, h=DEFAULT_STEP):
        coeff = self.coefficients[k]
        sigma = NodeField(self.lattice, sum(w * g for w, g in zip(coeff, self.gauges)))
        tangents = self.tangents

        def tangent(p):
            return sum(w * t(p) for w, t in zip(coeff, tangents))

        return FormField(tangent) + gauge_direction(basic_connection(), sigma, h)

    def edges_of(self, form):
        if isinstance(form, LatticeField):
            if form.lattice.shape != self.lattice.shape or form.lattice.half_width != self.lattice.half_width:
                raise ValueError("form lives on a different lattice")
            return form.edges
        if isinstance(form, np.ndarray):
            return form
        return LatticeField.from_model(form if hasattr(form, 'potential') else FormField(form),
                                       self.lattice).edges


def kernel_project(form, basis):
    """ sum_k <Xi, b_k> b_k, as a LatticeField on the basis lattice """
    edges = basis.edges_of(form)
    out = np.zeros_like(edges)
    for b in basis.edges:
        out += basis.ops.edge_inner(edges, b) * b
    return LatticeField(basis.lattice, out)


def polarization_residuals(c1, c2, points, h=DEFAULT_STEP, order=4):
    """
    Sup-norm residuals of the curvature and D^*F expansions in Upsilon = c1 - c2:
    F_1 = F_2 + d_2 Upsilon + [Upsilon ^ Upsilon] and
    D^*_1 F_1 = D^*_2 F_2 + D^*_2 (F_1 - F_2) - rho^-2 sum_i [Upsilon_i, F_1,ij].
    """
    points = np.asarray(points, dtype=float)
    upsilon = FormField(lambda p: c1.potential(p) - c2.potential(p))

    def difference(p):
        U = upsilon(p)
        return exterior_covariant(c2, upsilon, p, h, order) + bracket(U[..., :, None, :], U[..., None, :, :])

    F1 = c1.curvature(points)
    F2 = c2.curvature(points)
    f_residual = F1 - F2 - difference(points)

    lhs = dstar_F(c1, points, h, order) - dstar_F(c2, points, h, order)
    expanded = F2 + difference(points)
    rho2 = conformal_factor(points) ** 2
    rhs = codifferential(c2, difference, points, h, order) \
        - np.sum(bracket(upsilon(points)[..., :, None, :], expanded), axis=-3) / rho2[..., None, None]
    d_residual = lhs - rhs
    return float(np.abs(f_residual).max()), float(np.abs(d_residual).max())


def commutator_bound_check(A, B, points, c=None):
    """Worst margins of the commutator estimates against the curvature of c.

    In the round orthonormal frame, with hats marking frame components,
    <F_ij, [A_i, A_j]> - |A|^2 and <F_ij, [B_ki, B_kj]> - 4 |B|^2.  Both are
    nonpositive for the basic connection.

    Parameters
    ----------
    A : array_like (..., 4, 3)
        chart components of 1-forms
    B : array_like (..., 4, 4, 3)
        chart components of 2-tensors B_ki
    points : array_like (..., 4)
    c : ConnectionModel, optional
        defaults to the basic connection

    Returns
    -------
    (float, float)
        the largest margin of each estimate over the samples
    """
    c = c or basic_connection()
    points = np.asarray(points, dtype=float)
    rho = conformal_factor(points)
    F = c.curvature(points) / rho[..., None, None, None] ** 2
    A = np.asarray(A, dtype=float) / rho[..., None, None]
    B = np.asarray(B, dtype=float) / rho[..., None, None, None] ** 2
    first = np.einsum('...ijc,...ijc->...', F, bracket(A[..., :, None, :], A[..., None, :, :])) \
        - np.sum(A * A, axis=(-2, -1))
    second = np.einsum('...ijc,...kijc->...', F, bracket(B[..., :, :, None, :], B[..., :, None, :, :])) \
        - 4.0 * np.sum(B * B, axis=(-3, -2, -1))
    return float(np.max(first)), float(np.max(second))


def poincare_ratio(form, center=None, radius=None, c=None, h=DEFAULT_STEP, nodes=(16, 8, 8, 12),
                   chunk=1024):
    """
    (||A|| / ||nabla A||, ||nabla A|| / ||nabla^2 A||) for a 1-form supported
    in the chart ball B_radius(center), nabla coupled to c (the basic
    connection by default) and to the round metric.
    """
    c = c or basic_connection()
    center = getattr(form, 'center', None) if center is None else center
    radius = getattr(form, 'width', None) if radius is None else radius
    if center is None or radius is None:
        raise ValueError("poincare_ratio needs the support ball of the form")
    grid = BallGrid(center, radius, *nodes, chunk=chunk)
    norms = np.zeros(3)
    for points, weights in grid.chunks():
        rho2 = conformal_factor(points) ** 2
        X = form_values(form, points)
        T = levi_civita_derivative(c, form, points, h)
        DT = second_levi_civita(c, form, points, h)
        norms[0] += np.sum(weights * np.sum(X * X, axis=(-2, -1)) / rho2)
        norms[1] += np.sum(weights * np.sum(T * T, axis=(-3, -2, -1)) / rho2 ** 2)
        norms[2] += np.sum(weights * np.sum(DT * DT, axis=(-4, -3, -2, -1)) / rho2 ** 3)
    norms = np.sqrt(norms)
    if not np.all(norms > 0):
        raise ZeroField("Poincare ratio of a vanishing field")
    return float(norms[0] / norms[1]), float(norms[1] / norms[2])


def _pointwise_size(values, points):
    values = np.asarray(values, dtype=float)
    batch = np.asarray(points).shape[:-1]
    if values.shape == batch:
        return np.abs(values)
    rho2 = conformal_factor(points) ** 2
    return np.sqrt(np.sum(values * values, axis=(-2, -1)) / rho2)


@require_at_least('p', 1.0)
@require_at_least('lam_exp', 0.0)
def morrey_norm(u, p, lam_exp, centers, radii, nodes=(12, 8, 8, 12)):
    """Morrey norm over a sample set of chart balls.

    max over (center, radius) of (radius^-lam_exp int_B |u|^p dV)^(1/p), with
    |u| the absolute value of a scalar field or the round norm of a 1-form.

    Examples
    --------
    >>> morrey_norm(lambda x: np.zeros(x.shape[:-1]), 2.0, 1.0, [np.zeros(4)], [0.5])
    0.0
    """
    best = 0.0
    for center in centers:
        for radius in radii:
            points, weights = ball_rule(center, radius, *nodes)
            size = _pointwise_size(form_values(u, points) if hasattr(u, 'potential') else u(points),
                                   points)
            value = (np.sum(weights * size ** p) / radius ** lam_exp) ** (1.0 / p)
            best = max(best, float(value))
    return best
