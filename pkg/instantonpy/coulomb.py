"""
Coulomb gauge relative to the basic connection, on the chart lattice.

Connections are handled as LatticeField edge potentials.  Gauge transforms
act on the links U_e = exp(h Gamma_e) by U_e -> s_x^-1 U_e s_{x+e}, which is
an exact group action, and the elliptic problems are solved with conjugate
gradients on the nodes strictly inside the ball |zeta| < R (Dirichlet data
s = 1 outside).
"""
import logging
import warnings

import numpy as np
import pandas as pd
from scipy import optimize
from scipy.sparse.linalg import LinearOperator, cg

from instantonpy.quaternion import qmul, qconj, exp_im, log_unit, conjugate_by, bracket
from instantonpy.sphere import Lattice4D, ConformalMap, rotation_matrix
from instantonpy.connections import LatticeField, basic_connection, pullback
from instantonpy.errors import (CoulombDiverged, MaxOuterExceeded, CGNotConverged,
                                InstantonError)

DEFAULT_LATTICE = (3.0, 24)
LEAK_RADIUS = 0.8
IDENTITY = np.array([1.0, 0.0, 0.0, 0.0])


def _shift_next(a, axis, fill=0.0):
    """ out[k] = a[k + 1] along axis, ``fill`` past the last slice """
    out = np.empty_like(a)
    src = [slice(None)] * a.ndim
    dst = [slice(None)] * a.ndim
    src[axis], dst[axis] = slice(1, None), slice(None, -1)
    out[tuple(dst)] = a[tuple(src)]
    dst[axis] = slice(-1, None)
    out[tuple(dst)] = fill
    return out


def _shift_prev(a, axis, fill=0.0):
    """ out[k] = a[k - 1] along axis, ``fill`` before the first slice """
    out = np.empty_like(a)
    src = [slice(None)] * a.ndim
    dst = [slice(None)] * a.ndim
    src[axis], dst[axis] = slice(None, -1), slice(1, None)
    out[tuple(dst)] = a[tuple(src)]
    dst[axis] = slice(0, 1)
    out[tuple(dst)] = fill
    return out


def _solve_cg(A, b, tol, maxiter, counter):
    def callback(xk):
        counter[0] += 1
    try:
        return cg(A, b, rtol=tol, atol=0.0, maxiter=maxiter, callback=callback)
    except TypeError:
        # scipy < 1.12 names the relative tolerance ``tol``
        return cg(A, b, tol=tol, atol=0.0, maxiter=maxiter, callback=callback)


class LatticeGauge(object):
    """
    Discrete covariant derivative along a reference lattice connection.

    ``grad`` maps node fields (..., 3) to edge fields (..., 4, 3),
    (D s)_e = (s_{x+e} - s_x)/h + [Gamma_e, (s_x + s_{x+e})/2], and ``div``
    is its exact adjoint for the node weights rho^4 h^4 and edge weights
    rho_e^2 h^4.
    """

    def __init__(self, lattice, reference):
        self.lattice = lattice
        self.h = lattice.h
        self.reference = np.asarray(reference, dtype=float)
        R = lattice.half_width
        self.free = lattice.r2 < R * R * (1.0 - 1e-12)
        self.n_free = int(self.free.sum())
        s = lattice.r2
        self.rho4 = (2.0 / (1.0 + s)) ** 4
        self.rho2_edges = np.empty(lattice.shape + (4,))
        self.edge_mask = np.zeros(lattice.shape + (4,), dtype=bool)
        for i in range(4):
            mid = lattice.coords.copy()
            mid[..., i] += 0.5 * self.h
            self.rho2_edges[..., i] = (2.0 / (1.0 + np.sum(mid * mid, axis=-1))) ** 2
            self.edge_mask[..., i] = lattice.inside & _shift_next(lattice.inside, i, False)

    def grad(self, sigma):
        out = np.empty(sigma.shape[:-1] + (4, 3))
        for i in range(4):
            nxt = _shift_next(sigma, i)
            out[..., i, :] = (nxt - sigma) / self.h + bracket(self.reference[..., i, :], 0.5 * (sigma + nxt))
        return out

    def div(self, u):
        """ D^* u = -rho^-4 sum_i [(w_x - w_{x-e_i})/h + ([G_x, w_x] + [G_{x-e_i}, w_{x-e_i}])/2], w = rho^2 u """
        total = np.zeros(u.shape[:-2] + (3,))
        for i in range(4):
            w = self.rho2_edges[..., i, None] * u[..., i, :]
            bw = bracket(self.reference[..., i, :], w)
            total += (w - _shift_prev(w, i)) / self.h + 0.5 * (bw + _shift_prev(bw, i))
        return -total / self.rho4[..., None]

    def node_norm(self, v):
        """ L2 norm of a node field over the free nodes """
        w = self.rho4[self.free] * self.h ** 4
        return float(np.sqrt(np.sum(w * np.sum(v[self.free] ** 2, axis=-1))))

    def edge_norm(self, u):
        w = self.rho2_edges * self.h ** 4 * self.edge_mask
        return float(np.sqrt(np.sum(w * np.sum(u * u, axis=-1))))

    def edge_inner(self, a, b):
        w = self.rho2_edges * self.h ** 4 * self.edge_mask
        return float(np.sum(w * np.sum(a * b, axis=-1)))

    def laplace_operator(self):
        """ rho^4 D^* D restricted to the free nodes, symmetric positive definite """
        shape = self.lattice.shape + (3,)
        free = self.free

        def matvec(x):
            sigma = np.zeros(shape)
            sigma[free] = x.reshape(-1, 3)
            out = self.rho4[..., None] * self.div(self.grad(sigma))
            return out[free].reshape(-1)

        size = 3 * self.n_free
        return LinearOperator((size, size), matvec=matvec, dtype=float)

    def solve(self, rhs, tol=1e-10, maxiter=2000):
        """ solve D^* D s = rhs on the free nodes, s = 0 elsewhere; returns (s, cg iterations) """
        A = self.laplace_operator()
        b = (self.rho4[..., None] * rhs)[self.free].reshape(-1)
        sigma = np.zeros(self.lattice.shape + (3,))
        if not np.any(b):
            return sigma, 0
        counter = [0]
        x, info = _solve_cg(A, b, tol, maxiter, counter)
        if info != 0:
            raise CGNotConverged("conjugate gradient stopped after {} iterations (info={})".format(
                counter[0], info))
        sigma[self.free] = x.reshape(-1, 3)
        return sigma, counter[0]


def transform_links(field, s):
    """ edge potentials of s[field] from U_e -> s_x^-1 U_e s_{x+e} """
    U = field.links()
    out = np.empty_like(field.edges)
    s_conj = qconj(s)
    for i in range(4):
        s_next = _shift_next(s, i, IDENTITY)
        U_new = qmul(qmul(s_conj, U[..., i, :]), s_next)
        out[..., i, :] = log_unit(U_new) / field.lattice.h
    return LatticeField(field.lattice, out)


def gauge_act_lattice(field, sigma):
    """ act on a lattice field with the node transform exp_im(sigma) """
    return transform_links(field, exp_im(sigma))


def basic_field(lattice):
    return LatticeField.from_model(basic_connection(), lattice)


def _as_field(c, lattice):
    if isinstance(c, LatticeField):
        if c.lattice.half_width != lattice.half_width or c.lattice.nodes != lattice.nodes:
            raise ValueError("lattice field lives on a different lattice")
        return c
    return LatticeField.from_model(c, lattice)


def dstar_against_basic(upsilon, lattice=None):
    """
    D^*_basic of a 1-form given as a LatticeField (or an analytic model
    sampled on ``lattice``), returned as a node field (..., 3).
    """
    if not isinstance(upsilon, LatticeField):
        lattice = lattice or Lattice4D(*DEFAULT_LATTICE)
        upsilon = LatticeField.from_model(upsilon, lattice)
    ops = LatticeGauge(upsilon.lattice, basic_field(upsilon.lattice).edges)
    return ops.div(upsilon.edges)


def w_operator(sigma, c, points, A=None):
    """ exp(-sigma) (Upsilon_c + A) exp(sigma) pointwise, Upsilon_c = c - basic """
    upsilon = c.potential(points) - basic_connection().potential(points)
    if A is not None:
        upsilon = upsilon + A
    s = exp_im(np.asarray(sigma, dtype=float))
    return conjugate_by(s[..., None, :], upsilon)


class CoulombResult(object):
    """ outcome of the Coulomb projection """

    def __init__(self, s, projected, residuals, cg_iterations, sigma_sup, damping, converged, ops):
        self.s = s
        self.projected = projected
        self.residuals = residuals
        self.cg_iterations = cg_iterations
        self.sigma_sup = sigma_sup
        self.damping = damping
        self.converged = converged
        self.ops = ops

    @property
    def sigma(self):
        """ Im H node field with s = exp_im(sigma) """
        return log_unit(self.s)

    @property
    def residual(self):
        return self.residuals[-1]

    @property
    def contraction(self):
        """ largest ratio of consecutive nonzero residuals """
        r = [x for x in self.residuals if x > 0]
        if len(r) < 2:
            return 0.0
        return float(max(b / a for a, b in zip(r[:-1], r[1:])))

    def distance(self):
        """ L2 norm of the projected connection minus the basic one """
        return self.ops.edge_norm(self.projected.edges - self.ops.reference)

    def curvature_distance(self):
        return curvature_difference_norm(self.projected.edges, self.ops.reference, self.ops.lattice)

    def to_frame(self):
        return pd.DataFrame({'outer_iter': np.arange(len(self.residuals)),
                             'residual': self.residuals,
                             'cg_iters': self.cg_iterations,
                             'sigma_sup_norm': self.sigma_sup})

    def save_log(self, path):
        self.to_frame().to_csv(path, index=False)
        logging.info("Gauge-fix log written to {}".format(path))

    def to_dict(self):
        return {'converged': self.converged, 'residual': self.residual,
                'outer_iterations': len(self.residuals) - 1, 'damping': self.damping,
                'contraction': self.contraction, 'distance': self.distance()}


def _check_support(ops, upsilon):
    R = ops.lattice.half_width
    outer = ops.lattice.r2 > (LEAK_RADIUS * R) ** 2
    size = np.sqrt(np.sum(upsilon ** 2, axis=-1)).max(axis=-1)
    total = size.max()
    if total > 0 and size[outer].max() > 1e-6 * total:
        warnings.warn("connection differs from the basic one beyond {:.2f} R; "
                      "boundary data will bias the projection".format(LEAK_RADIUS))


def coulomb_project(c, tol=1e-8, max_outer=30, lattice=None, cg_tol=1e-12, log_path=None,
                    check_support=True):
    """Project a connection onto the Coulomb slice through the basic connection.

    Parameters
    ----------
    c : ConnectionModel
        analytic model (sampled on ``lattice``) or LatticeField
    tol : float
        target for ||D^*_basic (s[c] - basic)||_L2
    max_outer : int
        outer fixed-point iterations
    lattice : Lattice4D, optional
    check_support : bool
        warn when c differs from the basic connection near the lattice boundary

    Returns
    -------
    CoulombResult
    """
    lattice = lattice or (c.lattice if isinstance(c, LatticeField) else Lattice4D(*DEFAULT_LATTICE))
    field = _as_field(c, lattice)
    ops = LatticeGauge(lattice, basic_field(lattice).edges)
    if check_support:
        _check_support(ops, field.edges - ops.reference)

    s = np.broadcast_to(IDENTITY, lattice.shape + (4,)).copy()
    residuals, cg_iterations, sigma_sup = [], [], []
    damping = 1.0
    increases = 0
    projected = field
    for outer in range(max_outer + 1):
        projected = transform_links(field, s) if outer else field
        upsilon = projected.edges - ops.reference
        rhs = ops.div(upsilon)
        residual = ops.node_norm(rhs)
        residuals.append(residual)
        sigma_sup.append(float(np.sqrt(np.sum(log_unit(s) ** 2, axis=-1)).max()))
        if len(cg_iterations) < len(residuals):
            cg_iterations.append(0)
        logging.debug("Coulomb outer {}: residual {:.3e}".format(outer, residual))
        if residual <= tol:
            result = CoulombResult(s, projected, residuals, cg_iterations, sigma_sup, damping, True, ops)
            if log_path:
                result.save_log(log_path)
            return result
        if outer >= 1 and residual > residuals[-2]:
            increases += 1
            if increases >= 2:
                raise CoulombDiverged("Coulomb iteration diverged at outer step {}".format(outer),
                                      CoulombResult(s, projected, residuals, cg_iterations,
                                                    sigma_sup, damping, False, ops))
            damping = 0.5
            warnings.warn("Coulomb residual increased; damping the update by {}".format(damping))
        else:
            increases = 0
        if outer == max_outer:
            break
        rhs[~ops.free] = 0.0
        delta, iterations = ops.solve(rhs, tol=cg_tol)
        cg_iterations.append(iterations)
        s = qmul(s, exp_im(-damping * delta))
    raise MaxOuterExceeded("Coulomb residual {:.3e} above {:.1e} after {} outer iterations".format(
        residuals[-1], tol, max_outer), CoulombResult(s, projected, residuals, cg_iterations,
                                                       sigma_sup, damping, False, ops))


def curvature_difference_norm(edges1, edges2, lattice):
    """
    ||F_1 - F_2||_L2 from plaquette-centred curvatures.  The 2-form norm times
    the volume form is conformally invariant, so no metric weights appear.
    """
    h = lattice.h
    total = 0.0
    for i in range(4):
        for j in range(i + 1, 4):
            mask = lattice.inside & _shift_next(_shift_next(lattice.inside, i, False), j, False)
            F = []
            for edges in (edges1, edges2):
                Gi, Gj = edges[..., i, :], edges[..., j, :]
                Gi_up, Gj_up = _shift_next(Gi, j), _shift_next(Gj, i)
                curl = (Gj_up - Gj) / h - (Gi_up - Gi) / h
                F.append(curl + bracket(0.5 * (Gi + Gi_up), 0.5 * (Gj + Gj_up)))
            diff = F[0] - F[1]
            total += 2.0 * np.sum(np.sum(diff ** 2, axis=-1)[mask]) * h ** 4
    return float(np.sqrt(total))


def _signed_permutation(p):
    R = rotation_matrix(p, IDENTITY)
    rounded = np.round(R)
    if not np.allclose(R, rounded, atol=1e-12) or not np.all(np.sum(np.abs(rounded), axis=0) == 1):
        raise ValueError("lattice rotation needs p in {+-1, +-i, +-j, +-k}")
    return rounded.astype(int)


def rotate_lattice_field(field, p):
    """ pull back a lattice field by zeta -> p zeta for a unit p permuting the axes """
    R = _signed_permutation(p)
    n = field.lattice.nodes
    idx = np.indices(field.lattice.shape)
    out = np.zeros_like(field.edges)
    # node index of R x along each axis a
    rx = []
    for a in range(4):
        b = int(np.nonzero(R[a])[0][0])
        rx.append(idx[b] if R[a, b] > 0 else n - 1 - idx[b])
    for i in range(4):
        a = int(np.nonzero(R[:, i])[0][0])
        sign = R[a, i]
        target = [r.copy() for r in rx]
        if sign < 0:
            target[a] = target[a] - 1
        valid = (target[a] >= 0) & (target[a] < n)
        clipped = [np.clip(t, 0, n - 1) for t in target]
        values = field.edges[tuple(clipped) + (a,)]
        out[..., i, :] = np.where(valid[..., None], sign * values, 0.0)
    return LatticeField(field.lattice, out)


def commute_check(c, m, tol=1e-8, lattice=None, **kw):
    """
    ||Pi[m^* c] - m^* Pi[c]||_L2.  Axis-permuting rotations are applied
    exactly on the lattice; other maps need an analytic ``c`` and compare on
    the edges whose images stay inside the lattice.
    """
    lattice = lattice or (c.lattice if isinstance(c, LatticeField) else Lattice4D(*DEFAULT_LATTICE))
    if m.is_identity:
        return 0.0
    base = coulomb_project(c, tol=tol, lattice=lattice, **kw)
    exact = m.eps == 0 and m.lam == 1.0 and not m.xi1.any() and not m.xi2.any() \
        and np.array_equal(m.q, IDENTITY)
    if exact:
        try:
            _signed_permutation(m.p)
        except ValueError:
            exact = False
    if exact:
        field = _as_field(c, lattice)
        moved = coulomb_project(rotate_lattice_field(field, m.p), tol=tol, lattice=lattice, **kw)
        transported = rotate_lattice_field(base.projected, m.p)
        return base.ops.edge_norm(moved.projected.edges - transported.edges)
    if isinstance(c, LatticeField):
        raise ValueError("only axis-permuting rotations commute exactly on a lattice field")
    moved = coulomb_project(pullback(m, c), tol=tol, lattice=lattice, **kw)
    transported = np.zeros_like(base.projected.edges)
    usable = np.zeros(lattice.shape + (4,), dtype=bool)
    limit = lattice.half_width - 2.0 * lattice.h
    image = pullback(m, base.projected)
    for i in range(4):
        mid = lattice.coords.copy()
        mid[..., i] += 0.5 * lattice.h
        inside = np.all(np.abs(m.apply(mid)) < limit, axis=-1)
        usable[..., i] = inside & base.ops.edge_mask[..., i]
        transported[..., i, :][inside] = image.potential(mid[inside])[:, i, :]
    diff = (moved.projected.edges - transported) * usable[..., None]
    return base.ops.edge_norm(diff)


class ZReport(object):
    """ minimiser of the conformal distance over dilations and translations """

    def __init__(self, conformal_map, value, parameters, trace, box):
        self.map = conformal_map
        self.value = value
        self.parameters = parameters
        self.trace = trace
        self.box = box

    def to_dict(self):
        return {'lambda': self.parameters[0], 'xi': list(self.parameters[1:]), 'Z': self.value,
                'evaluations': int(len(self.trace)), 'box': self.box}


def conformal_distance(c, m, lattice, tol=1e-8):
    """ Z = ||F_{Pi[m^* c]} - F_basic||^2 + ||Pi[m^* c] - basic||^2 """
    result = coulomb_project(pullback(m, c), tol=tol, lattice=lattice, check_support=False)
    return result.curvature_distance() ** 2 + result.distance() ** 2


def _map_of(x):
    return ConformalMap(xi2=x[1:5], lam=float(np.exp(x[0])))


def minimize_conformal_distance(c, lambda_max=2.0, xi_max=0.5, lattice=None, tol=1e-8,
                                n_lambda=3, maxfev=200):
    """
    Coarse search over zeta -> xi + lam zeta with lam in [1/lambda_max, lambda_max]
    and |xi| <= xi_max, refined by Nelder-Mead inside the box.
    """
    lattice = lattice or Lattice4D(*DEFAULT_LATTICE)
    box = {'lambda_max': lambda_max, 'xi_max': xi_max}
    log_max = np.log(lambda_max)
    trace = []

    def Z(x):
        x = np.asarray(x, dtype=float)
        if abs(x[0]) > log_max or np.linalg.norm(x[1:]) > xi_max:
            return np.inf
        try:
            value = conformal_distance(c, _map_of(x), lattice, tol)
        except (InstantonError, ValueError) as e:
            logging.info("Skipping map {}: {}".format(x.tolist(), e))
            value = np.inf
        trace.append([float(np.exp(x[0]))] + x[1:].tolist() + [value])
        return value

    starts = [np.zeros(5)]
    for t in np.linspace(-log_max, log_max, n_lambda):
        starts.append(np.array([t, 0.0, 0.0, 0.0, 0.0]))
        for a in range(4):
            for sign in (-1.0, 1.0):
                x = np.zeros(5)
                x[0] = t
                x[1 + a] = 0.5 * sign * xi_max
                starts.append(x)
    values = [Z(x) for x in starts]
    start = starts[int(np.argmin(values))]
    logging.info("Z coarse search: best {} at {}".format(min(values), start.tolist()))
    simplex = [start] + [start + 0.05 * np.eye(5)[k] * (log_max if k == 0 else xi_max) for k in range(5)]
    res = optimize.minimize(Z, start, method='Nelder-Mead',
                            options={'initial_simplex': np.array(simplex), 'xatol': 1e-6,
                                     'fatol': 1e-14, 'maxfev': maxfev})
    best = res.x if res.fun <= min(values) else start
    value = float(min(res.fun, min(values)))
    frame = pd.DataFrame(trace, columns=['lambda', 'xi1', 'xi2', 'xi3', 'xi4', 'Z'])
    params = [float(np.exp(best[0]))] + [float(v) for v in best[1:]]
    return ZReport(_map_of(best), value, params, frame, box)
