"""
Connection models on the trivialised charge-one bundle over the chart.

Every model exposes ``potential(points)`` returning chart components
Gamma_i as an array ``(..., 4, 3)`` and ``curvature(points)`` returning
F_ij as ``(..., 4, 4, 3)`` with F_ij = d_i Gamma_j - d_j Gamma_i + [Gamma_i, Gamma_j].
"""
from abc import ABC, abstractmethod
import json
import logging

import numpy as np
from scipy.interpolate import CubicSpline, CubicHermiteSpline
from scipy import ndimage

from instantonpy.quaternion import (BASIS, qmul, qconj, im_part, bracket, exp_im,
                                    conjugate_by, Quaternion)
from instantonpy.sphere import radius2, form2_weight, ConformalMap
from instantonpy.decorators import require_positive
from instantonpy.errors import OutOfDomain, ProfileSupportError

# Im[conj(e_i) e_j], the constant part of the chart forms
_EBAR_E = np.array([[im_part(qmul(qconj(a), b)) for b in BASIS] for a in BASIS])

# curvature of the basic connection at the origin: F = 2 [(dz12 - dz34) i + (dz13 + dz24) j + (dz14 - dz23) k]
ASD_FORM = np.zeros((4, 4, 3))
for (a, b, comp, sign) in [(0, 1, 0, 1), (2, 3, 0, -1), (0, 2, 1, 1), (1, 3, 1, 1),
                           (0, 3, 2, 1), (1, 2, 2, -1)]:
    ASD_FORM[a, b, comp] = 2.0 * sign
    ASD_FORM[b, a, comp] = -2.0 * sign
del a, b, comp, sign


def chart_forms(points):
    """ W_i = Im[conj(zeta) e_i], shape (..., 4, 3) """
    p = np.asarray(points, dtype=float)
    zbar = qconj(p)
    return np.stack([im_part(qmul(zbar, e)) for e in BASIS], axis=-2)


def curvature_norm2(F):
    """ |F|^2 as the full double sum over ordered index pairs, flat chart components """
    return np.sum(F * F, axis=(-3, -2, -1))


def round_curvature_norm2(F, points):
    return curvature_norm2(F) * form2_weight(points)


def curvature_from_derivatives(dG, G):
    """ F_ij from dG[..., i, j, :] = d_i Gamma_j and Gamma """
    F = dG - np.swapaxes(dG, -3, -2)
    F = F + bracket(G[..., :, None, :], G[..., None, :, :])
    return F


def shifted(points, h):
    """ points +/- h e_i, each of shape (..., 4 (direction), 4) """
    p = np.asarray(points, dtype=float)[..., None, :]
    step = h * np.eye(4)
    return p + step, p - step


def curvature_fd(c, points, h):
    """Centered-difference curvature of a connection model.

    Parameters
    ----------
    c : ConnectionModel
    points : array_like (..., 4)
    h : float
        finite-difference step

    Returns
    -------
    numpy.ndarray
        curvature components (..., 4, 4, 3), second order in h
    """
    if not h > 0:
        raise ValueError("finite-difference step must be positive")
    points = np.asarray(points, dtype=float)
    plus, minus = shifted(points, h)
    dG = (c.potential(plus) - c.potential(minus)) / (2.0 * h)
    return curvature_from_derivatives(dG, c.potential(points))


class ConnectionModel(ABC):
    """ a connection evaluable at arbitrary chart points """
    fd_step = 1e-4
    is_radial = False
    uses_lattice = False

    @abstractmethod
    def potential(self, points):
        pass

    def curvature(self, points):
        return curvature_fd(self, points, self.fd_step)

    def describe(self):
        return {'model': type(self).__name__}


class Flat(ConnectionModel):
    is_radial = True

    def potential(self, points):
        p = np.asarray(points, dtype=float)
        return np.zeros(p.shape[:-1] + (4, 3))

    def curvature(self, points):
        p = np.asarray(points, dtype=float)
        return np.zeros(p.shape[:-1] + (4, 4, 3))

    def profile(self, s):
        s = np.asarray(s, dtype=float)
        return np.zeros_like(s), np.zeros_like(s)


class ConstantPotential(ConnectionModel):
    """ Gamma_i constant in chart coordinates """

    def __init__(self, values):
        self.values = np.asarray(values, dtype=float).reshape(4, 3)

    def potential(self, points):
        p = np.asarray(points, dtype=float)
        return np.broadcast_to(self.values, p.shape[:-1] + (4, 3)).copy()


class Adhm(ConnectionModel):
    """
    ADHM instanton with center xi and scale lam,
    Gamma = Im[conj(zeta - xi) d zeta] / (|zeta - xi|^2 + lam^2).
    lam = 1, xi = 0 is the basic connection.
    """

    @require_positive('lam')
    def __init__(self, xi=None, lam=1.0):
        if isinstance(xi, Quaternion):
            xi = xi.components
        self.xi = np.zeros(4) if xi is None else np.asarray(xi, dtype=float).reshape(4)
        self.lam = float(lam)
        self.is_radial = not self.xi.any()

    def potential(self, points):
        v = np.asarray(points, dtype=float) - self.xi
        denom = radius2(v) + self.lam ** 2
        return chart_forms(v) / denom[..., None, None]

    def curvature(self, points):
        v = np.asarray(points, dtype=float) - self.xi
        c = self.lam ** 2 / (radius2(v) + self.lam ** 2) ** 2
        return c[..., None, None, None] * ASD_FORM

    def profile(self, s):
        s = np.asarray(s, dtype=float)
        f = 1.0 / (s + self.lam ** 2)
        return f, -f * f

    def describe(self):
        return {'model': 'Adhm', 'xi': self.xi.tolist(), 'lambda': self.lam}


def basic_connection():
    return Adhm(None, 1.0)


def adhm_potential(xi, lam, points):
    return Adhm(xi, lam).potential(points)


def adhm_curvature(xi, lam, points):
    return Adhm(xi, lam).curvature(points)


def radial_curvature_norm2(s, f, fp):
    """ flat |F|^2 of the radial ansatz f(s) Im[conj(zeta) d zeta] """
    return 24.0 * ((f + s * fp) ** 2 + f ** 2 * (1.0 - s * f) ** 2)


def radial_curvature_from_profile(points, f, fp):
    """ F = f' X + f Y + f^2 Z for the radial ansatz, given f and f' at each point """
    p = np.asarray(points, dtype=float)
    W = chart_forms(p)
    X = 2.0 * (p[..., :, None, None] * W[..., None, :, :] - p[..., None, :, None] * W[..., :, None, :])
    Y = _EBAR_E - np.swapaxes(_EBAR_E, 0, 1)
    Z = bracket(W[..., :, None, :], W[..., None, :, :])
    f = np.asarray(f)[..., None, None, None]
    fp = np.asarray(fp)[..., None, None, None]
    return fp * X + f * Y + f * f * Z


class RadialProfile(ConnectionModel):
    """
    Symmetric ansatz A_f = f(|zeta|^2) Im[conj(zeta) d zeta].

    The profile is stored on polar-angle nodes through u(theta) = (1 + s) f(s),
    s = tan^2(theta/2), which stays bounded and tends to 1 at the north pole for
    charge-one profiles.  u is interpolated with a cubic spline, or a cubic
    Hermite spline when node derivatives are supplied.
    """
    is_radial = True

    def __init__(self, theta, u, du=None):
        theta = np.asarray(theta, dtype=float)
        u = np.asarray(u, dtype=float)
        if theta.ndim != 1 or theta.size != u.size or theta.size < 4:
            raise ProfileSupportError("profile needs matching 1-D samples (at least 4)")
        if np.any(np.diff(theta) <= 0) or theta[0] <= 0 or theta[-1] >= np.pi:
            raise ProfileSupportError("profile nodes must increase strictly inside (0, pi)")
        if not np.all(np.isfinite(u)):
            raise ProfileSupportError("profile samples must be finite")
        self.theta = theta
        self.u = u
        if du is None:
            self.spline = CubicSpline(theta, u, extrapolate=True)
        else:
            self.spline = CubicHermiteSpline(theta, u, np.asarray(du, dtype=float), extrapolate=True)
        self.dspline = self.spline.derivative()

    @classmethod
    def from_function(cls, f, grid):
        """ sample a profile function f(s) on the polar nodes of ``grid`` """
        theta = grid.theta
        s = np.tan(0.5 * theta) ** 2
        return cls(theta, (1.0 + s) * f(s))

    @classmethod
    def basic(cls, grid):
        return cls(grid.theta, np.ones_like(grid.theta), np.zeros_like(grid.theta))

    def profile(self, s):
        """ f(s) and f'(s) """
        s = np.asarray(s, dtype=float)
        if not np.all(np.isfinite(s)) or np.any(s < 0):
            raise ProfileSupportError("profile queried outside [0, inf)")
        r = np.sqrt(s)
        theta = 2.0 * np.arctan(r)
        u = self.spline(theta)
        du = self.dspline(theta)
        f = u / (1.0 + s)
        safe = np.where(r > 0, r, 1.0)
        dtheta_ds = np.where(r > 0, 1.0 / (safe * (1.0 + s)), 0.0)
        fp = du * dtheta_ds / (1.0 + s) - u / (1.0 + s) ** 2
        return f, fp

    def potential(self, points):
        f, _ = self.profile(radius2(points))
        return f[..., None, None] * chart_forms(points)

    def curvature(self, points):
        p = np.asarray(points, dtype=float)
        s = radius2(p)
        f, fp = self.profile(s)
        # f' enters only through s f' and x_i W_j, both bounded at the origin
        return radial_curvature_from_profile(p, f, fp)

    def describe(self):
        return {'model': 'RadialProfile', 'nodes': int(self.theta.size)}


def radial_connection(theta, u, du=None):
    return RadialProfile(theta, u, du)


def radial_curvature(profile, points):
    return profile.curvature(points)


def smooth_bump(points, center, width):
    """ C-infinity bump exp(1 - 1/(1 - d^2/w^2)) supported in |zeta - center| < width """
    d2 = radius2(np.asarray(points, dtype=float) - np.asarray(center, dtype=float)) / width ** 2
    inside = d2 < 1.0
    out = np.zeros_like(d2)
    out[inside] = np.exp(1.0 - 1.0 / (1.0 - d2[inside]))
    return out


class GaugeTransform(object):
    """
    Pointwise unit quaternion t(zeta) = exp_im(sigma(zeta)).

    ``sigma`` maps chart points (..., 4) to imaginary quaternions (..., 3).
    Derivatives of t are centered differences with step ``step``.
    """

    def __init__(self, sigma, step=1e-5):
        self.sigma = sigma
        self.step = step

    @classmethod
    def constant(cls, q0):
        q0 = np.asarray(q0.components if isinstance(q0, Quaternion) else q0, dtype=float)
        q0 = q0 / np.sqrt(np.sum(q0 * q0))
        return _ConstantGauge(q0)

    @classmethod
    def identity(cls):
        return _ConstantGauge(np.array([1.0, 0.0, 0.0, 0.0]))

    @classmethod
    def bump(cls, amplitude, center=None, width=1.0):
        """ t = exp_im(amplitude * bump(zeta)) with a compactly supported smooth bump """
        amplitude = np.asarray(amplitude, dtype=float).reshape(3)
        center = np.zeros(4) if center is None else np.asarray(center, dtype=float)
        return cls(lambda p: smooth_bump(p, center, width)[..., None] * amplitude)

    def value(self, points):
        return exp_im(self.sigma(np.asarray(points, dtype=float)))

    def derivative(self, points):
        """ d_i t, shape (..., 4, 4) """
        plus, minus = shifted(points, self.step)
        return (self.value(plus) - self.value(minus)) / (2.0 * self.step)


class _ConstantGauge(GaugeTransform):

    def __init__(self, q0):
        self.q0 = q0
        self.step = None

    def value(self, points):
        p = np.asarray(points, dtype=float)
        return np.broadcast_to(self.q0, p.shape[:-1] + (4,)).copy()

    def derivative(self, points):
        p = np.asarray(points, dtype=float)
        return np.zeros(p.shape[:-1] + (4, 4))


class GaugeTransformed(ConnectionModel):
    """ t[c]: Gamma -> t^-1 d t + t^-1 Gamma t, F -> t^-1 F t """

    def __init__(self, base, transform):
        self.base = base
        self.transform = transform
        self.uses_lattice = base.uses_lattice

    def potential(self, points):
        t = self.transform.value(points)
        dt = self.transform.derivative(points)
        maurer_cartan = im_part(qmul(qconj(t)[..., None, :], dt))
        return maurer_cartan + conjugate_by(t[..., None, :], self.base.potential(points))

    def curvature(self, points):
        t = self.transform.value(points)
        return conjugate_by(t[..., None, None, :], self.base.curvature(points))

    def describe(self):
        return {'model': 'GaugeTransformed', 'base': self.base.describe()}


def gauge_act(t, c):
    return GaugeTransformed(c, t)


class Pulledback(ConnectionModel):
    """ phi^* c, (phi^* Gamma)_i(zeta) = d_i phi^j(zeta) Gamma_j(phi(zeta)) """

    def __init__(self, base, conformal_map):
        self.base = base
        self.map = conformal_map
        self.uses_lattice = base.uses_lattice

    def potential(self, points):
        J = self.map.jacobian(points)
        G = self.base.potential(self.map.apply(points))
        return np.einsum('...ji,...jc->...ic', J, G)

    def curvature(self, points):
        J = self.map.jacobian(points)
        F = self.base.curvature(self.map.apply(points))
        return np.einsum('...ki,...lj,...klc->...ijc', J, J, F)

    def describe(self):
        return {'model': 'Pulledback', 'base': self.base.describe(), 'map': self.map.describe()}


def pullback(m, c):
    if m.is_identity:
        return c
    return Pulledback(c, m)


def dilate(c, lam):
    """ lam^* c for the pure dilation zeta -> lam zeta """
    if isinstance(c, Adhm) and c.is_radial:
        return Adhm(None, c.lam / lam)
    return pullback(ConformalMap.dilation(lam), c)


class LatticeField(ConnectionModel):
    """
    Connection sampled on a Lattice4D.

    ``edges[..., i, :]`` holds Gamma_i at the edge midpoint node + h/2 e_i.
    Off-lattice values come from cubic B-spline interpolation of each edge
    family; queries closer than h to the lattice boundary are rejected.
    """
    uses_lattice = True
    MAGIC = b'IPLF'
    FORMAT_VERSION = 1

    def __init__(self, lattice, edges):
        edges = np.asarray(edges, dtype=float)
        if edges.shape != lattice.shape + (4, 3):
            raise ValueError("edge array shape {} does not match lattice {}".format(edges.shape, lattice.shape))
        self.lattice = lattice
        self.edges = edges
        self.fd_step = 0.05 * lattice.h
        self._coeffs = None

    @classmethod
    def from_model(cls, model, lattice):
        edges = np.empty(lattice.shape + (4, 3))
        for i in range(4):
            mid = lattice.coords + 0.5 * lattice.h * BASIS[i]
            edges[..., i, :] = model.potential(mid)[..., i, :]
        return cls(lattice, edges)

    @classmethod
    def zeros(cls, lattice):
        return cls(lattice, np.zeros(lattice.shape + (4, 3)))

    def links(self):
        """ U_e = exp(h Gamma_e), shape (..., 4, 4) """
        return exp_im(self.lattice.h * self.edges)

    def _spline_coeffs(self):
        if self._coeffs is None:
            self._coeffs = [[ndimage.spline_filter(self.edges[..., i, c], order=3, mode='mirror')
                             for c in range(3)] for i in range(4)]
        return self._coeffs

    def potential(self, points):
        p = np.asarray(points, dtype=float)
        R, h = self.lattice.half_width, self.lattice.h
        if np.any(np.abs(p) > R - h + 1e-12):
            raise OutOfDomain("lattice field evaluated within h of the lattice boundary")
        flat = p.reshape(-1, 4)
        out = np.empty((flat.shape[0], 4, 3))
        coeffs = self._spline_coeffs()
        for i in range(4):
            idx = (flat + R) / h
            idx[:, i] -= 0.5
            for c in range(3):
                out[:, i, c] = ndimage.map_coordinates(coeffs[i][c], idx.T, order=3,
                                                       mode='mirror', prefilter=False)
        return out.reshape(p.shape[:-1] + (4, 3))

    def quadrature_grid(self):
        """ lattice quadrature kept two spacings clear of the cube faces """
        return self.lattice.interior(2.0 * self.lattice.h)

    def describe(self):
        return {'model': 'LatticeField', 'lattice': self.lattice.describe()}

    def save(self, path):
        """ flat binary (header + node-major, component-major float64) plus a JSON sidecar """
        header = np.array([self.lattice.half_width, self.lattice.h], dtype='<f8')
        counts = np.array(list(self.lattice.shape) + [12], dtype='<i8')
        with open(path, 'wb') as f:
            f.write(self.MAGIC)
            f.write(np.array([self.FORMAT_VERSION], dtype='<u4').tobytes())
            f.write(header.tobytes())
            f.write(counts.tobytes())
            f.write(np.ascontiguousarray(self.edges, dtype='<f8').tobytes())
        sidecar = {'format': 'instantonpy-lattice-field', 'version': self.FORMAT_VERSION,
                   'half_width': self.lattice.half_width, 'h': self.lattice.h,
                   'axis_counts': list(self.lattice.shape), 'components': 12,
                   'layout': 'node-major, edge direction, Im H component', 'dtype': '<f8'}
        with open(str(path) + '.json', 'w') as f:
            json.dump(sidecar, f, indent=2)
        logging.info("Lattice field written to {}".format(path))

    @classmethod
    def load(cls, path):
        from instantonpy.sphere import Lattice4D
        with open(path, 'rb') as f:
            magic = f.read(4)
            if magic != cls.MAGIC:
                raise ValueError("{} is not a lattice field file".format(path))
            version = int(np.frombuffer(f.read(4), dtype='<u4')[0])
            if version != cls.FORMAT_VERSION:
                raise ValueError("{} has format version {}, expected {}".format(path, version, cls.FORMAT_VERSION))
            R, h = np.frombuffer(f.read(16), dtype='<f8')
            counts = np.frombuffer(f.read(40), dtype='<i8')
            body = np.frombuffer(f.read(), dtype='<f8')
        n = int(counts[0])
        if np.any(counts[:4] != n) or int(counts[4]) != 12:
            raise ValueError("{}: axis counts {} do not describe a cubic lattice of Im H edges".format(
                path, counts.tolist()))
        if body.size != n ** 4 * 12:
            raise ValueError("{}: expected {} values, found {}".format(path, n ** 4 * 12, body.size))
        lattice = Lattice4D(float(R), n)
        if not np.isclose(lattice.h, h, rtol=1e-12, atol=0.0):
            raise ValueError("{}: stored spacing {} does not match R={} with {} nodes (h={})".format(
                path, h, R, n, lattice.h))
        edges = body.reshape(lattice.shape + (4, 3)).copy()
        return cls(lattice, edges)


class FormField(object):
    """
    Im H valued 1-form given by a function of chart points, values (..., 4, 3).

    Form fields add and scale pointwise and expose ``potential`` so they can be
    sampled wherever a connection model is expected.
    """

    def __init__(self, function):
        self.function = function

    def __call__(self, points):
        return self.function(np.asarray(points, dtype=float))

    def potential(self, points):
        return self(points)

    def __add__(self, other):
        return FormField(lambda p: self(p) + form_values(other, p))

    def __sub__(self, other):
        return FormField(lambda p: self(p) - form_values(other, p))

    def __mul__(self, scale):
        return FormField(lambda p: scale * self(p))

    __rmul__ = __mul__

    def __neg__(self):
        return self * -1.0


def form_values(form, points):
    """ values of a form field, connection model or constant (4, 3) array at chart points """
    if hasattr(form, 'potential'):
        return form.potential(points)
    if callable(form):
        return form(np.asarray(points, dtype=float))
    p = np.asarray(points, dtype=float)
    return np.broadcast_to(np.asarray(form, dtype=float), p.shape[:-1] + (4, 3)).copy()


class BumpForm(FormField):
    """ smooth_bump(zeta; center, width) times constant amplitudes (4, 3) """

    def __init__(self, amplitude, center=None, width=1.0):
        self.amplitude = np.asarray(amplitude, dtype=float).reshape(4, 3)
        self.center = np.zeros(4) if center is None else np.asarray(center, dtype=float).reshape(4)
        self.width = float(width)
        super(BumpForm, self).__init__(self._evaluate)

    @classmethod
    def random(cls, rng, center=None, width=1.0, scale=1.0):
        return cls(scale * rng.standard_normal((4, 3)), center, width)

    def _evaluate(self, points):
        return smooth_bump(points, self.center, self.width)[..., None, None] * self.amplitude

    def __mul__(self, scale):
        return BumpForm(scale * self.amplitude, self.center, self.width)

    __rmul__ = __mul__

    def describe(self):
        return {'form': 'bump', 'center': self.center.tolist(), 'width': self.width}


class Perturbed(ConnectionModel):
    """ base + eps a for a 1-form a, F = F_base + eps d_base a + eps^2 [a, a] """

    def __init__(self, base, form, eps=1.0):
        self.base = base
        self.form = form
        self.eps = float(eps)
        self.uses_lattice = base.uses_lattice

    def potential(self, points):
        return self.base.potential(points) + self.eps * form_values(self.form, points)

    def curvature(self, points):
        points = np.asarray(points, dtype=float)
        plus, minus = shifted(points, self.fd_step)
        da = (form_values(self.form, plus) - form_values(self.form, minus)) / (2.0 * self.fd_step)
        a = form_values(self.form, points)
        G = self.base.potential(points)
        cov = da + bracket(G[..., :, None, :], a[..., None, :, :])
        linear = cov - np.swapaxes(cov, -3, -2)
        quadratic = bracket(a[..., :, None, :], a[..., None, :, :])
        return self.base.curvature(points) + self.eps * linear + self.eps ** 2 * quadratic

    def describe(self):
        return {'model': 'Perturbed', 'base': self.base.describe(), 'eps': self.eps}
