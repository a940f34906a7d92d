"""
Round geometry of the 4-sphere in the quaternionic stereographic chart.

Chart points are arrays ``(..., 4)`` holding the coordinates of
zeta = x1 + x2 i + x3 j + x4 k.  The round metric of the unit sphere is
g = rho^2 delta with rho = 2 / (1 + |zeta|^2), so the volume density is
16 (1 + r^2)^-4 and a 2-form norm picks up rho^-4 = (1 + r^2)^4 / 16.
"""
import itertools
import logging

import numpy as np

from instantonpy.quaternion import qmul, qconj, BASIS, Quaternion
from instantonpy.decorators import require_positive
from instantonpy.errors import PoleHit

VOLUME = 8.0 * np.pi ** 2 / 3.0
S3_AREA = 2.0 * np.pi ** 2


def _points(p):
    if isinstance(p, Quaternion):
        return p.components
    return np.asarray(p, dtype=float)


def radius2(points):
    p = _points(points)
    return np.sum(p * p, axis=-1)


def conformal_factor(points):
    """ rho = 2 / (1 + |zeta|^2) """
    return 2.0 / (1.0 + radius2(points))


def round_weight(points):
    """Volume density of the round metric in the chart, 16 (1 + |zeta|^2)^-4.

    Examples
    --------
    >>> round_weight([0, 0, 0, 0])
    16.0
    >>> round_weight([1, 0, 0, 0])
    1.0
    """
    return 16.0 / (1.0 + radius2(points)) ** 4


def form2_weight(points):
    """ pointwise weight turning a flat 2-form norm into the round one """
    return (1.0 + radius2(points)) ** 4 / 16.0


@require_positive('lam')
def chi_lambda(points, lam):
    """Conformal density lam^-4 ((1 + |lam zeta|^2) / (1 + |zeta|^2))^4."""
    s = radius2(points)
    return ((1.0 + lam * lam * s) / (1.0 + s)) ** 4 / lam ** 4


@require_positive('lam')
def dchi_dloglambda(points, lam):
    s = radius2(points)
    ls = lam * lam * s
    return chi_lambda(points, lam) * 4.0 * (ls - 1.0) / (ls + 1.0)


def mu(points):
    """ (|zeta|^2 - 1) / (|zeta|^2 + 1) """
    s = radius2(points)
    return (s - 1.0) / (s + 1.0)


def grad_log_chi(points, lam):
    """ flat gradient of log chi_lambda, shape (..., 4) """
    p = _points(points)
    s = radius2(p)
    coeff = 8.0 * (lam * lam / (1.0 + lam * lam * s) - 1.0 / (1.0 + s))
    return coeff[..., None] * p


def _levi_civita():
    eps = np.zeros((4, 4, 4, 4))
    for perm in itertools.permutations(range(4)):
        sign = 1
        for a in range(4):
            for b in range(a + 1, 4):
                if perm[a] > perm[b]:
                    sign = -sign
        eps[perm] = sign
    return eps


EPSILON = _levi_civita()


def hodge_star(F):
    """(*F)_ij = 1/2 eps_ijkl F_kl for curvature arrays ``(..., 4, 4, 3)``.

    The star on 2-forms is conformally invariant in dimension four, so the
    chart components transform exactly like orthonormal-frame components.
    The orientation makes d(zeta-bar) ^ d(zeta) anti-self-dual.
    """
    return 0.5 * np.einsum('ijkl,...klc->...ijc', EPSILON, F)


def hodge_split(F, points=None):
    """ (F+, F-) = ((F + *F)/2, (F - *F)/2); ``points`` is accepted for symmetry with the other operators """
    star = hodge_star(F)
    return 0.5 * (F + star), 0.5 * (F - star)


def rotation_matrix(p, q):
    """ matrix R with R x = p x conj(q) on chart coordinates """
    p = _points(p)
    qb = qconj(_points(q))
    return np.stack([qmul(qmul(p, e), qb) for e in BASIS], axis=-1)


class ConformalMap(object):
    """
    Conformal automorphism zeta -> xi2 + lam * p (zeta - xi1) conj(q) / |zeta - xi1|^eps
    with eps in {0, 2}.
    """

    def __init__(self, xi1=None, xi2=None, lam=1.0, p=None, q=None, eps=0):
        if not lam > 0:
            raise ValueError("dilation factor must be positive, got {}".format(lam))
        if eps not in (0, 2):
            raise ValueError("inversion exponent must be 0 or 2, got {}".format(eps))
        self.xi1 = np.zeros(4) if xi1 is None else _points(xi1).astype(float).reshape(4)
        self.xi2 = np.zeros(4) if xi2 is None else _points(xi2).astype(float).reshape(4)
        self.lam = float(lam)
        self.p = np.array([1.0, 0, 0, 0]) if p is None else _unit(p)
        self.q = np.array([1.0, 0, 0, 0]) if q is None else _unit(q)
        self.eps = eps
        self._rot = rotation_matrix(self.p, self.q)

    @classmethod
    def identity(cls):
        return cls()

    @classmethod
    def dilation(cls, lam):
        return cls(lam=lam)

    @classmethod
    def translation(cls, xi):
        return cls(xi2=xi)

    @classmethod
    def rotation(cls, p, q=None):
        return cls(p=p, q=q)

    @property
    def is_identity(self):
        return (self.eps == 0 and self.lam == 1.0 and not self.xi1.any() and not self.xi2.any()
                and np.array_equal(self._rot, np.eye(4)))

    def apply(self, points):
        v = _points(points) - self.xi1
        if self.eps == 2:
            n2 = radius2(v)
            if np.any(n2 < 1e-300):
                raise PoleHit("inversion evaluated at its pole {}".format(self.xi1))
            v = v / n2[..., None]
        return self.xi2 + self.lam * np.einsum('ai,...i->...a', self._rot, v)

    __call__ = apply

    def jacobian(self, points):
        """ J[..., a, i] = d phi^a / d zeta^i """
        v = _points(points) - self.xi1
        J = np.broadcast_to(self.lam * self._rot, v.shape[:-1] + (4, 4))
        if self.eps == 2:
            n2 = radius2(v)
            if np.any(n2 < 1e-300):
                raise PoleHit("inversion evaluated at its pole {}".format(self.xi1))
            inv = (np.eye(4) * n2[..., None, None] - 2.0 * v[..., :, None] * v[..., None, :])
            inv = inv / (n2 ** 2)[..., None, None]
            J = np.einsum('...ab,...bi->...ai', J, inv)
        return np.array(J)

    def compose(self, other):
        """ the map self o other (other applied first) """
        if self.eps == 0 and other.eps == 0:
            xi2 = self.xi2 + self.lam * self._rot.dot(other.xi2 - self.xi1)
            return ConformalMap(xi1=other.xi1, xi2=xi2, lam=self.lam * other.lam,
                                p=qmul(self.p, other.p), q=qmul(self.q, other.q))
        return CompositeMap(self, other)

    def inverse(self):
        if self.eps == 2:
            # v -> v / |v|^2 is an involution
            inv_rot = ConformalMap(xi1=self.xi2, lam=1.0 / self.lam, p=qconj(self.p), q=qconj(self.q))
            return ConformalMap(xi2=self.xi1, eps=2).compose(inv_rot)
        return ConformalMap(xi1=self.xi2, xi2=self.xi1, lam=1.0 / self.lam,
                            p=qconj(self.p), q=qconj(self.q))

    def describe(self):
        return {'xi1': self.xi1.tolist(), 'xi2': self.xi2.tolist(), 'lambda': self.lam,
                'p': self.p.tolist(), 'q': self.q.tolist(), 'eps': self.eps}

    def __repr__(self):
        return "ConformalMap({})".format(self.describe())


class CompositeMap(object):
    """ composition of maps that do not reduce to a single displayed form """

    def __init__(self, outer, inner):
        self.outer = outer
        self.inner = inner
        self.eps = 2
        self.is_identity = False

    def apply(self, points):
        return self.outer.apply(self.inner.apply(points))

    __call__ = apply

    def jacobian(self, points):
        return np.einsum('...ab,...bi->...ai', self.outer.jacobian(self.inner.apply(points)),
                         self.inner.jacobian(points))

    def compose(self, other):
        return CompositeMap(self, other)

    def inverse(self):
        return CompositeMap(self.inner.inverse(), self.outer.inverse())

    def describe(self):
        return {'outer': self.outer.describe(), 'inner': self.inner.describe()}


def conformal_apply(m, points):
    return m.apply(points)


def _unit(q):
    q = _points(q).astype(float).reshape(4)
    n = np.sqrt(np.sum(q * q))
    if abs(n - 1.0) > 1e-12:
        raise ValueError("rotation quaternions must have unit norm, got |q| = {}".format(n))
    return q


def gauss_legendre(n, a, b):
    """ Gauss-Legendre nodes and weights on [a, b] """
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (b - a) * x + 0.5 * (b + a), 0.5 * (b - a) * w


def s3_rule(n_psi, n_vartheta, n_phi):
    """
    Product rule on the unit 3-sphere.

    omega = (cos psi, sin psi cos t, sin psi sin t cos phi, sin psi sin t sin phi),
    Gauss-Legendre in psi (weight sin^2 psi) and in cos t, uniform in phi.
    Weights sum to 2 pi^2.
    """
    psi, wpsi = gauss_legendre(n_psi, 0.0, np.pi)
    u, wu = gauss_legendre(n_vartheta, -1.0, 1.0)
    phi = (np.arange(n_phi) + 0.5) * 2.0 * np.pi / n_phi
    wphi = np.full(n_phi, 2.0 * np.pi / n_phi)
    P, U, PH = np.meshgrid(psi, u, phi, indexing='ij')
    S = np.sqrt(1.0 - U ** 2)
    omega = np.stack([np.cos(P), np.sin(P) * U, np.sin(P) * S * np.cos(PH),
                      np.sin(P) * S * np.sin(PH)], axis=-1).reshape(-1, 4)
    weights = (wpsi[:, None, None] * np.sin(psi)[:, None, None] ** 2
               * wu[None, :, None] * wphi[None, None, :]).reshape(-1)
    return omega, weights


class RadialGrid(object):
    """
    Gauss-Legendre rule in the geodesic polar angle theta, r = tan(theta/2).

    ``volume_weights`` integrate radial functions over the sphere:
    sum(volume_weights * f(theta)) ~ int f dV with dV = 2 pi^2 sin^3 theta d theta.
    Evaluation points lie on the positive x1 axis.
    """
    kind = 'radial'

    def __init__(self, n=64):
        if n < 2:
            raise ValueError("radial grid needs at least 2 nodes")
        self.n = n
        self.theta, self.weights = gauss_legendre(n, 0.0, np.pi)
        self.r = np.tan(0.5 * self.theta)
        self.s = self.r ** 2
        self.volume_weights = S3_AREA * np.sin(self.theta) ** 3 * self.weights
        self.points = np.zeros((n, 4))
        self.points[:, 0] = self.r

    def coarsen(self):
        return RadialGrid(max(self.n // 2, 2))

    def chunks(self, size=None):
        yield self.points, self.volume_weights

    def describe(self):
        return {'kind': self.kind, 'nodes': self.n}


class SphereGrid(object):
    """ product Gauss rule on S^4: polar angle theta times the S^3 rule """
    kind = 'sphere'

    def __init__(self, n_theta=40, n_psi=24, n_vartheta=20, n_phi=32, chunk=65536):
        self.shape = (n_theta, n_psi, n_vartheta, n_phi)
        self.chunk = chunk
        theta, wt = gauss_legendre(n_theta, 0.0, np.pi)
        omega, wo = s3_rule(n_psi, n_vartheta, n_phi)
        r = np.tan(0.5 * theta)
        self.points = (r[:, None, None] * omega[None, :, :]).reshape(-1, 4)
        self.volume_weights = ((wt * np.sin(theta) ** 3)[:, None] * wo[None, :]).reshape(-1)

    @property
    def size(self):
        return self.volume_weights.size

    def coarsen(self):
        return SphereGrid(*[max(n // 2, 2) for n in self.shape], chunk=self.chunk)

    def chunks(self, size=None):
        size = size or self.chunk
        for start in range(0, self.size, size):
            yield self.points[start:start + size], self.volume_weights[start:start + size]

    def describe(self):
        return {'kind': self.kind, 'nodes': list(self.shape)}


class Lattice4D(object):
    """
    Regular axis-aligned chart lattice on [-R, R]^4.

    Quadrature uses the nodes with |zeta| <= radius (R by default), weighted by the round volume
    density times h^4.  ``coords`` keeps the full cube for stencil operators.
    """
    kind = 'lattice'

    @require_positive('half_width')
    def __init__(self, half_width=3.0, nodes=24, chunk=65536, radius=None):
        if nodes < 3:
            raise ValueError("lattice needs at least 3 nodes per axis")
        self.half_width = float(half_width)
        self.nodes = int(nodes)
        self.chunk = chunk
        self.axis = np.linspace(-self.half_width, self.half_width, self.nodes)
        self.h = self.axis[1] - self.axis[0]
        grids = np.meshgrid(*([self.axis] * 4), indexing='ij')
        self.coords = np.stack(grids, axis=-1)
        self.r2 = np.sum(self.coords ** 2, axis=-1)
        self.radius = self.half_width if radius is None else float(radius)
        self.inside = self.r2 <= self.radius ** 2 * (1.0 + 1e-12)
        self.points = self.coords[self.inside]
        self.volume_weights = round_weight(self.points) * self.h ** 4
        logging.debug("Lattice4D: R={} n={} h={:.4f} nodes in ball={}".format(
            self.half_width, self.nodes, self.h, self.points.shape[0]))

    @property
    def shape(self):
        return (self.nodes,) * 4

    @property
    def size(self):
        return self.volume_weights.size

    def interior(self, margin):
        """ same lattice, quadrature restricted to |zeta| <= R - margin """
        return Lattice4D(self.half_width, self.nodes, self.chunk, radius=self.half_width - margin)

    def coarsen(self):
        """ every other node, reusing this lattice's coordinates """
        return _SubLattice(self)

    def chunks(self, size=None):
        size = size or self.chunk
        for start in range(0, self.size, size):
            yield self.points[start:start + size], self.volume_weights[start:start + size]

    def describe(self):
        return {'kind': self.kind, 'half_width': self.half_width, 'nodes': self.nodes, 'h': self.h,
                'radius': self.radius}


class _SubLattice(object):
    kind = 'lattice'

    def __init__(self, lattice):
        even = np.zeros(lattice.shape, dtype=bool)
        even[::2, ::2, ::2, ::2] = True
        mask = even & lattice.inside
        self.points = lattice.coords[mask]
        self.volume_weights = round_weight(self.points) * (2.0 * lattice.h) ** 4
        self.chunk = lattice.chunk
        self.h = 2.0 * lattice.h

    @property
    def size(self):
        return self.volume_weights.size

    def chunks(self, size=None):
        size = size or self.chunk
        for start in range(0, self.size, size):
            yield self.points[start:start + size], self.volume_weights[start:start + size]

    def describe(self):
        return {'kind': self.kind, 'h': self.h}


def ball_rule(center, radius, n_r=12, n_psi=8, n_vartheta=8, n_phi=12):
    """ chart-ball quadrature: points and round-volume weights of B_radius(center) """
    s, ws = gauss_legendre(n_r, 0.0, radius)
    omega, wo = s3_rule(n_psi, n_vartheta, n_phi)
    pts = _points(center) + (s[:, None, None] * omega[None, :, :])
    w = (ws * s ** 3)[:, None] * wo[None, :]
    pts = pts.reshape(-1, 4)
    return pts, w.reshape(-1) * round_weight(pts)


class BallGrid(object):
    """ ball_rule packaged as a quadrature grid for integrands supported in the ball """
    kind = 'ball'

    def __init__(self, center, radius, n_r=12, n_psi=8, n_vartheta=8, n_phi=12, chunk=65536):
        self.center = _points(center).reshape(4)
        self.radius = float(radius)
        self.nodes = (n_r, n_psi, n_vartheta, n_phi)
        self.chunk = chunk
        self.points, self.volume_weights = ball_rule(self.center, self.radius, *self.nodes)

    @property
    def size(self):
        return self.volume_weights.size

    def chunks(self, size=None):
        size = size or self.chunk
        for start in range(0, self.size, size):
            yield self.points[start:start + size], self.volume_weights[start:start + size]

    def describe(self):
        return {'kind': self.kind, 'center': self.center.tolist(), 'radius': self.radius,
                'nodes': list(self.nodes)}
