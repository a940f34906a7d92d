"""
Quaternion and imaginary-quaternion (su(2)) algebra.

The vectorised functions operate on numpy arrays whose trailing axis holds the
components: length 4 (w, x, y, z) for quaternions and length 3 (x, y, z) for
imaginary quaternions.  Leading axes broadcast.  ``Quaternion`` and
``ImQuaternion`` are small value wrappers around single values.
"""
import numpy as np

# quaternionic chart basis e = (1, i, j, k)
BASIS = np.eye(4)


def _as_array(q):
    if isinstance(q, (Quaternion, ImQuaternion)):
        return q.components
    return np.asarray(q, dtype=float)


def qmul(a, b):
    """Hamilton product of quaternion arrays ``(..., 4)``.

    Examples
    --------
    >>> qmul([0, 1, 0, 0], [0, 0, 1, 0])
    array([0., 0., 0., 1.])
    """
    a = _as_array(a)
    b = _as_array(b)
    a0, av = a[..., :1], a[..., 1:]
    b0, bv = b[..., :1], b[..., 1:]
    w = a0 * b0 - np.sum(av * bv, axis=-1, keepdims=True)
    v = a0 * bv + b0 * av + np.cross(av, bv)
    return np.concatenate([w, v], axis=-1)


def qconj(q):
    q = _as_array(q)
    return q * np.array([1.0, -1.0, -1.0, -1.0])


def qnorm2(q):
    q = _as_array(q)
    return np.sum(q * q, axis=-1)


def im_part(q):
    """ drop the scalar part """
    return _as_array(q)[..., 1:]


def as_quaternion(v):
    """ embed imaginary quaternions ``(..., 3)`` as quaternions with zero scalar part """
    v = _as_array(v)
    return np.concatenate([np.zeros(v.shape[:-1] + (1,)), v], axis=-1)


def inner(a, b):
    """ Euclidean pairing with |i| = |j| = |k| = 1 """
    return np.sum(_as_array(a) * _as_array(b), axis=-1)


def bracket(a, b):
    """Commutator ab - ba of imaginary quaternions, equal to 2 a x b.

    Examples
    --------
    >>> bracket([1, 0, 0], [0, 1, 0])
    array([0., 0., 2.])
    """
    return 2.0 * np.cross(_as_array(a), _as_array(b))


def exp_im(s):
    """Exponential of an imaginary quaternion: cos|s| + (s/|s|) sin|s|.

    Examples
    --------
    >>> exp_im([0.0, 0.0, 0.0])
    array([1., 0., 0., 0.])
    """
    s = _as_array(s)
    theta = np.sqrt(np.sum(s * s, axis=-1, keepdims=True))
    # sin(t)/t without the removable singularity
    sinc = np.sinc(theta / np.pi)
    return np.concatenate([np.cos(theta), sinc * s], axis=-1)


def log_unit(q):
    """ principal logarithm of unit quaternions, returned as imaginary quaternions """
    q = _as_array(q)
    v = q[..., 1:]
    vn = np.sqrt(np.sum(v * v, axis=-1, keepdims=True))
    theta = np.arctan2(vn, q[..., :1])
    safe = np.where(vn > 1e-150, vn, 1.0)
    scale = np.where(vn > 1e-150, theta / safe, 1.0 / q[..., :1])
    return v * scale


def conjugate_by(q, v):
    """ q^{-1} v q for unit quaternions q and imaginary v """
    q = _as_array(q)
    return im_part(qmul(qmul(qconj(q), as_quaternion(v)), q))


def left_mul_matrix(q):
    """ 4x4 real matrix of x -> q x """
    q = _as_array(q)
    return np.stack([qmul(q, e) for e in BASIS], axis=-1)


class Quaternion(object):
    """ value type for a single quaternion w + x i + y j + z k """

    def __init__(self, w=0.0, x=0.0, y=0.0, z=0.0):
        self.components = np.array([w, x, y, z], dtype=float)

    @classmethod
    def from_array(cls, a):
        return cls(*np.asarray(a, dtype=float).reshape(4))

    w = property(lambda self: self.components[0])
    x = property(lambda self: self.components[1])
    y = property(lambda self: self.components[2])
    z = property(lambda self: self.components[3])

    def __mul__(self, other):
        if np.isscalar(other):
            return Quaternion.from_array(self.components * other)
        return Quaternion.from_array(qmul(self, other))

    def __rmul__(self, other):
        return Quaternion.from_array(self.components * other)

    def __add__(self, other):
        return Quaternion.from_array(self.components + _as_array(other))

    def __sub__(self, other):
        return Quaternion.from_array(self.components - _as_array(other))

    def __neg__(self):
        return Quaternion.from_array(-self.components)

    def __eq__(self, other):
        return np.array_equal(self.components, _as_array(other))

    def __hash__(self):
        return hash(tuple(self.components))

    def conj(self):
        return Quaternion.from_array(qconj(self))

    def norm2(self):
        return float(qnorm2(self))

    def norm(self):
        return float(np.sqrt(self.norm2()))

    def im(self):
        return ImQuaternion(*self.components[1:])

    def isclose(self, other, atol=1e-12):
        return bool(np.allclose(self.components, _as_array(other), rtol=0, atol=atol))

    def __repr__(self):
        return "Quaternion({:g}, {:g}, {:g}, {:g})".format(*self.components)


class ImQuaternion(object):
    """ imaginary quaternion x i + y j + z k, an element of su(2) """

    def __init__(self, x=0.0, y=0.0, z=0.0):
        self.components = np.array([x, y, z], dtype=float)

    @classmethod
    def from_array(cls, a):
        return cls(*np.asarray(a, dtype=float).reshape(3))

    x = property(lambda self: self.components[0])
    y = property(lambda self: self.components[1])
    z = property(lambda self: self.components[2])

    def bracket(self, other):
        return ImQuaternion.from_array(bracket(self, other))

    def inner(self, other):
        return float(inner(self, other))

    def exp(self):
        return Quaternion.from_array(exp_im(self))

    def as_quaternion(self):
        return Quaternion(0.0, *self.components)

    def __add__(self, other):
        return ImQuaternion.from_array(self.components + _as_array(other))

    def __sub__(self, other):
        return ImQuaternion.from_array(self.components - _as_array(other))

    def __mul__(self, other):
        if np.isscalar(other):
            return ImQuaternion.from_array(self.components * other)
        return Quaternion.from_array(qmul(as_quaternion(self), _pad(other)))

    def __rmul__(self, other):
        return ImQuaternion.from_array(self.components * other)

    def __neg__(self):
        return ImQuaternion.from_array(-self.components)

    def __eq__(self, other):
        return np.array_equal(self.components, _as_array(other))

    def __hash__(self):
        return hash(tuple(self.components))

    def norm(self):
        return float(np.linalg.norm(self.components))

    def __repr__(self):
        return "ImQuaternion({:g}, {:g}, {:g})".format(*self.components)


def _pad(q):
    q = _as_array(q)
    return as_quaternion(q) if q.shape[-1] == 3 else q
