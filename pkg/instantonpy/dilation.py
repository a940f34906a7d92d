"""
One-dimensional analysis of the dilated basic connection.

For tau = log(lambda) >= 0, beta = alpha - 1 and sigma = beta * tau the
alpha-energy of the dilated basic connection is

    YM_alpha(lambda^* basic) = 6^alpha (4/3) pi^2 G,
    G = 3 J / sinh(tau)^3,
    J = int_0^tau cosh(2t)^alpha cosh(2 beta t) (cosh(tau) - cosh(t)) dt,

and the gap 6^alpha (4/3) pi^2 (G - 1) is nonnegative and vanishes only at
lambda = 1.  The same energy is also computed as a radial integral over the
sphere and through the substitution w = lambda (1 + r^2) / (1 + lambda^2 r^2).
"""
import logging

import numpy as np
import pandas as pd

from instantonpy.sphere import RadialGrid, chi_lambda, mu
from instantonpy.energy import (basic_alpha_energy, round_norm2, select_grid, integrate, lp_curvature_norm,
                               lp_difference_norm)
from instantonpy.connections import basic_connection
from instantonpy.decorators import require_alpha, require_positive
from instantonpy.errors import LambdaOverflow, RegimeMisclassified

ROUTES = ('radial', 'w-substitution', 'hyperbolic')
LAMBDA_MAX = 1e6

# int over [0, 2 pi] x [0, pi] x [0, pi] of (1 + sin^2 a + sin^2 a sin^2 b)^2
CHRISTOFFEL_ANGULAR = 217.0 * np.pi ** 3 / 32.0
ANGULAR_BOX = 2.0 * np.pi ** 3


def composite_gauss(f, a, b, panel=1.0, order=16):
    """Composite Gauss-Legendre rule on [a, b].

    Returns the value and the difference against the rule of half the order
    on the same panels.

    Examples
    --------
    >>> value, residual = composite_gauss(np.exp, 0.0, 1.0)
    >>> abs(value - (np.e - 1.0)) < 1e-14
    True
    """
    if b <= a:
        return 0.0, 0.0
    n_panels = int(np.ceil((b - a) / panel))
    edges = np.linspace(a, b, n_panels + 1)
    half = 0.5 * np.diff(edges)[:, None]
    mid = 0.5 * (edges[1:] + edges[:-1])[:, None]

    def rule(n):
        x, w = np.polynomial.legendre.leggauss(n)
        return float(np.sum(f(mid + half * x) * w * half))

    value = rule(order)
    return value, abs(value - rule(max(order // 2, 2)))


def _log_cosh(x):
    x = np.abs(x)
    return x + np.log1p(np.exp(-2.0 * x)) - np.log(2.0)


def _log_sinh(x):
    """ log sinh(x) for x > 0 """
    return x + np.log(-np.expm1(-2.0 * x)) - np.log(2.0)


def _log_cosh_gap(tau, t):
    """ log(cosh(tau) - cosh(t)) for 0 <= t < tau """
    return np.log(2.0) + _log_sinh(0.5 * (tau + t)) + _log_sinh(0.5 * (tau - t))


def _check_lambda(lam):
    if not lam > 0:
        raise ValueError("lambda must be positive, got {}".format(lam))
    lam = max(lam, 1.0 / lam)
    if lam > LAMBDA_MAX:
        logging.info("Attempted to evaluate the dilation profile at lambda={}".format(lam))
        raise LambdaOverflow("lambda {} exceeds the supported range (<= {:g})".format(lam, LAMBDA_MAX))
    return lam


def hyperbolic_G(alpha, tau):
    """ G with its quadrature residual, integrated in log space """
    if tau <= 0:
        return 1.0, 0.0
    beta = alpha - 1.0
    log_scale = np.log(3.0) - 3.0 * _log_sinh(tau)

    def integrand(t):
        return np.exp(alpha * _log_cosh(2.0 * t) + _log_cosh(2.0 * beta * t)
                      + _log_cosh_gap(tau, t) + log_scale)

    return composite_gauss(integrand, 0.0, tau, panel=min(1.0, tau))


def _radial_energy(alpha, lam):
    """ int over S^4 in the variable y = log(r), dV = 32 pi^2 r^4 / (1 + r^2)^4 dy """
    tau = np.log(lam)

    def integrand(y):
        r2 = np.exp(2.0 * y)
        inv_chi = lam ** 4 * ((1.0 + r2) / (1.0 + lam * lam * r2)) ** 4
        return 16.0 * np.pi ** 2 * r2 ** 2 / (1.0 + r2) ** 4 * (3.0 + 3.0 * inv_chi) ** alpha

    return composite_gauss(integrand, -tau - 14.0, 14.0, panel=0.5)


def _w_energy(alpha, lam):
    """ 8 pi^2 3^alpha / (lam - 1/lam)^3 int_{1/lam}^{lam} (1 + w^4)^alpha (lam - w)(w - 1/lam) / w^4 dw """
    tau = np.log(lam)
    if tau == 0.0:
        return basic_alpha_energy(alpha), 0.0
    scale = 8.0 * np.pi ** 2 * 3.0 ** alpha / (2.0 * np.sinh(tau)) ** 3

    def integrand(v):
        # w = exp(v), dw = w dv
        w = np.exp(v)
        return (1.0 + w ** 4) ** alpha * (lam - w) * (w - 1.0 / lam) / w ** 3

    value, residual = composite_gauss(integrand, -tau, tau, panel=min(0.5, tau))
    return scale * value, scale * residual


@require_alpha(1.0, 2.0)
def pullback_energy_report(alpha, lam, route='hyperbolic'):
    """ (value, residual) of YM_alpha(lam^* basic) on the named route """
    lam = _check_lambda(lam)
    if route == 'radial':
        return _radial_energy(alpha, lam)
    if route == 'w-substitution':
        return _w_energy(alpha, lam)
    if route == 'hyperbolic':
        G, residual = hyperbolic_G(alpha, np.log(lam))
        scale = basic_alpha_energy(alpha)
        return scale * G, scale * residual
    raise ValueError("unknown route '{}', expected one of {}".format(route, ROUTES))


def pullback_energy(alpha, lam, route='hyperbolic'):
    """Alpha-energy of the basic connection dilated by ``lam``.

    Values for lam < 1 use the symmetry lam -> 1/lam.

    Examples
    --------
    >>> abs(pullback_energy(1.4, 1.0) - basic_alpha_energy(1.4)) < 1e-12
    True
    """
    return pullback_energy_report(alpha, lam, route)[0]


def G_of_sigma(sigma, beta):
    """ G at sigma = beta log(lambda); G(0) = 1 """
    if not 0.0 < beta <= 1.0:
        raise ValueError("beta must lie in (0, 1], got {}".format(beta))
    if sigma < 0:
        raise ValueError("sigma must be nonnegative, got {}".format(sigma))
    return hyperbolic_G(1.0 + beta, sigma / beta)[0]


@require_alpha(1.0, 2.0)
def gap(alpha, lam):
    """ YM_alpha(lam^* basic) - 6^alpha (4/3) pi^2 """
    lam = _check_lambda(lam)
    if lam == 1.0:
        return 0.0
    G, _ = hyperbolic_G(alpha, np.log(lam))
    return basic_alpha_energy(alpha) * (G - 1.0)


def G_prime_report(sigma, beta):
    """
    dG/dsigma after integrating by parts,
    (6 / sinh(tau)^4) int_0^tau cosh(2t)^(beta-1) sinh(2 alpha t) sinh(t)
    (cosh(tau) - cosh(t)) (2 cosh(tau) cosh(t) - 1) dt.
    """
    if not 0.0 < beta <= 1.0:
        raise ValueError("beta must lie in (0, 1], got {}".format(beta))
    if not sigma > 0:
        raise ValueError("sigma must be positive, got {}".format(sigma))
    alpha = 1.0 + beta
    tau = sigma / beta
    log_scale = np.log(6.0) - 4.0 * _log_sinh(tau)

    def integrand(t):
        t = np.asarray(t, dtype=float)
        tail = np.log(2.0 * np.cosh(tau) * np.cosh(t) - 1.0) if tau < 300 else \
            np.log(2.0) + _log_cosh(tau) + _log_cosh(t)
        return np.exp((beta - 1.0) * _log_cosh(2.0 * t) + _log_sinh(2.0 * alpha * t) + _log_sinh(t)
                      + _log_cosh_gap(tau, t) + tail + log_scale)

    return composite_gauss(integrand, 0.0, tau, panel=min(1.0, tau))


def G_prime(sigma, beta):
    return G_prime_report(sigma, beta)[0]


def dE_dloglambda_basic(alpha, lam, route='hyperbolic', nodes=128):
    """
    d/dlog(lambda) of YM_alpha(lam^* basic), equal to d/dlog(lambda) of
    YM_{alpha,lambda}(basic).  'hyperbolic' uses 6^alpha (4/3) pi^2 beta G'(sigma);
    'integral' uses the mu-weighted sphere integral.  The derivative is odd
    under lambda -> 1/lambda.
    """
    if route == 'integral':
        _check_lambda(lam)
        return dE_dloglambda_general(basic_connection(), alpha, lam, grid=RadialGrid(nodes))
    if route != 'hyperbolic':
        raise ValueError("unknown route '{}'".format(route))
    sign = -1.0 if lam < 1.0 else 1.0
    lam = _check_lambda(lam)
    beta = alpha - 1.0
    if lam == 1.0 or beta == 0.0:
        return 0.0
    return sign * basic_alpha_energy(alpha) * beta * G_prime(beta * np.log(lam), beta)


@require_alpha(1.0)
@require_positive('lam')
def dE_dloglambda_general(c, alpha, lam, grid=None, route='auto', tol=None):
    """ 2 int mu(lam zeta) chi^-1 (3 + chi |F|^2)^(alpha-1) [(alpha-1) chi |F|^2 - 3] dV """
    grid = grid or select_grid(c, route)

    def integrand(p):
        chi = chi_lambda(p, lam)
        f2 = chi * round_norm2(c, p)
        return 2.0 * mu(lam * p) / chi * (3.0 + f2) ** (alpha - 1.0) * ((alpha - 1.0) * f2 - 3.0)

    value, _ = integrate(integrand, grid, tol)
    return value


class DerivativeGapReport(object):
    """
    Comparison of d/dlog(lambda) YM_{alpha,lambda} at the basic connection and at c
    against the two curvature-difference terms that bound it.
    """

    def __init__(self, alpha, lam, lhs, first, second, norms):
        self.alpha = alpha
        self.lam = lam
        self.lhs = lhs
        self.first = first
        self.second = second
        self.norms = norms

    @property
    def bound(self):
        return self.first + self.second

    @property
    def ratio(self):
        """ |lhs| / (first + second); any C at least this large makes the bound hold """
        return abs(self.lhs) / self.bound if self.bound > 0 else np.inf

    def to_dict(self):
        out = {'alpha': self.alpha, 'lambda': self.lam, 'lhs': self.lhs, 'first_term': self.first,
               'second_term': self.second, 'ratio': self.ratio}
        out.update(self.norms)
        return out


@require_alpha(1.0)
@require_positive('lam')
def derivative_gap_bounds(c, alpha, lam, grid=None, route='auto'):
    """
    lhs = dE/dlog(lambda)(basic) - dE/dlog(lambda)(c) and the terms

        (alpha - 1)(1 + lam^(4 beta)) ||F~ - F||_2 (||F~||_2 + ||F||_2)
        (alpha - 1)^2 (1 + lam^(4 beta)) (||F~||_p + ||F||_p) ||F~ - F||_p ||F||_p^(2 alpha),  p = 2 alpha + 2.
    """
    basic = basic_connection()
    grid = grid or select_grid([c, basic], route)
    beta = alpha - 1.0
    p = 2.0 * alpha + 2.0
    lhs = (dE_dloglambda_general(basic, alpha, lam, grid=grid)
           - dE_dloglambda_general(c, alpha, lam, grid=grid))
    norms = {'basic_l2': lp_curvature_norm(basic, 2.0, grid=grid),
             'c_l2': lp_curvature_norm(c, 2.0, grid=grid),
             'difference_l2': lp_difference_norm(basic, c, 2.0, grid=grid),
             'basic_lp': lp_curvature_norm(basic, p, grid=grid),
             'c_lp': lp_curvature_norm(c, p, grid=grid),
             'difference_lp': lp_difference_norm(basic, c, p, grid=grid)}
    weight = 1.0 + lam ** (4.0 * beta)
    first = beta * weight * norms['difference_l2'] * (norms['basic_l2'] + norms['c_l2'])
    second = (beta ** 2 * weight * (norms['basic_lp'] + norms['c_lp']) * norms['difference_lp']
              * norms['c_lp'] ** (2.0 * alpha))
    report = DerivativeGapReport(alpha, lam, float(lhs), float(first), float(second), norms)
    logging.debug("derivative gap at alpha={} lambda={}: {}".format(alpha, lam, report.to_dict()))
    return report


def near_identity_gap(alpha, lam):
    """ leading behaviour of the gap near lambda = 1: 6^alpha alpha beta tau^2 8 pi^2 / 15 """
    tau = np.log(lam)
    return 6.0 ** alpha * alpha * (alpha - 1.0) * tau ** 2 * 8.0 * np.pi ** 2 / 15.0


def gap_regime(alpha, lam):
    """ case of the gap lower bound a sample falls in: 1 (large), 2 (moderate) or 3 (near lambda = 1) """
    beta = alpha - 1.0
    tau = np.log(lam) if lam > 0 else -np.inf
    if not 0.0 < beta <= 1.0 or tau < 0:
        raise RegimeMisclassified("sample (alpha={}, lambda={}) fits no gap regime".format(alpha, lam))
    if beta * tau >= 5.0:
        return 1
    if tau >= 1.0:
        return 2
    return 3


def _gap_bound(regime, alpha, lam):
    beta, tau = alpha - 1.0, np.log(lam)
    if regime == 1:
        return lam ** (4.0 * beta)
    if regime == 2:
        return beta * tau
    return beta * tau ** 2


class GapBoundReport(object):
    """ fitted constants of the gap and derivative lower bounds over a sample set """

    def __init__(self, frame, constants, derivative_constant):
        self.frame = frame
        self.constants = constants
        self.derivative_constant = derivative_constant

    @property
    def passed(self):
        fitted = [c for c in self.constants.values() if c is not None]
        if self.derivative_constant is not None:
            fitted.append(self.derivative_constant)
        return bool(fitted) and all(c > 0 for c in fitted)

    def to_dict(self):
        return {'constants': {str(k): v for k, v in self.constants.items()},
                'derivative_constant': self.derivative_constant,
                'samples': int(len(self.frame)), 'passed': self.passed}


def verify_gap_bounds(samples):
    """
    Largest constants C with gap >= C * bound in each regime, and with
    dE/dlog(lambda) >= C beta tau / (1 + tau) for samples with beta tau <= 2.
    Samples at lambda = 1 are classified but not fitted.
    """
    rows = []
    for alpha, lam in samples:
        regime = gap_regime(alpha, lam)
        if lam == 1.0:
            rows.append({'alpha': alpha, 'lambda': lam, 'regime': regime, 'gap': 0.0,
                         'gap_ratio': np.nan, 'dE_dloglog': 0.0, 'derivative_ratio': np.nan})
            continue
        beta, tau = alpha - 1.0, np.log(lam)
        u = gap(alpha, lam)
        dE = dE_dloglambda_basic(alpha, lam)
        derivative_ratio = dE / (beta * tau / (1.0 + tau)) if beta * tau <= 2.0 else np.nan
        rows.append({'alpha': alpha, 'lambda': lam, 'regime': regime, 'gap': u,
                     'gap_ratio': u / _gap_bound(regime, alpha, lam), 'dE_dloglog': dE,
                     'derivative_ratio': derivative_ratio})
    frame = pd.DataFrame(rows, columns=['alpha', 'lambda', 'regime', 'gap', 'gap_ratio',
                                        'dE_dloglog', 'derivative_ratio'])
    constants = {}
    for regime in (1, 2, 3):
        ratios = frame.loc[frame['regime'] == regime, 'gap_ratio'].dropna()
        constants[regime] = float(ratios.min()) if len(ratios) else None
    derivative = frame['derivative_ratio'].dropna()
    derivative_constant = float(derivative.min()) if len(derivative) else None
    logging.info("Gap bound constants {} derivative {}".format(constants, derivative_constant))
    return GapBoundReport(frame, constants, derivative_constant)


class ProfilePoint(object):
    """ one (alpha, lambda) sample of the dilation profile """

    def __init__(self, alpha, lam):
        lam = _check_lambda(lam)
        self.alpha = float(alpha)
        self.lam = float(lam)
        self.beta = self.alpha - 1.0
        self.tau = float(np.log(lam))
        self.sigma = self.beta * self.tau
        G, g_residual = hyperbolic_G(self.alpha, self.tau)
        self.G = G
        self.gap = 0.0 if self.tau == 0.0 else basic_alpha_energy(self.alpha) * (G - 1.0)
        if self.sigma > 0:
            self.Gprime, gp_residual = G_prime_report(self.sigma, self.beta)
        else:
            self.Gprime, gp_residual = 0.0, 0.0
        self.dE_dloglog = basic_alpha_energy(self.alpha) * self.beta * self.Gprime
        residuals = [pullback_energy_report(self.alpha, self.lam, route)[1] for route in ROUTES]
        self.residual = float(max(residuals + [g_residual, gp_residual]))

    def to_dict(self):
        return {'alpha': self.alpha, 'lambda': self.lam, 'tau': self.tau, 'sigma': self.sigma,
                'G': self.G, 'Gprime': self.Gprime, 'gap': self.gap,
                'dE_dloglog': self.dE_dloglog, 'residual': self.residual}


def profile(alphas, lambdas):
    """ dilation profile over the product of the sample sets, alpha-major ordering """
    rows = [ProfilePoint(a, l).to_dict() for a in alphas for l in lambdas]
    return pd.DataFrame(rows, columns=['alpha', 'lambda', 'tau', 'sigma', 'G', 'Gprime', 'gap',
                                       'dE_dloglog', 'residual'])


def log_chi_derivatives(r, lam):
    """ d/dr and d^2/dr^2 of log chi_lambda along a ray """
    r = np.asarray(r, dtype=float)
    l2 = lam * lam
    d1 = 8.0 * r * (l2 - 1.0) / ((1.0 + l2 * r * r) * (1.0 + r * r))
    d2 = -8.0 * (l2 - 1.0) * (3.0 * l2 * r ** 4 + (l2 + 1.0) * r * r - 1.0) / (
        (r * r + 1.0) ** 2 * (l2 * r * r + 1.0) ** 2)
    return d1, d2


def grad_log_chi_closed_form(lam):
    """ (2^7 / 3) pi^3 ((lam - 1)/lam)^2 ((lam + 1)/lam)^2 """
    return 2.0 ** 7 / 3.0 * np.pi ** 3 * ((lam - 1.0) / lam) ** 2 * ((lam + 1.0) / lam) ** 2


def grad_log_chi_exact(lam):
    """Squared polar-route L^2 norm of grad log chi_lambda.

    With c = lam^2 - 1 the norm is 64 pi^3 c^2 J(c), J(c) = int_0^1 v^2 (1 - v)^2 / (1 + c v)^2 dv,
    and for k = lam^2

        J = [(k - 1)(k^2 + 10 k + 1) / 3 - 2 k (k + 1) log k] / (k - 1)^5.

    The closed form cancels badly near k = 1, where the power series in c is summed instead.

    Examples
    --------
    >>> grad_log_chi_exact(1.0)
    0.0
    >>> round(grad_log_chi_exact(2.0) / np.pi ** 3, 6)
    3.669868
    """
    lam = _check_lambda(lam)
    c = lam * lam - 1.0
    if c == 0.0:
        return 0.0
    if c < 0.5:
        n = np.arange(80, dtype=float)
        J = float(np.sum((n + 1.0) * (-c) ** n * 2.0 / ((n + 3.0) * (n + 4.0) * (n + 5.0))))
    else:
        k = lam * lam
        J = (c * (k * k + 10.0 * k + 1.0) / 3.0 - 2.0 * k * (k + 1.0) * np.log1p(c)) / c ** 5
    return float(64.0 * np.pi ** 3 * c * c * J)


def fit_grad_log_chi(lambdas):
    """
    Least-squares fit of log |grad log chi|^2 = log C + a log((lam - 1)/lam) + b log((lam + 1)/lam)
    over the measured polar-route norms.
    """
    lambdas = np.asarray(lambdas, dtype=float)
    if lambdas.size < 3 or np.any(lambdas <= 1.0):
        raise ValueError("the exponent fit needs at least three dilations above 1")
    measured = np.array([chi_sobolev_norms(lam).grad_norm ** 2 for lam in lambdas])
    design = np.column_stack([np.ones_like(lambdas), np.log((lambdas - 1.0) / lambdas),
                              np.log((lambdas + 1.0) / lambdas)])
    coef, _, _, _ = np.linalg.lstsq(design, np.log(measured), rcond=None)
    rms = float(np.sqrt(np.mean((design.dot(coef) - np.log(measured)) ** 2)))
    fit = {'C': float(np.exp(coef[0])), 'a': float(coef[1]), 'b': float(coef[2]), 'rms_log_residual': rms}
    logging.info("grad log chi fit over lambda in [{:g}, {:g}]: {}".format(lambdas.min(), lambdas.max(), fit))
    return fit


class ChiNormReport(object):
    """L^2 norms of log chi_lambda and its second derivative pieces.

    The integrals use the polar-coordinate weights r^3 / (1 + r^2)^2 for the
    gradient and r^3 / (1 + r^2)^4 for the second-derivative pieces, with the
    angular box [0, 2 pi] x [0, pi]^2.
    """

    def __init__(self, lam, grad_norm, second_radial, second_christoffel, residual):
        self.lam = lam
        self.grad_norm = grad_norm
        self.second_radial = second_radial
        self.second_christoffel = second_christoffel
        self.residual = residual
        self.closed_form = np.sqrt(grad_log_chi_closed_form(lam))
        self.exact = float(np.sqrt(grad_log_chi_exact(lam)))
        tau = np.log(lam)
        self.regime = 'log' if lam <= np.e else 'sqrt-log'
        bound = tau if lam <= np.e else np.sqrt(tau)
        total = self.grad_norm + self.second_norm
        self.fitted_constant = total / bound if bound > 0 else 0.0

    @property
    def second_norm(self):
        return float(np.hypot(self.second_radial, self.second_christoffel))

    def to_dict(self):
        return {'lambda': self.lam, 'grad_norm': self.grad_norm,
                'grad_norm_closed_form': self.closed_form, 'grad_norm_exact': self.exact,
                'second_radial': self.second_radial, 'second_christoffel': self.second_christoffel,
                'second_norm': self.second_norm, 'regime': self.regime,
                'fitted_constant': self.fitted_constant, 'residual': self.residual}


def chi_sobolev_norms(lam):
    lam = _check_lambda(lam)
    if lam == 1.0:
        return ChiNormReport(1.0, 0.0, 0.0, 0.0, 0.0)

    def radial(weight):
        # y = log r, dr = r dy
        def integrand(y):
            r = np.exp(y)
            return weight(r) * r

        return composite_gauss(integrand, -np.log(lam) - 14.0, 14.0, panel=0.5)

    def grad(r):
        d1, _ = log_chi_derivatives(r, lam)
        return r ** 3 / (1.0 + r * r) ** 2 * d1 * d1

    def second(r):
        _, d2 = log_chi_derivatives(r, lam)
        return r ** 3 / (1.0 + r * r) ** 4 * d2 * d2

    def christoffel(r):
        d1, _ = log_chi_derivatives(r, lam)
        return r ** 3 / (1.0 + r * r) ** 4 * r * r * d1 * d1

    g, g_res = radial(grad)
    s, s_res = radial(second)
    c, c_res = radial(christoffel)
    report = ChiNormReport(lam, float(np.sqrt(ANGULAR_BOX * g)), float(np.sqrt(ANGULAR_BOX * s)),
                           float(np.sqrt(CHRISTOFFEL_ANGULAR * c)),
                           float(max(g_res, s_res, c_res)))
    logging.debug("chi norms at lambda={}: {}".format(lam, report.to_dict()))
    return report
