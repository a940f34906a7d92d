"""
Negative gradient flow of YM_{alpha,lambda} for radially symmetric connections.

The flow evolves the profile u(theta) = (1 + s) f(s) of the symmetric ansatz
f(|zeta|^2) Im[conj(zeta) d zeta] as u0 + sum_m c_m b_m with
b_m(theta) = cos(m theta) - (-1)^m, which leaves the value at the north pole
(and with it the charge) untouched.  The energy is the radial quadrature sum
and its gradient in the coefficients is exact, so accepted steps decrease the
discretised energy.
"""
import logging

import numpy as np
import pandas as pd
from scipy import linalg

from instantonpy.sphere import RadialGrid, SphereGrid, chi_lambda, conformal_factor
from instantonpy.connections import RadialProfile, basic_connection, chart_forms, curvature_norm2
from instantonpy.energy import integrate, select_grid, topological_charge
from instantonpy.variational import gradient_ym_alpha_lambda
from instantonpy.decorators import require_alpha, require_positive
from instantonpy.errors import StepRejected, FlowNotConverged, ConfigError

TRAJECTORY_COLUMNS = ['t', 'dt', 'energy', 'grad_norm', 'dist_conn', 'dist_curv', 'charge']


class FlowConfig(object):
    """
    Parameters of an alpha-flow run.

    ``safety`` is the Armijo fraction of the predicted decrease dt |grad|^2 an
    accepted step must realise; ``slack`` the relative roundoff allowance on
    the energy comparison.
    """

    def __init__(self, alpha=1.1, lam=1.0, dt_init=1e-2, dt_min=1e-10, safety=1e-4, slack=1e-12,
                 max_time=200.0, grad_tol=1e-6, dist_tol=1e-8, stall_steps=100, modes=8, nodes=64,
                 growth=1.25, log_every=1):
        self.alpha = float(alpha)
        self.lam = float(lam)
        self.dt_init = float(dt_init)
        self.dt_min = float(dt_min)
        self.safety = float(safety)
        self.slack = float(slack)
        self.max_time = float(max_time)
        self.grad_tol = float(grad_tol)
        self.dist_tol = float(dist_tol)
        self.stall_steps = int(stall_steps)
        self.modes = int(modes)
        self.nodes = int(nodes)
        self.growth = float(growth)
        self.log_every = int(log_every)
        self.validate()

    def validate(self):
        if self.alpha < 1.0:
            raise ConfigError("flow alpha must be at least 1, got {}".format(self.alpha))
        if not self.lam > 0:
            raise ConfigError("flow lambda must be positive, got {}".format(self.lam))
        if not 0 < self.dt_min <= self.dt_init:
            raise ConfigError("need 0 < dt_min <= dt_init, got {} and {}".format(self.dt_min, self.dt_init))
        for name in ('grad_tol', 'dist_tol', 'max_time'):
            if not getattr(self, name) > 0:
                raise ConfigError("{} must be positive".format(name))
        if self.modes < 1 or self.nodes < 2 * self.modes:
            raise ConfigError("need at least one mode and two nodes per mode")
        if self.stall_steps < 1 or self.log_every < 1 or self.growth < 1.0:
            raise ConfigError("stall_steps and log_every must be positive, growth at least 1")

    def to_dict(self):
        return dict(vars(self))


class RadialAnsatz(object):
    """ Galerkin space of radial profiles on the nodes of a RadialGrid """

    def __init__(self, c0, modes=8, nodes=64):
        if not (getattr(c0, 'is_radial', False) and hasattr(c0, 'profile')):
            raise ValueError("the alpha-flow needs a radially symmetric initial connection")
        self.grid = RadialGrid(nodes)
        theta, s = self.grid.theta, self.grid.s
        f, fp = c0.profile(s)
        self.u0 = (1.0 + s) * f
        self.du0 = (f + (1.0 + s) * fp) * np.sqrt(s) * (1.0 + s)
        m = np.arange(1, modes + 1)
        self.basis = np.cos(np.outer(m, theta)) - ((-1.0) ** m)[:, None]
        self.dbasis = -m[:, None] * np.sin(np.outer(m, theta))
        self.dtheta_ds = 1.0 / (np.sqrt(s) * (1.0 + s))
        self.metric = (self.basis * (0.75 * s * self.grid.volume_weights)) @ self.basis.T
        self._factor = linalg.cho_factor(self.metric)

    @property
    def size(self):
        return self.basis.shape[0]

    def fields(self, coefficients):
        """ u and du/dtheta on the nodes """
        return self.u0 + coefficients @ self.basis, self.du0 + coefficients @ self.dbasis

    def profile(self, coefficients):
        u, du = self.fields(coefficients)
        s = self.grid.s
        return u / (1.0 + s), du * self.dtheta_ds / (1.0 + s) - u / (1.0 + s) ** 2

    def connection(self, coefficients):
        u, du = self.fields(coefficients)
        return RadialProfile(self.grid.theta, u, du)

    def _terms(self, coefficients, lam):
        f, fp = self.profile(coefficients)
        s = self.grid.s
        a = f + s * fp
        b = f * (1.0 - s * f)
        W = (1.0 + s) ** 4 / 16.0
        f2 = W * 24.0 * (a * a + b * b)
        chi = chi_lambda(self.grid.points, lam)
        return f, a, b, W, f2, chi

    def energy(self, coefficients, alpha, lam):
        _, _, _, _, f2, chi = self._terms(coefficients, lam)
        return float(np.sum(self.grid.volume_weights * 0.5 * (3.0 + chi * f2) ** alpha / chi))

    def gradient(self, coefficients, alpha, lam):
        """ exact derivative of ``energy`` with respect to the coefficients """
        f, a, b, W, f2, chi = self._terms(coefficients, lam)
        s = self.grid.s
        common = self.grid.volume_weights * 0.5 * alpha * (3.0 + chi * f2) ** (alpha - 1.0) * W
        d_f = common * (48.0 * a + 48.0 * b * (1.0 - 2.0 * s * f))
        d_fp = common * 48.0 * s * a
        df_dc = self.basis / (1.0 + s)
        dfp_dc = self.dbasis * self.dtheta_ds / (1.0 + s) - self.basis / (1.0 + s) ** 2
        return df_dc @ d_f + dfp_dc @ d_fp

    def velocity(self, coefficients, alpha, lam):
        """ -G^-1 dE/dc and the L2 norm of the gradient in the Galerkin space """
        g = self.gradient(coefficients, alpha, lam)
        v = linalg.cho_solve(self._factor, g)
        return -v, float(np.sqrt(max(g @ v, 0.0)))


class FlowState(object):
    """ coefficients of the current profile, time, step size and the logged trajectory """

    def __init__(self, ansatz, coefficients, t=0.0, dt=1e-2, history=None):
        self.ansatz = ansatz
        self.coefficients = np.asarray(coefficients, dtype=float)
        self.t = float(t)
        self.dt = float(dt)
        self.history = [] if history is None else history
        self.steps = 0

    @property
    def connection(self):
        return self.ansatz.connection(self.coefficients)

    @property
    def energies(self):
        return np.array([row['energy'] for row in self.history])

    @property
    def grad_norms(self):
        return np.array([row['grad_norm'] for row in self.history])

    @property
    def distances(self):
        return np.array([row['dist_conn'] for row in self.history])

    def record(self, energy, grad_norm, dt):
        connection = self.connection
        dist_conn, dist_curv = distance_to_basic(connection, self.ansatz.grid)
        charge = topological_charge(connection, grid=self.ansatz.grid)
        self.history.append({'t': self.t, 'dt': dt, 'energy': energy, 'grad_norm': grad_norm,
                             'dist_conn': dist_conn, 'dist_curv': dist_curv, 'charge': charge})

    def to_frame(self):
        return pd.DataFrame(self.history, columns=TRAJECTORY_COLUMNS)

    def save_trajectory(self, path):
        self.to_frame().to_csv(path, index=False)
        logging.info("Flow trajectory written to {}".format(path))


def initial_state(c0, cfg):
    ansatz = RadialAnsatz(c0, cfg.modes, cfg.nodes)
    state = FlowState(ansatz, np.zeros(ansatz.size), 0.0, cfg.dt_init)
    _, grad_norm = ansatz.velocity(state.coefficients, cfg.alpha, cfg.lam)
    state.record(ansatz.energy(state.coefficients, cfg.alpha, cfg.lam), grad_norm, 0.0)
    return state


def _rk4(ansatz, c, dt, alpha, lam):
    k1, _ = ansatz.velocity(c, alpha, lam)
    k2, _ = ansatz.velocity(c + 0.5 * dt * k1, alpha, lam)
    k3, _ = ansatz.velocity(c + 0.5 * dt * k2, alpha, lam)
    k4, _ = ansatz.velocity(c + dt * k3, alpha, lam)
    return c + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def flow_step(state, cfg):
    """
    Advance ``state`` by one accepted RK4 step of dc/dt = -G^-1 dE/dc, halving
    dt until the energy decreases.  The state is updated in place and returned.
    """
    ansatz = state.ansatz
    c = state.coefficients
    energy = ansatz.energy(c, cfg.alpha, cfg.lam)
    _, grad_norm = ansatz.velocity(c, cfg.alpha, cfg.lam)
    dt = state.dt
    while True:
        trial = _rk4(ansatz, c, dt, cfg.alpha, cfg.lam)
        trial_energy = ansatz.energy(trial, cfg.alpha, cfg.lam)
        bound = energy - cfg.safety * dt * grad_norm ** 2 + cfg.slack * abs(energy)
        if np.all(np.isfinite(trial)) and trial_energy <= bound:
            break
        dt *= 0.5
        logging.debug("Flow step rejected at t={:.6g}; dt -> {:.3e}".format(state.t, dt))
        if dt < cfg.dt_min:
            raise StepRejected("energy would increase for every step above dt_min={:.1e} at t={:.6g}".format(
                cfg.dt_min, state.t))
    state.coefficients = trial
    state.t += dt
    state.dt = min(dt * cfg.growth, cfg.dt_init)
    state.steps += 1
    if state.steps % cfg.log_every == 0:
        _, new_norm = ansatz.velocity(trial, cfg.alpha, cfg.lam)
        state.record(trial_energy, new_norm, dt)
    return state


def _stabilized(state, cfg):
    window = np.array([row['dist_conn'] for row in state.history[-(cfg.stall_steps + 1):]])
    change = window.max() - window.min()
    return change <= cfg.dist_tol * max(1.0, abs(window[-1]))


def converged(state, cfg):
    """ gradient below grad_tol and distance-to-basic settled over the last stall_steps rows """
    return state.history[-1]['grad_norm'] <= cfg.grad_tol and _stabilized(state, cfg)


def run_flow(c0, cfg=None, trajectory_path=None):
    """Run the alpha-flow from a radial connection until it converges.

    Parameters
    ----------
    c0 : ConnectionModel
        radially symmetric initial connection with a ``profile`` method
    cfg : FlowConfig
    trajectory_path : str, optional
        CSV written on success and on failure

    Returns
    -------
    FlowState
        final state; ``history`` holds the trajectory
    """
    cfg = cfg or FlowConfig()
    state = initial_state(c0, cfg)
    logging.info("Starting alpha-flow: alpha={} lambda={} energy={:.12g}".format(
        cfg.alpha, cfg.lam, state.history[-1]['energy']))
    try:
        while not converged(state, cfg):
            if state.t >= cfg.max_time:
                raise FlowNotConverged("gradient norm {:.3e} above {:.1e} at t={:.6g}".format(
                    state.history[-1]['grad_norm'], cfg.grad_tol, state.t), state)
            flow_step(state, cfg)
            if state.steps % 1000 == 0:
                logging.info("t={:.4g} energy={:.12g} |grad|={:.3e}".format(
                    state.t, state.history[-1]['energy'], state.history[-1]['grad_norm']))
    finally:
        if trajectory_path:
            state.save_trajectory(trajectory_path)
    logging.info("Flow converged at t={:.6g} after {} steps".format(state.t, state.steps))
    return state


def distance_to_basic(c, grid=None, coulomb=False, **kw):
    """
    (||c - basic||_L2, ||F_c - F_basic||_L2) in the common chart trivialisation,
    or after the Coulomb projection when ``coulomb`` is set.
    """
    if coulomb:
        from instantonpy.coulomb import coulomb_project
        result = coulomb_project(c, **kw)
        return result.distance(), result.curvature_distance()
    basic = basic_connection()
    grid = grid or select_grid([c, basic])

    def connection_part(p):
        diff = c.potential(p) - basic.potential(p)
        return np.sum(diff * diff, axis=(-2, -1)) / conformal_factor(p) ** 2

    def curvature_part(p):
        diff = c.curvature(p) - basic.curvature(p)
        return curvature_norm2(diff) / conformal_factor(p) ** 4

    conn, _ = integrate(connection_part, grid, coarse=False)
    curv, _ = integrate(curvature_part, grid, coarse=False)
    return float(np.sqrt(max(conn, 0.0))), float(np.sqrt(max(curv, 0.0)))


def perturbed_basic(eps, coefficients=None, rng=None, modes=4, nodes=64):
    """
    Radial profile u = 1 + eps sum_m a_m b_m / sqrt(sum a_m^2) on RadialGrid(nodes), with
    a_m drawn from ``rng`` when not given.
    """
    grid = RadialGrid(nodes)
    if coefficients is None:
        rng = rng or np.random.default_rng(0)
        coefficients = rng.standard_normal(modes)
    a = np.asarray(coefficients, dtype=float)
    a = a / np.sqrt(np.sum(a * a))
    m = np.arange(1, a.size + 1)
    theta = grid.theta
    u = 1.0 + eps * (a @ (np.cos(np.outer(m, theta)) - ((-1.0) ** m)[:, None]))
    du = eps * (a @ (-m[:, None] * np.sin(np.outer(m, theta))))
    return RadialProfile(theta, u, du)


@require_alpha(1.0)
@require_positive('lam')
def ansatz_closure_residual(c, alpha, lam, grid=None, h=1e-3):
    """
    Relative L2 size of the part of the full gradient orthogonal to the
    symmetric ansatz directions g(|zeta|^2) Im[conj(zeta) d zeta].
    """
    grid = grid or SphereGrid(8, 6, 6, 8)
    total = np.zeros(2)
    for points, weights in grid.chunks(4096):
        G = gradient_ym_alpha_lambda(c, alpha, lam, points, h).total
        W = chart_forms(points)
        norm2 = np.sum(W * W, axis=(-2, -1))
        along = np.sum(G * W, axis=(-2, -1)) / np.where(norm2 > 0, norm2, 1.0)
        rest = G - along[..., None, None] * W
        rho2 = conformal_factor(points) ** 2
        total[0] += np.sum(weights * np.sum(rest * rest, axis=(-2, -1)) / rho2)
        total[1] += np.sum(weights * np.sum(G * G, axis=(-2, -1)) / rho2)
    if not total[1] > 0:
        return 0.0
    return float(np.sqrt(total[0] / total[1]))
