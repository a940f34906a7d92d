"""
Run settings stored as a flat ``[instantonpy]`` section of an INI file.
"""
import configparser
import logging
import os

import numpy as np

from instantonpy.errors import ConfigError

SECTION = 'instantonpy'

# key: (type, default)
SCHEMA = {
    'seed': (int, 20240607),
    'tolerance': (float, 1e-8),
    'radial_nodes': (int, 64),
    'sphere_theta': (int, 40),
    'sphere_psi': (int, 24),
    'sphere_vartheta': (int, 20),
    'sphere_phi': (int, 32),
    'lattice_half_width': (float, 3.0),
    'lattice_nodes': (int, 24),
    'fd_step': (float, 1e-3),
    'flow_alpha': (float, 1.1),
    'flow_dt': (float, 1e-2),
    'flow_max_time': (float, 200.0),
    'flow_grad_tol': (float, 1e-6),
    'coulomb_tol': (float, 1e-8),
    'coulomb_max_outer': (int, 30),
    'n_random': (int, 200),
    'output': (str, 'verify_report.json'),
}


class Settings(object):
    """
    Settings with defaults from SCHEMA.  Values are validated on assignment
    through ``update``; file values are overridden by keyword arguments that
    are not None.
    """

    def __init__(self, **values):
        for key, (kind, default) in SCHEMA.items():
            setattr(self, key, default)
        self.update(**values)

    def update(self, **values):
        for key, value in values.items():
            if value is None:
                continue
            if key not in SCHEMA:
                raise ConfigError("unknown setting '{}'".format(key))
            kind = SCHEMA[key][0]
            try:
                setattr(self, key, kind(value))
            except (TypeError, ValueError):
                raise ConfigError("setting '{}' expects {}, got {!r}".format(key, kind.__name__, value))
        self.validate()
        return self

    def validate(self):
        positive = ['tolerance', 'radial_nodes', 'sphere_theta', 'sphere_psi', 'sphere_vartheta',
                    'sphere_phi', 'lattice_half_width', 'fd_step', 'flow_dt', 'flow_max_time',
                    'flow_grad_tol', 'coulomb_tol', 'coulomb_max_outer', 'n_random']
        for key in positive:
            if not getattr(self, key) > 0:
                raise ConfigError("setting '{}' must be positive, got {}".format(key, getattr(self, key)))
        if self.lattice_nodes < 3:
            raise ConfigError("lattice_nodes must be at least 3")
        if not 1.0 <= self.flow_alpha <= 2.0:
            raise ConfigError("flow_alpha must lie in [1, 2], got {}".format(self.flow_alpha))
        if self.seed < 0:
            raise ConfigError("seed must be nonnegative")

    @classmethod
    def load(cls, path, **overrides):
        """ read ``path`` and apply non-None ``overrides`` """
        if not os.path.isfile(path):
            raise ConfigError("configuration file {} not found".format(path))
        C = configparser.ConfigParser()
        try:
            C.read(path)
        except configparser.Error as e:
            raise ConfigError("cannot parse {}: {}".format(path, e))
        if not C.has_section(SECTION):
            raise ConfigError("{} has no [{}] section".format(path, SECTION))
        settings = cls(**dict(C.items(SECTION)))
        settings.update(**overrides)
        logging.info("Loaded settings from {}".format(path))
        return settings

    def save(self, path):
        C = configparser.ConfigParser()
        C.add_section(SECTION)
        for key in SCHEMA:
            C.set(SECTION, key, repr(getattr(self, key)) if SCHEMA[key][0] is float else str(getattr(self, key)))
        with open(path, 'w') as f:
            C.write(f)

    def to_dict(self):
        return {key: getattr(self, key) for key in SCHEMA}

    @property
    def sphere_nodes(self):
        return (self.sphere_theta, self.sphere_psi, self.sphere_vartheta, self.sphere_phi)

    def lattice(self):
        from instantonpy.sphere import Lattice4D
        return Lattice4D(self.lattice_half_width, self.lattice_nodes)

    def flow_config(self, **kw):
        from instantonpy.flow import FlowConfig
        params = {'alpha': self.flow_alpha, 'dt_init': self.flow_dt, 'max_time': self.flow_max_time,
                  'grad_tol': self.flow_grad_tol, 'nodes': self.radial_nodes}
        params.update(kw)
        return FlowConfig(**params)

    def streams(self, n):
        """ n independent counter-based generators derived from the seed """
        return [np.random.Generator(np.random.Philox(s)) for s in np.random.SeedSequence(self.seed).spawn(n)]

    def generator(self, index, n=64):
        """ the ``index``-th of ``n`` spawned generators, so each check owns a fixed stream """
        return self.streams(n)[index]
