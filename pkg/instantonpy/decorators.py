from functools import wraps
import logging
import inspect


def _bound(func, args, kw):
    sig = inspect.signature(func)
    bound = sig.bind_partial(*args, **kw)
    bound.apply_defaults()
    return bound.arguments


def require_alpha(low=1.0, high=None, name='alpha'):
    """ reject calls whose alpha argument lies outside [low, high] """
    def decorator(func):
        @wraps(func)
        def wrapper(*args, **kw):
            alpha = _bound(func, args, kw).get(name)
            if alpha is not None and (alpha < low or (high is not None and alpha > high)):
                logging.info("Attempted to call function {} with {}={}".format(func.__name__, name, alpha))
                raise ValueError("{} must lie in [{}, {}], got {}".format(
                    name, low, "inf" if high is None else high, alpha))
            return func(*args, **kw)
        return wrapper
    return decorator


def require_positive(*names):
    """ reject calls where any of the named arguments is not strictly positive """
    def decorator(func):
        @wraps(func)
        def wrapper(*args, **kw):
            arguments = _bound(func, args, kw)
            for name in names:
                value = arguments.get(name)
                if value is not None and not value > 0:
                    logging.info("Attempted to call function {} with {}={}".format(func.__name__, name, value))
                    raise ValueError("{} must be positive, got {}".format(name, value))
            return func(*args, **kw)
        return wrapper
    return decorator


def require_at_least(name, low):
    def decorator(func):
        @wraps(func)
        def wrapper(*args, **kw):
            value = _bound(func, args, kw).get(name)
            if value is not None and value < low:
                logging.info("Attempted to call function {} with {}={}".format(func.__name__, name, value))
                raise ValueError("{} must be at least {}, got {}".format(name, low, value))
            return func(*args, **kw)
        return wrapper
    return decorator
