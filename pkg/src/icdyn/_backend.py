"""Kernel selection: the compiled extension when importable, else pure Python."""
from . import _fallback

try:
    from . import _kernels as _compiled
except ImportError:  # extension not built
    _compiled = None

_BACKENDS = {"python": _fallback}
if _compiled is not None:
    _BACKENDS["compiled"] = _compiled

_active = _BACKENDS.get("compiled", _fallback)


def available():
    return sorted(_BACKENDS)


def current():
    return "compiled" if _active is _compiled and _compiled is not None else "python"


def use(name):
    """Switch the process-wide kernel backend (``"compiled"`` or ``"python"``)."""
    global _active
    if name not in _BACKENDS:
        raise ValueError(f"backend {name!r} unavailable; have {available()}")
    _active = _BACKENDS[name]


def lorenz_rk4(*args):
    return _active.lorenz_rk4(*args)


def lorenz_lyapunov(*args):
    return _active.lorenz_lyapunov(*args)


def decay_lm(*args):
    return _active.decay_lm(*args)


def decay_profile(*args):
    return _active.decay_profile(*args)
