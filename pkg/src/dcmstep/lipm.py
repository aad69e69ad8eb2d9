"""Linear inverted pendulum model and its divergent component of motion.

All functions act componentwise on the horizontal coordinates, so they
accept 1-D (planar) or 2-D (x, y) arrays alike.
"""
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError

GRAVITY = 9.81


def natural_frequency(z0, g=GRAVITY):
    """Pendulum natural frequency sqrt(g / z0)."""
    if not (z0 > 0 and g > 0):
        raise DomainError(f"com height and gravity must be positive, got z0={z0}, g={g}")
    return float(np.sqrt(g / z0))


@dataclass(frozen=True)
class LipmParams:
    com_height: float
    gravity: float = GRAVITY
    omega0: float = field(init=False)

    def __post_init__(self):
        object.__setattr__(self, "omega0", natural_frequency(self.com_height, self.gravity))


@dataclass(frozen=True)
class LipmState:
    com: np.ndarray
    com_vel: np.ndarray

    def __post_init__(self):
        com = np.array(self.com, dtype=float)
        vel = np.array(self.com_vel, dtype=float)
        if com.shape != vel.shape:
            raise DomainError("com and com_vel must have the same shape")
        if not (np.all(np.isfinite(com)) and np.all(np.isfinite(vel))):
            raise DomainError("state must be finite")
        object.__setattr__(self, "com", com)
        object.__setattr__(self, "com_vel", vel)


def _check_omega(omega0):
    if not omega0 > 0:
        raise DomainError(f"omega0 must be positive, got {omega0}")


def _check_time(t):
    if t < 0:
        raise DomainError(f"duration must be non-negative, got {t}")


def dcm_from_state(state, omega0):
    """xi = x + xdot / omega0."""
    _check_omega(omega0)
    return state.com + state.com_vel / omega0


def propagate_dcm(xi0, u, omega0, t):
    """DCM after ``t`` seconds with the CoP held at ``u``."""
    _check_time(t)
    xi0 = np.asarray(xi0, dtype=float)
    u = np.asarray(u, dtype=float)
    return (xi0 - u) * np.exp(omega0 * t) + u


def propagate_com(state, u, omega0, t):
    """Closed-form LIPM state after ``t`` seconds with a constant CoP."""
    _check_time(t)
    u = np.asarray(u, dtype=float)
    xi0 = dcm_from_state(state, omega0)
    ep = np.exp(omega0 * t)
    em = np.exp(-omega0 * t)
    x = u + (state.com - u) * em + (xi0 - u) * (ep - em) / 2.0
    xi = (xi0 - u) * ep + u
    return LipmState(x, omega0 * (xi - x))


def lipm_accel(x, u, omega0):
    return omega0**2 * (np.asarray(x, dtype=float) - np.asarray(u, dtype=float))
