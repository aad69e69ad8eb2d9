"""Swing-foot polynomials and landing adjustment from measured DCM."""
from dataclasses import dataclass

import numpy as np

from .errors import DomainError


def _check_period(T):
    if not T > 0:
        raise DomainError(f"step period must be positive, got {T}")


def quintic_horizontal_coeffs(p0, v0, a0, pT, vT, aT, T):
    """Ascending-power coefficients of the quintic meeting p/v/a at 0 and T."""
    _check_period(T)
    A = np.array(
        [
            [T**3, T**4, T**5],
            [3 * T**2, 4 * T**3, 5 * T**4],
            [6 * T, 12 * T**2, 20 * T**3],
        ]
    )
    rhs = np.array(
        [
            pT - (p0 + v0 * T + 0.5 * a0 * T**2),
            vT - (v0 + a0 * T),
            aT - a0,
        ]
    )
    c345 = np.linalg.solve(A, rhs)
    return np.array([p0, v0, 0.5 * a0, *c345])


def sextic_vertical_coeffs(z0, zT, apex, T):
    """Sextic at rest at both ends that passes through ``apex`` at T/2."""
    _check_period(T)
    h = T / 2
    A = np.array(
        [
            [T**3, T**4, T**5, T**6],
            [3 * T**2, 4 * T**3, 5 * T**4, 6 * T**5],
            [6 * T, 12 * T**2, 20 * T**3, 30 * T**4],
            [h**3, h**4, h**5, h**6],
        ]
    )
    rhs = np.array([zT - z0, 0.0, 0.0, apex - z0])
    return np.array([z0, 0.0, 0.0, *np.linalg.solve(A, rhs)])


def poly_eval(coeffs, t):
    """Position, velocity and acceleration of an ascending-power polynomial."""
    p = v = a = 0.0
    for k in range(len(coeffs) - 1, -1, -1):
        a = a * t + 2.0 * v
        v = v * t + p
        p = p * t + coeffs[k]
    return p, v, a


@dataclass(frozen=True)
class DcmMeasurement:
    xi_mea: np.ndarray
    t_in_step: float


def predict_step_end_dcm(meas, u_i, omega0, T):
    """Forward-predict the measured DCM to the end of the current step.

    The CoP is assumed to stay at ``u_i`` for the remaining ``T - t``.
    """
    t = meas.t_in_step
    if t < 0 or t > T:
        raise DomainError(f"time {t} outside the step [0, {T}]")
    u_i = np.asarray(u_i, dtype=float)
    return (np.asarray(meas.xi_mea, dtype=float) - u_i) * np.exp(omega0 * (T - t)) + u_i


def adjusted_footprint(xi_end_est, xi_boundary_next2, omega0, T):
    """Next footprint that carries ``xi_end_est`` onto ``xi_boundary_next2`` in one step."""
    _check_period(T)
    g = np.exp(omega0 * T)
    return (np.asarray(xi_boundary_next2, dtype=float) - np.asarray(xi_end_est, dtype=float) * g) / (1.0 - g)


def footprint_modification(u_adjusted, u_planned):
    return np.asarray(u_adjusted, dtype=float) - np.asarray(u_planned, dtype=float)


def landing_modification(xi_mea, t_in_step, u_i, u_next, xi_boundary_next2, omega0, T):
    """Chain of prediction, footprint correction and offset for one control cycle."""
    xi_es = predict_step_end_dcm(DcmMeasurement(xi_mea, t_in_step), u_i, omega0, T)
    return footprint_modification(adjusted_footprint(xi_es, xi_boundary_next2, omega0, T), u_next)


class SwingTrajectory:
    """One swing phase: quintic horizontal axes, sextic vertical axis, live offset.

    Positions are 3-vectors ordered (x, y, z). The live offset ``mod`` shifts
    the horizontal components only.

    Parameters
    ----------
    start, end : array-like, shape (3,)
        Lift-off and planned touchdown positions; the swing starts and ends at rest.
    step_period : float
    apex_height : float
        Absolute height at mid-swing.
    freeze_fraction : float
        Offset updates are ignored during this final fraction of the swing.
    smoothing : bool
        If true the applied offset follows a quintic re-planned every update
        from its current state to the commanded value, reaching it at rest at
        touchdown. Otherwise the offset is applied as a step.
    clamp : float or array-like or None
        Half-widths of a box bounding the offset.
    """

    def __init__(self, start, end, step_period, apex_height, freeze_fraction=0.05, smoothing=False, clamp=None):
        _check_period(step_period)
        self.start = np.asarray(start, dtype=float)
        self.end = np.asarray(end, dtype=float)
        self.step_period = float(step_period)
        self.apex_height = float(apex_height)
        self.freeze_fraction = float(freeze_fraction)
        self.smoothing = smoothing
        self.clamp = None if clamp is None else np.broadcast_to(np.asarray(clamp, dtype=float), (2,))
        T = self.step_period
        self.horizontal_coeffs = [
            quintic_horizontal_coeffs(self.start[k], 0.0, 0.0, self.end[k], 0.0, 0.0, T) for k in range(2)
        ]
        self.vertical_coeffs = sextic_vertical_coeffs(self.start[2], self.end[2], self.apex_height, T)
        self.mod = np.zeros(2)
        self._blend = None  # (t0, coeffs per axis) when smoothing

    def _check_time(self, t):
        if t < 0 or t > self.step_period + 1e-12:
            raise DomainError(f"time {t} outside the step [0, {self.step_period}]")

    def frozen(self, t):
        return t >= (1.0 - self.freeze_fraction) * self.step_period

    def update_modification(self, mod, t):
        """Set the commanded landing offset at step time ``t``; returns the offset in force."""
        self._check_time(t)
        if self.frozen(t):
            return self.mod
        mod = np.asarray(mod, dtype=float)
        if self.clamp is not None:
            mod = np.clip(mod, -self.clamp, self.clamp)
        if self.smoothing:
            p, v, a = self._offset(t)
            remaining = self.step_period - t
            self._blend = (t, [quintic_horizontal_coeffs(p[k], v[k], a[k], mod[k], 0.0, 0.0, remaining) for k in range(2)])
        self.mod = mod.copy()
        return self.mod

    def _offset(self, t):
        if not self.smoothing:
            return self.mod, np.zeros(2), np.zeros(2)
        if self._blend is None:
            return np.zeros(2), np.zeros(2), np.zeros(2)
        t0, coeffs = self._blend
        s = min(t - t0, self.step_period - t0)
        pva = np.array([poly_eval(c, s) for c in coeffs])
        return pva[:, 0], pva[:, 1], pva[:, 2]

    @property
    def landing(self):
        return self.end[:2] + self.mod

    def pose(self, t):
        """Position, velocity and acceleration 3-vectors at step time ``t``."""
        self._check_time(t)
        t = min(t, self.step_period)
        pos = np.empty(3)
        vel = np.empty(3)
        acc = np.empty(3)
        for k in range(2):
            pos[k], vel[k], acc[k] = poly_eval(self.horizontal_coeffs[k], t)
        pos[2], vel[2], acc[2] = poly_eval(self.vertical_coeffs, t)
        op, ov, oa = self._offset(t)
        pos[:2] += op
        vel[:2] += ov
        acc[:2] += oa
        return pos, vel, acc


def eval_swing_pose(traj, t_in_step):
    return traj.pose(t_in_step)
