"""DCM boundary conditions over a previewed footstep sequence."""
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, PlanError
from .lipm import propagate_dcm


@dataclass(frozen=True)
class FootstepPlan:
    """Footprints u_0..u_n (one CoP per step) with a uniform step period.

    ``preview_count`` is n, the number of steps between the current
    footprint and the terminal one.
    """

    footprints: np.ndarray
    step_period: float

    def __post_init__(self):
        fp = np.array(self.footprints, dtype=float)
        if fp.ndim == 1:
            fp = fp[:, None]
        if fp.ndim != 2 or fp.shape[0] < 2:
            raise PlanError("a footstep plan needs at least 2 footprints")
        if not np.all(np.isfinite(fp)):
            raise PlanError("footprints must be finite")
        if not self.step_period > 0:
            raise PlanError(f"step period must be positive, got {self.step_period}")
        fp.setflags(write=False)
        object.__setattr__(self, "footprints", fp)

    @property
    def preview_count(self):
        return self.footprints.shape[0] - 1

    def with_footprint(self, index, position):
        fp = self.footprints.copy()
        fp[index] = position
        return FootstepPlan(fp, self.step_period)


@dataclass(frozen=True)
class DcmBoundarySchedule:
    """Initial DCM of every step, indexed like the plan's footprints."""

    xi0: np.ndarray

    def __getitem__(self, i):
        return self.xi0[i]

    def __len__(self):
        return self.xi0.shape[0]


def terminal_dcm_boundary(u_last, u_prev, omega0, T):
    """Initial DCM of the last previewed step so it ends on ``u_last``."""
    if not T > 0:
        raise DomainError(f"step period must be positive, got {T}")
    u_last = np.asarray(u_last, dtype=float)
    u_prev = np.asarray(u_prev, dtype=float)
    return (u_last - u_prev) * np.exp(-omega0 * T) + u_prev


def backward_recursion(plan, omega0):
    fp = plan.footprints
    decay = np.exp(-omega0 * plan.step_period)
    xi = np.empty_like(fp)
    xi[-1] = fp[-1]
    for i in range(fp.shape[0] - 1, 0, -1):
        xi[i - 1] = (xi[i] - fp[i - 1]) * decay + fp[i - 1]
    xi.setflags(write=False)
    return DcmBoundarySchedule(xi)


def reference_dcm_at(xi0_i, u_i, omega0, t_in_step, T=None):
    if t_in_step < 0 or (T is not None and t_in_step > T):
        raise DomainError(f"time {t_in_step} outside the step [0, {T}]")
    return propagate_dcm(xi0_i, u_i, omega0, t_in_step)


def reference_dcm_velocity(xi, u_i, omega0):
    return omega0 * (np.asarray(xi, dtype=float) - np.asarray(u_i, dtype=float))


def forward_chain(schedule, plan, omega0):
    """Propagate schedule[0] through every previewed step; returns the end DCM."""
    xi = np.asarray(schedule[0], dtype=float)
    for u in plan.footprints[:-1]:
        xi = propagate_dcm(xi, u, omega0, plan.step_period)
    return xi
