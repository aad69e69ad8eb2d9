"""Task and constraint rows over the whole-body decision vector.

The decision vector is ``z = (qdd, tau, lambda)``: generalized accelerations,
actuated joint torques and the stance contact wrench.
"""
from dataclasses import dataclass

import numpy as np

from ..errors import ConfigError
from ..hqp import Hierarchy, TaskLevel
from .model import NQ, ContactMode, contact_terms

ACTIVE = "active"
PASSIVE = "passive"


@dataclass(frozen=True)
class PdGains:
    kp: float
    kd: float = None

    def __post_init__(self):
        if self.kd is None:
            object.__setattr__(self, "kd", 2.0 * np.sqrt(self.kp))


@dataclass(frozen=True)
class Layout:
    n_act: int
    n_contact: int

    @property
    def n_dec(self):
        return NQ + self.n_act + self.n_contact

    @property
    def qdd(self):
        return slice(0, NQ)

    @property
    def tau(self):
        return slice(NQ, NQ + self.n_act)

    @property
    def lam(self):
        return slice(NQ + self.n_act, self.n_dec)

    def rows(self, block, cols):
        A = np.zeros((block.shape[0], self.n_dec))
        A[:, cols] = block
        return A

    @classmethod
    def for_model(cls, model, contact):
        return cls(len(model.actuated), contact.mode.size)


def dynamics_rows(model, kin, contact, layout, torque_limit=200.0):
    """M qdd - S^T tau - J_c^T lambda = -N, with |tau| <= torque_limit."""
    M = kin.mass_matrix()
    N = kin.nonlinear_effects()
    Jc, _, _ = contact_terms(kin, contact)
    A = np.hstack([M, -model.selection().T, -Jc.T])
    eye = np.eye(layout.n_act)
    C = np.vstack([layout.rows(eye, layout.tau), layout.rows(-eye, layout.tau)])
    lim = np.broadcast_to(np.asarray(torque_limit, dtype=float), (layout.n_act,))
    return TaskLevel(A, -N, C, np.concatenate([lim, lim]), name="dynamics")


def swing_foot_task(kin, swing, x_ref, xd_ref, xdd_ref, gains, layout, weight=1.0):
    """Sole (x, z, pitch) tracking with PD feedback on the reference."""
    pose, J, bias = kin.foot_frame(swing)
    vel = J @ kin.qd
    kp = np.broadcast_to(gains.kp, (3,))
    kd = np.broadcast_to(gains.kd, (3,))
    target = np.asarray(xdd_ref) + kd * (np.asarray(xd_ref) - vel) + kp * (np.asarray(x_ref) - pose) - bias
    return TaskLevel(layout.rows(J, layout.qdd), target, weights=np.full(3, weight), name="swing")


def stance_foot_task(kin, contact, layout, weight=1.0):
    """Zero sole acceleration of the stance foot."""
    Jc, bias, _ = contact_terms(kin, contact)
    return TaskLevel(layout.rows(Jc, layout.qdd), -bias, weights=np.full(Jc.shape[0], weight), name="stance")


def com_task(kin, accel_ref, layout, height_ref=None, gains=None, weight=1.0):
    """CoM acceleration task; ``accel_ref`` is (horizontal, vertical).

    With ``height_ref`` and ``gains`` the vertical row gets PD feedback on
    the CoM height so impacts do not leave a residual vertical drift.
    """
    J, bias = kin.com_jacobian()
    target = np.array(accel_ref, dtype=float)
    if height_ref is not None and gains is not None:
        vz = (J @ kin.qd)[1]
        target[1] += gains.kp * (height_ref - kin.com[1]) - gains.kd * vz
    return TaskLevel(layout.rows(J, layout.qdd), target - bias, weights=np.full(2, weight), name="com")


def posture_task(q, qd, q_d, gains, layout, weight=1.0):
    """Joint-space PD acceleration over the six leg joints."""
    q, qd = np.asarray(q), np.asarray(qd)
    target = gains.kp * (np.asarray(q_d)[3:] - q[3:]) - gains.kd * qd[3:]
    return TaskLevel(layout.rows(np.eye(6), slice(3, NQ)), target, weights=np.full(6, weight), name="posture")


def base_task(q, qd, pitch_d, gains, layout, weight=1.0):
    """Torso pitch PD; the torso rate Jacobian is constant so its bias is zero."""
    J = np.zeros((1, NQ))
    J[0, 2] = 1.0
    target = gains.kp * (pitch_d - q[2]) - gains.kd * qd[2]
    return TaskLevel(layout.rows(J, layout.qdd), [target], weights=[weight], name="base")


def contact_inequalities(model, mode, f_min=1.0):
    """Rows ``C lambda <= d`` for unilaterality, friction and (flat) CoP bounds.

    ``lambda = (f_x, f_z[, m])`` with ``m`` the counter-clockwise moment at
    the sole point, so the CoP offset along the sole is ``m / f_z``.
    """
    mu = model.mu
    rows = [
        [0.0, -1.0],
        [1.0, -mu],
        [-1.0, -mu],
    ]
    d = [-f_min, 0.0, 0.0]
    if mode is ContactMode.FLAT:
        rows = [r + [0.0] for r in rows]
        rows += [[0.0, -model.d_heel, -1.0], [0.0, -model.d_toe, 1.0]]
        d += [0.0, 0.0]
    return np.array(rows), np.array(d)


def contact_task(model, contact, layout, f_min=1.0):
    C, d = contact_inequalities(model, contact.mode, f_min)
    return TaskLevel(C=layout.rows(C, layout.lam), d=d, name="contact")


def assemble_hierarchy(profile, tasks, n_dec):
    """Stack named task levels in the priority order of an actuation profile.

    ``tasks`` maps names (dynamics, swing, stance, com, contact, posture,
    base) to :class:`TaskLevel` rows.
    """
    if profile == ACTIVE:
        needed = ("dynamics", "swing", "stance", "com", "contact", "posture", "base")
        order = [("dynamics",), ("swing", "stance", "com", "contact"), ("posture", "base")]
    elif profile == PASSIVE:
        needed = ("dynamics", "contact", "swing", "stance", "posture", "base")
        if "com" in tasks:
            raise ConfigError("passive profile has no CoM/DCM task")
        order = [("dynamics", "contact"), ("swing", "stance", "posture"), ("base",)]
    else:
        raise ConfigError(f"unknown actuation profile {profile!r}")
    missing = [k for k in needed if k not in tasks]
    if missing:
        raise ConfigError(f"profile {profile!r} is missing tasks {missing}")
    levels = [TaskLevel.stack([tasks[k] for k in group], name="+".join(group)) for group in order]
    return Hierarchy(levels, n_dec)
