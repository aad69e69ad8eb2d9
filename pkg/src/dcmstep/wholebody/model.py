"""Planar (sagittal) floating-base biped: torso, two thighs, two shanks, two feet.

Generalized coordinates ``q = (x, z, pitch, hip_l, knee_l, ankle_l, hip_r,
knee_r, ankle_r)``. ``(x, z)`` is the hip point and ``pitch`` the torso angle.
All angles are counter-clockwise in the x-z plane, so a positive hip angle
swings the leg forward and a bent knee is negative. Link frames point "up"
along their local z axis; a limb hangs along local -z.
"""
from dataclasses import dataclass, field
import math
from enum import Enum

import numpy as np

from ..errors import ConfigError
from ..lipm import GRAVITY

NQ = 9
BASE = slice(0, 3)
JOINTS = slice(3, 9)
LEFT, RIGHT = 0, 1
LEG_JOINTS = {LEFT: (3, 4, 5), RIGHT: (6, 7, 8)}
ANKLES = (5, 8)


class ContactMode(Enum):
    FLAT = "flat"
    POINT = "point"

    @property
    def size(self):
        return 3 if self is ContactMode.FLAT else 2


@dataclass(frozen=True)
class Link:
    mass: float
    length: float
    com_offset: np.ndarray
    inertia: float


def _rod(mass, length, com):
    return Link(mass, length, np.asarray(com, dtype=float), mass * length**2 / 12.0)


@dataclass(frozen=True)
class PlanarBipedModel:
    """Link parameters, foot geometry and actuation profile.

    ``com_offset`` is expressed in the link frame, whose origin is the
    link's parent joint (the hip point for the torso).
    """

    torso: Link = field(default_factory=lambda: _rod(34.0, 0.5, (0.0, 0.2)))
    thigh: Link = field(default_factory=lambda: _rod(7.0, 0.5, (0.0, -0.25)))
    shank: Link = field(default_factory=lambda: _rod(3.5, 0.5, (0.0, -0.25)))
    foot: Link = field(default_factory=lambda: Link(2.5, 0.2, np.array([0.02, -0.03]), 0.0083))
    ankle_height: float = 0.06
    d_heel: float = 0.08
    d_toe: float = 0.12
    mu: float = 0.8
    active_ankles: bool = True
    gravity: float = GRAVITY

    def __post_init__(self):
        for name in ("torso", "thigh", "shank", "foot"):
            link = getattr(self, name)
            if not (link.mass > 0 and link.length > 0 and link.inertia > 0):
                raise ConfigError(f"{name}: mass, length and inertia must be positive")
        if not 0 < self.mu <= 2:
            raise ConfigError(f"friction coefficient must lie in (0, 2], got {self.mu}")
        if self.d_heel < 0 or self.d_toe < 0 or self.ankle_height <= 0:
            raise ConfigError("invalid foot geometry")

    @property
    def total_mass(self):
        return self.torso.mass + 2 * (self.thigh.mass + self.shank.mass + self.foot.mass)

    @property
    def actuated(self):
        """Indices of actuated joints in q."""
        if self.active_ankles:
            return tuple(range(3, 9))
        return tuple(i for i in range(3, 9) if i not in ANKLES)

    def selection(self):
        S = np.zeros((len(self.actuated), NQ))
        for row, col in enumerate(self.actuated):
            S[row, col] = 1.0
        return S

    def check_lipm_consistency(self, com_height, q=None, tol=0.05):
        """Raise unless the standing CoM height is within ``tol`` of ``com_height``."""
        q = standing_pose(self, com_height) if q is None else q
        h = Kinematics(self, q, np.zeros(NQ)).com[1]
        if abs(h - com_height) > tol * com_height:
            raise ConfigError(f"standing CoM height {h:.3f} m inconsistent with {com_height} m")
        return h


class _Frame:
    """Link frame at its parent joint: angle, rate, origin, origin bias, pivots."""

    __slots__ = ("phi", "omega", "ox", "oz", "bx", "bz", "pivots", "jw")

    def __init__(self, phi, omega, ox, oz, bx, bz, pivots, jw):
        self.phi, self.omega = phi, omega
        self.ox, self.oz, self.bx, self.bz = ox, oz, bx, bz
        self.pivots = pivots
        self.jw = jw

    def locate(self, lx, lz):
        """World offset of a point given in this frame."""
        c, s = math.cos(self.phi), math.sin(self.phi)
        return c * lx - s * lz, s * lx + c * lz


class Kinematics:
    """Positions, Jacobians and velocity-product terms for one state.

    ``bodies[name]`` holds ``(link, phi, jw, com, J_com, bias_com)`` where
    ``jw`` is the angular-rate row, ``J_com`` the 2 x 9 CoM Jacobian and
    ``bias_com`` the ``Jdot qdot`` acceleration of the link CoM.
    """

    def __init__(self, model, q, qd):
        self.model = model
        self.q = np.asarray(q, dtype=float)
        self.qd = np.asarray(qd, dtype=float)
        self.bodies = {}
        self.frames = {}
        q, qd = self.q.tolist(), self.qd.tolist()

        jw = np.zeros(NQ)
        jw[2] = 1.0
        base = _Frame(q[2], qd[2], q[0], q[1], 0.0, 0.0, ((2, q[0], q[1]),), jw)
        self.frames["torso"] = base
        self._add_body("torso", model.torso, base)

        for side, name in ((LEFT, "l"), (RIGHT, "r")):
            frame, parent_length = base, 0.0
            for jidx, link, tag in zip(LEG_JOINTS[side], (model.thigh, model.shank, model.foot), ("thigh", "shank", "foot")):
                if tag != "thigh":
                    dx, dz = frame.locate(0.0, -parent_length)
                    w2 = frame.omega**2
                    ox, oz = frame.ox + dx, frame.oz + dz
                    bx, bz = frame.bx - w2 * dx, frame.bz - w2 * dz
                else:
                    ox, oz, bx, bz = frame.ox, frame.oz, frame.bx, frame.bz
                jw_c = frame.jw.copy()
                jw_c[jidx] = 1.0
                frame = _Frame(frame.phi + q[jidx], frame.omega + qd[jidx], ox, oz, bx, bz,
                               frame.pivots + ((jidx, ox, oz),), jw_c)
                parent_length = link.length
                self.frames[f"{tag}_{name}"] = frame
                self._add_body(f"{tag}_{name}", link, frame)

    def _point(self, frame, lx, lz):
        dx, dz = frame.locate(lx, lz)
        px, pz = frame.ox + dx, frame.oz + dz
        J = np.zeros((2, NQ))
        J[0, 0] = J[1, 1] = 1.0
        for j, cx, cz in frame.pivots:
            J[0, j] = cz - pz
            J[1, j] = px - cx
        w2 = frame.omega**2
        return np.array([px, pz]), J, np.array([frame.bx - w2 * dx, frame.bz - w2 * dz])

    def _add_body(self, name, link, frame):
        pc, Jc, bc = self._point(frame, link.com_offset[0], link.com_offset[1])
        self.bodies[name] = (link, frame.phi, frame.jw, pc, Jc, bc)

    def point(self, body, local):
        """(position, Jacobian, bias) of a point fixed in ``body``'s frame."""
        return self._point(self.frames[body], float(local[0]), float(local[1]))

    def foot_frame(self, side):
        """Sole pose (x, z, pitch), its 3 x 9 Jacobian and bias acceleration."""
        frame = self.frames["foot_l" if side == LEFT else "foot_r"]
        p, J, b = self._point(frame, 0.0, -self.model.ankle_height)
        return np.append(p, frame.phi), np.vstack([J, frame.jw]), np.append(b, 0.0)

    def _stacked(self):
        if not hasattr(self, "_stack"):
            vals = list(self.bodies.values())
            m = np.array([v[0].mass for v in vals])
            inertia = np.array([v[0].inertia for v in vals])
            Jw = np.array([v[2] for v in vals])
            pc = np.array([v[3] for v in vals])
            Jc = np.array([v[4] for v in vals])
            bc = np.array([v[5] for v in vals])
            self._stack = (m, inertia, Jw, pc, Jc, bc)
        return self._stack

    @property
    def com(self):
        m, _, _, pc, _, _ = self._stacked()
        return m @ pc / m.sum()

    def com_jacobian(self):
        m, _, _, _, Jc, bc = self._stacked()
        return np.tensordot(m, Jc, axes=1) / m.sum(), m @ bc / m.sum()

    def com_velocity(self):
        J, _ = self.com_jacobian()
        return J @ self.qd

    def mass_matrix(self):
        m, inertia, Jw, _, Jc, _ = self._stacked()
        Jx, Jz = Jc[:, 0, :], Jc[:, 1, :]
        M = (Jx.T * m) @ Jx + (Jz.T * m) @ Jz + (Jw.T * inertia) @ Jw
        return 0.5 * (M + M.T)

    def nonlinear_effects(self):
        m, _, _, _, Jc, bc = self._stacked()
        f = m[:, None] * (bc + np.array([0.0, self.model.gravity]))
        return np.einsum("bi,bij->j", f, Jc)

    def kinetic_energy(self):
        return 0.5 * self.qd @ self.mass_matrix() @ self.qd

    def potential_energy(self):
        m, _, _, pc, _, _ = self._stacked()
        return float(self.model.gravity * m @ pc[:, 1])


@dataclass
class ContactState:
    """Stance foot, contact mode, anchored sole pose and the last contact wrench."""

    stance: int
    mode: ContactMode = ContactMode.FLAT
    anchor: np.ndarray = None
    wrench: np.ndarray = None

    def __post_init__(self):
        if self.wrench is None:
            self.wrench = np.zeros(self.mode.size)
        self.wrench = np.asarray(self.wrench, dtype=float)
        if self.wrench.shape != (self.mode.size,):
            raise ValueError(f"wrench must have {self.mode.size} entries in {self.mode.value} mode")

    @property
    def swing(self):
        return 1 - self.stance


def contact_terms(kin, contact):
    """Contact Jacobian, bias and pose error of the stance sole."""
    pose, J, b = kin.foot_frame(contact.stance)
    n = contact.mode.size
    err = np.zeros(n) if contact.anchor is None else pose[:n] - np.asarray(contact.anchor)[:n]
    return J[:n], b[:n], err


def dynamics_terms(model, q, qd, contact):
    """(M, N, S, J_c, Jdot_c qdot) for the equations of motion."""
    kin = Kinematics(model, q, qd)
    Jc, bc, _ = contact_terms(kin, contact)
    return kin.mass_matrix(), kin.nonlinear_effects(), model.selection(), Jc, bc


def leg_ik(model, hip, sole, pitch=0.0):
    """Hip, knee, ankle angles placing a flat sole at ``sole`` for hip point ``hip``."""
    l1, l2 = model.thigh.length, model.shank.length
    ankle = np.array([sole[0], sole[1] + model.ankle_height])
    d = ankle - np.asarray(hip, dtype=float)
    L = np.linalg.norm(d)
    if L >= l1 + l2 or L <= abs(l1 - l2):
        raise ConfigError(f"sole target {sole} unreachable from hip {hip}")
    alpha = np.arctan2(d[0], -d[1])
    beta = np.arccos((l1**2 + L**2 - l2**2) / (2 * l1 * L))
    gamma = np.arccos((l2**2 + L**2 - l1**2) / (2 * l2 * L))
    phi_thigh = alpha + beta
    phi_shank = alpha - gamma
    return np.array([phi_thigh - pitch, phi_shank - phi_thigh, -phi_shank])


def standing_pose(model, com_height, com_x=0.0, feet_x=(0.0, 0.0), iterations=30):
    """Upright-torso pose with both soles flat on z = 0 and the CoM at (com_x, com_height)."""
    q = np.zeros(NQ)
    hip = np.array([com_x, com_height])
    for _ in range(iterations):
        q[0:2] = hip
        q[3:6] = leg_ik(model, hip, (feet_x[LEFT], 0.0))
        q[6:9] = leg_ik(model, hip, (feet_x[RIGHT], 0.0))
        err = np.array([com_x, com_height]) - Kinematics(model, q, np.zeros(NQ)).com
        if np.max(np.abs(err)) < 1e-12:
            break
        hip = hip + err
    return q
