"""Plants driven by the scenario loop: the exact LIPM and the planar multibody biped."""
import numpy as np

from ..errors import DomainError, SimulationFault
from ..lipm import LipmState, propagate_com
from ..wholebody.model import NQ, Kinematics, contact_terms


def step_lipm_plant(state, u, disturbance_accel, dt, omega0):
    """Exact propagation over ``dt`` with constant CoP and constant push acceleration.

    A constant extra acceleration ``a`` is the same as moving the CoP by
    ``-a / omega0**2``, so the closed form applies unchanged.
    """
    if not dt > 0:
        raise DomainError(f"time step must be positive, got {dt}")
    shifted = np.asarray(u, dtype=float) - np.asarray(disturbance_accel, dtype=float) / omega0**2
    return propagate_com(state, shifted, omega0, dt)


class MultibodyDynamics:
    """Contact-constrained forward dynamics of :class:`PlanarBipedModel`.

    The stance contact is bilateral: ``J_c qdd = -Jdot_c qdot`` plus a
    Baumgarte term pulling the sole back onto its anchor.
    """

    def __init__(self, model, baumgarte=20.0):
        self.model = model
        self.alpha = baumgarte
        self.S = model.selection()

    def accelerations(self, q, qd, tau, contact, external=None):
        """(qdd, lambda) for torques ``tau`` and an optional torso force ``external``."""
        kin = Kinematics(self.model, q, qd)
        M = kin.mass_matrix()
        h = self.S.T @ np.asarray(tau, dtype=float) - kin.nonlinear_effects()
        if external is not None:
            _, Jt = kin.bodies["torso"][3], kin.bodies["torso"][4]
            h = h + Jt.T @ np.asarray(external, dtype=float)
        if contact is None:
            return np.linalg.solve(M, h), np.zeros(0)
        Jc, bias, err = contact_terms(kin, contact)
        m = Jc.shape[0]
        K = np.zeros((NQ + m, NQ + m))
        K[:NQ, :NQ] = M
        K[:NQ, NQ:] = -Jc.T
        K[NQ:, :NQ] = Jc
        rhs = np.concatenate([h, -bias - 2.0 * self.alpha * (Jc @ qd) - self.alpha**2 * err])
        try:
            sol = np.linalg.solve(K, rhs)
        except np.linalg.LinAlgError as exc:
            raise SimulationFault(f"singular contact solve at q={np.array2string(q, precision=4)}") from exc
        return sol[:NQ], sol[NQ:]

    def step(self, q, qd, tau, contact, dt, external=None):
        """One RK4 step with torques and external force held over ``dt``."""

        def f(x):
            qdd, lam = self.accelerations(x[:NQ], x[NQ:], tau, contact, external)
            return np.concatenate([x[NQ:], qdd]), lam

        x = np.concatenate([q, qd])
        k1, lam = f(x)
        k2, _ = f(x + 0.5 * dt * k1)
        k3, _ = f(x + 0.5 * dt * k2)
        k4, _ = f(x + dt * k3)
        x = x + dt / 6.0 * (k1 + 2 * k2 + 2 * k3 + k4)
        if not np.all(np.isfinite(x)):
            raise SimulationFault("non-finite multibody state")
        if contact is not None:
            contact.wrench = lam
        return x[:NQ], x[NQ:]

    def impact(self, q, qd, contact):
        """Plastic impact: post-impact velocity with zero sole velocity, momentum consistent."""
        kin = Kinematics(self.model, q, qd)
        M = kin.mass_matrix()
        Jc, _, _ = contact_terms(kin, contact)
        Minv_JT = np.linalg.solve(M, Jc.T)
        impulse = np.linalg.solve(Jc @ Minv_JT, Jc @ qd)
        return qd - Minv_JT @ impulse


def step_multibody_plant(model, q, qd, tau, contact, dt, external=None, baumgarte=20.0):
    if dt > 1e-3 + 1e-12:
        raise DomainError("multibody step must not exceed 1 ms")
    return MultibodyDynamics(model, baumgarte).step(q, qd, tau, contact, dt, external)


def total_energy(model, q, qd):
    kin = Kinematics(model, q, qd)
    return kin.kinetic_energy() + kin.potential_energy()


def lipm_state(x, v):
    return LipmState(np.atleast_1d(x), np.atleast_1d(v))
