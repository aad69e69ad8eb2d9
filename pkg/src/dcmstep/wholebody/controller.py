"""One control cycle of the hierarchical inverse-dynamics controller."""
from dataclasses import dataclass, field

import numpy as np

from ..hqp import HierarchicalSolver
from .model import Kinematics
from .tasks import (
    ACTIVE,
    Layout,
    PdGains,
    assemble_hierarchy,
    base_task,
    com_task,
    contact_task,
    dynamics_rows,
    posture_task,
    stance_foot_task,
    swing_foot_task,
)


@dataclass
class WholeBodyCommand:
    tau: np.ndarray
    qdd: np.ndarray
    wrench: np.ndarray
    residuals: list
    hierarchy: object = field(repr=False, default=None)


@dataclass
class WholeBodyController:
    model: object
    profile: str = ACTIVE
    swing_gains: PdGains = field(default_factory=lambda: PdGains(400.0))
    posture_gains: PdGains = field(default_factory=lambda: PdGains(100.0))
    base_gains: PdGains = field(default_factory=lambda: PdGains(100.0))
    height_gains: PdGains = field(default_factory=lambda: PdGains(100.0))
    torque_limit: float = 200.0
    f_min: float = 1.0
    stance_weight: float = 10.0

    def __post_init__(self):
        self.solver = HierarchicalSolver()

    def tasks(self, q, qd, contact, swing_ref, q_posture, com_accel=None, com_height=None, pitch_d=0.0):
        kin = Kinematics(self.model, q, qd)
        layout = Layout.for_model(self.model, contact)
        pos, vel, acc = swing_ref
        tasks = {
            "dynamics": dynamics_rows(self.model, kin, contact, layout, self.torque_limit),
            "swing": swing_foot_task(kin, contact.swing, pos, vel, acc, self.swing_gains, layout),
            "stance": stance_foot_task(kin, contact, layout, self.stance_weight),
            "contact": contact_task(self.model, contact, layout, self.f_min),
            "posture": posture_task(q, qd, q_posture, self.posture_gains, layout),
            "base": base_task(q, qd, pitch_d, self.base_gains, layout),
        }
        if self.profile == ACTIVE:
            tasks["com"] = com_task(kin, com_accel, layout, com_height, self.height_gains)
        return tasks, layout

    def __call__(self, q, qd, contact, swing_ref, q_posture, com_accel=None, com_height=None, pitch_d=0.0):
        """Solve the hierarchy; ``swing_ref`` is (pose, velocity, acceleration) of the swing sole."""
        tasks, layout = self.tasks(q, qd, contact, swing_ref, q_posture, com_accel, com_height, pitch_d)
        hierarchy = assemble_hierarchy(self.profile, tasks, layout.n_dec)
        sol = self.solver.solve(hierarchy)
        return WholeBodyCommand(sol.z[layout.tau], sol.z[layout.qdd], sol.z[layout.lam], sol.residuals, hierarchy)
