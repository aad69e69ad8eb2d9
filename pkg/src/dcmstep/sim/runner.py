"""Closed-loop scenario runner: planning, DCM feedback, landing adjustment, plants."""
import csv
import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from ..errors import ConfigError
from ..lipm import LipmState, dcm_from_state, natural_frequency
from ..planner import FootstepPlan, backward_recursion, reference_dcm_at, reference_dcm_velocity
from ..swing import SwingTrajectory, landing_modification
from ..tracking import DcmGains, SupportPolygon, desired_cop, project_cop
from ..wholebody.model import LEFT, ContactMode, ContactState, Kinematics, PlanarBipedModel, standing_pose
from ..wholebody.controller import WholeBodyController
from .config import footstep_sequence
from .plants import MultibodyDynamics, step_lipm_plant

COMPLETED = "completed"
DIVERGED = "diverged"

BASE_COLUMNS = [
    ("time", "s"),
    ("step", "-"),
    ("t_in_step", "s"),
    ("xi_des_x", "m"), ("xi_des_y", "m"),
    ("xi_x", "m"), ("xi_y", "m"),
    ("com_x", "m"), ("com_y", "m"),
    ("cop_x", "m"), ("cop_y", "m"),
    ("stance_x", "m"), ("stance_y", "m"),
    ("planned_next_x", "m"), ("planned_next_y", "m"),
    ("swing_x", "m"), ("swing_y", "m"), ("swing_z", "m"),
    ("mod_x", "m"), ("mod_y", "m"),
]
MULTIBODY_COLUMNS = [(f"hqp_residual_{k}", "-") for k in range(3)] + [
    (f"tau_{j}", "N m") for j in ("hip_l", "knee_l", "ankle_l", "hip_r", "knee_r", "ankle_r")
]


class TrajectoryLog:
    """Uniformly sampled time series with named, unit-annotated columns."""

    def __init__(self, columns):
        self.columns = list(columns)
        self._rows = []

    def append(self, row):
        if len(row) != len(self.columns):
            raise ValueError("row length does not match the log columns")
        self._rows.append(np.asarray(row, dtype=float))

    def __len__(self):
        return len(self._rows)

    @property
    def data(self):
        if not self._rows:
            return np.zeros((0, len(self.columns)))
        return np.vstack(self._rows)

    def column(self, name):
        names = [c for c, _ in self.columns]
        return self.data[:, names.index(name)]

    def vector(self, prefix, axes="xy"):
        return np.column_stack([self.column(f"{prefix}_{a}") for a in axes])

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow([f"{name} [{unit}]" for name, unit in self.columns])
            for row in self._rows:
                writer.writerow([f"{v:.9g}" for v in row])


@dataclass
class ScenarioResult:
    status: str
    log: TrajectoryLog
    steps_completed: int
    step_max_dcm_error: list = field(default_factory=list)
    step_max_mod: list = field(default_factory=list)
    omega0: float = None
    step_period: float = None
    dt: float = None
    landed: list = field(default_factory=list)
    step_end_dcm: list = field(default_factory=list)

    @property
    def max_mod(self):
        return max(self.step_max_mod, default=0.0)

    def summary(self):
        return {
            "status": self.status,
            "steps_completed": self.steps_completed,
            "step_period": self.step_period,
            "dt": self.dt,
            "max_mod": self.max_mod,
            "per_step_max_dcm_error": self.step_max_dcm_error,
            "per_step_max_mod": self.step_max_mod,
        }

    def write(self, outdir, name):
        outdir = Path(outdir)
        outdir.mkdir(parents=True, exist_ok=True)
        self.log.to_csv(outdir / f"{name}.csv")
        (outdir / f"{name}_summary.json").write_text(json.dumps(self.summary(), indent=2))


def _plan_window(footprints, i, preview, period):
    return FootstepPlan(footprints[i : i + preview + 1], period)


def support_exchange(footprints, step, traj, omega0, period, preview, swing_kwargs):
    """Swap stance and swing at the end of step ``step``.

    The swing foot's landing (planned footprint plus its final offset)
    replaces footprint ``step + 1``; the boundary recursion reruns on the
    shifted window and a fresh swing trajectory starts from the old stance.
    Returns ``(footprints, plan, schedule, traj)``.
    """
    dim = footprints.shape[1]
    fp = footprints.copy()
    fp[step + 1] = traj.landing[:dim]
    plan = _plan_window(fp, step + 1, preview, period)
    schedule = backward_recursion(plan, omega0)
    new_traj = _swing(fp[step], fp[step + 2], period, swing_kwargs)
    return fp, plan, schedule, new_traj


def _swing(start, end, period, kwargs):
    s = np.zeros(3)
    e = np.zeros(3)
    s[: len(start)] = start
    e[: len(end)] = end
    return SwingTrajectory(s, e, period, **kwargs)


def _pad2(v):
    out = np.zeros(2)
    v = np.atleast_1d(v)
    out[: v.shape[0]] = v
    return out


class _LipmPlantAdapter:
    dim = 2

    def __init__(self, cfg, omega0, com, com_vel):
        self.cfg = cfg
        self.omega0 = omega0
        self.state = LipmState(com, com_vel)
        self.cop = np.array(com, dtype=float)

    def measure(self):
        return self.state.com, self.state.com_vel

    def polygon(self, stance):
        if self.cfg.profile == "passive":
            return SupportPolygon.point(stance)
        c = self.cfg
        return SupportPolygon.rectangle(stance, c.foot_back, c.foot_front, c.foot_half_width)

    def kick(self, dv):
        self.state = LipmState(self.state.com, self.state.com_vel + dv)

    def advance(self, u_cmd, push, dt, **_):
        self.cop = u_cmd
        self.state = step_lipm_plant(self.state, u_cmd, push, dt, self.omega0)
        return [], []

    def touchdown(self, landed):
        pass


class _MultibodyPlantAdapter:
    dim = 1

    def __init__(self, cfg, omega0, com_x, stance_x, swing_x):
        self.cfg = cfg
        self.omega0 = omega0
        passive = cfg.profile == "passive"
        self.model = PlanarBipedModel(active_ankles=not passive)
        self.mode = ContactMode.POINT if passive else ContactMode.FLAT
        feet = (stance_x, swing_x)
        self.q = standing_pose(self.model, cfg.com_height, com_x, feet)
        self.model.check_lipm_consistency(cfg.com_height, self.q)
        self.qd = np.zeros(9)
        self.q_posture = self.q.copy()
        self.dynamics = MultibodyDynamics(self.model)
        self.controller = WholeBodyController(
            self.model, cfg.profile, torque_limit=cfg.torque_limit, f_min=cfg.f_min,
        )
        self.contact = self._contact(LEFT)
        self.cop = np.array([stance_x])

    def _contact(self, side):
        pose = Kinematics(self.model, self.q, self.qd).foot_frame(side)[0]
        return ContactState(side, self.mode, anchor=pose[: self.mode.size])

    def measure(self):
        kin = Kinematics(self.model, self.q, self.qd)
        return kin.com[:1], kin.com_velocity()[:1]

    def polygon(self, stance):
        x = self.contact.anchor[0]
        if self.mode is ContactMode.POINT:
            return SupportPolygon.point([x])
        return SupportPolygon([x - self.model.d_heel, x + self.model.d_toe])

    def kick(self, dv):
        raise ConfigError("DCM kicks are only supported on the LIPM plant")

    def advance(self, u_cmd, push, dt, swing_ref):
        kin = Kinematics(self.model, self.q, self.qd)
        com = kin.com
        accel = (self.omega0**2 * (com[0] - u_cmd[0]), 0.0)
        pos, vel, acc = swing_ref
        ref = (np.array([pos[0], pos[2], 0.0]), np.array([vel[0], vel[2], 0.0]), np.array([acc[0], acc[2], 0.0]))
        cmd = self.controller(
            self.q, self.qd, self.contact, ref, self.q_posture,
            com_accel=accel if self.cfg.profile == "active" else None, com_height=self.cfg.com_height,
        )
        external = np.array([push[0] * self.model.total_mass, 0.0]) if np.any(push) else None
        self.q, self.qd = self.dynamics.step(self.q, self.qd, cmd.tau, self.contact, dt, external)
        lam = self.contact.wrench
        if self.mode is ContactMode.FLAT and lam[1] > 0:
            self.cop = np.array([self.contact.anchor[0] + lam[2] / lam[1]])
        else:
            self.cop = np.array([self.contact.anchor[0]])
        tau = np.zeros(6)
        for k, j in enumerate(self.model.actuated):
            tau[j - 3] = cmd.tau[k]
        return list(cmd.residuals) + [np.nan] * (3 - len(cmd.residuals)), list(tau)

    def touchdown(self, landed):
        new = self._contact(self.contact.swing)
        self.qd = self.dynamics.impact(self.q, self.qd, new)
        self.contact = new


def _ticks_per_step(period, rate):
    return max(1, math.ceil(period * rate - 1e-9))


def run_scenario(cfg, max_steps=None):
    """Run the closed loop described by ``cfg``; returns a :class:`ScenarioResult`."""
    omega0 = natural_frequency(cfg.com_height, cfg.gravity)
    period = cfg.period
    n_ticks = _ticks_per_step(period, cfg.control_rate)
    dt = period / n_ticks
    steps = cfg.total_steps if max_steps is None else max_steps
    footprints, swing_start = footstep_sequence(cfg, steps + cfg.preview + 2)
    multibody = cfg.plant == "multibody"
    if multibody:
        footprints = footprints[:, :1].copy()
        swing_start = swing_start[:1]
    gains = DcmGains(cfg.k_xi)
    swing_kwargs = dict(
        apex_height=cfg.apex_height, freeze_fraction=cfg.mod_freeze_fraction,
        smoothing=cfg.mod_smoothing, clamp=cfg.mod_clamp,
    )

    plan = _plan_window(footprints, 0, cfg.preview, period)
    schedule = backward_recursion(plan, omega0)
    traj = _swing(swing_start, footprints[1], period, swing_kwargs)

    dim = footprints.shape[1]
    com0 = schedule[0].copy() if cfg.initial_com is None else np.asarray(cfg.initial_com, dtype=float)[:dim]
    vel0 = np.zeros(dim) if cfg.initial_com_vel is None else np.asarray(cfg.initial_com_vel, dtype=float)[:dim]
    if multibody:
        if np.any(vel0):
            raise ConfigError("the multibody plant starts at rest")
        plant = _MultibodyPlantAdapter(cfg, omega0, float(com0[0]), float(footprints[0, 0]), float(swing_start[0]))
    else:
        plant = _LipmPlantAdapter(cfg, omega0, com0, vel0)

    log = TrajectoryLog(BASE_COLUMNS + (MULTIBODY_COLUMNS if multibody else []))
    push_dir = np.asarray(cfg.push_direction, dtype=float)[:dim]
    if cfg.push_fraction > 0:
        push_dir = push_dir / np.linalg.norm(push_dir)
    push_accel = cfg.push_fraction * cfg.gravity * push_dir
    kick_tick = None if cfg.dcm_kick_time is None else int(round(cfg.dcm_kick_time / dt))
    push_ticks = (int(round(cfg.push_start / dt)), int(round((cfg.push_start + cfg.push_duration) / dt)))

    result = ScenarioResult(COMPLETED, log, 0, omega0=omega0, step_period=period, dt=dt)
    tick = 0
    for i in range(steps):
        stance = footprints[i]
        polygon = plant.polygon(stance)
        max_err = 0.0
        max_mod = 0.0
        for k in range(n_ticks):
            t = k * dt
            if tick == kick_tick:
                plant.kick(omega0 * np.asarray(cfg.dcm_kick, dtype=float)[:dim])
            com, com_vel = plant.measure()
            xi = dcm_from_state(LipmState(com, com_vel), omega0)
            xi_d = reference_dcm_at(schedule[0], stance, omega0, t, period)
            xi_d_dot = reference_dcm_velocity(xi_d, stance, omega0)
            u_proj = project_cop(desired_cop(xi, xi_d, xi_d_dot, gains, omega0), polygon)
            if cfg.step_adjustment:
                mod = landing_modification(xi, t, stance, footprints[i + 1], schedule[2], omega0, period)
                traj.update_modification(_pad2(mod), t)
            swing_ref = traj.pose(t)
            push = push_accel if push_ticks[0] <= tick < push_ticks[1] else np.zeros(dim)
            extra = plant.advance(u_proj, push, dt, swing_ref=swing_ref)
            err = float(np.linalg.norm(xi - xi_d))
            max_err = max(max_err, err)
            max_mod = max(max_mod, float(np.linalg.norm(traj.mod)))
            log.append(
                [tick * dt, i, t, *_pad2(xi_d), *_pad2(xi), *_pad2(com), *_pad2(plant.cop),
                 *_pad2(stance), *_pad2(footprints[i + 1]), *swing_ref[0], *traj.mod,
                 *(extra[0] + extra[1] if multibody else [])]
            )
            tick += 1
            if not np.all(np.isfinite(xi)) or np.linalg.norm(xi - stance) > cfg.abort_radius:
                result.status = DIVERGED
                break
        com, com_vel = plant.measure()
        result.step_end_dcm.append(dcm_from_state(LipmState(com, com_vel), omega0))
        result.step_max_dcm_error.append(max_err)
        result.step_max_mod.append(max_mod)
        if result.status == DIVERGED:
            break
        footprints, plan, schedule, traj = support_exchange(
            footprints, i, traj, omega0, period, cfg.preview, swing_kwargs
        )
        result.landed.append(footprints[i + 1].copy())
        plant.touchdown(footprints[i + 1])
        result.steps_completed = i + 1
    return result


def tune_timing(cfg, lo=1e-2, hi=5.0, tol=1e-4, axis=1, max_iter=200):
    """Bisect the step period until the uncontrolled DCM map is mirror-periodic.

    The map is one simulated step on the LIPM plant with the CoP held on the
    stance point and no landing adjustment. Periodicity means the DCM at the
    end of that step mirrors the initial DCM about the midpoint of the first
    two footprints along ``axis`` (lateral by default).

    The bisection runs to full floating-point resolution; ``tol`` only
    bounds the residual accepted at the end.

    Returns ``(period, residual, scale)`` where ``scale`` is the period
    relative to ``cfg.step_period``.
    """
    omega0 = natural_frequency(cfg.com_height, cfg.gravity)
    com = np.zeros(2) if cfg.initial_com is None else np.asarray(cfg.initial_com, dtype=float)
    vel = np.zeros(2) if cfg.initial_com_vel is None else np.asarray(cfg.initial_com_vel, dtype=float)
    base = cfg.replace(
        plant="lipm", profile="passive", step_adjustment=False, timing_scale=1.0,
        initial_com=list(com), initial_com_vel=list(vel), push_fraction=0.0, dcm_kick=None, dcm_kick_time=None,
    )
    fp, _ = footstep_sequence(base, 2)
    center = 0.5 * (fp[0, axis] + fp[1, axis])
    xi0 = (com + vel / omega0)[axis]

    def residual(T):
        res = run_scenario(base.replace(step_period=T), max_steps=1)
        return float(res.step_end_dcm[0][axis] + xi0 - 2.0 * center)

    f_lo, f_hi = residual(lo), residual(hi)
    if f_lo * f_hi > 0:
        raise ConfigError("no mirror-periodic step period in the search interval for this initial state")
    best_T, best_f = (lo, f_lo) if abs(f_lo) < abs(f_hi) else (hi, f_hi)
    for _ in range(max_iter):
        mid = 0.5 * (lo + hi)
        if mid in (lo, hi):
            break
        f_mid = residual(mid)
        if abs(f_mid) < abs(best_f):
            best_T, best_f = mid, f_mid
        if f_mid == 0.0:
            break
        if (f_lo < 0) == (f_mid < 0):
            lo, f_lo = mid, f_mid
        else:
            hi = mid
    if abs(best_f) > tol:
        raise ConfigError(f"timing search stalled with residual {abs(best_f):.3g} m")
    T = best_T
    return T, abs(residual(T)), T / cfg.step_period
