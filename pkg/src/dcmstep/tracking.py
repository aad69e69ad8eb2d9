"""DCM feedback: desired CoP, projection onto the support polygon, CoM task."""
from dataclasses import dataclass

import numpy as np

from .errors import DomainError


@dataclass(frozen=True)
class DcmGains:
    k_xi: float = 3.0

    def __post_init__(self):
        if not self.k_xi > 0:
            raise DomainError(f"DCM gain must be positive, got {self.k_xi}")


class SupportPolygon:
    """Convex counter-clockwise support region.

    One vertex is a point foot and two a line foot. Vertices of dimension 1
    describe an interval on a line, used by the sagittal-plane model.
    """

    def __init__(self, vertices):
        v = np.array(vertices, dtype=float)
        if v.ndim == 1:
            v = v[:, None]
        if v.shape[0] == 0:
            raise DomainError("support polygon has no vertices")
        if v.shape[1] == 2 and v.shape[0] >= 3:
            e = np.roll(v, -1, axis=0) - v
            cross = e[:, 0] * np.roll(e, -1, axis=0)[:, 1] - e[:, 1] * np.roll(e, -1, axis=0)[:, 0]
            if np.any(cross < -1e-12):
                raise DomainError("vertices must be convex and counter-clockwise")
        self.vertices = v

    @classmethod
    def rectangle(cls, center, back, front, half_width):
        cx, cy = center
        return cls([(cx - back, cy - half_width), (cx + front, cy - half_width),
                    (cx + front, cy + half_width), (cx - back, cy + half_width)])

    @classmethod
    def point(cls, p):
        return cls([p])

    def contains(self, p, tol=1e-12):
        return np.linalg.norm(project_cop(p, self) - np.asarray(p, dtype=float)) <= tol


def _closest_on_segment(p, a, b):
    ab = b - a
    denom = ab @ ab
    if denom == 0.0:
        return a
    s = np.clip((p - a) @ ab / denom, 0.0, 1.0)
    return a + s * ab


def project_cop(u_des, polygon):
    """Euclidean-closest point of the polygon (boundary or interior) to ``u_des``."""
    p = np.asarray(u_des, dtype=float)
    v = polygon.vertices
    if v.shape[1] == 1:
        return np.clip(p, v.min(), v.max())
    if v.shape[0] == 1:
        return v[0].copy()
    if v.shape[0] == 2:
        return _closest_on_segment(p, v[0], v[1])
    e = np.roll(v, -1, axis=0) - v
    r = p - v
    if np.all(e[:, 0] * r[:, 1] - e[:, 1] * r[:, 0] >= 0.0):
        return p.copy()
    best, best_d = None, np.inf
    for a, b in zip(v, np.roll(v, -1, axis=0)):
        q = _closest_on_segment(p, a, b)
        d = np.sum((q - p) ** 2)
        if d < best_d:
            best, best_d = q, d
    return best


def desired_cop(xi, xi_d, xi_d_dot, gains, omega0):
    """CoP that imposes xi_dot - xi_d_dot = -k_xi (xi - xi_d) on the LIPM."""
    if not omega0 > 0:
        raise DomainError(f"omega0 must be positive, got {omega0}")
    xi = np.asarray(xi, dtype=float)
    return xi + (gains.k_xi * (xi - np.asarray(xi_d, dtype=float)) - np.asarray(xi_d_dot, dtype=float)) / omega0


def com_task_accel(x, u_proj, omega0):
    """Horizontal LIPM acceleration with a zero vertical component appended."""
    horizontal = omega0**2 * (np.asarray(x, dtype=float) - np.asarray(u_proj, dtype=float))
    return np.append(horizontal, 0.0)
