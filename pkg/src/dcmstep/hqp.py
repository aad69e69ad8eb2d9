"""Lexicographic hierarchical quadratic programming.

Each level holds weighted equality objectives ``W (A z - b)`` and inequality
rows ``C z <= d``. Levels are solved in priority order; every level searches
only the optimal set of the levels above it:

* equality optimality is kept by restricting later levels to the nullspace
  of the (projected) equality matrix, with an orthonormal basis from an SVD;
* inequality optimality is kept by carrying the level's rows down with their
  optimal slacks frozen into the bound.

Inside one level the inequalities are resolved first (least-squares slack)
and the equalities are then minimized among the slack-optimal points. Level 0
inequalities are hard: no slack is allowed and infeasibility raises.

The inner QPs go to quadprog with a tiny damping on the nullspace of the
level objective. That damping makes the Hessian ill-conditioned, so the QP
answer is only used to find the active set; the level is then re-solved
exactly on that set with orthogonal factorizations.
"""
from dataclasses import dataclass, field

import numpy as np
import quadprog

from .errors import DomainError, InfeasibleError

RANK_TOL = 1e-10
DAMPING = 1e-9
CARRY_TOL = 1e-10


def _as_rows(M, n, name):
    if M is None:
        return np.zeros((0, n))
    M = np.atleast_2d(np.asarray(M, dtype=float))
    if M.size == 0:
        return np.zeros((0, n))
    if M.shape[1] != n:
        raise DomainError(f"{name} has {M.shape[1]} columns, expected {n}")
    return M


def _as_vec(v, m, name):
    if v is None:
        v = np.zeros(0)
    v = np.atleast_1d(np.asarray(v, dtype=float)).ravel()
    if v.shape[0] != m:
        raise DomainError(f"{name} has {v.shape[0]} entries, expected {m}")
    return v


@dataclass
class TaskLevel:
    """One priority level: ``min |W(Az - b)|`` subject to ``Cz <= d``."""

    A: np.ndarray = None
    b: np.ndarray = None
    C: np.ndarray = None
    d: np.ndarray = None
    weights: np.ndarray = None
    name: str = ""

    def normalized(self, n):
        A = _as_rows(self.A, n, f"level {self.name!r} A")
        C = _as_rows(self.C, n, f"level {self.name!r} C")
        b = _as_vec(self.b, A.shape[0], f"level {self.name!r} b")
        d = _as_vec(self.d, C.shape[0], f"level {self.name!r} d")
        w = np.ones(A.shape[0]) if self.weights is None else _as_vec(self.weights, A.shape[0], "weights")
        if np.any(w <= 0):
            raise DomainError(f"level {self.name!r}: weights must be positive")
        return TaskLevel(A, b, C, d, w, self.name)

    @staticmethod
    def stack(levels, name=""):
        """Concatenate same-priority tasks into one level."""
        levels = list(levels)
        n = next((np.atleast_2d(t.A if t.A is not None and np.size(t.A) else t.C).shape[1]
                  for t in levels if (t.A is not None and np.size(t.A)) or (t.C is not None and np.size(t.C))), None)
        if n is None:
            return TaskLevel(name=name)
        norm = [t.normalized(n) for t in levels]
        return TaskLevel(
            np.vstack([t.A for t in norm]),
            np.concatenate([t.b for t in norm]),
            np.vstack([t.C for t in norm]),
            np.concatenate([t.d for t in norm]),
            np.concatenate([t.weights for t in norm]),
            name,
        )


@dataclass
class Hierarchy:
    levels: list
    n_dec: int

    def __post_init__(self):
        if not self.levels:
            raise DomainError("a hierarchy needs at least one level")
        if self.n_dec <= 0:
            raise DomainError("decision dimension must be positive")
        self.levels = [lvl.normalized(self.n_dec) for lvl in self.levels]


@dataclass
class HqpSolution:
    z: np.ndarray
    residuals: list = field(default_factory=list)
    ineq_slacks: list = field(default_factory=list)


def _nullspace_basis(M, Z):
    if M.shape[0] == 0 or Z.shape[1] == 0:
        return Z
    _, s, Vt = np.linalg.svd(M, full_matrices=True)
    if s.size == 0 or s[0] == 0.0:
        return Z
    rank = int(np.sum(s > RANK_TOL * s[0]))
    return Z @ Vt[rank:].T


def _qp(G, g, Cin, din, active=False):
    """min 1/2 w'Gw + g'w s.t. Cin w <= din; ValueError when infeasible.

    With ``active`` the indices of the constraints active at the optimum
    are returned as well.
    """
    if Cin.shape[0] == 0:
        w, act = np.linalg.solve(G, -g), np.zeros(0, dtype=int)
    else:
        out = quadprog.solve_qp(G, -g, -Cin.T, -din)
        w, act = out[0], np.asarray(out[5][: out[5].nonzero()[0].size], dtype=int) - 1
    return (w, act) if active else w


def _polish(AZ, res, cC, cd, act, rank_tol):
    """Exact solution on a known active set, or None if it is not optimal there.

    Minimizes ``|AZ w - res|`` with the active rows held as equalities and
    takes the minimum-norm point among the minimizers. Only orthogonal
    factorizations are used, so the result does not inherit the
    conditioning of the damped Hessian.
    """
    r = AZ.shape[1]
    CA, dA = cC[act], cd[act]
    if CA.shape[0]:
        w_p = np.linalg.lstsq(CA, dA, rcond=rank_tol)[0]
        N = _nullspace_basis(CA, np.eye(r))
        if np.abs(CA @ w_p - dA).max() > 1e-9 * (1.0 + np.abs(dA).max()):
            return None
    else:
        w_p, N = np.zeros(r), np.eye(r)
    if N.shape[1] and AZ.shape[0]:
        AN = AZ @ N
        y = np.linalg.lstsq(AN, res - AZ @ w_p, rcond=rank_tol)[0]
        w = w_p + N @ y
        F = N @ _nullspace_basis(AN, np.eye(N.shape[1]))
    else:
        w, F = w_p, N
    if F.shape[1]:
        w = w - F @ (F.T @ w)
    tol = 1e-9 * (1.0 + np.abs(cd).max())
    if np.any(cC @ w - cd > tol):
        return None
    if CA.shape[0]:
        # stationarity: AZ'(AZ w - res) + CA' mu = 0 with mu >= 0
        grad = AZ.T @ (AZ @ w - res) if AZ.shape[0] else np.zeros(r)
        mu = np.linalg.lstsq(CA.T, -grad, rcond=rank_tol)[0]
        if np.any(mu < -1e-8 * (1.0 + np.abs(mu).max())):
            return None
    return w


def _prune(Cw, dw):
    """Drop rows that no longer depend on the reduced variable."""
    if Cw.shape[0] == 0:
        return Cw, dw, np.zeros(0)
    norms = np.linalg.norm(Cw, axis=1)
    keep = norms > RANK_TOL * max(1.0, norms.max())
    return Cw[keep], dw[keep], dw[~keep]


class HierarchicalSolver:
    """Solves a :class:`Hierarchy`; one solve at a time per instance."""

    def __init__(self, rank_tol=RANK_TOL, damping=DAMPING):
        self.rank_tol = rank_tol
        self.damping = damping

    def _damped_hessian(self, AZ):
        r = AZ.shape[1]
        if AZ.shape[0] == 0:
            return self.damping * np.eye(r)
        _, s, Vt = np.linalg.svd(AZ, full_matrices=True)
        rank = int(np.sum(s > self.rank_tol * s[0])) if s.size and s[0] > 0 else 0
        G = AZ.T @ AZ
        if rank < r:
            Vn = Vt[rank:].T
            G = G + self.damping * (Vn @ Vn.T)
        return 0.5 * (G + G.T)

    def solve(self, hierarchy):
        n = hierarchy.n_dec
        z = np.zeros(n)
        Z = np.eye(n)
        carried_C = np.zeros((0, n))
        carried_d = np.zeros(0)
        slacks = []
        for k, level in enumerate(hierarchy.levels):
            A = level.A * level.weights[:, None]
            b = level.b * level.weights
            C, d = level.C, level.d
            r = Z.shape[1]
            s_opt = np.zeros(C.shape[0])

            if C.shape[0] and r == 0:
                s_opt = np.maximum(0.0, C @ z - d)
                if k == 0 and np.any(s_opt > CARRY_TOL):
                    raise InfeasibleError(k)
            elif C.shape[0]:
                if k > 0 and np.any(C @ z - d > 0.0):
                    s_opt = self._min_slack(z, Z, C, d, carried_C, carried_d)
                carried_C = np.vstack([carried_C, C])
                carried_d = np.concatenate([carried_d, d + s_opt + (CARRY_TOL if k > 0 else 0.0)])
            slacks.append(s_opt)

            if r > 0 and (A.shape[0] or carried_C.shape[0]):
                w = self._min_objective(z, Z, A, b, carried_C, carried_d, k)
                z = z + Z @ w
            if r > 0 and A.shape[0]:
                Z = _nullspace_basis(A @ Z, Z)

            if k == 0 and carried_C.shape[0] and np.any(carried_C @ z - carried_d > 1e-8 * (1 + np.abs(carried_d))):
                raise InfeasibleError(k)

        residuals = [float(np.linalg.norm(lvl.weights * (lvl.A @ z - lvl.b))) for lvl in hierarchy.levels]
        return HqpSolution(z, residuals, slacks)

    def _min_slack(self, z, Z, C, d, carried_C, carried_d):
        r = Z.shape[1]
        m = C.shape[0]
        G = np.zeros((r + m, r + m))
        G[:r, :r] = self.damping * np.eye(r)
        G[r:, r:] = np.eye(m)
        CZ = C @ Z
        rows = [np.hstack([CZ, -np.eye(m)])]
        rhs = [d - C @ z]
        if carried_C.shape[0]:
            cC, cd, _ = _prune(carried_C @ Z, carried_d - carried_C @ z)
            rows.append(np.hstack([cC, np.zeros((cC.shape[0], m))]))
            rhs.append(cd)
        try:
            x = _qp(G, np.zeros(r + m), np.vstack(rows), np.concatenate(rhs))
        except ValueError:
            return np.maximum(0.0, C @ z - d)
        return np.maximum(0.0, C @ (z + Z @ x[:r]) - d)

    def _min_objective(self, z, Z, A, b, carried_C, carried_d, k):
        r = Z.shape[1]
        AZ = A @ Z
        scale = np.linalg.norm(AZ, 2) if AZ.size else 0.0
        if scale > 0.0:
            AZ = AZ / scale
            res = (b - A @ z) / scale
        else:
            res = np.zeros(A.shape[0])
        cC, cd, const = _prune(carried_C @ Z, carried_d - carried_C @ z) if carried_C.shape[0] else (
            np.zeros((0, r)), np.zeros(0), np.zeros(0))
        if k == 0 and np.any(const < -1e-8):
            raise InfeasibleError(k)
        if cC.shape[0] == 0:
            if AZ.shape[0] == 0:
                return np.zeros(r)
            return np.linalg.lstsq(AZ, res, rcond=self.rank_tol)[0]
        G = self._damped_hessian(AZ)
        g = -AZ.T @ res
        try:
            w, act = _qp(G, g, cC, cd, active=True)
        except ValueError:
            if k == 0:
                raise InfeasibleError(k) from None
            return np.zeros(r)
        polished = _polish(AZ, res, cC, cd, act, self.rank_tol)
        return w if polished is None else polished


def solve_hierarchy(hierarchy):
    return HierarchicalSolver().solve(hierarchy)
