"""Nonlinear MPC over the recurrent plant model, solved by SQP.

Stage convention: for stages ``i = 0..N-1`` the output ``y_i`` is the model
prediction after applying the actuator increment ``du_i``; stage ``N`` holds
the last input (``du_N = 0``).  Inside the horizon the IMEP component of the
model input is fed back from the previous stage's predicted IMEP; at stage 0
it is the measured IMEP stored in ``x0``.

All cost terms are evaluated on normalized channels.  Tracking errors and
increments use the scale ``2 / span`` of :func:`core_types.normalize`;
magnitude terms (MPRR, NOx, DOIs) are measured from the channel floor, i.e.
``normalize(v) + 1``.

Each SQP iteration linearizes along the nominal trajectory, condenses the
dynamics into a dense QP over the increments (box limits on the inputs, rate
limits on the increments, an L1-soft upper bound on MPRR) and accepts the
step with a backtracking line search on the exact-penalty merit function.
"""
from __future__ import annotations

from dataclasses import asdict, dataclass, field
from typing import Protocol

import numpy as np

from .core_types import (
    CONTROL_CHANNELS,
    OUTPUT_CHANNELS,
    ConfigError,
    ControlInput,
    NumericError,
    ScalingTable,
)
from .qp import solve_qp

HIDDEN = 8
N_ACT = 3
IMEP, NOX, MPRR = 0, 1, 2
SNAP_REL = 1e-6  # fraction of the box span treated as sitting on the bound


class PlantModel(Protocol):
    scaling: ScalingTable

    def step_vec(self, x: np.ndarray, du: np.ndarray) -> tuple[np.ndarray, np.ndarray]: ...

    def linearize_vec(self, x: np.ndarray, du: np.ndarray) -> tuple: ...


@dataclass(frozen=True)
class OcpConfig:
    horizon: int = 5
    q_imep: float = 1.0
    q_mprr: float = 0.05
    q_nox: float = 0.02
    r_doi_diesel: float = 0.05
    r_doi_hydrogen: float = 0.01
    # increment weights, ControlInput order (soi, doi_diesel, doi_hydrogen)
    r_delta: tuple[float, float, float] = (0.05, 0.2, 0.05)
    u_min: tuple[float, float, float] = (2.0, 0.2, 0.0)
    u_max: tuple[float, float, float] = (20.0, 1.2, 8.0)
    y_max_mprr: float = 10.0
    delta_u_max: tuple[float, float, float] = (1.0, 0.05, 0.25)
    # 0/1 diagonals: which inputs are box-limited, which outputs (imep, nox, mprr) bounded
    f_u: tuple[int, int, int] = (1, 1, 1)
    f_y: tuple[int, int, int] = (0, 0, 1)
    sqp_iters: int = 3
    qp_tolerance: float = 1e-8
    slack_weight: float = 1e3
    hessian_reg: float = 1e-8

    def __post_init__(self):
        if self.horizon < 1:
            raise ConfigError("horizon must be >= 1")
        weights = [self.q_imep, self.q_mprr, self.q_nox, self.r_doi_diesel, self.r_doi_hydrogen, *self.r_delta]
        if any(w < 0 for w in weights):
            raise ConfigError("cost weights must be non-negative")
        if not all(lo < hi for lo, hi in zip(self.u_min, self.u_max)):
            raise ConfigError("u_min must be below u_max componentwise")
        if any(d not in (0, 1) for d in (*self.f_u, *self.f_y)):
            raise ConfigError("F_u / F_y diagonals must be 0 or 1")
        if any(d <= 0 for d in self.delta_u_max):
            raise ConfigError("delta_u_max must be positive")
        if self.sqp_iters < 1:
            raise ConfigError("sqp_iters must be >= 1")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, data: dict) -> "OcpConfig":
        data = dict(data)
        for key, val in data.items():
            if isinstance(val, list):
                data[key] = tuple(val)
        return cls(**data)


@dataclass
class Solution:
    delta_u_sequence: np.ndarray  # (N, 4) model-input increments; IMEP column is 0
    predicted_y: np.ndarray  # (N+1, 3)
    cost: float
    qp_status: str  # optimal | max_iter | infeasible_relaxed
    kkt_residual: float
    sqp_iters_used: int = 0
    cost_history: list[float] = field(default_factory=list)

    @property
    def actuator_increments(self) -> np.ndarray:
        return self.delta_u_sequence[:, 1:]


def _scales(scaling: ScalingTable):
    y_lo, y_hi = scaling.vectors(OUTPUT_CHANNELS)
    u_lo, u_hi = scaling.vectors(CONTROL_CHANNELS)
    return y_lo, 2.0 / (y_hi - y_lo), u_lo, 2.0 / (u_hi - u_lo)


def stage_cost(y, u, delta_u, ref_imep: float, delta_ref: float, cfg: OcpConfig, scaling: ScalingTable) -> float:
    """One stage of the tracking cost.

    ``y`` is (imep, nox, mprr); ``u`` and ``delta_u`` are model-input vectors
    (imep_prev, soi, doi_diesel, doi_hydrogen) whose IMEP entry is ignored.
    """
    y = np.asarray(y, dtype=float)
    u = np.asarray(u, dtype=float)[1:]
    du = np.asarray(delta_u, dtype=float)[1:]
    y_lo, y_s, u_lo, u_s = _scales(scaling)
    track = (ref_imep + delta_ref - y[IMEP]) * y_s[IMEP]
    mprr = (y[MPRR] - y_lo[MPRR]) * y_s[MPRR]
    nox = (y[NOX] - y_lo[NOX]) * y_s[NOX]
    doi_d = (u[1] - u_lo[1]) * u_s[1]
    doi_h = (u[2] - u_lo[2]) * u_s[2]
    dun = du * u_s
    return float(
        cfg.q_imep * track**2
        + cfg.q_mprr * mprr**2
        + cfg.q_nox * nox**2
        + cfg.r_doi_diesel * doi_d**2
        + cfg.r_doi_hydrogen * doi_h**2
        + dun @ (np.asarray(cfg.r_delta) * dun)
    )


class MpcSolver:
    """One controller instance; holds nothing but the model and the config."""

    def __init__(self, model: PlantModel, cfg: OcpConfig = OcpConfig()):
        self.model = model
        self.cfg = cfg
        self.scaling = model.scaling
        y_lo, y_s, u_lo, u_s = _scales(self.scaling)
        self._y_lo, self._y_s, self._u_lo, self._u_s = y_lo, y_s, u_lo, u_s
        c = cfg
        # residual weights: sqrt(weight) * channel scale
        self._w_track = np.sqrt(c.q_imep) * y_s[IMEP]
        self._w_out = np.array([0.0, np.sqrt(c.q_nox) * y_s[NOX], np.sqrt(c.q_mprr) * y_s[MPRR]])
        self._w_u = np.array([0.0, np.sqrt(c.r_doi_diesel) * u_s[1], np.sqrt(c.r_doi_hydrogen) * u_s[2]])
        self._w_du = np.sqrt(np.asarray(c.r_delta)) * u_s
        y_max = np.array([np.inf, np.inf, c.y_max_mprr])
        self._y_bounded = [j for j in range(3) if c.f_y[j] and np.isfinite(y_max[j])]
        self._y_max = y_max
        self._u_min = np.asarray(c.u_min, dtype=float)
        self._u_max = np.asarray(c.u_max, dtype=float)
        self._du_max = np.asarray(c.delta_u_max, dtype=float)

    # ------------------------------------------------------------ helpers
    def _composite_step(self, x, du_act):
        du = np.concatenate([[0.0], du_act])
        x_next, y = self.model.step_vec(x, du)
        x_next = x_next.copy()
        x_next[HIDDEN] = y[IMEP]
        return x_next, y

    def _composite_linearize(self, x, du_act):
        du = np.concatenate([[0.0], du_act])
        x_next, y, A, B, C, D = self.model.linearize_vec(x, du)
        x_next = x_next.copy()
        x_next[HIDDEN] = y[IMEP]
        A = A.copy()
        A[HIDDEN] = C[IMEP]
        B = B[:, 1:].copy()
        B[HIDDEN] = D[IMEP, 1:]
        return x_next, y, A, B, C, D[:, 1:]

    def _inputs(self, u_prev_act, Z):
        """Applied actuator vectors for stages 0..N (stage N holds)."""
        U = u_prev_act + np.cumsum(Z, axis=0)
        return np.vstack([U, U[-1:]])

    def rollout(self, x0, Z):
        N = len(Z)
        x = x0
        ys = np.empty((N + 1, 3))
        for k in range(N + 1):
            du = Z[k] if k < N else np.zeros(N_ACT)
            x, ys[k] = self._composite_step(x, du)
        return ys

    def _cost_terms(self, Y, U, Z, refs, delta_ref):
        track = self._w_track * (refs + delta_ref - Y[:, IMEP])
        out = self._w_out * (Y - self._y_lo)
        uu = self._w_u * (U - self._u_lo)
        du = self._w_du * Z
        cost = float(track @ track + np.sum(out * out) + np.sum(uu * uu) + np.sum(du * du))
        viol = 0.0
        for j in self._y_bounded:
            viol += float(np.sum(np.maximum(Y[:, j] - self._y_max[j], 0.0))) * self._y_s[j]
        return cost, viol

    def objective(self, x0, Z, refs, delta_ref):
        """Exact-penalty merit: tracking cost + slack_weight * normalized MPRR excess."""
        Y = self.rollout(x0, Z)
        U = self._inputs(x0[HIDDEN + 1 :], Z)
        cost, viol = self._cost_terms(Y, U, Z, refs, delta_ref)
        return cost + self.cfg.slack_weight * viol, Y

    def _project(self, u_prev_act, Z):
        """Clip a guess into the rate limits, then into the input box."""
        Z = np.clip(Z, -self._du_max, self._du_max)
        out = np.empty_like(Z)
        u = u_prev_act.copy()
        mask = np.asarray(self.cfg.f_u, dtype=bool)
        # interior-point iterates approach active bounds from inside; land on them
        snap = SNAP_REL * (self._u_max - self._u_min)
        for k, dz in enumerate(Z):
            un = u + dz
            un[mask] = np.clip(un[mask], self._u_min[mask], self._u_max[mask])
            near_hi = mask & (un > self._u_max - snap)
            near_lo = mask & (un < self._u_min + snap)
            un[near_hi] = self._u_max[near_hi]
            un[near_lo] = self._u_min[near_lo]
            out[k] = np.clip(un - u, -self._du_max, self._du_max)
            u = u + out[k]
        return out

    # ---------------------------------------------------------------- QP
    def _build_qp(self, x0, Zbar, refs, delta_ref):
        c = self.cfg
        N = c.horizon
        nz = N_ACT * N
        nx = x0.size
        Sx = np.zeros((nx, nz))
        Ybar = np.empty((N + 1, 3))
        Sy = np.empty((N + 1, 3, nz))
        x = x0
        for k in range(N + 1):
            du = Zbar[k] if k < N else np.zeros(N_ACT)
            x_next, y, A, B, C, D = self._composite_linearize(x, du)
            if not (np.all(np.isfinite(A)) and np.all(np.isfinite(B))):
                raise NumericError(f"non-finite linearization at stage {k}")
            Ybar[k] = y
            Sy[k] = C @ Sx
            Sx = A @ Sx
            if k < N:
                sl = slice(N_ACT * k, N_ACT * (k + 1))
                Sy[k][:, sl] += D
                Sx[:, sl] += B
            x = x_next

        u_prev = x0[HIDDEN + 1 :]
        U = self._inputs(u_prev, Zbar)
        # T[k] maps z -> u_k - u_prev
        T = np.zeros((N + 1, N_ACT, nz))
        for k in range(N + 1):
            for j in range(min(k + 1, N)):
                T[k][:, N_ACT * j : N_ACT * (j + 1)] = np.eye(N_ACT)

        res = [self._w_track * (refs + delta_ref - Ybar[:, IMEP])]
        jac = [-self._w_track * Sy[:, IMEP, :]]
        for j in (NOX, MPRR):
            res.append(self._w_out[j] * (Ybar[:, j] - self._y_lo[j]))
            jac.append(self._w_out[j] * Sy[:, j, :])
        for j in (1, 2):
            res.append(self._w_u[j] * (U[:, j] - self._u_lo[j]))
            jac.append(self._w_u[j] * T[:, j, :])
        w_du = np.tile(self._w_du, N)
        res.append(w_du * Zbar.ravel())
        jac.append(np.diag(w_du))
        r = np.concatenate(res)
        J = np.vstack(jac)

        zb = Zbar.ravel()
        dz_hi = np.tile(self._du_max, N) - zb
        dz_lo = -np.tile(self._du_max, N) - zb
        # soft output rows only where the rate box can reach the bound
        soft = []
        for j in self._y_bounded:
            for k in range(N + 1):
                peak = Ybar[k, j] + np.sum(np.maximum(Sy[k, j] * dz_hi, Sy[k, j] * dz_lo))
                if peak > self._y_max[j]:
                    soft.append((j, k))
        n_slack = len(soft)
        nv = nz + n_slack
        H = np.zeros((nv, nv))
        g = np.zeros(nv)
        H[:nz, :nz] = 2.0 * J.T @ J
        g[:nz] = 2.0 * J.T @ r
        H += c.hessian_reg * np.eye(nv)

        rows, rhs = [], []
        eye = np.eye(nz)
        rows += [eye, -eye]
        rhs += [dz_hi, -dz_lo]
        # box rows that the rate limits already make unreachable are dropped
        for k in range(N):
            reach = (k + 1) * self._du_max
            for j in range(N_ACT):
                if not c.f_u[j]:
                    continue
                if u_prev[j] + reach[j] > self._u_max[j]:
                    rows.append(T[k][j][None])
                    rhs.append([self._u_max[j] - U[k, j]])
                if u_prev[j] - reach[j] < self._u_min[j]:
                    rows.append(-T[k][j][None])
                    rhs.append([U[k, j] - self._u_min[j]])
        Gz = np.vstack(rows)
        G = np.hstack([Gz, np.zeros((len(Gz), n_slack))])
        h = np.concatenate([np.ravel(v) for v in rhs])
        if n_slack:
            soft_rows = np.zeros((n_slack, nv))
            soft_rhs = np.empty(n_slack)
            for i, (j, k) in enumerate(soft):
                g[nz + i] = c.slack_weight * self._y_s[j]
                soft_rows[i, :nz] = Sy[k, j]
                soft_rows[i, nz + i] = -1.0
                soft_rhs[i] = self._y_max[j] - Ybar[k, j]
            nonneg = np.hstack([np.zeros((n_slack, nz)), -np.eye(n_slack)])
            G = np.vstack([G, soft_rows, nonneg])
            h = np.concatenate([h, soft_rhs, np.zeros(n_slack)])
        return H, g, G, h, nz

    # ------------------------------------------------------------- solve
    def solve(self, x0, ref_profile, delta_ref: float = 0.0, warm_start: Solution | None = None) -> Solution:
        """Run ``sqp_iters`` SQP iterations from the (shifted) warm start."""
        c = self.cfg
        N = c.horizon
        x0 = np.asarray(x0.as_vector() if hasattr(x0, "as_vector") else x0, dtype=float)
        refs = np.asarray(ref_profile, dtype=float)
        if refs.shape != (N + 1,):
            raise ConfigError(f"reference profile needs {N + 1} values, got {refs.shape}")
        u_prev = x0[HIDDEN + 1 :]

        Z = np.zeros((N, N_ACT))
        if warm_start is not None:
            prev = warm_start.actuator_increments
            Z[: N - 1] = prev[1:N]
        Z = self._project(u_prev, Z)
        merit, Y = self.objective(x0, Z, refs, delta_ref)
        history = [merit]
        status, kkt, used = "optimal", 0.0, 0

        for _ in range(c.sqp_iters):
            H, g, G, h, nz = self._build_qp(x0, Z, refs, delta_ref)
            qp = solve_qp(H, g, G, h, tol=c.qp_tolerance)
            kkt = qp.kkt_residual
            if qp.status == "failed":
                status = "infeasible_relaxed"
                Z = np.zeros((N, N_ACT))
                merit, Y = self.objective(x0, Z, refs, delta_ref)
                history.append(merit)
                break
            status = qp.status
            used += 1
            step = qp.z[:nz].reshape(N, N_ACT)
            t = 1.0
            accepted = False
            while t >= 1e-3:
                trial = self._project(u_prev, Z + t * step)
                m_trial, Y_trial = self.objective(x0, trial, refs, delta_ref)
                if m_trial <= merit:
                    Z, merit, Y = trial, m_trial, Y_trial
                    accepted = True
                    break
                t *= 0.5
            history.append(merit)
            if not accepted or np.max(np.abs(step)) < c.qp_tolerance:
                break

        du4 = np.hstack([np.zeros((N, 1)), Z])
        return Solution(du4, Y, float(merit), status, float(kkt), used, history)


def apply(solution: Solution, u_prev: ControlInput, cfg: OcpConfig) -> ControlInput:
    """First move of the plan, rate- and box-clamped.

    Values within ``SNAP_REL`` of a box edge are placed exactly on it, so a
    saturated plan applies exactly ``u_max`` despite rounding in ``u_prev + du``.
    """
    du_max = np.asarray(cfg.delta_u_max)
    du = np.clip(solution.actuator_increments[0], -du_max, du_max)
    u = u_prev.as_array() + du
    mask = np.asarray(cfg.f_u, dtype=bool)
    lo, hi = np.asarray(cfg.u_min, dtype=float), np.asarray(cfg.u_max, dtype=float)
    snap = SNAP_REL * (hi - lo)
    u[mask] = np.clip(u[mask], lo[mask], hi[mask])
    up = u_prev.as_array()
    for edge, near in ((hi, u > hi - snap), (lo, u < lo + snap)):
        ok = mask & near & (np.abs(edge - up) <= du_max)
        u[ok] = edge[ok]
    return ControlInput.from_array(u)
