"""Independent reference implementations shared by unit and acceptance tests."""
import numpy as np

from h2df_rlmpc.core_types import ControlInput, ScalingTable
from h2df_rlmpc.mpc_solver import MpcSolver, apply


class LinearPlant:
    """Known linear stand-in for the neural model, same state layout.

    x = (h in R^8, u_prev in R^4); u = u_prev + du;
    h' = Ah h + Bh (u - u_ref); y = y0 + Ch h' + Dy (u - u_ref).
    """

    def __init__(self, seed=0, scaling=None):
        rng = np.random.default_rng(seed)
        self.scaling = scaling or ScalingTable()
        q, _ = np.linalg.qr(rng.normal(size=(8, 8)))
        self.Ah = 0.6 * q
        self.Bh = 0.2 * rng.normal(size=(8, 4))
        self.Bh[:, 0] *= 0.1  # weak IMEP feedback keeps the composite loop stable
        self.Ch = 0.3 * rng.normal(size=(3, 8))
        self.Dy = np.zeros((3, 4))
        # IMEP rises with both fuel durations, MPRR with hydrogen
        self.Dy[0] = [0.0, 0.02, 4.0, 0.3]
        self.Dy[1] = [0.0, 5.0, 300.0, 10.0]
        self.Dy[2] = [0.0, 0.1, 1.0, 0.4]
        self.u_ref = np.array([6.0, 10.0, 0.7, 3.0])
        self.y0 = np.array([6.0, 900.0, 5.0])

    def step_vec(self, x, du):
        h, u_prev = x[:8], x[8:]
        u = u_prev + du
        h_next = self.Ah @ h + self.Bh @ (u - self.u_ref)
        y = self.y0 + self.Ch @ h_next + self.Dy @ (u - self.u_ref)
        return np.concatenate([h_next, u]), y

    def linearize_vec(self, x, du):
        x_next, y = self.step_vec(x, du)
        A = np.zeros((12, 12))
        A[:8, :8] = self.Ah
        A[:8, 8:] = self.Bh
        A[8:, 8:] = np.eye(4)
        B = np.zeros((12, 4))
        B[:8] = self.Bh
        B[8:] = np.eye(4)
        C = self.Ch @ A[:8] + np.hstack([np.zeros((3, 8)), self.Dy])
        D = self.Ch @ self.Bh + self.Dy
        return x_next, y, A, B, C, D


def composite_rollout(plant, x0, Z):
    """Stage outputs with predicted IMEP fed back as the next IMEP input."""
    x = x0.copy()
    ys = []
    for k in range(len(Z) + 1):
        dz = Z[k] if k < len(Z) else np.zeros(3)
        x, y = plant.step_vec(x, np.concatenate([[0.0], dz]))
        x[8] = y[0]
        ys.append(y)
    return np.array(ys)


def kkt_oracle(plant, cfg, x0, refs, delta_ref):
    """Assemble the condensed least-squares cost explicitly and solve its KKT system."""
    N = cfg.horizon
    nz = 3 * N
    Y0 = composite_rollout(plant, x0, np.zeros((N, 3)))
    S = np.empty((N + 1, 3, nz))
    for i in range(nz):
        e = np.zeros(nz)
        e[i] = 1.0
        S[:, :, i] = composite_rollout(plant, x0, e.reshape(N, 3)) - Y0
    lo_y = np.array([4.5, 0.0, 0.0])
    sy = 2.0 / np.array([4.5, 1850.0, 10.0])
    lo_u = np.array([2.0, 0.2, 0.0])
    su = 2.0 / np.array([18.0, 1.0, 8.0])
    # cumulative input map: u_k - u_prev = T_k z, stage N holds
    T = np.zeros((N + 1, 3, nz))
    for k in range(N + 1):
        for j in range(min(k + 1, N)):
            T[k, :, 3 * j : 3 * j + 3] = np.eye(3)
    u_prev = x0[9:]
    rows, r0 = [], []
    for k in range(N + 1):
        w = np.sqrt(cfg.q_imep) * sy[0]
        rows.append(-w * S[k, 0])
        r0.append(w * (refs[k] + delta_ref - Y0[k, 0]))
        for j, q in ((1, cfg.q_nox), (2, cfg.q_mprr)):
            w = np.sqrt(q) * sy[j]
            rows.append(w * S[k, j])
            r0.append(w * (Y0[k, j] - lo_y[j]))
        for j, q in ((1, cfg.r_doi_diesel), (2, cfg.r_doi_hydrogen)):
            w = np.sqrt(q) * su[j]
            rows.append(w * T[k, j])
            r0.append(w * (u_prev[j] - lo_u[j]))
    for i in range(nz):
        w = np.sqrt(cfg.r_delta[i % 3]) * su[i % 3]
        row = np.zeros(nz)
        row[i] = w
        rows.append(row)
        r0.append(0.0)
    J, r0 = np.array(rows), np.array(r0)
    # KKT of the unconstrained QP, including the documented Hessian regularization
    K = 2 * J.T @ J + cfg.hessian_reg * np.eye(nz)
    z = np.linalg.solve(K, -2 * J.T @ r0)
    return z.reshape(N, 3), Y0 + S @ z


def x0_of(plant, imep=6.0, u=(10.0, 0.7, 3.0)):
    return np.concatenate([np.zeros(8), [imep], u])


def closed_loop(plant, cfg, ref, n, u0=(10.0, 0.7, 3.0)):
    solver = MpcSolver(plant, cfg)
    u = ControlInput(*u0)
    x = x0_of(plant, u=u0)
    warm = None
    log = []
    for _ in range(n):
        sol = solver.solve(x, np.full(cfg.horizon + 1, ref), 0.0, warm)
        warm = sol
        u_new = apply(sol, u, cfg)
        du = np.concatenate([[0.0], u_new.as_array() - u.as_array()])
        x, y = plant.step_vec(x, du)
        x[8] = y[0]
        log.append((u_new, y))
        u = u_new
    return log
