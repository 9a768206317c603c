"""Small dense convex QP solver (primal-dual interior point, Mehrotra).

Solves ``min 0.5 z'Hz + g'z  s.t.  G z <= h`` for the few dozen variables and
constraints of a condensed MPC problem.  Rows of ``h`` that are +inf are
dropped.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve, LinAlgError
from scipy.optimize import nnls


@dataclass
class QPResult:
    z: np.ndarray
    lam: np.ndarray
    status: str  # "optimal" | "max_iter" | "failed"
    iterations: int
    kkt_residual: float


def solve_qp(H, g, G=None, h=None, tol: float = 1e-10, max_iter: int = 60) -> QPResult:
    H = np.asarray(H, dtype=float)
    g = np.asarray(g, dtype=float)
    n = g.size
    if G is None or len(G) == 0:
        z = np.linalg.solve(H, -g)
        res = float(np.max(np.abs(H @ z + g), initial=0.0))
        return QPResult(z, np.zeros(0), "optimal", 1, res)

    G = np.asarray(G, dtype=float)
    h = np.asarray(h, dtype=float)
    keep = np.isfinite(h)
    G, h = G[keep], h[keep]
    m = h.size

    # primal start at the origin; duals from the non-negative least-squares fit
    # of the stationarity condition, which matters for L1 slack variables
    z = np.zeros(n)
    s = np.maximum(h, 1.0)
    lam = np.maximum(nnls(G.T, -g)[0], 1.0)
    scale_d = 1.0 + np.max(np.abs(g), initial=0.0)
    scale_p = 1.0 + np.max(np.abs(h), initial=0.0)

    def newton(rd, rp, rc, factor):
        # dz from the reduced system, then ds, dlam
        rhs = -rd - G.T @ ((-rc + lam * rp) / s)
        dz = cho_solve(factor, rhs, check_finite=False)
        ds = -rp - G @ dz
        dlam = (-rc - lam * ds) / s
        return dz, ds, dlam

    def max_step(v, dv):
        neg = dv < 0
        if not neg.any():
            return 1.0
        return min(1.0, float(np.min(v[neg] / -dv[neg])))

    status = "max_iter"
    res = np.inf
    it = 0
    for it in range(1, max_iter + 1):
        rd = H @ z + g + G.T @ lam
        rp = G @ z + s - h
        mu = float(s @ lam) / m
        res = max(np.max(np.abs(rd)) / scale_d, np.max(np.abs(rp)) / scale_p, mu / scale_d)
        if res < tol:
            status = "optimal"
            break
        try:
            factor = cho_factor(H + G.T @ ((lam / s)[:, None] * G), check_finite=False)
        except LinAlgError:
            status = "failed"
            break
        dz, ds, dl = newton(rd, rp, s * lam, factor)
        a_aff = min(max_step(s, ds), max_step(lam, dl))
        mu_aff = float((s + a_aff * ds) @ (lam + a_aff * dl)) / m
        sigma = (mu_aff / mu) ** 3 if mu > 0 else 0.0
        rc = s * lam + ds * dl - sigma * mu
        dz, ds, dl = newton(rd, rp, rc, factor)
        alpha = 0.99 * min(max_step(s, ds), max_step(lam, dl))
        z = z + alpha * dz
        s = s + alpha * ds
        lam = lam + alpha * dl
        if not (np.all(np.isfinite(z)) and np.all(np.isfinite(lam))):
            status = "failed"
            break

    full_lam = np.zeros(keep.size)
    full_lam[keep] = lam
    return QPResult(z, full_lam, status, it, float(res))
