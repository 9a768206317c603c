"""Recurrent plant model used inside the MPC.

Architecture: three dense encoder layers, one GRU cell with eight hidden
units and three dense decoder layers (six FC + one GRU hidden layer).  The
model input is ``u = [imep_prev, soi_diesel, doi_diesel, doi_hydrogen]`` and
the output ``y = [imep, nox, mprr]``, both in physical units; normalization
through the stored scaling table happens inside.

The state seen by the controller is the augmented vector
``x = [h (8), u_prev (4)]``; one step applies an input increment ``du``::

    u  = u_prev + du
    h' = GRU(h, enc(u))
    y  = dec(h')
    x' = [h', u]

Everything is plain numpy with hand-written reverse-mode gradients (training)
and forward-mode Jacobians (linearization).
"""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import numpy as np

from .core_types import (
    INPUT_CHANNELS,
    OUTPUT_CHANNELS,
    CombustionOutput,
    ConfigError,
    NumericError,
    ScalingTable,
    load_container,
    save_container,
)

log = logging.getLogger(__name__)

HIDDEN = 8
N_IN = 4
N_OUT = 3
N_STATE = HIDDEN + N_IN

GRU_NAMES = ("Wz", "Uz", "bz", "Wr", "Ur", "br", "Wn", "Un", "bn")


def _sigmoid(x):
    return 0.5 * (1.0 + np.tanh(0.5 * x))


_ACTIVATIONS = {
    "tanh": (np.tanh, lambda out: 1.0 - out * out),
    "linear": (lambda a: a, lambda out: np.ones_like(out)),
}


def param_shapes(enc_widths=(16, 16), dec_widths=(16, 16)) -> dict[str, tuple]:
    shapes: dict[str, tuple] = {}
    dims = [N_IN, *enc_widths, HIDDEN]
    for k in range(3):
        shapes[f"enc{k}_W"] = (dims[k + 1], dims[k])
        shapes[f"enc{k}_b"] = (dims[k + 1],)
    for gate in "zrn":
        shapes[f"gru_W{gate}"] = (HIDDEN, HIDDEN)
        shapes[f"gru_U{gate}"] = (HIDDEN, HIDDEN)
        shapes[f"gru_b{gate}"] = (HIDDEN,)
    dims = [HIDDEN, *dec_widths, N_OUT]
    for k in range(3):
        shapes[f"dec{k}_W"] = (dims[k + 1], dims[k])
        shapes[f"dec{k}_b"] = (dims[k + 1],)
    return shapes


def init_params(seed: int = 0, enc_widths=(16, 16), dec_widths=(16, 16)) -> dict[str, np.ndarray]:
    """Uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) initialization."""
    rng = np.random.default_rng(seed)
    shapes = param_shapes(enc_widths, dec_widths)
    params = {}
    for name, shape in shapes.items():
        if name.startswith("gru"):
            fan_in = HIDDEN
        elif name.endswith("_W"):
            fan_in = shape[1]
        else:
            fan_in = shapes[name[:-2] + "_W"][1]
        bound = 1.0 / math.sqrt(fan_in)
        params[name] = rng.uniform(-bound, bound, size=shape)
    return params


@dataclass(frozen=True)
class AugmentedState:
    h: np.ndarray
    u_prev: np.ndarray

    def __post_init__(self):
        if np.shape(self.h) != (HIDDEN,) or np.shape(self.u_prev) != (N_IN,):
            raise ValueError("augmented state needs h in R^8 and u_prev in R^4")

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.h, self.u_prev])

    @classmethod
    def from_vector(cls, x) -> "AugmentedState":
        x = np.asarray(x, dtype=float)
        return cls(h=x[:HIDDEN].copy(), u_prev=x[HIDDEN:].copy())


@dataclass
class _Cache:
    un: np.ndarray
    enc: list
    xg: np.ndarray
    h: np.ndarray
    z: np.ndarray
    r: np.ndarray
    n: np.ndarray
    h_next: np.ndarray
    dec: list


@dataclass
class NeuralPlant:
    params: dict[str, np.ndarray]
    scaling: ScalingTable = field(default_factory=ScalingTable)
    activation: str = "tanh"

    def __post_init__(self):
        if self.activation not in _ACTIVATIONS:
            raise ConfigError(f"unknown activation {self.activation!r}")
        if self.params["gru_Uz"].shape != (HIDDEN, HIDDEN):
            raise ConfigError("GRU hidden dimension must be 8")
        for name, arr in self.params.items():
            if not np.all(np.isfinite(arr)):
                raise NumericError(f"non-finite weights in layer {name}")
        self._act, self._dact = _ACTIVATIONS[self.activation]
        self._u_lo, u_hi = self.scaling.vectors(INPUT_CHANNELS)
        self._u_gain = 2.0 / (u_hi - self._u_lo)
        self._y_lo, y_hi = self.scaling.vectors(OUTPUT_CHANNELS)
        self._y_half = (y_hi - self._y_lo) / 2.0

    @classmethod
    def initialized(cls, seed: int = 0, scaling: ScalingTable | None = None, **kw) -> "NeuralPlant":
        return cls(init_params(seed), scaling or ScalingTable(), **kw)

    @property
    def n_hidden_layers(self) -> int:
        n_fc = sum(1 for k in self.params if k.endswith("_W") and not k.startswith("gru"))
        return n_fc + 1

    # ------------------------------------------------------------------ core
    def _forward(self, h: np.ndarray, u: np.ndarray) -> tuple[np.ndarray, _Cache]:
        """Batched forward: h (B, 8), u (B, 4) physical -> y (B, 3) physical."""
        p = self.params
        act = self._act
        un = (u - self._u_lo) * self._u_gain - 1.0
        enc = []
        a = un
        for k in range(3):
            a = act(a @ p[f"enc{k}_W"].T + p[f"enc{k}_b"])
            enc.append(a)
        xg = a
        z = _sigmoid(xg @ p["gru_Wz"].T + h @ p["gru_Uz"].T + p["gru_bz"])
        r = _sigmoid(xg @ p["gru_Wr"].T + h @ p["gru_Ur"].T + p["gru_br"])
        n = np.tanh(xg @ p["gru_Wn"].T + (r * h) @ p["gru_Un"].T + p["gru_bn"])
        h_next = (1.0 - z) * h + z * n
        dec = []
        a = h_next
        for k in range(2):
            a = act(a @ p[f"dec{k}_W"].T + p[f"dec{k}_b"])
            dec.append(a)
        yn = a @ p["dec2_W"].T + p["dec2_b"]
        y = self._y_lo + (yn + 1.0) * self._y_half
        return y, _Cache(un, enc, xg, h, z, r, n, h_next, dec)

    def _backward(self, c: _Cache, gy: np.ndarray, gh_next: np.ndarray, grads: dict | None):
        """Reverse pass through one step.

        ``gy`` is dL/dy (physical), ``gh_next`` dL/dh' from later steps.
        Accumulates weight gradients into ``grads`` (if given) and returns
        (dL/dh, dL/du) with u physical.
        """
        p = self.params
        dact = self._dact
        g = gy * self._y_half
        if grads is not None:
            grads["dec2_W"] += g.T @ c.dec[1]
            grads["dec2_b"] += g.sum(axis=0)
        g = g @ p["dec2_W"]
        for k in (1, 0):
            g = g * dact(c.dec[k])
            if grads is not None:
                inp = c.dec[k - 1] if k > 0 else c.h_next
                grads[f"dec{k}_W"] += g.T @ inp
                grads[f"dec{k}_b"] += g.sum(axis=0)
            g = g @ p[f"dec{k}_W"]
        gh1 = gh_next + g

        z, r, n, h, xg = c.z, c.r, c.n, c.h, c.xg
        gz = gh1 * (n - h)
        gn = gh1 * z
        gh = gh1 * (1.0 - z)
        gan = gn * (1.0 - n * n)
        grh = gan @ p["gru_Un"]
        gr = grh * h
        gh += grh * r
        gar = gr * r * (1.0 - r)
        gaz = gz * z * (1.0 - z)
        gh += gar @ p["gru_Ur"] + gaz @ p["gru_Uz"]
        gx = gaz @ p["gru_Wz"] + gar @ p["gru_Wr"] + gan @ p["gru_Wn"]
        if grads is not None:
            for gate, ga, hin in (("z", gaz, h), ("r", gar, h), ("n", gan, r * h)):
                grads[f"gru_W{gate}"] += ga.T @ xg
                grads[f"gru_U{gate}"] += ga.T @ hin
                grads[f"gru_b{gate}"] += ga.sum(axis=0)

        g = gx
        for k in (2, 1, 0):
            g = g * dact(c.enc[k])
            if grads is not None:
                inp = c.enc[k - 1] if k > 0 else c.un
                grads[f"enc{k}_W"] += g.T @ inp
                grads[f"enc{k}_b"] += g.sum(axis=0)
            g = g @ p[f"enc{k}_W"]
        return gh, g * self._u_gain

    # -------------------------------------------------------------- public
    def step_vec(self, x: np.ndarray, du: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Vector form of :meth:`forward_step`: x (12,), du (4,) -> (x' (12,), y (3,))."""
        x = np.asarray(x, dtype=float)
        du = np.asarray(du, dtype=float)
        for label, arr in (("x", x), ("delta_u", du)):
            bad = np.flatnonzero(~np.isfinite(arr))
            if bad.size:
                raise NumericError(f"non-finite {label} at index {int(bad[0])}")
        u = x[HIDDEN:] + du
        y, c = self._forward(x[None, :HIDDEN], u[None, :])
        return np.concatenate([c.h_next[0], u]), y[0]

    def forward_step(self, x: AugmentedState, delta_u) -> tuple[AugmentedState, CombustionOutput]:
        x_next, y = self.step_vec(x.as_vector(), delta_u)
        return AugmentedState.from_vector(x_next), CombustionOutput.from_array(y)

    def rollout(self, x0: AugmentedState, delta_us: Sequence) -> np.ndarray:
        """Outputs for stages 0..N: N increments, then one hold step (du = 0).

        Stage ``i`` output is the prediction after applying ``delta_us[i]``.
        Returns an (N+1, 3) array.
        """
        delta_us = np.asarray(delta_us, dtype=float).reshape(-1, N_IN)
        if len(delta_us) < 1:
            raise ValueError("rollout needs at least one increment")
        x = x0.as_vector()
        ys = []
        for du in [*delta_us, np.zeros(N_IN)]:
            x, y = self.step_vec(x, du)
            ys.append(y)
        return np.array(ys)

    def advance(self, h: np.ndarray, u: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
        """Observer update with a measured input vector; returns (h', y)."""
        y, c = self._forward(np.asarray(h)[None], np.asarray(u, dtype=float)[None])
        return c.h_next[0], y[0]

    def predict_sequence(self, u_seq: np.ndarray, h0: np.ndarray | None = None) -> np.ndarray:
        """Open-loop outputs for a physical input sequence (T, 4).

        Encoder and decoder run batched; only the recurrence is sequential.
        """
        p = self.params
        act = self._act
        u_seq = np.asarray(u_seq, dtype=float)
        a = (u_seq - self._u_lo) * self._u_gain - 1.0
        for k in range(3):
            a = act(a @ p[f"enc{k}_W"].T + p[f"enc{k}_b"])
        xz = a @ p["gru_Wz"].T + p["gru_bz"]
        xr = a @ p["gru_Wr"].T + p["gru_br"]
        xn = a @ p["gru_Wn"].T + p["gru_bn"]
        Uz, Ur, Un = p["gru_Uz"].T, p["gru_Ur"].T, p["gru_Un"].T
        h = np.zeros(HIDDEN) if h0 is None else np.asarray(h0, dtype=float)
        hs = np.empty((len(u_seq), HIDDEN))
        for t in range(len(u_seq)):
            z = _sigmoid(xz[t] + h @ Uz)
            r = _sigmoid(xr[t] + h @ Ur)
            n = np.tanh(xn[t] + (r * h) @ Un)
            h = (1.0 - z) * h + z * n
            hs[t] = h
        a = hs
        for k in range(2):
            a = act(a @ p[f"dec{k}_W"].T + p[f"dec{k}_b"])
        yn = a @ p["dec2_W"].T + p["dec2_b"]
        return self._y_lo + (yn + 1.0) * self._y_half

    def _dense_jacobian(self, prefix: str, outs: list, first: int, last: int) -> np.ndarray:
        """d(layer `last` output)/d(layer `first` input) for one sample."""
        p = self.params
        J = None
        for k in range(first, last + 1):
            W = p[f"{prefix}{k}_W"]
            if k < len(outs):
                W = self._dact(outs[k][0])[:, None] * W
            J = W if J is None else W @ J
        return J

    def linearize_vec(self, x: np.ndarray, du: np.ndarray):
        """Exact Jacobians of one step at (x, du).

        Returns ``(x_next, y, A, B, C, D)`` with ``dx' = A dx + B ddu`` and
        ``dy = C dx + D ddu``.
        """
        x = np.asarray(x, dtype=float)
        u = x[HIDDEN:] + np.asarray(du, dtype=float)
        p = self.params
        y, c = self._forward(x[None, :HIDDEN], u[None])
        z, r, n, h, xg = c.z[0], c.r[0], c.n[0], c.h[0], c.xg[0]

        J_enc = self._dense_jacobian("enc", c.enc, 0, 2) * self._u_gain  # (8, 4)
        dz = (z * (1.0 - z))[:, None]
        dr = (r * (1.0 - r))[:, None]
        dn = (1.0 - n * n)[:, None]
        dz_dx, dz_dh = dz * p["gru_Wz"], dz * p["gru_Uz"]
        dr_dx, dr_dh = dr * p["gru_Wr"], dr * p["gru_Ur"]
        Un_h = p["gru_Un"] * h  # Un @ diag(h)
        dn_dx = dn * (p["gru_Wn"] + Un_h @ dr_dx)
        dn_dh = dn * (p["gru_Un"] * r + Un_h @ dr_dh)
        dh_dh = np.diag(1.0 - z) + (n - h)[:, None] * dz_dh + z[:, None] * dn_dh
        dh_dx = (n - h)[:, None] * dz_dx + z[:, None] * dn_dx
        dh_du = dh_dx @ J_enc  # (8, 4)

        J_dec = self._dense_jacobian("dec", c.dec, 0, 2) * self._y_half[:, None]  # (3, 8)

        A = np.zeros((N_STATE, N_STATE))
        A[:HIDDEN, :HIDDEN] = dh_dh
        A[:HIDDEN, HIDDEN:] = dh_du
        A[HIDDEN:, HIDDEN:] = np.eye(N_IN)
        B = np.vstack([dh_du, np.eye(N_IN)])
        C = J_dec @ A[:HIDDEN]
        D = J_dec @ dh_du
        for name, M in (("A", A), ("B", B), ("C", C), ("D", D)):
            if not np.all(np.isfinite(M)):
                raise NumericError(f"non-finite Jacobian {name}")
        return np.concatenate([c.h_next[0], u]), y[0], A, B, C, D

    def linearize(self, x: AugmentedState, delta_u) -> dict[str, np.ndarray]:
        _, _, A, B, C, D = self.linearize_vec(x.as_vector(), delta_u)
        return {"A": A, "B": B, "C": C, "D": D}

    def weight_jacobian(self, x: np.ndarray, du: np.ndarray) -> dict[str, np.ndarray]:
        """d[h', y]/d(param) for every layer, shape (11, *param.shape)."""
        x = np.asarray(x, dtype=float)
        u = x[HIDDEN:] + np.asarray(du, dtype=float)
        _, c = self._forward(x[None, :HIDDEN], u[None])
        out = {k: np.zeros((HIDDEN + N_OUT, *v.shape)) for k, v in self.params.items()}
        for j in range(HIDDEN + N_OUT):
            grads = {k: np.zeros_like(v) for k, v in self.params.items()}
            gy = np.zeros((1, N_OUT))
            gh = np.zeros((1, HIDDEN))
            if j < HIDDEN:
                gh[0, j] = 1.0
            else:
                gy[0, j - HIDDEN] = 1.0
            self._backward(c, gy, gh, grads)
            for k in grads:
                out[k][j] = grads[k]
        return out

    # ----------------------------------------------------------- persistence
    def save(self, path, meta: dict | None = None):
        info = {"scaling": self.scaling.to_dict(), "activation": self.activation}
        info.update(meta or {})
        save_container(path, "neural_plant", self.params, info)

    @classmethod
    def load(cls, path) -> "NeuralPlant":
        arrays, meta = load_container(path, "neural_plant")
        enc_widths = (arrays["enc0_W"].shape[0], arrays["enc1_W"].shape[0])
        dec_widths = (arrays["dec0_W"].shape[0], arrays["dec1_W"].shape[0])
        expected = param_shapes(enc_widths, dec_widths)
        if set(arrays) != set(expected) or any(arrays[k].shape != s for k, s in expected.items()):
            raise ConfigError(f"{path}: layer shapes do not match the FC+GRU architecture")
        return cls(arrays, ScalingTable.from_dict(meta["scaling"]), meta.get("activation", "tanh"))


def gradient_check(model: NeuralPlant, x, delta_u, perturbation: float = 1e-5) -> float:
    """Max relative error of analytic Jacobians against central differences.

    Covers d(x', y)/dx, d(x', y)/d(du) and d(h', y)/d(weights).  Each
    Jacobian block is compared as max|analytic - fd| / max(|fd|_max, 1e-12).
    """
    if isinstance(x, AugmentedState):
        x = x.as_vector()
    x = np.asarray(x, dtype=float)
    du = np.asarray(delta_u, dtype=float)
    eps = perturbation

    def out(xv, duv, m=model):
        xn, y = m.step_vec(xv, duv)
        return np.concatenate([xn, y])

    _, _, A, B, C, D = model.linearize_vec(x, du)
    J_x = np.vstack([A, C])
    J_u = np.vstack([B, D])
    fd_x = np.column_stack(
        [(out(x + eps * e, du) - out(x - eps * e, du)) / (2 * eps) for e in np.eye(N_STATE)]
    )
    fd_u = np.column_stack(
        [(out(x, du + eps * e) - out(x, du - eps * e)) / (2 * eps) for e in np.eye(N_IN)]
    )

    def rel(a, b):
        return float(np.max(np.abs(a - b)) / max(float(np.max(np.abs(b))), 1e-12))

    errs = [rel(J_x, fd_x), rel(J_u, fd_u)]

    W_an = model.weight_jacobian(x, du)
    rows = list(range(HIDDEN)) + list(range(N_STATE, N_STATE + N_OUT))
    for name, arr in model.params.items():
        fd = np.zeros_like(W_an[name])
        for idx in np.ndindex(arr.shape):
            saved = arr[idx]
            arr[idx] = saved + eps
            plus = out(x, du)[rows]
            arr[idx] = saved - eps
            minus = out(x, du)[rows]
            arr[idx] = saved
            fd[(slice(None), *idx)] = (plus - minus) / (2 * eps)
        errs.append(rel(W_an[name], fd))
    return max(errs)


# ------------------------------------------------------------------ training
@dataclass(frozen=True)
class TrainHyper:
    epochs: int = 400
    learning_rate: float = 1e-3
    truncation: int = 32
    batch_size: int = 64
    seed: int = 0
    val_fraction: float = 0.2


class Adam:
    def __init__(self, params: dict, lr: float, beta1=0.9, beta2=0.999, eps=1e-8):
        self.lr, self.b1, self.b2, self.eps = lr, beta1, beta2, eps
        self.m = {k: np.zeros_like(v) for k, v in params.items()}
        self.v = {k: np.zeros_like(v) for k, v in params.items()}
        self.t = 0

    def step(self, params: dict, grads: dict):
        self.t += 1
        c1 = 1.0 - self.b1**self.t
        c2 = 1.0 - self.b2**self.t
        for k, g in grads.items():
            self.m[k] = self.b1 * self.m[k] + (1 - self.b1) * g
            self.v[k] = self.b2 * self.v[k] + (1 - self.b2) * g * g
            params[k] -= self.lr * (self.m[k] / c1) / (np.sqrt(self.v[k] / c2) + self.eps)


@dataclass
class TrainResult:
    model: NeuralPlant
    history: list[dict]  # per epoch: epoch, train_mse, val_mse
    final_loss: float
    val_rmse: np.ndarray  # physical units per output channel


def dataset_arrays(rows) -> tuple[np.ndarray, np.ndarray]:
    """(ControlInput, CombustionOutput) rows -> model inputs U (T-1, 4), outputs Y (T-1, 3).

    The IMEP input of cycle i is the measured IMEP of cycle i-1, so the
    first row only seeds that history.
    """
    ctrl = np.array([u.as_array() for u, _ in rows])
    out = np.array([y.as_array() for _, y in rows])
    U = np.column_stack([out[:-1, 0], ctrl[1:]])
    return U, out[1:]


def train(
    U: np.ndarray,
    Y: np.ndarray,
    hyper: TrainHyper = TrainHyper(),
    scaling: ScalingTable | None = None,
    model: NeuralPlant | None = None,
) -> TrainResult:
    """Fit the model by truncated BPTT on contiguous streams.

    The training part of the sequence is cut into ``batch_size`` parallel
    streams; each epoch walks them in ``truncation``-length chunks, carrying
    the hidden state across chunks without backpropagating through it.
    The trailing ``val_fraction`` of the sequence is held out.
    """
    U = np.asarray(U, dtype=float)
    Y = np.asarray(Y, dtype=float)
    L = hyper.truncation
    if len(U) < 2 * L:
        raise ConfigError(f"dataset of {len(U)} cycles is shorter than 2x truncation ({2 * L})")
    scaling = scaling or ScalingTable()
    if model is None:
        model = NeuralPlant(init_params(hyper.seed), scaling)
    params = model.params
    n_val = int(round(hyper.val_fraction * len(U)))
    n_train = len(U) - n_val
    n_streams = max(1, min(hyper.batch_size, n_train // L))
    stream_len = n_train // n_streams
    n_chunks = max(1, stream_len // L)
    starts = np.arange(n_streams) * stream_len

    y_lo, y_hi = scaling.vectors(OUTPUT_CHANNELS)
    Yn = 2.0 * (Y - y_lo) / (y_hi - y_lo) - 1.0
    y_half = (y_hi - y_lo) / 2.0

    opt = Adam(params, hyper.learning_rate)
    history = []
    for epoch in range(hyper.epochs):
        h = np.zeros((n_streams, HIDDEN))
        losses = []
        for chunk in range(n_chunks):
            idx = starts[:, None] + chunk * L + np.arange(L)[None, :]
            caches, errs = [], []
            h_t = h
            for t in range(L):
                y, cache = model._forward(h_t, U[idx[:, t]])
                h_t = cache.h_next
                caches.append(cache)
                errs.append((y - model._y_lo) / y_half - 1.0 - Yn[idx[:, t]])
            count = n_streams * L * N_OUT
            loss = float(sum(np.sum(e * e) for e in errs) / count)
            if not math.isfinite(loss):
                raise NumericError(f"NaN loss at epoch {epoch}")
            losses.append(loss)
            grads = {k: np.zeros_like(v) for k, v in params.items()}
            gh = np.zeros_like(h)
            for t in reversed(range(L)):
                gy = (2.0 / count) * errs[t] / y_half
                gh, _ = model._backward(caches[t], gy, gh, grads)
            opt.step(params, grads)
            h = h_t
        train_mse = float(np.mean(losses))
        val_mse = float("nan")
        if n_val > 0:
            pred = model.predict_sequence(U)
            pn = 2.0 * (pred[n_train:] - y_lo) / (y_hi - y_lo) - 1.0
            val_mse = float(np.mean((pn - Yn[n_train:]) ** 2))
        history.append({"epoch": epoch, "train_mse": train_mse, "val_mse": val_mse})
        if epoch % 50 == 0:
            log.info("epoch %d train_mse %.3e val_mse %.3e", epoch, train_mse, val_mse)

    pred = model.predict_sequence(U)
    sl = slice(n_train, None) if n_val > 0 else slice(None)
    val_rmse = np.sqrt(np.mean((pred[sl] - Y[sl]) ** 2, axis=0))
    return TrainResult(model, history, history[-1]["train_mse"], val_rmse)


def find_equilibrium(model: NeuralPlant, u: np.ndarray, iters: int = 2000, tol: float = 1e-14) -> np.ndarray:
    """Fixed point h* = GRU(h*, enc(u)) by iteration."""
    h = np.zeros(HIDDEN)
    for _ in range(iters):
        h_new, _ = model.advance(h, u)
        if np.max(np.abs(h_new - h)) < tol:
            return h_new
        h = h_new
    return h


def write_telemetry(history: list[dict], path):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w") as f:
        f.write("epoch,train_mse,val_mse\n")
        for row in history:
            f.write(f"{row['epoch']},{row['train_mse']!r},{row['val_mse']!r}\n")
