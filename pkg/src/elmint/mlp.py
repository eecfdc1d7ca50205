"""Learned densities: softplus MLPs trained on the squared residual.

Training minimizes the mean squared Euler-Lagrange residual over analytically
generated plane-wave jets, plus soft gauge terms pinning the affine ambiguity
(A L + B q_t + C) to (1, 0, 0) at the origin.  Weight gradients flow through
the residual (which contains second input-derivatives of the network) via
jax; the trained density itself evaluates through the package's forward-mode
engine, so it satisfies the same contract as the analytic densities.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field

import numpy as np

from . import taylor
from .lagrangian import DimensionMismatchError, LagrangianDensity
from .layout import get_layout

_MAGIC = b"ELMD"
_VERSION = 1


class TrainingDivergedError(RuntimeError):
    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


class ModelFormatError(ValueError):
    pass


@dataclass
class MlpDensity(LagrangianDensity):
    """Softplus MLP over (q, q_t, q_x[, q_y]), float64 weights."""

    weights: list = None  # [(W, b), ...] with W (out, in)
    n_space: int = 1
    d_q: int = 1

    def __post_init__(self):
        self.weights = [
            (np.asarray(W, dtype=float), np.asarray(b, dtype=float))
            for W, b in self.weights
        ]
        if self.weights[0][0].shape[1] != self.n_inputs:
            raise DimensionMismatchError("first layer arity mismatch")

    @property
    def widths(self):
        return [W.shape[0] for W, _ in self.weights]

    def _expression(self, inp):
        h = inp
        for W, b in self.weights[:-1]:
            h = taylor.softplus(h.affine(W, b))
        W, b = self.weights[-1]
        return h.affine(W, b).component(0)

    def jet_tensors(self, Z, order):
        """Layer-recursive jet propagation; ~10x the generic engine's speed."""
        Z = np.asarray(Z, dtype=float)
        if Z.shape[-1] != self.n_inputs:
            raise DimensionMismatchError(
                f"expected {self.n_inputs} inputs, got {Z.shape[-1]}"
            )
        if Z.ndim != 2:
            return LagrangianDensity.jet_tensors(self, Z, order)
        D = _mlp_forward_jets(self.weights, Z, order)
        if order >= 2:
            # bit-exact symmetry is contractual for the Hessian; the higher
            # tensors are symmetric to rounding and their consumers
            # re-symmetrize explicitly
            D[2] = taylor.symmetrize_exact(D[2], 2, 1)
        return D

    def value_batch(self, Z):
        h = np.asarray(Z, dtype=float)
        for W, b in self.weights[:-1]:
            h = np.logaddexp(0.0, h @ W.T + b)
        W, b = self.weights[-1]
        return (h @ W.T + b)[..., 0]


def _placement_targets(m, p):
    """Distinct index assignments splitting m slots into blocks of size p, m-p."""
    from itertools import combinations

    out = []
    for S in combinations(range(m), p):
        rest = tuple(i for i in range(m) if i not in S)
        out.append(S + rest)
    return out


_T21 = _placement_targets(3, 2)
_T31 = _placement_targets(4, 3)
_T22 = [t for t in _placement_targets(4, 2) if t[0] == 0]  # unordered pairs
_T211 = _placement_targets(4, 2)


def _spread(u, m):
    return u.reshape(u.shape + (1,) * m)


def _outer_seeds(a, b):
    sub_a = taylor._SEEDS[: a.ndim - 2]
    sub_b = taylor._SEEDS[a.ndim - 2 : a.ndim - 2 + b.ndim - 2]
    return np.einsum(f"zw{sub_a},zw{sub_b}->zw{sub_a}{sub_b}", a, b)


def _sym_sum(base, targets):
    out = None
    for t in targets:
        term = taylor._scatter_axes(base, t, 2)
        out = term if out is None else out + term
    return out


def _mlp_forward_jets(weights, Z, order):
    """Value and input-derivative tensors of the network, orders 0..order."""
    B, k = Z.shape
    sp_chain_len = order  # softplus derivative chain: sigma, sigma', ...
    h = None
    Dh = None
    for li, (W, b) in enumerate(weights[:-1]):
        if li == 0:
            a = Z @ W.T + b
            Da = [np.broadcast_to(W, (B,) + W.shape)]
            for m in range(2, order + 1):
                Da.append(None)  # exactly zero
        else:
            a = h @ W.T + b
            Da = []
            for m in range(1, order + 1):
                if Dh[m - 1] is None:
                    Da.append(None)
                else:
                    sub = taylor._SEEDS[:m]
                    Da.append(np.einsum(f"ow,zw{sub}->zo{sub}", W, Dh[m - 1]))
        s = taylor._sigmoid_value(a)
        u = taylor._sigmoid_derivs(s, max(order - 1, 0))
        h = np.logaddexp(0.0, a)
        Dh = []
        if order >= 1:
            Dh.append(_spread(u[0], 1) * Da[0])
        if order >= 2:
            d11 = _outer_seeds(Da[0], Da[0])
            t = _spread(u[1], 2) * d11
            if Da[1] is not None:
                t = t + _spread(u[0], 2) * Da[1]
            Dh.append(t)
        if order >= 3:
            d111 = _outer_seeds(d11, Da[0])
            t = _spread(u[2], 3) * d111
            if Da[1] is not None:
                t = t + _spread(u[1], 3) * _sym_sum(
                    _outer_seeds(Da[1], Da[0]), _T21
                )
            if Da[2] is not None:
                t = t + _spread(u[0], 3) * Da[2]
            Dh.append(t)
        if order >= 4:
            t = _spread(u[3], 4) * _outer_seeds(d111, Da[0])
            if Da[1] is not None:
                t = t + _spread(u[2], 4) * _sym_sum(
                    _outer_seeds(Da[1], d11), _T211
                )
                t = t + _spread(u[1], 4) * _sym_sum(
                    _outer_seeds(Da[1], Da[1]), _T22
                )
            if Da[2] is not None:
                t = t + _spread(u[1], 4) * _sym_sum(
                    _outer_seeds(Da[2], Da[0]), _T31
                )
            if Da[3] is not None:
                t = t + _spread(u[0], 4) * Da[3]
            Dh.append(t)

    W, b = weights[-1]
    out = [(h @ W.T + b)[:, 0]]
    for m in range(1, order + 1):
        sub = taylor._SEEDS[:m]
        out.append(np.einsum(f"w,zw{sub}->z{sub}", W[0], Dh[m - 1]))
    return out


def glorot_init(layer_sizes, seed):
    rng = np.random.default_rng(seed)
    weights = []
    for fan_in, fan_out in zip(layer_sizes[:-1], layer_sizes[1:]):
        a = np.sqrt(6.0 / (fan_in + fan_out))
        W = rng.uniform(-a, a, size=(fan_out, fan_in))
        b = np.zeros(fan_out)
        weights.append((W, b))
    return weights


# -- plane-wave samples ----------------------------------------------------------


@dataclass
class PlaneWaveSample:
    """Batch of jets drawn from random superpositions of plane waves.

    Slot arrays follow the layout ordering (z kinds then second-order kinds);
    all derivatives are analytically consistent with the superposition.
    """

    slots: np.ndarray  # (count, n_slots)
    n_space: int
    k_bound: float
    c: float
    modes: int
    wavenumbers: np.ndarray
    amplitudes: np.ndarray = None
    phases: np.ndarray = None
    points: np.ndarray = None  # (count, 1 + n_space) sample coordinates

    def __len__(self):
        return self.slots.shape[0]


def sample_plane_waves(
    count, modes, k_bound, c, seed, n_space=1, box=(10.0, 10.0, 10.0)
):
    """Jets of sum_j A_j sin(k_j . x - w_j t + phi_j) with w = c |k|."""
    if count < 1 or k_bound <= 0:
        raise ValueError("count >= 1 and k_bound > 0 required")
    rng = np.random.default_rng(seed)
    kvec = rng.uniform(-k_bound, k_bound, size=(count, modes, n_space))
    amp = rng.uniform(0.2, 1.0, size=(count, modes)) / np.sqrt(modes)
    phase = rng.uniform(0.0, 2 * np.pi, size=(count, modes))
    omega = c * np.linalg.norm(kvec, axis=2)
    t = rng.uniform(0.0, box[0], size=(count, 1))
    xy = np.stack(
        [rng.uniform(0.0, box[1 + d], size=(count, 1)) for d in range(n_space)],
        axis=-1,
    )  # (count, 1, n_space)

    arg = np.einsum("cmd,cqd->cm", kvec, xy) - omega * t + phase
    s, co = np.sin(arg), np.cos(arg)

    def tot(fac):
        return np.sum(amp * fac, axis=1)

    cols = {}
    cols["q"] = tot(s)
    cols["q_t"] = tot(-omega * co)
    cols["q_tt"] = tot(-(omega**2) * s)
    for d in range(n_space):
        kd = kvec[:, :, d]
        cols[f"d{d}"] = tot(kd * co)
        cols[f"td{d}"] = tot(omega * kd * s)
        for e in range(d, n_space):
            cols[f"d{d}d{e}"] = tot(-kd * kvec[:, :, e] * s)

    if n_space == 1:
        order = ["q", "q_t", "d0", "q_tt", "td0", "d0d0"]
    else:
        order = [
            "q", "q_t", "d0", "d1",
            "q_tt", "td0", "td1", "d0d0", "d0d1", "d1d1",
        ]
    slots = np.stack([cols[k] for k in order], axis=1)
    return PlaneWaveSample(
        slots=slots,
        n_space=n_space,
        k_bound=k_bound,
        c=c,
        modes=modes,
        wavenumbers=kvec,
        amplitudes=amp,
        phases=phase,
        points=np.concatenate([t, xy[:, 0, :]], axis=1),
    )


# -- loss ---------------------------------------------------------------------------


def residual_batch(L, slots):
    """Euler-Lagrange residual at a batch of slot rows (homogeneous density)."""
    layout = get_layout(L.n_space, L.d_q, ())
    Z = slots[:, : (2 + L.n_space)]
    _, G, H = L.jet_tensors(Z, 2)
    return layout.residual(G, H, slots)[:, 0]


def gauge_loss(L, batch):
    """Mean squared residual plus the origin gauge penalties."""
    slots = batch.slots if isinstance(batch, PlaneWaveSample) else np.asarray(batch)
    if slots.shape[0] == 0:
        raise ValueError("batch must be non-empty")
    R = residual_batch(L, slots)
    z0 = np.zeros((1, 2 + L.n_space))
    c0, c1, c2 = L.jet_tensors(z0, 2)
    return float(
        np.mean(R**2)
        + (c2[0, 1, 1] - 1.0) ** 2
        + c1[0, 1] ** 2
        + c0[0] ** 2
    )


# -- training -------------------------------------------------------------------------


@dataclass
class TrainConfig:
    n_space: int = 1
    c2: float = 0.05
    k_bound: float = 4.0
    modes: int = 5
    n_samples: int = 2000
    steps: int = 5000
    batch_size: int = 128
    width: int = 32
    depth: int = 2
    lr_min: float = 1e-3
    lr_peak: float = 1e-2
    warmup_frac: float = 0.3
    beta1: float = 0.9
    beta2: float = 0.999
    eps: float = 1e-8
    seed: int = 0
    box: tuple = (10.0, 10.0, 10.0)


@dataclass
class TrainResult:
    density: MlpDensity
    loss_history: np.ndarray
    lr_history: np.ndarray


def one_cycle_lr(step, total, lo, hi, warmup_frac):
    pct = step / max(total - 1, 1)
    if pct < warmup_frac:
        return lo + (hi - lo) * 0.5 * (1 - np.cos(np.pi * pct / warmup_frac))
    rest = (pct - warmup_frac) / (1 - warmup_frac)
    return lo + (hi - lo) * 0.5 * (1 + np.cos(np.pi * rest))


def _jax_loss(n_space):
    """Loss closure matching :func:`gauge_loss`, differentiable in the weights."""
    import jax

    jax.config.update("jax_enable_x64", True)
    import jax.numpy as jnp

    n_in = 2 + n_space
    layout = get_layout(n_space, 1, ())
    vmaps = [jnp.asarray(vm) for vm in layout.vmap]

    def net(p, z):
        h = z
        for W, b in p[:-1]:
            h = jnp.logaddexp(0.0, W @ h + b)
        W, b = p[-1]
        return (W @ h + b)[0]

    grad_z = jax.grad(net, argnums=1)
    hess_z = jax.jacfwd(grad_z, argnums=1)

    def residual(p, row):
        z = row[:n_in]
        g = grad_z(p, z)
        H = hess_z(p, z)
        R = g[0]
        for c in range(n_space + 1):
            V = vmaps[c] @ row
            R = R - H[1 + c] @ V
        return R

    def loss(p, rows):
        R = jax.vmap(residual, in_axes=(None, 0))(p, rows)
        z0 = jnp.zeros(n_in)
        g0 = grad_z(p, z0)
        H0 = hess_z(p, z0)
        L0 = net(p, z0)
        return jnp.mean(R**2) + (H0[1, 1] - 1.0) ** 2 + g0[1] ** 2 + L0**2

    return loss


def loss_gradient(density, batch):
    """Gradient of the gauge loss with respect to the network weights."""
    import jax
    import jax.numpy as jnp

    loss = _jax_loss(density.n_space)
    params = [(jnp.asarray(W), jnp.asarray(b)) for W, b in density.weights]
    rows = jnp.asarray(
        batch.slots if isinstance(batch, PlaneWaveSample) else batch
    )
    val, grads = jax.value_and_grad(loss)(params, rows)
    return float(val), [(np.asarray(gW), np.asarray(gb)) for gW, gb in grads]


def train(config, samples=None):
    """Train an MLP density on plane-wave jets; deterministic in the seed."""
    import jax

    jax.config.update("jax_enable_x64", True)
    import jax.numpy as jnp

    if samples is None:
        samples = sample_plane_waves(
            config.n_samples,
            config.modes,
            config.k_bound,
            np.sqrt(config.c2),
            seed=config.seed + 1,
            n_space=config.n_space,
            box=config.box,
        )
    n_in = 2 + config.n_space
    sizes = [n_in] + [config.width] * config.depth + [1]
    params = [
        (jnp.asarray(W), jnp.asarray(b))
        for W, b in glorot_init(sizes, config.seed)
    ]
    slots = jnp.asarray(samples.slots)
    loss = _jax_loss(config.n_space)
    value_and_grad = jax.jit(jax.value_and_grad(loss))

    m_state = [(jnp.zeros_like(W), jnp.zeros_like(b)) for W, b in params]
    v_state = [(jnp.zeros_like(W), jnp.zeros_like(b)) for W, b in params]
    rng = np.random.default_rng(config.seed + 2)
    losses = np.zeros(config.steps)
    lrs = np.zeros(config.steps)
    b1, b2, eps = config.beta1, config.beta2, config.eps
    for it in range(config.steps):
        idx = rng.integers(0, len(samples), size=config.batch_size)
        val, grads = value_and_grad(params, slots[idx])
        val = float(val)
        if not np.isfinite(val):
            raise TrainingDivergedError(f"loss diverged at step {it}", step=it)
        losses[it] = val
        lr = one_cycle_lr(
            it, config.steps, config.lr_min, config.lr_peak, config.warmup_frac
        )
        lrs[it] = lr
        corr1 = 1.0 - b1 ** (it + 1)
        corr2 = 1.0 - b2 ** (it + 1)
        new_params = []
        for li, ((W, b), (gW, gb)) in enumerate(zip(params, grads)):
            mW, mb = m_state[li]
            vW, vb = v_state[li]
            mW = b1 * mW + (1 - b1) * gW
            mb = b1 * mb + (1 - b1) * gb
            vW = b2 * vW + (1 - b2) * gW**2
            vb = b2 * vb + (1 - b2) * gb**2
            m_state[li] = (mW, mb)
            v_state[li] = (vW, vb)
            W = W - lr * (mW / corr1) / (jnp.sqrt(vW / corr2) + eps)
            b = b - lr * (mb / corr1) / (jnp.sqrt(vb / corr2) + eps)
            new_params.append((W, b))
        params = new_params

    weights = [(np.asarray(W), np.asarray(b)) for W, b in params]
    density = MlpDensity(weights=weights, n_space=config.n_space)
    return TrainResult(density=density, loss_history=losses, lr_history=lrs)


# -- model files -------------------------------------------------------------------------


def save_density(density, path):
    """Self-describing binary container; round-trips bit-exactly."""
    with open(path, "wb") as fh:
        fh.write(_MAGIC)
        fh.write(struct.pack("<BB", _VERSION, density.n_space))
        fh.write(struct.pack("<I", len(density.weights)))
        for W, _ in density.weights:
            fh.write(struct.pack("<II", W.shape[0], W.shape[1]))
        for W, b in density.weights:
            fh.write(np.ascontiguousarray(W, dtype="<f8").tobytes())
            fh.write(np.ascontiguousarray(b, dtype="<f8").tobytes())


def load_density(path):
    with open(path, "rb") as fh:
        data = fh.read()
    off = 0

    def take(n):
        nonlocal off
        if off + n > len(data):
            raise ModelFormatError("truncated model file")
        out = data[off : off + n]
        off += n
        return out

    if take(4) != _MAGIC:
        raise ModelFormatError("bad magic bytes")
    version, n_space = struct.unpack("<BB", take(2))
    if version != _VERSION:
        raise ModelFormatError(f"unsupported model version {version}")
    (n_layers,) = struct.unpack("<I", take(4))
    shapes = [struct.unpack("<II", take(8)) for _ in range(n_layers)]
    weights = []
    for out_dim, in_dim in shapes:
        W = np.frombuffer(take(8 * out_dim * in_dim), dtype="<f8").reshape(
            out_dim, in_dim
        )
        b = np.frombuffer(take(8 * out_dim), dtype="<f8")
        weights.append((W.copy(), b.copy()))
    if off != len(data):
        raise ModelFormatError("trailing bytes in model file")
    return MlpDensity(weights=weights, n_space=n_space)
