"""Conserved-quantity and error diagnostics.

Energy uses the Legendre transform of the density: pointwise for ODE states,
integrated with per-cell Gauss-Legendre quadrature of the spatial Hermite
interpolant for fields (6 points per 1D cell, 5x5 per 2D cell).  Reference
solutions are truncated mode expansions with closed-form time dependence.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .layout import dof_kinds
from .patch import get_basis, unit_rule


class UndefinedMetricError(ValueError):
    """Relative error against a zero reference is undefined."""


@dataclass
class EnergySeries:
    times: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        self.times = np.asarray(self.times, dtype=float)
        self.values = np.asarray(self.values, dtype=float)

    @property
    def e0(self):
        return self.values[0]

    @property
    def rel_err(self):
        return np.abs(self.values - self.e0) / abs(self.e0)


@dataclass
class ReferenceSolution:
    kind: str
    evaluate: Callable  # (t, *coordinate arrays) -> field values
    valid_until: float = math.inf
    data: dict = field(default_factory=dict)
    jet: Callable | None = None

    def on_grid(self, t, grid):
        return self.evaluate(t, *grid.coords())


# -- energy --------------------------------------------------------------------


def _cell_gather_1d(grid):
    n = grid.shape[0]
    c = n if grid.periodic[0] else n - 1
    i = np.arange(c)
    return np.stack([i, (i + 1) % n], axis=1)


def _cell_gather_2d(grid):
    nx, ny = grid.shape
    ii, jj = np.meshgrid(np.arange(nx - 1), np.arange(ny - 1), indexing="ij")
    ii, jj = ii.ravel(), jj.ravel()
    corners = [(0, 0), (0, 1), (1, 0), (1, 1)]
    return np.stack(
        [np.ravel_multi_index(((ii + a), (jj + b)), (nx, ny)) for a, b in corners],
        axis=1,
    )


_Q_DOFS = {1: [0, 2], 2: [0, 2, 3, 6]}
_QT_DOFS = {1: [1, 3], 2: [1, 4, 5, 7]}
_ENERGY_COUNTS = {1: (6,), 2: (5, 5)}


def _spatial_interpolants(state):
    """Batched spatial-cubic coefficients of q and q_t over all cells."""
    grid = state.grid
    n_space = grid.n_space
    basis = get_basis(n_space)
    gather = _cell_gather_1d(grid) if n_space == 1 else _cell_gather_2d(grid)
    flat = state.values.reshape(grid.n_nodes, state.values.shape[-2], state.d_q)
    hfac = np.ones(len(basis.node_derivs))
    for d in range(n_space):
        hfac = hfac * grid.spacing[d] ** basis.node_derivs[:, d]
    Ainv = basis.fit_matrix_inverse()

    def theta_for(dofs):
        data = flat[gather][:, :, dofs, 0]  # (C, corners, basis dofs)
        scaled = (data * hfac[None, None, :]).reshape(gather.shape[0], -1)
        return scaled @ Ainv.T

    return basis, gather, theta_for, hfac


def _cell_origins(grid, gather):
    flat_coords = np.stack([c.ravel() for c in grid.coords()], axis=-1)
    return flat_coords[gather[:, 0]]


def energy(L, state):
    """Total energy of a state under the density's Legendre transform."""
    if state.grid.n_space == 0:
        q = state.values[0, :]
        qt = state.values[1, :]
        Z = np.concatenate([q, qt])[None, :]
        c0, c1 = L.jet_tensors(Z, 1)
        return float(qt @ c1[0][L.d_q : 2 * L.d_q] - c0[0])

    grid = state.grid
    n_space = grid.n_space
    basis, gather, theta_for, _ = _spatial_interpolants(state)
    theta_q = theta_for(_Q_DOFS[n_space])
    theta_qt = theta_for(_QT_DOFS[n_space])
    rule = unit_rule(_ENERGY_COUNTS[n_space])
    U = rule.points
    vol = float(np.prod(grid.spacing))

    rows0 = basis.eval_rows(U, (0,) * n_space)
    q = theta_q @ rows0.T  # (C, P)
    qt = theta_qt @ rows0.T
    slots = [q, qt]
    for d in range(n_space):
        deriv = tuple(1 if i == d else 0 for i in range(n_space))
        rows = basis.eval_rows(U, deriv) / grid.spacing[d]
        slots.append(theta_q @ rows.T)
    Z = np.stack(slots, axis=-1)
    if L.explicit_axes:
        origins = _cell_origins(grid, gather)
        phys = origins[:, None, :] + U[None, :, :] * np.asarray(grid.spacing)
        cols = [Z]
        for ax in L.explicit_axes:
            cols.append(phys[:, :, ax - 1][..., None])
        Z = np.concatenate(cols, axis=-1)
    c0, c1 = L.jet_tensors(Z.reshape(-1, Z.shape[-1]), 1)
    dens = (Z.reshape(-1, Z.shape[-1])[:, 1] * c1[:, 1] - c0).reshape(q.shape)
    return float(np.sum(dens @ (rule.weights * vol)))


def energy_series(L, states):
    times = np.array([s.t for s in states])
    values = np.array([energy(L, s) for s in states])
    return EnergySeries(times=times, values=values)


# -- error metrics ---------------------------------------------------------------


def relative_l2(state, ref):
    """||q - q_ref||_2 / ||q_ref||_2 over grid nodes."""
    q = state.values[..., 0, 0]
    q_ref = ref.on_grid(state.t, state.grid)
    norm = np.linalg.norm(q_ref)
    if norm == 0.0:
        raise UndefinedMetricError("reference field vanishes on the grid")
    return float(np.linalg.norm(q - q_ref) / norm)


def moving_average(series, window):
    """Centered moving average with shrinking edge windows."""
    if window < 1:
        raise ValueError("window must be >= 1")
    s = np.asarray(series, dtype=float)
    n = s.size
    idx = np.arange(n)
    lo = np.maximum(0, idx - (window - 1) // 2)
    hi = np.minimum(n, idx + window // 2 + 1)
    csum = np.concatenate([[0.0], np.cumsum(s)])
    return (csum[hi] - csum[lo]) / (hi - lo)


# -- reference solutions -----------------------------------------------------------


def fourier_reference_1d(ic, c2, L_dom, n_modes, x0=0.0, n_sample=4096):
    """Truncated Fourier solution of q_tt = c^2 q_xx, periodic, zero initial q_t."""
    if n_modes < 1:
        raise ValueError("need at least one mode")
    xs = x0 + L_dom * np.arange(n_sample) / n_sample
    coeff = np.fft.rfft(ic(xs)) / n_sample
    m = np.arange(n_modes + 1)
    a = np.zeros(n_modes + 1)
    b = np.zeros(n_modes + 1)
    a[0] = coeff[0].real
    a[1:] = 2 * coeff[1 : n_modes + 1].real
    b[1:] = -2 * coeff[1 : n_modes + 1].imag
    k = 2 * np.pi * m / L_dom
    omega = np.sqrt(c2) * k

    def mode_fields(t, x):
        x = np.asarray(x, dtype=float)
        arg = k[:, None] * (x.ravel()[None, :] - x0)
        cosx, sinx = np.cos(arg), np.sin(arg)
        return x, cosx, sinx

    def evaluate(t, x):
        x, cosx, sinx = mode_fields(t, x)
        ct = np.cos(omega * t)
        q = (a * ct) @ cosx + (b * ct) @ sinx
        return q.reshape(np.shape(x))

    def jet(t, x):
        x, cosx, sinx = mode_fields(t, x)
        ct, st = np.cos(omega * t), np.sin(omega * t)
        shape = np.shape(x)

        def comb(fa, fb):
            return (fa @ cosx + fb @ sinx).reshape(shape)

        return {
            "q": comb(a * ct, b * ct),
            "q_t": comb(-a * omega * st, -b * omega * st),
            "q_x": comb(b * k * ct, -a * k * ct),
            "q_tt": comb(-a * omega**2 * ct, -b * omega**2 * ct),
            "q_tx": comb(-b * k * omega * st, a * k * omega * st),
            "q_xx": comb(-a * k**2 * ct, -b * k**2 * ct),
        }

    return ReferenceSolution(
        kind="Fourier-1D",
        evaluate=evaluate,
        data={"a": a, "b": b, "k": k, "omega": omega, "c2": c2},
        jet=jet,
    )


def eigenmode_reference_2d(
    ic, modes_x, modes_y, domain, c2=1.0, n_sample=401
):
    """Sine-eigenmode solution of q_tt = c^2 (q_xx + q_yy) on a Dirichlet box."""
    x0, x1, y0, y1 = domain
    Lx, Ly = x1 - x0, y1 - y0
    xs = np.linspace(x0, x1, n_sample)
    ys = np.linspace(y0, y1, n_sample)
    X, Y = np.meshgrid(xs, ys, indexing="ij")
    q0 = ic(X, Y)
    mx = np.arange(1, modes_x + 1)
    my = np.arange(1, modes_y + 1)
    Sx = np.sin(np.pi * np.outer(mx, xs - x0) / Lx)
    Sy = np.sin(np.pi * np.outer(my, ys - y0) / Ly)
    wx = np.full(n_sample, (xs[1] - xs[0]))
    wx[[0, -1]] *= 0.5
    wy = np.full(n_sample, (ys[1] - ys[0]))
    wy[[0, -1]] *= 0.5
    coeff = 4.0 / (Lx * Ly) * np.einsum("mp,pq,nq->mn", Sx * wx, q0, Sy * wy)
    omega = np.pi * np.sqrt(c2) * np.sqrt(
        (mx[:, None] / Lx) ** 2 + (my[None, :] / Ly) ** 2
    )

    def evaluate(t, x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        sx = np.sin(np.pi * np.outer(mx, x.ravel() - x0) / Lx)
        sy = np.sin(np.pi * np.outer(my, y.ravel() - y0) / Ly)
        ct = coeff * np.cos(omega * t)
        q = np.einsum("mn,mp,np->p", ct, sx, sy)
        return q.reshape(np.shape(x))

    return ReferenceSolution(
        kind="Eigenmode-2D",
        evaluate=evaluate,
        data={"coeff": coeff, "omega": omega, "domain": domain, "c2": c2},
    )


def dalembert_interface_reference(
    pulse, c2_left, c2_right, x_interface, pulse_support, domain
):
    """Step-interface solution for a rightward pulse starting left of the jump.

    Valid until the reflected pulse reaches the left edge or the transmitted
    pulse reaches the right edge.
    """
    c1 = np.sqrt(c2_left)
    c2 = np.sqrt(c2_right)
    r = (c1 - c2) / (c1 + c2)
    tau = 2 * c1 / (c1 + c2)
    s_lo, s_hi = pulse_support
    xl, xr = domain
    t_left = (2 * x_interface - s_hi - xl) / c1
    t_right = ((c1 / c2) * (xr - x_interface) + x_interface - s_hi) / c1
    valid = min(t_left, t_right)

    def evaluate(t, x):
        x = np.asarray(x, dtype=float)
        left = pulse(x - c1 * t) + r * pulse(2 * x_interface - x - c1 * t)
        right = tau * pulse(x_interface + (c1 / c2) * (x - x_interface) - c1 * t)
        return np.where(x < x_interface, left, right)

    return ReferenceSolution(
        kind="DAlembert-interface",
        evaluate=evaluate,
        valid_until=valid,
        data={"r": r, "tau": tau, "x_interface": x_interface},
    )


# -- interference fringes -----------------------------------------------------------


@dataclass
class FringeResult:
    detected: np.ndarray
    theoretical: np.ndarray
    ok: bool


def _parabolic_refine(y, v, i):
    if i == 0 or i == len(v) - 1:
        return y[i]
    denom = v[i - 1] - 2 * v[i] + v[i + 1]
    if denom <= 0:
        return y[i]
    shift = 0.5 * (v[i - 1] - v[i + 1]) / denom
    return y[i] + shift * (y[1] - y[0])


def fringe_minima(
    profile, positions, separation, wavelength, distance, min_prominence=0.02
):
    """Detected vs two-slit-theory minima along the observation line.

    Theory places minima where the exact two-source path difference equals a
    half-integer number of wavelengths.
    """
    v = np.asarray(profile, dtype=float)
    y = np.asarray(positions, dtype=float)
    span = v.max() - v.min()
    detected = []
    if span > 0:
        cand = [
            i
            for i in range(1, v.size - 1)
            if v[i] < v[i - 1] and v[i] < v[i + 1]
        ]
        for i in cand:
            left_max = v[: i + 1].max()
            right_max = v[i:].max()
            prom = min(left_max, right_max) - v[i]
            if prom >= min_prominence * span:
                detected.append(_parabolic_refine(y, v, i))
    detected = np.asarray(sorted(detected))

    def path_diff(yy):
        return np.sqrt(distance**2 + (yy + separation / 2) ** 2) - np.sqrt(
            distance**2 + (yy - separation / 2) ** 2
        )

    y_max = max(abs(y[0]), abs(y[-1]))
    theory = []
    m = 0
    while (m + 0.5) * wavelength < separation:
        target = (m + 0.5) * wavelength
        if path_diff(y_max) < target:
            break
        lo, hi = 0.0, y_max
        for _ in range(80):
            mid = 0.5 * (lo + hi)
            if path_diff(mid) < target:
                lo = mid
            else:
                hi = mid
        theory.extend([-0.5 * (lo + hi), 0.5 * (lo + hi)])
        m += 1
    theory = np.asarray(sorted(theory))
    return FringeResult(
        detected=detected, theoretical=theory, ok=detected.size >= 2
    )
