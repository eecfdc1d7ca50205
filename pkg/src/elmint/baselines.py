"""Classical integrators and discretizations used for comparison runs.

All steppers advance a first-order system y' = f(t, y).  Lagrangian systems
are wrapped through the acceleration implied by the density (mass-matrix
solve), so every method here consumes the same density contract as the
optimization-based integrator.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np


class ImplicitSolveError(RuntimeError):
    """Inner solve of an implicit step failed to converge."""


class MassMatrixError(ValueError):
    """The velocity Hessian of the density is singular."""


@dataclass
class OdeSystem:
    dim: int
    rhs: Callable
    energy: Callable | None = None


@dataclass
class ButcherTableau:
    a: np.ndarray
    b: np.ndarray
    c: np.ndarray


_S3 = np.sqrt(3.0)

GLRK_TABLEAU = ButcherTableau(
    a=np.array([[0.25, 0.25 - _S3 / 6.0], [0.25 + _S3 / 6.0, 0.25]]),
    b=np.array([0.5, 0.5]),
    c=np.array([0.5 - _S3 / 6.0, 0.5 + _S3 / 6.0]),
)

# Dormand-Prince 5(4)
_DOPRI_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_DOPRI_A = np.array(
    [
        [0, 0, 0, 0, 0, 0],
        [1 / 5, 0, 0, 0, 0, 0],
        [3 / 40, 9 / 40, 0, 0, 0, 0],
        [44 / 45, -56 / 15, 32 / 9, 0, 0, 0],
        [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729, 0, 0],
        [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656, 0],
    ]
)
_DOPRI_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_DOPRI_B4 = np.array(
    [5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40]
)


# -- density-driven acceleration ----------------------------------------------


def lnn_acceleration(L, q, q_t):
    """Acceleration implied by an ODE density: M(q) qtt = L_q - L_{q qt} q_t."""
    q = np.atleast_1d(np.asarray(q, dtype=float))
    q_t = np.atleast_1d(np.asarray(q_t, dtype=float))
    d = L.d_q
    Z = np.concatenate([q, q_t])[None, :]
    _, G, H = L.jet_tensors(Z, 2)
    qi = np.arange(d)
    vi = np.arange(d, 2 * d)
    M = H[0][np.ix_(vi, vi)]
    if abs(np.linalg.det(M)) < 1e-12:
        raise MassMatrixError("mass matrix collapsed (|det| < 1e-12)")
    rhs = G[0][qi] - H[0][np.ix_(vi, qi)] @ q_t
    return np.linalg.solve(M, rhs)


def lagrangian_ode_system(L):
    """First-order system y = (q, q_t) for an ODE density, with its energy."""
    d = L.d_q

    def rhs(t, y):
        return np.concatenate([y[d:], lnn_acceleration(L, y[:d], y[d:])])

    def energy(y):
        Z = y[None, :]
        c0, c1 = L.jet_tensors(Z, 1)
        return float(y[d:] @ c1[0][d : 2 * d] - c0[0])

    return OdeSystem(dim=2 * d, rhs=rhs, energy=energy)


# -- explicit steps -------------------------------------------------------------


def rk4_step(system, y, t, dt):
    f = system.rhs
    k1 = f(t, y)
    k2 = f(t + dt / 2, y + dt / 2 * k1)
    k3 = f(t + dt / 2, y + dt / 2 * k2)
    k4 = f(t + dt, y + dt * k3)
    return y + dt / 6 * (k1 + 2 * k2 + 2 * k3 + k4)


def dopri_step(system, y, t, dt, rtol=1e-8, atol=1e-10):
    """One Dormand-Prince step: (y5, error_norm, proposed_dt)."""
    f = system.rhs
    k = [f(t, y)]
    for i in range(1, 6):
        yi = y + dt * sum(_DOPRI_A[i, j] * k[j] for j in range(i))
        k.append(f(t + _DOPRI_C[i] * dt, yi))
    y5 = y + dt * sum(_DOPRI_B5[j] * k[j] for j in range(6))
    k.append(f(t + dt, y5))
    y4 = y + dt * sum(_DOPRI_B4[j] * k[j] for j in range(7))
    scale = atol + rtol * np.maximum(np.abs(y), np.abs(y5))
    err = np.sqrt(np.mean(((y5 - y4) / scale) ** 2))
    fac = 0.9 * (1.0 / max(err, 1e-12)) ** 0.2
    dt_next = dt * min(5.0, max(0.2, fac))
    return y5, err, dt_next


def dopri_integrate(system, y0, t0, t1, dt0=0.01, rtol=1e-8, atol=1e-10, on_accept=None):
    """Adaptive Dormand-Prince rollout; calls on_accept(t, y) at accepted steps."""
    t, y, dt = t0, np.asarray(y0, dtype=float), dt0
    if on_accept:
        on_accept(t, y)
    while t < t1 - 1e-12:
        dt = min(dt, t1 - t)
        y_new, err, dt_next = dopri_step(system, y, t, dt, rtol=rtol, atol=atol)
        if err <= 1.0:
            t, y = t + dt, y_new
            if on_accept:
                on_accept(t, y)
        dt = dt_next
    return y


# -- implicit steps --------------------------------------------------------------


def _solve_fixed_point(residual, z0, tol=1e-12, max_iter=50):
    """z = residual-free point of z_new = g(z); fixed point then Newton fallback."""
    z = z0.copy()
    for _ in range(max_iter):
        z_new = residual(z)
        delta = np.max(np.abs(z_new - z))
        z = z_new
        if delta < tol:
            return z
    # Newton on F(z) = g(z) - z with finite-difference Jacobian
    n = z.size
    for _ in range(max_iter):
        Fz = residual(z) - z
        if np.max(np.abs(Fz)) < tol:
            return z
        Jc = np.zeros((n, n))
        h = 1e-7
        for i in range(n):
            e = np.zeros(n)
            e[i] = h
            Jc[:, i] = (residual(z + e) - residual(z - e)) / (2 * h)
        try:
            step = np.linalg.solve(Jc - np.eye(n), -Fz)
        except np.linalg.LinAlgError as exc:
            raise ImplicitSolveError("singular Newton system in implicit step") from exc
        z = z + step
    raise ImplicitSolveError("implicit inner solve did not converge")


def implicit_midpoint_step(system, y, t, dt):
    f = system.rhs

    def g(k):
        return f(t + dt / 2, y + dt / 2 * k)

    k = _solve_fixed_point(g, f(t, y))
    return y + dt * k


def glrk_step(system, y, t, dt, tableau=GLRK_TABLEAU):
    f = system.rhs
    n = y.size
    s = tableau.b.size

    def g(z):
        K = z.reshape(s, n)
        out = np.zeros_like(K)
        for i in range(s):
            yi = y + dt * (tableau.a[i] @ K)
            out[i] = f(t + tableau.c[i] * dt, yi)
        return out.reshape(-1)

    k0 = np.tile(f(t, y), s)
    K = _solve_fixed_point(g, k0).reshape(s, n)
    return y + dt * (tableau.b @ K)


# -- discrete-stencil velocity Verlet ---------------------------------------------


def _stencil_accel(q, c2, dx):
    return c2 * (np.roll(q, -1) - 2 * q + np.roll(q, 1)) / dx**2


def stencil_verlet_step(q, q_t, dt, c2, dx):
    """Velocity Verlet on the periodic nearest-neighbour stencil system."""
    a0 = _stencil_accel(q, c2, dx)
    qt_half = q_t + 0.5 * dt * a0
    q_new = q + dt * qt_half
    qt_new = qt_half + 0.5 * dt * _stencil_accel(q_new, c2, dx)
    return q_new, qt_new


def stencil_energy(q, q_t, c2, dx):
    grad = (np.roll(q, -1) - q) / dx
    return float(0.5 * np.sum(q_t**2) + 0.5 * c2 * np.sum(grad**2))


# -- fourth-order method-of-lines -----------------------------------------------


def fd4_first_derivative(q, dx):
    return (
        -np.roll(q, -2) + 8 * np.roll(q, -1) - 8 * np.roll(q, 1) + np.roll(q, 2)
    ) / (12 * dx)


def fd4_second_derivative(q, dx):
    return (
        -np.roll(q, -2)
        + 16 * np.roll(q, -1)
        - 30 * q
        + 16 * np.roll(q, 1)
        - np.roll(q, 2)
    ) / (12 * dx**2)


def fd4_semidiscretize(L, x_nodes):
    """Method-of-lines system for a 1D periodic field density (d_q = 1).

    State y = [q at nodes, q_t at nodes]; spatial derivatives from 4th-order
    central differences, acceleration from the density's mass-matrix relation.
    """
    x_nodes = np.asarray(x_nodes, dtype=float)
    n = x_nodes.size
    if n < 5:
        raise ValueError("fd4 stencil needs at least 5 nodes")
    if L.d_q != 1 or L.n_space != 1:
        raise ValueError("fd4 baseline covers scalar 1D densities")
    dx = x_nodes[1] - x_nodes[0]
    has_x = 1 in L.explicit_axes

    def tensors(q, qt):
        qx = fd4_first_derivative(q, dx)
        qxx = fd4_second_derivative(q, dx)
        qtx = fd4_first_derivative(qt, dx)
        Z = np.stack([q, qt, qx], axis=-1)
        if has_x:
            Z = np.concatenate([Z, x_nodes[:, None]], axis=-1)
        return Z, qx, qxx, qtx

    def rhs(t, y):
        q, qt = y[:n], y[n:]
        Z, qx, qxx, qtx = tensors(q, qt)
        _, G, H = L.jet_tensors(Z, 2)
        mass = H[:, 1, 1]
        if np.min(np.abs(mass)) < 1e-12:
            raise MassMatrixError("mass matrix collapsed on the grid")
        num = (
            G[:, 0]
            - H[:, 1, 0] * qt
            - H[:, 1, 2] * qtx
            - H[:, 2, 0] * qx
            - H[:, 2, 1] * qtx
            - H[:, 2, 2] * qxx
        )
        if has_x:
            num = num - H[:, 2, 3]
        qtt = num / mass
        return np.concatenate([qt, qtt])

    def energy(y):
        q, qt = y[:n], y[n:]
        Z, *_ = tensors(q, qt)
        c0, c1 = L.jet_tensors(Z, 1)
        return float(np.sum(qt * c1[:, 1] - c0) * dx)

    return OdeSystem(dim=2 * n, rhs=rhs, energy=energy)
