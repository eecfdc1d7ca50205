import numpy as np
import pytest


def central_grad(f, x, h=1e-6):
    """Central-difference gradient of a scalar function of a 1D array."""
    x = np.asarray(x, dtype=float)
    g = np.zeros_like(x)
    for i in range(x.size):
        e = np.zeros_like(x)
        e[i] = h
        g[i] = (f(x + e) - f(x - e)) / (2 * h)
    return g


def central_hess(f, x, h=1e-4):
    """Central-difference Hessian of a scalar function of a 1D array."""
    x = np.asarray(x, dtype=float)
    n = x.size
    H = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            ei = np.zeros(n)
            ej = np.zeros(n)
            ei[i] = h
            ej[j] = h
            H[i, j] = (
                f(x + ei + ej) - f(x + ei - ej) - f(x - ei + ej) + f(x - ei - ej)
            ) / (4 * h * h)
    return H


def double_pendulum_accel(q, qt):
    """Hand-derived equations of motion for the two-angle pendulum.

    From L = v1^2 + v2^2/2 + v1 v2 cos(q1-q2) + 2 cos q1 + cos q2:
        2 a1 + a2 cos(d) = -2 sin q1 - v2^2 sin(d)
        a1 cos(d) + a2   = -sin q2 + v1^2 sin(d)
    with d = q1 - q2.
    """
    q = np.asarray(q, dtype=float)
    qt = np.asarray(qt, dtype=float)
    d = q[0] - q[1]
    M = np.array([[2.0, np.cos(d)], [np.cos(d), 1.0]])
    rhs = np.array(
        [
            -2.0 * np.sin(q[0]) - qt[1] ** 2 * np.sin(d),
            -np.sin(q[1]) + qt[0] ** 2 * np.sin(d),
        ]
    )
    return np.linalg.solve(M, rhs)


def double_pendulum_residual(q, qt, qtt):
    """Euler-Lagrange residual implied by the hand-derived equations of motion."""
    q = np.asarray(q, dtype=float)
    qt = np.asarray(qt, dtype=float)
    qtt = np.asarray(qtt, dtype=float)
    d = q[0] - q[1]
    r1 = -2.0 * np.sin(q[0]) - qt[1] ** 2 * np.sin(d) - 2.0 * qtt[0] - qtt[1] * np.cos(d)
    r2 = -np.sin(q[1]) + qt[0] ** 2 * np.sin(d) - qtt[1] - qtt[0] * np.cos(d)
    return np.array([r1, r2])


@pytest.fixture
def rng():
    return np.random.default_rng(20240817)
