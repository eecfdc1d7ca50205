import numpy as np

from elmint import taylor
from elmint.taylor import TaylorArray

from conftest import central_grad, central_hess


def poly_expr(x):
    # f(a, b) = a^2 b^3 + 3 a b
    a = x.component(0) if isinstance(x, TaylorArray) else x[..., 0]
    b = x.component(1) if isinstance(x, TaylorArray) else x[..., 1]
    return a * a * b * b * b + 3.0 * a * b


def trig_expr(x):
    a = x.component(0)
    b = x.component(1)
    return taylor.sin(a) * b * b + taylor.exp(a * b)


def trig_fn(v):
    a, b = v
    return np.sin(a) * b * b + np.exp(a * b)


def test_seed_shapes():
    z = np.arange(6.0).reshape(2, 3)
    t = TaylorArray.seed(z, order=4)
    assert t.c[0].shape == (2, 3)
    assert t.c[1].shape == (2, 3, 3)
    assert t.c[4].shape == (2, 3, 3, 3, 3, 3)
    assert np.allclose(t.c[1][0], np.eye(3))


def test_polynomial_exact_derivatives():
    # All derivatives of a^2 b^3 + 3ab are known in closed form.
    a, b = 1.3, -0.7
    t = TaylorArray.seed(np.array([[a, b]]), order=4)
    f = poly_expr(t)
    assert np.isclose(f.c[0][0], a**2 * b**3 + 3 * a * b)
    g = f.c[1][0]
    assert np.allclose(g, [2 * a * b**3 + 3 * b, 3 * a**2 * b**2 + 3 * a])
    H = f.c[2][0]
    expect_H = np.array(
        [[2 * b**3, 6 * a * b**2 + 3], [6 * a * b**2 + 3, 6 * a**2 * b]]
    )
    assert np.allclose(H, expect_H)
    # third derivatives: f_aab = 6 b^2, f_abb = 12 a b, f_bbb = 6 a^2, f_aaa = 0
    T = f.c[3][0]
    assert np.isclose(T[0, 0, 0], 0.0)
    assert np.isclose(T[0, 0, 1], 6 * b**2)
    assert np.isclose(T[0, 1, 1], 12 * a * b)
    assert np.isclose(T[1, 1, 1], 6 * a**2)
    # fourth: f_aabb = 12 b, f_abbb = 12 a, else 0 on pure axes
    F = f.c[4][0]
    assert np.isclose(F[0, 0, 1, 1], 12 * b)
    assert np.isclose(F[0, 1, 1, 1], 12 * a)
    assert np.isclose(F[0, 0, 0, 0], 0.0)


def test_transcendental_grad_hess_match_fd(rng):
    for _ in range(20):
        v = rng.uniform(-1.5, 1.5, size=2)
        t = TaylorArray.seed(v[None, :], order=2)
        f = trig_expr(t)
        g = f.c[1][0]
        H = f.c[2][0]
        assert np.allclose(g, central_grad(trig_fn, v), rtol=1e-6, atol=1e-8)
        assert np.allclose(H, central_hess(trig_fn, v), rtol=1e-4, atol=1e-6)


def test_third_fourth_order_chain():
    # h(x) = sin(x^2); closed-form high derivatives at x0.
    x0 = 0.6
    t = TaylorArray.seed(np.array([[x0]]), order=4)
    h = taylor.sin(t.component(0) * t.component(0))
    u = x0 * x0
    s, c = np.sin(u), np.cos(u)
    # d/dx = 2x cos(x^2)
    assert np.isclose(h.c[1][0, 0], 2 * x0 * c)
    # d2/dx2 = 2 cos - 4x^2 sin
    assert np.isclose(h.c[2][0, 0, 0], 2 * c - 4 * x0**2 * s)
    # d3/dx3 = -12x sin - 8x^3 cos
    assert np.isclose(h.c[3][0, 0, 0, 0], -12 * x0 * s - 8 * x0**3 * c)
    # d4/dx4 = -12 sin - 48 x^2 cos + 16 x^4 sin
    assert np.isclose(h.c[4][0, 0, 0, 0, 0], -12 * s - 48 * x0**2 * c + 16 * x0**4 * s)


def test_division_and_log(rng):
    def fn(v):
        return np.log(v[0]) / (1.0 + v[1] ** 2)

    for _ in range(10):
        v = rng.uniform(0.5, 2.0, size=2)
        t = TaylorArray.seed(v[None, :], order=2)
        f = taylor.log(t.component(0)) / (1.0 + t.component(1) * t.component(1))
        assert np.isclose(f.c[0][0], fn(v))
        assert np.allclose(f.c[1][0], central_grad(fn, v), rtol=1e-6, atol=1e-9)
        assert np.allclose(f.c[2][0], central_hess(fn, v), rtol=1e-4, atol=1e-7)


def test_sigmoid_softplus_derivatives(rng):
    xs = rng.uniform(-3, 3, size=8)
    t = TaylorArray.seed(xs[:, None], order=4)
    sp = taylor.softplus(t.component(0))
    sg = taylor.sigmoid(t.component(0))
    # softplus' = sigmoid, sigmoid' = s(1-s)
    s = 1.0 / (1.0 + np.exp(-xs))
    assert np.allclose(sp.c[0], np.log1p(np.exp(xs)))
    assert np.allclose(sp.c[1][:, 0], s)
    assert np.allclose(sg.c[1][:, 0], s * (1 - s), rtol=1e-12)
    assert np.allclose(sg.c[2][:, 0, 0], s * (1 - s) * (1 - 2 * s), rtol=1e-12)
    # numeric check of 4th softplus derivative
    h = 1e-2
    for x0 in (-1.0, 0.3):
        t0 = TaylorArray.seed(np.array([[x0]]), order=4)
        val4 = taylor.softplus(t0.component(0)).c[4][0, 0, 0, 0, 0]
        pts = [x0 + j * h for j in (-2, -1, 0, 1, 2)]
        f = [np.log1p(np.exp(p)) for p in pts]
        fd4 = (f[0] - 4 * f[1] + 6 * f[2] - 4 * f[3] + f[4]) / h**4
        assert np.isclose(val4, fd4, rtol=1e-3, atol=1e-6)


def test_softplus_extreme_arguments_stable():
    t = TaylorArray.seed(np.array([[800.0], [-800.0]]), order=2)
    sp = taylor.softplus(t.component(0))
    assert np.all(np.isfinite(sp.c[0]))
    assert np.all(np.isfinite(sp.c[2]))
    assert np.isclose(sp.c[0][0], 800.0)
    assert np.isclose(sp.c[0][1], 0.0)


def test_affine_and_component():
    z = np.array([[0.3, -1.2, 0.5]])
    t = TaylorArray.seed(z, order=2)
    W = np.array([[1.0, 2.0, -1.0], [0.0, 1.0, 1.0]])
    b = np.array([0.5, -0.5])
    h = t.affine(W, b)
    assert h.c[0].shape == (1, 2)
    assert np.allclose(h.c[0], z @ W.T + b)
    assert np.allclose(h.c[1], np.broadcast_to(W, (1, 2, 3)))
    first = h.component(0)
    assert first.c[0].shape == (1,)
    assert np.allclose(first.c[1], W[0][None, :])


def test_symmetrize_exact_bitwise():
    rng = np.random.default_rng(3)
    raw = rng.standard_normal((2, 3, 3, 3))
    sym = taylor.symmetrize_exact(raw, order=3, base_ndim=1)
    for i in range(3):
        for j in range(3):
            for k in range(3):
                v = sym[:, i, j, k]
                assert np.array_equal(v, sym[:, j, i, k])
                assert np.array_equal(v, sym[:, k, j, i])


def test_pow_matches_repeated_multiplication():
    t = TaylorArray.seed(np.array([[1.7]]), order=3)
    x = t.component(0)
    assert np.allclose((x**3).c[3], (x * x * x).c[3])
