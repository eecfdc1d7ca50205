import numpy as np
import pytest

from elmint.lagrangian import LagrangianDensity, Wave1DDensity, estimate_wave_speed
from elmint.mlp import (
    MlpDensity,
    ModelFormatError,
    TrainConfig,
    gauge_loss,
    glorot_init,
    load_density,
    loss_gradient,
    residual_batch,
    sample_plane_waves,
    save_density,
    train,
)

from conftest import central_grad, central_hess


def tiny_density(seed=0, width=8, n_space=1):
    sizes = [2 + n_space, width, width, 1]
    return MlpDensity(weights=glorot_init(sizes, seed), n_space=n_space)


def test_single_mode_satisfies_wave_equation():
    c2 = 0.05
    s = sample_plane_waves(200, 1, 2.0, np.sqrt(c2), seed=3)
    q_tt = s.slots[:, 3]
    q_xx = s.slots[:, 5]
    assert np.max(np.abs(q_tt - c2 * q_xx)) < 1e-12


def test_superposition_satisfies_wave_equation_2d():
    s = sample_plane_waves(100, 5, 6.0, 1.0, seed=4, n_space=2)
    q_tt = s.slots[:, 4]
    lap = s.slots[:, 7] + s.slots[:, 9]
    assert np.max(np.abs(q_tt - lap)) < 1e-11


def test_wavenumber_distribution():
    s = sample_plane_waves(10_000, 5, 4.0, 0.2, seed=5)
    absk = np.abs(s.wavenumbers).ravel()
    se = 4.0 / np.sqrt(12) / np.sqrt(absk.size)
    assert abs(absk.mean() - 2.0) < 3 * se


def test_sample_derivatives_match_finite_differences():
    s = sample_plane_waves(5, 4, 3.0, 0.3, seed=6)

    def q_of(i, t, x):
        k = s.wavenumbers[i, :, 0]
        w = 0.3 * np.abs(k)
        return np.sum(s.amplitudes[i] * np.sin(k * x - w * t + s.phases[i]))

    h = 1e-5
    for i in range(5):
        t0, x0 = s.points[i]
        fd_qt = (q_of(i, t0 + h, x0) - q_of(i, t0 - h, x0)) / (2 * h)
        fd_qx = (q_of(i, t0, x0 + h) - q_of(i, t0, x0 - h)) / (2 * h)
        fd_qxx = (
            q_of(i, t0, x0 + h) - 2 * q_of(i, t0, x0) + q_of(i, t0, x0 - h)
        ) / h**2
        assert abs(s.slots[i, 1] - fd_qt) < 1e-6
        assert abs(s.slots[i, 2] - fd_qx) < 1e-6
        assert abs(s.slots[i, 5] - fd_qxx) < 1e-4


def test_gauge_loss_vanishes_for_exact_density():
    c2 = 0.05
    s = sample_plane_waves(500, 5, 4.0, np.sqrt(c2), seed=7)
    assert gauge_loss(Wave1DDensity(c2=c2), s) < 1e-18


class Scaled(LagrangianDensity):
    def __init__(self, inner, factor=1.0, offset=0.0):
        self.inner = inner
        self.factor = factor
        self.offset = offset
        self.n_space = inner.n_space
        self.d_q = inner.d_q

    def jet_tensors(self, Z, order):
        out = [c * self.factor for c in self.inner.jet_tensors(Z, order)]
        out[0] = out[0] + self.offset
        return out


def test_gauge_penalty_for_scaling_ambiguity():
    c2 = 0.05
    s = sample_plane_waves(200, 5, 4.0, np.sqrt(c2), seed=8)
    loss2 = gauge_loss(Scaled(Wave1DDensity(c2=c2), factor=2.0), s)
    assert abs(loss2 - 1.0) < 1e-12  # (2 - 1)^2, residual still zero


def test_gauge_penalty_for_constant_offset():
    c2 = 0.05
    s = sample_plane_waves(200, 5, 4.0, np.sqrt(c2), seed=9)
    loss = gauge_loss(Scaled(Wave1DDensity(c2=c2), offset=0.5), s)
    assert abs(loss - 0.25) < 1e-12


def test_mlp_density_contract(rng):
    L = tiny_density()

    def f(z):
        return float(L.jet_tensors(z[None, :], 0)[0][0])

    for _ in range(20):
        z = rng.uniform(-2, 2, size=3)
        _, c1, c2 = L.jet_tensors(z[None, :], 2)
        assert np.allclose(c1[0], central_grad(f, z, h=1e-4), rtol=1e-5, atol=1e-7)
        assert np.allclose(c2[0], central_hess(f, z, h=1e-4), rtol=1e-4, atol=1e-5)
        assert np.max(np.abs(c2[0] - c2[0].T)) == 0.0


def test_loss_gradient_matches_finite_differences():
    L = tiny_density(seed=11)
    batch = sample_plane_waves(32, 3, 2.0, 0.22, seed=12)
    val, grads = loss_gradient(L, batch)
    assert np.isclose(val, gauge_loss(L, batch), rtol=1e-10)
    h = 1e-5
    rng = np.random.default_rng(13)
    for li in (0, len(L.weights) - 1):
        W, b = L.weights[li]
        for _ in range(4):
            i = rng.integers(W.shape[0])
            j = rng.integers(W.shape[1])
            Wp = [((w.copy(), bb.copy())) for w, bb in L.weights]
            Wm = [((w.copy(), bb.copy())) for w, bb in L.weights]
            Wp[li][0][i, j] += h
            Wm[li][0][i, j] -= h
            lp = gauge_loss(MlpDensity(weights=Wp, n_space=1), batch)
            lm = gauge_loss(MlpDensity(weights=Wm, n_space=1), batch)
            fd = (lp - lm) / (2 * h)
            scale = max(1.0, abs(fd))
            assert abs(grads[li][0][i, j] - fd) < 1e-4 * scale


def test_training_learns_and_is_deterministic():
    cfg = TrainConfig(
        n_samples=300, steps=250, batch_size=64, width=8, depth=2, seed=42,
        lr_peak=5e-3,
    )
    r1 = train(cfg)
    r2 = train(cfg)
    for (W1, b1), (W2, b2) in zip(r1.density.weights, r2.density.weights):
        assert np.array_equal(W1, W2)
        assert np.array_equal(b1, b2)
    assert r1.loss_history[-10:].mean() < r1.loss_history[:10].mean() / 5


def test_save_load_roundtrip(tmp_path, rng):
    L = tiny_density(seed=21)
    path = tmp_path / "model.elmd"
    save_density(L, path)
    L2 = load_density(path)
    Z = rng.uniform(-1, 1, size=(100, 3))
    a = L.jet_tensors(Z, 2)
    b = L2.jet_tensors(Z, 2)
    for x, y in zip(a, b):
        assert np.array_equal(x, y)


def test_load_rejects_truncated_file(tmp_path):
    L = tiny_density()
    path = tmp_path / "model.elmd"
    save_density(L, path)
    data = path.read_bytes()
    path.write_bytes(data[: len(data) - 16])
    with pytest.raises(ModelFormatError):
        load_density(path)


def test_load_rejects_bad_version_and_magic(tmp_path):
    L = tiny_density()
    path = tmp_path / "model.elmd"
    save_density(L, path)
    data = bytearray(path.read_bytes())
    data[4] = 99  # version byte
    path.write_bytes(bytes(data))
    with pytest.raises(ModelFormatError) as err:
        load_density(path)
    assert "version" in str(err.value)
    data[0:4] = b"XXXX"
    path.write_bytes(bytes(data))
    with pytest.raises(ModelFormatError):
        load_density(path)
