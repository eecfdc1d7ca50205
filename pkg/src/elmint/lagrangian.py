"""Lagrangian densities with exact derivatives up to fourth order.

A density is a pure scalar function of the first-order jet of a field
(q, q_t, q_x, q_y, flattened kind-major over the d_q field components),
optionally extended with explicit spatial coordinates for media that vary in
space.  ``jet_tensors`` returns the value and derivative tensors of the
density at a batch of input points; tensors of order >= 2 are exactly
permutation-symmetric.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import lru_cache
from itertools import combinations, product

import numpy as np

from . import taylor
from .taylor import TaylorArray


class DimensionMismatchError(ValueError):
    """Jet does not match the density's declared dimensions."""


class DegenerateDensityError(ValueError):
    """The density's velocity curvature vanishes at the requested point."""


class InvalidSharpnessError(ValueError):
    """Blend sharpness must be positive."""


@dataclass
class Jet:
    """Field value and partial derivatives at one space-time point.

    Second-order entries may be omitted when the consumer only needs the
    first-order part.  Mixed partials are stored once (q_tx serves both
    d/dt(q_x) and d/dx(q_t)).
    """

    q: np.ndarray
    q_t: np.ndarray
    q_x: np.ndarray | None = None
    q_y: np.ndarray | None = None
    q_tt: np.ndarray | None = None
    q_tx: np.ndarray | None = None
    q_xx: np.ndarray | None = None
    q_ty: np.ndarray | None = None
    q_xy: np.ndarray | None = None
    q_yy: np.ndarray | None = None
    t: float = 0.0
    x: float = 0.0
    y: float = 0.0

    def __post_init__(self):
        for name in ("q", "q_t", "q_x", "q_y", "q_tt", "q_tx", "q_xx", "q_ty", "q_xy", "q_yy"):
            v = getattr(self, name)
            if v is not None:
                setattr(self, name, np.atleast_1d(np.asarray(v, dtype=float)))


class LagrangianDensity:
    """Scalar density contract: value plus exact derivative tensors.

    Subclasses either override ``jet_tensors`` with closed forms or provide
    ``_expression`` operating on a seeded :class:`TaylorArray`, in which case
    derivatives come from the forward-mode engine.
    """

    n_space: int = 0
    d_q: int = 1
    explicit_axes: tuple = ()

    @property
    def n_inputs(self):
        return (2 + self.n_space) * self.d_q + len(self.explicit_axes)

    def jet_tensors(self, Z, order):
        Z = np.asarray(Z, dtype=float)
        if Z.shape[-1] != self.n_inputs:
            raise DimensionMismatchError(
                f"expected {self.n_inputs} inputs, got {Z.shape[-1]}"
            )
        t = TaylorArray.seed(Z, order)
        out = self._expression(t)
        coeffs = list(out.c)
        for m in range(2, order + 1):
            coeffs[m] = taylor.symmetrize_exact(coeffs[m], m, out.base_ndim)
        return coeffs

    def _expression(self, inp):
        raise NotImplementedError

    def quadratic_form(self):
        """(H, g, c) when L = 0.5 z'Hz + g'z + c with no explicit coordinates."""
        return None


@dataclass
class _QuadraticDensity(LagrangianDensity):
    """Base for densities quadratic in the jet (constant Hessian)."""

    def _form(self):
        raise NotImplementedError

    def quadratic_form(self):
        return self._form()

    def jet_tensors(self, Z, order):
        Z = np.asarray(Z, dtype=float)
        if Z.shape[-1] != self.n_inputs:
            raise DimensionMismatchError(
                f"expected {self.n_inputs} inputs, got {Z.shape[-1]}"
            )
        H, g, c = self._form()
        k = self.n_inputs
        base = Z.shape[:-1]
        out = [0.5 * np.einsum("...i,ij,...j->...", Z, H, Z) + Z @ g + c]
        if order >= 1:
            out.append(Z @ H + g)
        if order >= 2:
            out.append(np.broadcast_to(H, base + (k, k)))
        for m in range(3, order + 1):
            out.append(np.zeros(base + (k,) * m))
        return out


@dataclass
class Wave1DDensity(_QuadraticDensity):
    """L = mu/2 q_t^2 - c^2/2 q_x^2 with mu = 1; inputs (q, q_t, q_x)."""

    c2: float = 0.05
    n_space: int = 1

    def _form(self):
        H = np.diag([0.0, 1.0, -self.c2])
        return H, np.zeros(3), 0.0

    def _expression(self, inp):
        qt = inp.component(1)
        qx = inp.component(2)
        return 0.5 * (qt * qt) - (0.5 * self.c2) * (qx * qx)


@dataclass
class Wave2DDensity(_QuadraticDensity):
    """L = q_t^2/2 - c^2 (q_x^2 + q_y^2)/2; inputs (q, q_t, q_x, q_y)."""

    c2: float = 1.0
    n_space: int = 2

    def _form(self):
        H = np.diag([0.0, 1.0, -self.c2, -self.c2])
        return H, np.zeros(4), 0.0

    def _expression(self, inp):
        qt = inp.component(1)
        qx = inp.component(2)
        qy = inp.component(3)
        return 0.5 * (qt * qt) - (0.5 * self.c2) * (qx * qx + qy * qy)


@dataclass
class HarmonicOscillatorDensity(_QuadraticDensity):
    """L = q_t^2/2 - omega^2 q^2/2; omega = 0 gives the free particle."""

    omega: float = 1.0
    n_space: int = 0

    def _form(self):
        H = np.diag([-self.omega**2, 1.0])
        return H, np.zeros(2), 0.0

    def _expression(self, inp):
        q = inp.component(0)
        qt = inp.component(1)
        return 0.5 * (qt * qt) - (0.5 * self.omega**2) * (q * q)


# -- double pendulum ---------------------------------------------------------
#
# L = v1^2 + v2^2/2 + v1 v2 cos(q1 - q2) + 2 cos q1 + cos q2
# over inputs (q1, q2, v1, v2).  Derivative tensors are assembled from
# precomputed entry tables: an entry indexed by a tuple over the four inputs
# receives a coupling-term contribution v1^(1-n_v1) v2^(1-n_v2)
# cos^(m)(q1-q2) (-1)^(n_q2) whenever each velocity is differentiated at most
# once, plus contributions from the potentials on pure-q1/pure-q2 entries and
# from the diagonal kinetic terms at orders one and two.

_COS_CYCLE_LEN = 4


def _cos_derivs(x, n):
    c, s = np.cos(x), np.sin(x)
    out = np.empty(x.shape + (n + 1,))
    seq = (c, -s, -c, s)
    for m in range(n + 1):
        out[..., m] = seq[m % 4]
    return out


@lru_cache(maxsize=None)
def _dp_table(r):
    entries = list(product(range(4), repeat=r))
    n = len(entries)
    fid = np.full(n, -1, dtype=np.int64)
    morder = np.zeros(n, dtype=np.int64)
    sign = np.zeros(n)
    for i, e in enumerate(entries):
        n_q1, n_q2 = e.count(0), e.count(1)
        n_v1, n_v2 = e.count(2), e.count(3)
        if n_v1 <= 1 and n_v2 <= 1:
            # remaining velocity factor after differentiation
            fid[i] = {(0, 0): 0, (0, 1): 1, (1, 0): 2, (1, 1): 3}[(n_v1, n_v2)]
            morder[i] = n_q1 + n_q2
            sign[i] = (-1.0) ** n_q2
    shape = (4,) * r
    idx_q1 = int(np.ravel_multi_index((0,) * r, shape))
    idx_q2 = int(np.ravel_multi_index((1,) * r, shape))
    return fid, morder, sign, idx_q1, idx_q2


@dataclass
class DoublePendulumDensity(LagrangianDensity):
    """Two coupled unit pendulums; d_q = 2 with inputs (q1, q2, v1, v2)."""

    n_space: int = 0
    d_q: int = 2

    def jet_tensors(self, Z, order):
        Z = np.asarray(Z, dtype=float)
        if Z.shape[-1] != 4:
            raise DimensionMismatchError(f"expected 4 inputs, got {Z.shape[-1]}")
        q1, q2, v1, v2 = (Z[..., i] for i in range(4))
        base = q1.shape
        cosd = _cos_derivs(q1 - q2, order)
        cos1 = _cos_derivs(q1, order)
        cos2 = _cos_derivs(q2, order)
        # factor columns indexed by fid: v1*v2, v1, v2, 1
        factors = np.stack([v1 * v2, v1, v2, np.ones_like(v1)], axis=-1)

        out = [
            v1**2
            + 0.5 * v2**2
            + v1 * v2 * cosd[..., 0]
            + 2.0 * cos1[..., 0]
            + cos2[..., 0]
        ]
        for r in range(1, order + 1):
            fid, morder, sign, idx_q1, idx_q2 = _dp_table(r)
            flat = np.zeros(base + (4**r,))
            valid = fid >= 0
            flat[..., valid] = (
                factors[..., fid[valid]] * cosd[..., morder[valid]] * sign[valid]
            )
            flat[..., idx_q1] += 2.0 * cos1[..., r]
            flat[..., idx_q2] += cos2[..., r]
            if r == 1:
                flat[..., 2] += 2.0 * v1
                flat[..., 3] += v2
            elif r == 2:
                flat[..., int(np.ravel_multi_index((2, 2), (4, 4)))] += 2.0
                flat[..., int(np.ravel_multi_index((3, 3), (4, 4)))] += 1.0
            out.append(flat.reshape(base + (4,) * r))
        return out

    def _expression(self, inp):
        q1, q2, v1, v2 = (inp.component(i) for i in range(4))
        return (
            v1 * v1
            + 0.5 * (v2 * v2)
            + v1 * v2 * taylor.cos(q1 - q2)
            + 2.0 * taylor.cos(q1)
            + taylor.cos(q2)
        )


@dataclass
class BlendedDensity(LagrangianDensity):
    """Logistic blend of two homogeneous densities along x.

    L(z, x) = (1 - s) L_left(z) + s L_right(z) with s = sigma(k (x - x0)).
    The explicit x input makes the density coordinate-dependent; derivative
    tensors carry the sigma-derivative couplings.
    """

    left: LagrangianDensity = None
    right: LagrangianDensity = None
    x0: float = 0.0
    sharpness: float = 40.0

    def __post_init__(self):
        self.n_space = self.left.n_space
        self.d_q = self.left.d_q
        self.explicit_axes = (1,)

    def jet_tensors(self, Z, order):
        Z = np.asarray(Z, dtype=float)
        if Z.shape[-1] != self.n_inputs:
            raise DimensionMismatchError(
                f"expected {self.n_inputs} inputs, got {Z.shape[-1]}"
            )
        kc = self.n_inputs - 1
        Zc = Z[..., :kc]
        x = Z[..., kc]
        A = self.left.jet_tensors(Zc, order)
        B = self.right.jet_tensors(Zc, order)
        kappa = self.sharpness
        s = taylor._sigmoid_value(kappa * (x - self.x0))
        sig = taylor._sigmoid_derivs(s, order)
        sig = [sig[m] * kappa**m for m in range(order + 1)]

        diff = [b - a for a, b in zip(A, B)]
        out = [A[0] + sig[0] * diff[0]]
        k = kc + 1
        base = x.shape
        for r in range(1, order + 1):
            T = np.zeros(base + (k,) * r)
            for m in range(r + 1):
                sub = diff[r - m]
                if m == 0:
                    val = A[r] + sig[0].reshape(base + (1,) * r) * sub
                else:
                    val = sig[m].reshape(base + (1,) * (r - m)) * sub
                for S in combinations(range(r), m):
                    key = tuple(
                        kc if pos in S else slice(0, kc) for pos in range(r)
                    )
                    T[(Ellipsis,) + key] = val
            out.append(T)
        return out


def blend_densities(left, right, x0, k):
    """Blend two homogeneous densities across a logistic transition at x0."""
    if k <= 0:
        raise InvalidSharpnessError(f"sharpness must be positive, got {k}")
    if left.n_space != right.n_space or left.d_q != right.d_q:
        raise DimensionMismatchError("blended densities must share dimensions")
    if left.n_space < 1:
        raise DimensionMismatchError("blend requires a spatial dimension")
    if left.explicit_axes or right.explicit_axes:
        raise DimensionMismatchError("blend components must be homogeneous")
    return BlendedDensity(left=left, right=right, x0=x0, sharpness=k)


def jet_inputs(L, jet):
    """Density input vector for one jet, validating dimensions."""
    parts = [jet.q, jet.q_t]
    if L.n_space >= 1:
        parts.append(jet.q_x)
    if L.n_space >= 2:
        parts.append(jet.q_y)
    vals = []
    for p in parts:
        if p is None:
            raise DimensionMismatchError("jet lacks a slot the density requires")
        p = np.atleast_1d(np.asarray(p, dtype=float))
        if p.shape != (L.d_q,):
            raise DimensionMismatchError(
                f"jet slot has shape {p.shape}, expected ({L.d_q},)"
            )
        vals.append(p)
    Z = np.concatenate(vals)
    for ax in L.explicit_axes:
        Z = np.append(Z, jet.x if ax == 1 else jet.y)
    return Z


def eval_density(L, jet):
    """Evaluate a density at a jet: (value, gradient, symmetric Hessian)."""
    Z = jet_inputs(L, jet)
    c0, c1, c2 = L.jet_tensors(Z[None, :], order=2)
    return float(c0[0]), c1[0], c2[0]


def estimate_wave_speed(L, at=0.0):
    """Squared wave speed -L_qxqx / L_qtqt at the zero jet.

    ``at`` gives the evaluation coordinate(s) for coordinate-dependent
    densities (scalar x, or (x, y)).
    """
    if L.n_space < 1:
        raise DimensionMismatchError("wave speed needs a spatial dimension")
    Z = np.zeros(L.n_inputs)
    coords = np.atleast_1d(np.asarray(at, dtype=float))
    base = (2 + L.n_space) * L.d_q
    for j, ax in enumerate(L.explicit_axes):
        Z[base + j] = coords[0] if ax == 1 else coords[1]
    _, _, H = L.jet_tensors(Z[None, :], order=2)
    i_qt = L.d_q
    i_qx = 2 * L.d_q
    att = H[0, i_qt, i_qt]
    if abs(att) < 1e-12:
        raise DegenerateDensityError("velocity curvature vanishes at the zero jet")
    return -H[0, i_qx, i_qx] / att
