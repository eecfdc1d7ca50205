"""Hermite space-time patches: basis fit, jet evaluation, residual quadrature.

A patch lives on an axis-aligned cell with nodes at the cell corners, each
carrying the mixed first-derivative Hermite data of :func:`layout.dof_kinds`.
Fitting happens in coordinates scaled to the unit cube, where the tensor-cubic
monomial fit matrix is universal, well conditioned, and cached; derivatives
convert back through powers of the cell size.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .lagrangian import DimensionMismatchError, Jet
from .layout import dof_kinds, get_layout, w_kinds, z_kinds


class FitError(ValueError):
    """Hermite fit could not be built from the given nodes."""


# -- quadrature --------------------------------------------------------------


@dataclass
class QuadratureRule:
    """Tensor Gauss-Legendre points inside a cell, weights in cell-volume units."""

    points: np.ndarray  # (P, D)
    weights: np.ndarray  # (P,)
    counts: tuple


def gauss_legendre_rule(origin, size, counts):
    origin = np.atleast_1d(np.asarray(origin, dtype=float))
    size = np.atleast_1d(np.asarray(size, dtype=float))
    axes_pts = []
    axes_wts = []
    for o, h, n in zip(origin, size, counts):
        x, w = np.polynomial.legendre.leggauss(n)
        axes_pts.append(o + h * (x + 1.0) / 2.0)
        axes_wts.append(w * h / 2.0)
    grids = np.meshgrid(*axes_pts, indexing="ij")
    points = np.stack([g.ravel() for g in grids], axis=-1)
    wgrids = np.meshgrid(*axes_wts, indexing="ij")
    weights = np.ones(points.shape[0])
    for g in wgrids:
        weights = weights * g.ravel()
    return QuadratureRule(points=points, weights=weights, counts=tuple(counts))


def unit_rule(counts):
    D = len(counts)
    return gauss_legendre_rule(np.zeros(D), np.ones(D), counts)


# -- basis -------------------------------------------------------------------


def _falling(e, o):
    out = 1.0
    for i in range(o):
        out *= e - i
    return out if o <= e else 0.0


class HermiteBasis:
    """Tensor-product monomials matching a node grid on the unit cube.

    ``counts`` gives nodes per axis (2 or 3, equispaced); the per-axis
    polynomial degree is 2*count - 1 so the basis size equals the total node
    degrees of freedom.  The monomial list is ordered constant first.
    """

    def __init__(self, counts):
        if isinstance(counts, (int, np.integer)):
            counts = (2,) * int(counts)
        self.counts = tuple(int(c) for c in counts)
        self.n_axes = len(self.counts)
        degrees = [2 * c for c in self.counts]  # exponents 0 .. 2c-1
        self.exponents = np.array(list(np.ndindex(*degrees)), dtype=int)
        positions = [np.linspace(0.0, 1.0, c) for c in self.counts]
        self.corners = np.array(
            [
                [positions[d][idx[d]] for d in range(self.n_axes)]
                for idx in np.ndindex(*self.counts)
            ]
        )
        self.node_derivs = np.array(dof_kinds(self.n_axes - 1), dtype=int)
        self.size = int(np.prod(degrees))
        self.max_exp = max(degrees)
        self._fit = None
        self._fit_inv = None

    def eval_rows(self, U, deriv):
        """Derivative ``deriv`` of every basis function at unit points U (P, D)."""
        U = np.atleast_2d(np.asarray(U, dtype=float))
        rows = np.ones((U.shape[0], self.size))
        for d in range(self.n_axes):
            o = int(deriv[d])
            table = np.zeros((U.shape[0], self.max_exp))
            for e in range(2 * self.counts[d]):
                if e >= o:
                    table[:, e] = _falling(e, o) * U[:, d] ** (e - o)
            rows = rows * table[:, self.exponents[:, d]]
        return rows

    def fit_matrix(self):
        if self._fit is None:
            rows = []
            for corner in self.corners:
                u = corner[None, :]
                for deriv in self.node_derivs:
                    rows.append(self.eval_rows(u, deriv)[0])
            self._fit = np.array(rows)
        return self._fit

    def fit_matrix_inverse(self):
        if self._fit_inv is None:
            A = self.fit_matrix()
            self._fit_inv = np.linalg.solve(A, np.eye(self.size))
        return self._fit_inv


@lru_cache(maxsize=None)
def _basis_cache(counts):
    return HermiteBasis(counts)


def get_basis(counts):
    if isinstance(counts, (int, np.integer)):
        counts = (2,) * int(counts)
    return _basis_cache(tuple(int(c) for c in counts))


# -- patches -----------------------------------------------------------------


def _kind_name(kind):
    total = sum(kind)
    if total == 0:
        return "q"
    return "q_" + "t" * kind[0] + "x" * (kind[1] if len(kind) > 1 else 0) + "y" * (
        kind[2] if len(kind) > 2 else 0
    )


def _hfac(size, kinds):
    kinds = np.asarray(kinds, dtype=int)
    return np.prod(size[None, :] ** kinds, axis=1)


@dataclass
class HermitePatch:
    origin: np.ndarray
    size: np.ndarray
    basis: HermiteBasis
    theta: np.ndarray  # (n_basis, d_q)
    node_coords: np.ndarray  # canonical corner order
    node_data: np.ndarray  # (m, dofs, d_q) canonical order

    @property
    def n_space(self):
        return self.basis.n_axes - 1

    @property
    def d_q(self):
        return self.theta.shape[1]

    def to_unit(self, points):
        points = np.atleast_2d(np.asarray(points, dtype=float))
        return (points - self.origin) / self.size

    def check_inside(self, points, tol=1e-9):
        U = self.to_unit(points)
        if np.any(U < -tol) or np.any(U > 1.0 + tol):
            raise ValueError("evaluation point outside the patch cell")
        return U

    def derivative(self, points, deriv):
        """Physical derivative ``deriv`` of the interpolant, shape (P, d_q)."""
        U = self.to_unit(points)
        scale = float(np.prod(self.size ** np.asarray(deriv, dtype=int)))
        return self.basis.eval_rows(U, deriv) @ self.theta / scale

    def jet(self, point):
        """Jet of the interpolant (first and second partials) at one point."""
        point = np.atleast_1d(np.asarray(point, dtype=float))
        self.check_inside(point[None, :])
        n_space = self.n_space
        values = {}
        for kind in z_kinds(n_space) + w_kinds(n_space):
            values[_kind_name(kind)] = self.derivative(point[None, :], kind)[0]
        coords = {"t": point[0]}
        if n_space >= 1:
            coords["x"] = point[1]
        if n_space >= 2:
            coords["y"] = point[2]
        return Jet(**values, **coords)


def _normalize_node_data(Q, m, dofs):
    Q = np.asarray(Q, dtype=float)
    if Q.ndim == 1:
        Q = Q.reshape(m, dofs)
    if Q.ndim == 2:
        Q = Q[:, :, None]
    if Q.shape[:2] != (m, dofs):
        raise FitError(f"node data has shape {Q.shape}, expected ({m}, {dofs}, d_q)")
    return Q


def fit_hermite(X, Q, basis=None):
    """Fit the tensor-cubic Hermite interpolant to corner node data.

    X: (m, D) node coordinates forming an axis-aligned cell (any node order);
    Q: (m, dofs[, d_q]) Hermite data ordered as :func:`layout.dof_kinds`.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    m, D = X.shape
    lo = X.min(axis=0)
    hi = X.max(axis=0)
    size = hi - lo
    if np.any(size <= 0):
        raise FitError(f"degenerate cell: nodes {X.tolist()}")
    counts = []
    idx_cols = []
    for d in range(D):
        vals = np.unique(X[:, d])
        if vals.size not in (2, 3):
            raise FitError(
                f"axis {d} carries {vals.size} distinct values: {vals.tolist()}"
            )
        if vals.size > 2 and not np.allclose(np.diff(vals), vals[1] - vals[0]):
            raise FitError(f"axis {d} nodes are not equispaced: {vals.tolist()}")
        counts.append(vals.size)
        idx_cols.append(np.searchsorted(vals, X[:, d]))
    if basis is None:
        basis = get_basis(tuple(counts))
    if m != int(np.prod(counts)) or tuple(counts) != basis.counts:
        raise FitError(f"node grid {counts} does not fill the basis {basis.counts}")
    ids = np.ravel_multi_index(tuple(idx_cols), tuple(counts))
    if np.unique(ids).size != m:
        raise FitError(f"duplicate node coordinates: {X.tolist()}")
    order = np.argsort(ids)

    dofs = len(basis.node_derivs)
    Q = _normalize_node_data(Q, m, dofs)[order]
    hfac = _hfac(size, basis.node_derivs)
    Qs = (Q * hfac[None, :, None]).reshape(basis.size, -1)
    A = basis.fit_matrix()
    try:
        theta = np.linalg.solve(A, Qs)
    except np.linalg.LinAlgError as exc:  # pragma: no cover - A is fixed
        raise FitError(f"singular fit system for nodes {X.tolist()}") from exc
    return HermitePatch(
        origin=lo,
        size=size,
        basis=basis,
        theta=theta,
        node_coords=X[order],
        node_data=Q,
    )


def eval_patch(patch, point):
    """Jet of the fitted interpolant at a point inside the cell."""
    return patch.jet(point)


# -- residual and patch error -------------------------------------------------


def jet_to_slots(jet, n_space, d_q):
    """Flatten a jet into kind-major slot entries, demanding second derivatives."""
    kinds = z_kinds(n_space) + w_kinds(n_space)
    rows = []
    for kind in kinds:
        v = getattr(jet, _kind_name(kind))
        if v is None:
            raise DimensionMismatchError(f"jet lacks required slot {_kind_name(kind)}")
        v = np.atleast_1d(np.asarray(v, dtype=float))
        if v.shape != (d_q,):
            raise DimensionMismatchError(
                f"jet slot {_kind_name(kind)} has shape {v.shape}, expected ({d_q},)"
            )
        rows.append(v)
    return np.concatenate(rows)


def residual(L, jet):
    """Euler-Lagrange residual of the density at one jet, shape (d_q,)."""
    slots = jet_to_slots(jet, L.n_space, L.d_q)[None, :]
    coords = np.array([[jet.t, jet.x, jet.y][: L.n_space + 1]])
    layout = get_layout(L.n_space, L.d_q, L.explicit_axes)
    Z = layout.zeta_from_slots(slots, coords)
    _, G, H = L.jet_tensors(Z, 2)
    return layout.residual(G, H, slots)[0]


def _canonical_point_order(points):
    keys = tuple(points[:, d] for d in reversed(range(points.shape[1])))
    return np.lexsort(keys)


def _patch_quadrature(L, X, Q, rule):
    patch = fit_hermite(X, Q)
    if patch.n_space != L.n_space or patch.d_q != L.d_q:
        raise DimensionMismatchError("patch and density dimensions disagree")
    order = _canonical_point_order(rule.points)
    points = rule.points[order]
    weights = rule.weights[order]
    U = patch.check_inside(points)
    layout = get_layout(L.n_space, L.d_q, L.explicit_axes)
    kinds = z_kinds(L.n_space) + w_kinds(L.n_space)
    E = np.stack([patch.basis.eval_rows(U, kind) for kind in kinds], axis=1)
    E = E / _hfac(patch.size, kinds)[None, :, None]
    slots = np.einsum("pkj,jc->pkc", E, patch.theta)
    flat = slots.reshape(slots.shape[0], -1)
    return patch, layout, points, weights, E, flat


def patch_error(L, X, Q, rule):
    """Quadrature-weighted squared residual of the fitted patch (J >= 0)."""
    _, layout, points, weights, _, flat = _patch_quadrature(L, X, Q, rule)
    Z = layout.zeta_from_slots(flat, points)
    _, G, H = L.jet_tensors(Z, 2)
    R = layout.residual(G, H, flat)
    return float(np.sum(weights * np.sum(R * R, axis=1)))


def discrete_action(L, X, Q, rule):
    """Quadrature of the density itself over the patch."""
    _, layout, points, weights, _, flat = _patch_quadrature(L, X, Q, rule)
    Z = layout.zeta_from_slots(flat, points)
    (values,) = L.jet_tensors(Z, 0)
    return float(np.sum(weights * values))


def patch_error_derivatives(L, X, Q, rule, unknown_mask):
    """J with gradient and Hessian over the masked node-data entries.

    ``unknown_mask`` is boolean with the shape of Q; the returned gradient and
    Hessian follow the C-order flattening of the selected entries.
    """
    patch, layout, points, weights, E, flat = _patch_quadrature(L, X, Q, rule)
    Z = layout.zeta_from_slots(flat, points)
    _, G, H, T, F = L.jet_tensors(Z, 4)
    R, R1, R2 = layout.residual_derivatives(G, H, T, F, flat)

    basis = patch.basis
    n_kinds = len(z_kinds(L.n_space)) + len(w_kinds(L.n_space))
    d_q = L.d_q
    P = flat.shape[0]
    EA = np.einsum("pkj,jr->pkr", E, basis.fit_matrix_inverse())
    hfac_rows = np.tile(_hfac(patch.size, basis.node_derivs), basis.corners.shape[0])
    EA = EA * hfac_rows[None, None, :]

    R1k = R1.reshape(P, d_q, n_kinds, d_q)
    R2k = R2.reshape(P, d_q, n_kinds, d_q, n_kinds, d_q)
    # dR[p, a, (row r, comp c)] with rows in canonical node-major order
    G1 = np.einsum("pakc,pkr->parc", R1k, EA)
    J = float(np.sum(weights * np.sum(R * R, axis=1)))
    g_full = 2.0 * np.einsum("p,pa,parc->rc", weights, R, G1)
    # sqrt-weight seeding keeps the Gauss-Newton block bitwise symmetric
    Y = G1 * np.sqrt(weights)[:, None, None, None]
    H_full = 2.0 * np.einsum("parc,pasd->rcsd", Y, Y)
    curv = 2.0 * np.einsum("p,pa,pakcld,pkr,pls->rcsd", weights, R, R2k, EA, EA)
    H_full += 0.5 * (curv + curv.transpose(2, 3, 0, 1))

    # undo the canonical node reordering so the mask applies in caller order
    m, D = np.atleast_2d(np.asarray(X, dtype=float) if np.asarray(X).ndim > 1 else np.asarray(X, dtype=float)[:, None]).shape
    caller_order = _caller_node_order(X, patch)
    dofs = len(basis.node_derivs)
    g_nodes = g_full.reshape(m, dofs, d_q)[caller_order]
    H_nodes = H_full.reshape(m, dofs, d_q, m, dofs, d_q)[caller_order][:, :, :, caller_order]

    mask = np.asarray(unknown_mask, dtype=bool)
    if mask.ndim == 2:
        mask = mask[:, :, None] & np.ones((1, 1, d_q), dtype=bool)
    idx = np.flatnonzero(mask.reshape(-1))
    n_all = m * dofs * d_q
    g = g_nodes.reshape(n_all)[idx]
    Hm = H_nodes.reshape(n_all, n_all)[np.ix_(idx, idx)]
    return J, g, Hm


def _caller_node_order(X, patch):
    """Positions of the caller's nodes inside the canonical corner ordering."""
    X = np.asarray(X, dtype=float)
    if X.ndim == 1:
        X = X[:, None]
    out = []
    for row in X:
        match = np.where(np.all(np.isclose(patch.node_coords, row), axis=1))[0]
        out.append(int(match[0]))
    return np.array(out, dtype=int)
