"""Index bookkeeping shared by the density contract and the patch residual.

Conventions (D = n_space + 1 coordinate axes, in order t, x, y):

* per-node degrees of freedom (``dof_kinds``): mixed first derivatives,
  ordered q, q_t, q_x, q_y, q_tx, q_ty, q_xy, q_txy (truncated by dimension);
* first-order jet slots (``z_kinds``): q, q_t, q_x, q_y;
* second-order jet slots (``w_kinds``): q_tt, q_tx, q_ty, q_xx, q_xy, q_yy;
* density inputs zeta: z slots flattened kind-major over the d_q field
  components, followed by any explicit coordinates (x and/or y);
* flattened slot entries: (z_kinds + w_kinds) kind-major over components.

``Layout`` turns a density's derivative tensors into the Euler-Lagrange
residual R and its first/second derivatives with respect to the flattened
slot entries.  The total derivative in direction c acting on zeta is the
constant linear map ``V^c = Vmap[c] @ slots + vconst[c]``.
"""

from __future__ import annotations

import numpy as np

AXIS_NAMES = ("t", "x", "y")


def dof_kinds(n_space):
    """Per-node Hermite dof as derivative multi-indices over (t, x[, y])."""
    if n_space == 0:
        return [(0,), (1,)]
    if n_space == 1:
        return [(0, 0), (1, 0), (0, 1), (1, 1)]
    if n_space == 2:
        return [
            (0, 0, 0),
            (1, 0, 0),
            (0, 1, 0),
            (0, 0, 1),
            (1, 1, 0),
            (1, 0, 1),
            (0, 1, 1),
            (1, 1, 1),
        ]
    raise ValueError(f"unsupported spatial dimension {n_space}")


def z_kinds(n_space):
    D = n_space + 1
    kinds = [tuple([0] * D)]
    for c in range(D):
        e = [0] * D
        e[c] = 1
        kinds.append(tuple(e))
    return kinds


def w_kinds(n_space):
    D = n_space + 1
    kinds = []
    for c1 in range(D):
        for c2 in range(c1, D):
            e = [0] * D
            e[c1] += 1
            e[c2] += 1
            kinds.append(tuple(e))
    # order: tt, tx, ty, xx, xy, yy (pairs with c1 major) already matches
    return kinds


_CACHE = {}


class Layout:
    """Residual assembly maps for one (n_space, d_q, explicit_axes) combination."""

    def __init__(self, n_space, d_q, explicit_axes=()):
        self.n_space = n_space
        self.d_q = d_q
        self.explicit_axes = tuple(explicit_axes)
        D = n_space + 1
        self.zk = z_kinds(n_space)
        self.wk = w_kinds(n_space)
        self.slot_kinds = self.zk + self.wk
        self.n_se = len(self.slot_kinds) * d_q
        self.n_zeta = len(self.zk) * d_q + len(self.explicit_axes)

        kind_index = {kind: i for i, kind in enumerate(self.slot_kinds)}
        zeta_of = lambda zi, b: zi * d_q + b
        slot_of = lambda ki, b: ki * d_q + b

        self.q_idx = np.array([zeta_of(0, b) for b in range(d_q)])
        # derivative-direction kinds q_t, q_x, q_y sit at z indices 1..D
        self.dq_idx = [
            np.array([zeta_of(1 + c, b) for b in range(d_q)]) for c in range(D)
        ]
        self.explicit_zeta = {
            ax: len(self.zk) * d_q + j for j, ax in enumerate(self.explicit_axes)
        }

        zsel = np.zeros((self.n_zeta, self.n_se))
        for zi in range(len(self.zk)):
            for b in range(d_q):
                zsel[zeta_of(zi, b), slot_of(zi, b)] = 1.0
        self.zsel = zsel

        self.vmap = []
        self.vconst = []
        for c in range(D):
            vm = np.zeros((self.n_zeta, self.n_se))
            vc = np.zeros(self.n_zeta)
            for zi, kind in enumerate(self.zk):
                dk = list(kind)
                dk[c] += 1
                ki = kind_index[tuple(dk)]
                for b in range(d_q):
                    vm[zeta_of(zi, b), slot_of(ki, b)] = 1.0
            for ax, zi in self.explicit_zeta.items():
                if ax == c:
                    vc[zi] = 1.0
            self.vmap.append(vm)
            self.vconst.append(vc)

    # -- assembly ----------------------------------------------------------

    def zeta_from_slots(self, slots, coords=None):
        """Density inputs from flattened slot entries (..., n_se).

        ``coords``: (..., D) physical coordinates, required when the layout
        carries explicit axes.
        """
        z_part = slots[..., : len(self.zk) * self.d_q]
        if not self.explicit_axes:
            return z_part
        cols = [z_part]
        for ax in self.explicit_axes:
            cols.append(coords[..., ax][..., None])
        return np.concatenate(cols, axis=-1)

    def total_derivatives(self, slots):
        """V^c for each axis c: (D, ..., n_zeta)."""
        return [
            slots @ vm.T + vc for vm, vc in zip(self.vmap, self.vconst)
        ]

    def residual(self, G, H, slots):
        """Euler-Lagrange residual, shape (..., d_q)."""
        V = self.total_derivatives(slots)
        R = G[..., self.q_idx].copy()
        for c, (ca, Vc) in enumerate(zip(self.dq_idx, V)):
            R -= np.einsum("...az,...z->...a", H[..., ca, :], Vc)
        return R

    def residual_derivatives(self, G, H, T, F, slots):
        """R with first and second derivatives w.r.t. the flattened slots.

        Returns (R (...,d_q), R1 (...,d_q,n_se), R2 (...,d_q,n_se,n_se)).
        """
        V = self.total_derivatives(slots)
        R = G[..., self.q_idx].copy()
        R1 = np.einsum("...az,zm->...am", H[..., self.q_idx, :], self.zsel)
        R2 = np.einsum(
            "...azr,zm,rn->...amn", T[..., self.q_idx, :, :], self.zsel, self.zsel
        )
        for c, (ca, Vc) in enumerate(zip(self.dq_idx, V)):
            vm = self.vmap[c]
            Hc = H[..., ca, :]
            Tc = T[..., ca, :, :]
            Fc = F[..., ca, :, :, :]
            R -= np.einsum("...az,...z->...a", Hc, Vc)
            R1 -= np.einsum("...azr,...z,rm->...am", Tc, Vc, self.zsel)
            R1 -= np.einsum("...az,zm->...am", Hc, vm)
            R2 -= np.einsum(
                "...azrt,...z,rm,tn->...amn", Fc, Vc, self.zsel, self.zsel
            )
            X = np.einsum("...azr,zn,rm->...amn", Tc, vm, self.zsel)
            R2 -= X + np.swapaxes(X, -1, -2)
        return R, R1, R2


def get_layout(n_space, d_q, explicit_axes=()):
    key = (n_space, d_q, tuple(explicit_axes))
    if key not in _CACHE:
        _CACHE[key] = Layout(*key)
    return _CACHE[key]
