"""Time stepping by patch-error minimization.

One step seeds the new time level (copy or linear extrapolation), applies the
boundary constraints, then runs a fixed number of Jacobi rounds: every free
node receives one damped Newton update of its summed patch error, computed
from the previous round's values, with a barrier between rounds.  Interior
nodes sum the error over all space-time cells of the new slab that contain
them; constrained boundary nodes use their lowest-index adjacent cell.

The sweep is evaluated in vectorized form over all cells.  Densities that are
quadratic in the jet (constant Hessian, no explicit coordinates) collapse the
per-cell error to a precomputed quadratic form; the generic path assembles
residual derivatives from the density's tensors up to fourth order.  Both
paths implement the same update and are cross-checked in the test suite.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .boundary import BoundaryAssignment, Mur, build_constraints
from .grid import FieldState, Grid
from .lagrangian import estimate_wave_speed
from .layout import dof_kinds, get_layout, w_kinds, z_kinds
from .patch import (
    get_basis,
    patch_error,
    patch_error_derivatives,
    unit_rule,
)


class DivergenceError(RuntimeError):
    def __init__(self, message, step=None, node=None, round_index=None):
        super().__init__(message)
        self.step = step
        self.node = node
        self.round_index = round_index


_DEFAULT_QUAD = {0: (2,), 1: (3, 6), 2: (3, 5, 5)}


@dataclass
class IntegratorConfig:
    dt: float
    n_r: int = 10
    lam: float = 1.0
    quad: tuple | None = None
    bcs: BoundaryAssignment | None = None
    guess: str = "extrapolate"
    fast_path: str = "auto"
    check_invariants: bool = False
    divergence_limit: float = 1e12

    def quad_counts(self, n_space):
        return tuple(self.quad) if self.quad else _DEFAULT_QUAD[n_space]


@dataclass
class PatchProblem:
    """One patch in which a node's dof block is the unknown."""

    X: np.ndarray
    Q: np.ndarray
    rule: object
    mask: np.ndarray


def initial_guess(history):
    """Seed for the new time level from previous states.

    One state: copy.  Two or more: per-entry linear extrapolation
    2 gamma_k - gamma_{k-1}.
    """
    if not history:
        raise ValueError("initial guess needs at least one previous state")
    last = history[-1]
    if len(history) == 1:
        return last.copy()
    prev = history[-2]
    return FieldState(
        grid=last.grid, t=last.t, values=2.0 * last.values - prev.values
    )


def newton_update(L, patches_for_node, gamma, lam):
    """One damped Newton update of the summed patch error.

    Falls back to a short gradient step when the combined Hessian is singular
    or the Newton candidate increases the summed error.
    """
    gamma = np.asarray(gamma, dtype=float)

    def total(vec):
        J = 0.0
        for p in patches_for_node:
            Q = np.array(p.Q, dtype=float, copy=True)
            Q[p.mask] = vec
            J += patch_error(L, p.X, Q, p.rule)
        return J

    g = None
    H = None
    J_old = 0.0
    for p in patches_for_node:
        Q = np.array(p.Q, dtype=float, copy=True)
        Q[p.mask] = gamma
        Jp, gp, Hp = patch_error_derivatives(L, p.X, Q, p.rule, p.mask)
        J_old += Jp
        g = gp if g is None else g + gp
        H = Hp if H is None else H + Hp
    if not (np.all(np.isfinite(g)) and np.all(np.isfinite(H))):
        raise DivergenceError("non-finite derivatives in Newton update")
    candidate = None
    try:
        candidate = np.asarray(gamma - lam * np.linalg.solve(H, g))
    except np.linalg.LinAlgError:
        candidate = None
    if candidate is not None and total(candidate) <= J_old:
        return candidate
    fallback = gamma - lam * 1e-2 * g
    if candidate is not None and total(candidate) < total(fallback):
        return candidate
    return fallback


# -- vectorized sweep engine ----------------------------------------------------


class SweepEngine:
    """Vectorized Jacobi sweeps for one (density, grid, config) combination.

    Every node owns one space-time patch: the nearest complete block of two
    time levels by three nodes per spatial axis (cubic in time, quintic per
    spatial axis).  Interior nodes sit at the patch center; nodes near a
    non-periodic edge use the nearest patch that fits, so the unknown sits at
    an offset position.  Within a round all nodes take one damped Newton
    update of their own patch error computed from the previous round's
    values.

    Densities that are quadratic in the jet with no explicit coordinates use
    a precomputed residual matrix and constant per-position Hessians; the
    generic path assembles residual derivatives from density tensors up to
    fourth order.  Both paths are cross-checked in the test suite.
    """

    def __init__(self, L, grid, config):
        self.L = L
        self.grid = grid
        self.config = config
        n_space = grid.n_space
        if n_space != L.n_space:
            raise ValueError("grid and density dimensions disagree")
        self.n_space = n_space
        self.d_q = L.d_q
        self.kinds = dof_kinds(n_space)
        self.K = len(self.kinds)
        self.layout = get_layout(n_space, L.d_q, L.explicit_axes)

        counts = (2,) + (3,) * n_space
        self.basis = get_basis(counts)
        self.m_sp = 3**n_space

        qc = config.quad_counts(n_space)
        self.rule = unit_rule(qc)
        self.w = self.rule.weights
        self.sqrt_w = np.sqrt(self.w)

        size = np.array(
            [config.dt] + [2.0 * grid.spacing[d] for d in range(n_space)]
        )
        self.patch_size = size
        slot_kinds = z_kinds(n_space) + w_kinds(n_space)
        self.n_zk = len(z_kinds(n_space))
        self.n_sk = len(slot_kinds)
        E = np.stack(
            [self.basis.eval_rows(self.rule.points, k) for k in slot_kinds], axis=1
        )
        scale = np.array([np.prod(size ** np.asarray(k)) for k in slot_kinds])
        E = E / scale[None, :, None]
        hfac_dof = np.array([np.prod(size ** np.asarray(k)) for k in self.kinds])
        hfac_rows = np.tile(hfac_dof, 2 * self.m_sp)
        EA = np.einsum("psj,jr->psr", E, self.basis.fit_matrix_inverse())
        self.EA = EA * hfac_rows[None, None, :]
        self.pos_rows = [
            np.arange((self.m_sp + p) * self.K, (self.m_sp + p + 1) * self.K)
            for p in range(self.m_sp)
        ]
        self.M_pos = np.stack(
            [self.EA[:, :, rows] for rows in self.pos_rows], axis=0
        )

        # per-node patch windows and in-patch positions
        shape = grid.shape
        self.n_nodes = grid.n_nodes
        if n_space == 0:
            self.ids = np.zeros((1, 1), dtype=int)
            self.pos = np.zeros(1, dtype=int)
        else:
            axes_idx = np.meshgrid(
                *[np.arange(s) for s in shape], indexing="ij"
            )
            bases = []
            offs = []
            for d in range(n_space):
                if grid.periodic[d]:
                    b = (axes_idx[d] - 1) % shape[d]
                    o = np.ones_like(b)
                else:
                    if shape[d] < 3:
                        raise ValueError("non-periodic axes need at least 3 nodes")
                    b = np.clip(axes_idx[d] - 1, 0, shape[d] - 3)
                    o = axes_idx[d] - b
                bases.append(b.ravel())
                offs.append(o.ravel())
            window = list(np.ndindex(*(3,) * n_space))
            ids = np.zeros((self.n_nodes, self.m_sp), dtype=int)
            for j, woff in enumerate(window):
                coords = []
                for d in range(n_space):
                    c = bases[d] + woff[d]
                    if grid.periodic[d]:
                        c = c % shape[d]
                    coords.append(c)
                ids[:, j] = np.ravel_multi_index(tuple(coords), shape)
            self.ids = ids
            self.pos = np.ravel_multi_index(
                tuple(offs), (3,) * n_space
            ).astype(int)
            self.bases = bases

        mur_speed = None
        if config.bcs is not None and any(
            isinstance(bc, Mur) and bc.speed is None
            for bc in config.bcs.faces.values()
        ):
            mur_speed = float(np.sqrt(estimate_wave_speed(L)))
        self.classes, _ = build_constraints(grid, config.bcs, mur_speed)
        self.class_mats = [
            cls.C if self.d_q == 1 else np.kron(cls.C, np.eye(self.d_q))
            for cls in self.classes
        ]

        if L.explicit_axes:
            flat_coords = np.stack([c.ravel() for c in grid.coords()], axis=-1)
            origins = flat_coords[self.ids[:, 0]]
            phys = origins[:, None, :] + self.rule.points[None, :, 1:] * (
                2.0 * np.asarray(grid.spacing)
            )
            coords = np.zeros((self.n_nodes, self.w.size, n_space + 1))
            coords[:, :, 1:] = phys
            self.coords = coords
        else:
            self.coords = None

        self.quadratic = None
        if (
            config.fast_path != "off"
            and L.quadratic_form() is not None
            and L.d_q == 1
        ):
            self._build_quadratic()

    # -- quadratic fast path -----------------------------------------------

    def _build_quadratic(self):
        Hq, gq, _ = self.L.quadratic_form()
        lay = self.layout
        Bf = Hq[lay.q_idx[0]] @ lay.zsel
        for c in range(self.n_space + 1):
            Bf = Bf - Hq[lay.dq_idx[c][0]] @ lay.vmap[c]
        r0 = gq[lay.q_idx[0]]
        Rmat = np.einsum("s,psr->pr", Bf, self.EA)
        RmatU = np.stack([Rmat[:, rows] for rows in self.pos_rows], axis=0)
        H_pos = np.zeros((self.m_sp, self.K, self.K))
        for p in range(self.m_sp):
            Y = RmatU[p] * self.sqrt_w[:, None]
            H_pos[p] = 2.0 * np.einsum("pf,pg->fg", Y, Y)
        # per-class reduced Hessians, one per node via its patch position
        H_red = []
        H_red_inv = []
        try:
            for ci, cls in enumerate(self.classes):
                Cm = self.class_mats[ci]
                Hn = np.einsum(
                    "kf,nkl,lg->nfg", Cm, H_pos[self.pos[cls.nodes]], Cm
                )
                H_red.append(Hn)
                H_red_inv.append(np.linalg.inv(Hn))
        except np.linalg.LinAlgError:
            return  # generic path handles singular blocks per node
        self.quadratic = {
            "Rmat": Rmat,
            "RmatU": RmatU,
            "r0": r0,
            "H_red": H_red,
            "H_red_inv": H_red_inv,
        }

    # -- shared helpers -------------------------------------------------------

    def _flat(self, state_values):
        return state_values.reshape(self.n_nodes, self.K, self.d_q)

    def _gather(self, old_flat, new_flat):
        olds = old_flat[self.ids].reshape(self.n_nodes, self.m_sp * self.K, self.d_q)
        news = new_flat[self.ids].reshape(self.n_nodes, self.m_sp * self.K, self.d_q)
        return np.concatenate([olds, news], axis=1)

    def _zeta(self, slots):
        N, P = slots.shape[:2]
        Z = slots[:, :, : self.n_zk, :].reshape(N, P, -1)
        if self.L.explicit_axes:
            cols = [Z]
            for ax in self.L.explicit_axes:
                cols.append(self.coords[:, :, ax][:, :, None])
            Z = np.concatenate(cols, axis=-1)
        return Z

    def apply_constraints(self, new_flat, t_new):
        if self.d_q != 1:
            return
        vals = new_flat[:, :, 0]
        for cls in self.classes:
            if not cls.constrained:
                continue
            free = cls.free_of(vals[cls.nodes])
            vals[cls.nodes] = cls.reconstruct(free, t_new)

    def assert_constraints(self, state):
        flat = self._flat(state.values)[:, :, 0]
        for cls in self.classes:
            if not cls.constrained:
                continue
            free = cls.free_of(flat[cls.nodes])
            expect = cls.reconstruct(free, state.t)
            if not np.allclose(flat[cls.nodes], expect, atol=1e-12):
                raise AssertionError("boundary constraints violated")

    def _check_finite(self, arr, round_index):
        bad = ~np.isfinite(arr) | (np.abs(arr) > self.config.divergence_limit)
        if np.any(bad):
            node = int(np.argwhere(bad.reshape(self.n_nodes, -1).any(axis=1))[0][0])
            raise DivergenceError(
                f"divergent state at node {node}", node=node, round_index=round_index
            )

    # -- error evaluation -------------------------------------------------------

    def node_errors(self, old_flat, new_flat):
        """Patch error of every node's own patch at the current values."""
        if self.quadratic is not None:
            Q = self._gather(old_flat, new_flat)[:, :, 0]
            R = Q @ self.quadratic["Rmat"].T + self.quadratic["r0"]
            return (R * R) @ self.w
        slots = np.einsum(
            "psr,nrd->npsd", self.EA, self._gather(old_flat, new_flat)
        )
        Z = self._zeta(slots)
        N, P = slots.shape[:2]
        _, G, H = self.L.jet_tensors(Z.reshape(N * P, -1), 2)
        R = self.layout.residual(G, H, slots.reshape(N * P, -1)).reshape(
            N, P, self.d_q
        )
        return np.einsum("npa,npa,p->n", R, R, self.w)

    # -- rounds -----------------------------------------------------------------

    def _round_quadratic(self, old_flat, new_flat, t_new, lam, round_index):
        qd = self.quadratic
        Q = self._gather(old_flat, new_flat)[:, :, 0]
        R = Q @ qd["Rmat"].T + qd["r0"]  # (N, P)
        wR = R * self.w
        node_g = 2.0 * np.einsum("np,npk->nk", wR, qd["RmatU"][self.pos])
        if not np.all(np.isfinite(node_g)):
            self._check_finite(node_g, round_index)
        vals = new_flat[:, :, 0]
        for ci, cls in enumerate(self.classes):
            Cm = self.class_mats[ci]
            g_red = np.einsum("kf,nk->nf", Cm, node_g[cls.nodes])
            delta = -lam * np.einsum(
                "nfg,ng->nf", qd["H_red_inv"][ci], g_red
            )
            dJ = np.einsum("nf,nf->n", g_red, delta) + 0.5 * np.einsum(
                "nf,nfg,ng->n", delta, qd["H_red"][ci], delta
            )
            fallback = dJ > 0
            if np.any(fallback):
                delta[fallback] = -lam * 1e-2 * g_red[fallback]
            free = cls.free_of(vals[cls.nodes]) + delta
            if cls.constrained:
                vals[cls.nodes] = cls.reconstruct(free, t_new)
            else:
                vals[cls.nodes] = free @ cls.C.T
        self._check_finite(vals, round_index)

    def _round_generic(self, old_flat, new_flat, t_new, lam, round_index):
        d_q = self.d_q
        slots = np.einsum("psr,nrd->npsd", self.EA, self._gather(old_flat, new_flat))
        Z = self._zeta(slots)
        N, P = slots.shape[:2]
        _, G, Hd, T, F = self.L.jet_tensors(Z.reshape(N * P, -1), 4)
        flat = slots.reshape(N * P, -1)
        R, R1, R2 = self.layout.residual_derivatives(G, Hd, T, F, flat)
        R = R.reshape(N, P, d_q)
        R1 = R1.reshape(N, P, d_q, self.n_sk, d_q)
        R2 = R2.reshape(N, P, d_q, self.n_sk, d_q, self.n_sk, d_q)
        node_J = np.einsum("npa,npa,p->n", R, R, self.w)

        M_sel = self.M_pos[self.pos]  # (N, P, n_sk, K)
        Fdim = self.K * d_q
        dR = np.einsum("npasd,npsk->npakd", R1, M_sel).reshape(N, P, d_q, Fdim)
        node_g = 2.0 * np.einsum("p,npa,npaf->nf", self.w, R, dR)
        Y = dR * self.sqrt_w[None, :, None, None]
        node_H = 2.0 * np.einsum("npaf,npag->nfg", Y, Y)
        T2 = np.einsum("npasdue,npsk->npakdue", R2, M_sel)
        T2 = np.einsum("npakdue,npul->npakdle", T2, M_sel).reshape(
            N, P, d_q, Fdim, Fdim
        )
        curv = 2.0 * np.einsum("p,npa,npafg->nfg", self.w, R, T2)
        node_H += 0.5 * (curv + np.swapaxes(curv, -1, -2))

        if not (np.all(np.isfinite(node_g)) and np.all(np.isfinite(node_H))):
            self._check_finite(node_g, round_index)
            self._check_finite(node_H.reshape(self.n_nodes, -1), round_index)

        vals = new_flat.reshape(self.n_nodes, Fdim)
        cand = vals.copy()
        reductions = {}
        for ci, cls in enumerate(self.classes):
            Cm = self.class_mats[ci]
            g_red = np.einsum("kf,nk->nf", Cm, node_g[cls.nodes])
            H_red = np.einsum("kf,nkl,lg->nfg", Cm, node_H[cls.nodes], Cm)
            try:
                delta = -lam * np.linalg.solve(H_red, g_red[..., None])[..., 0]
            except np.linalg.LinAlgError:
                delta = np.empty_like(g_red)
                for i in range(g_red.shape[0]):
                    try:
                        delta[i] = -lam * np.linalg.solve(H_red[i], g_red[i])
                    except np.linalg.LinAlgError:
                        delta[i] = np.nan  # forces the gradient fallback
            reductions[ci] = (Cm, g_red, delta)
            free = self._free_general(cls, Cm, vals) + delta
            cand[cls.nodes] = self._reconstruct_general(cls, Cm, free, t_new)

        # Jacobi decrease check: candidate J per node with neighbours frozen
        node_J_cand = self._candidate_errors(slots, cand - vals)
        bad = ~np.isfinite(node_J_cand) | (node_J_cand > node_J)
        for ci, cls in enumerate(self.classes):
            _, _, delta = reductions[ci]
            bad[cls.nodes] |= ~np.isfinite(delta).all(axis=1)
        if np.any(bad):
            # gradient fallback, kept only where it does not do worse than the
            # rejected Newton candidate (protects machine-zero minima)
            grad_cand = vals.copy()
            for ci, cls in enumerate(self.classes):
                Cm, g_red, _ = reductions[ci]
                sel = bad[cls.nodes]
                if not np.any(sel):
                    continue
                free = self._free_general(cls, Cm, vals)
                free[sel] = free[sel] - lam * 1e-2 * g_red[sel]
                grad_cand[cls.nodes[sel]] = self._reconstruct_general(
                    cls, Cm, free, t_new
                )[sel]
            node_J_grad = self._candidate_errors(slots, grad_cand - vals)
            take_grad = bad & (
                ~np.isfinite(node_J_cand) | (node_J_grad <= node_J_cand)
            )
            cand[take_grad] = grad_cand[take_grad]
        new_flat[...] = cand.reshape(new_flat.shape)
        self._check_finite(new_flat, round_index)

    def _free_general(self, cls, Cm, vals):
        if self.d_q == 1:
            return vals[cls.nodes][:, cls.free_kinds]
        idx = (cls.free_kinds[:, None] * self.d_q + np.arange(self.d_q)).ravel()
        return vals[cls.nodes][:, idx]

    def _reconstruct_general(self, cls, Cm, free, t_new):
        out = free @ Cm.T
        if cls.constrained and cls.fixed:
            d = cls.offset(t_new)
            if self.d_q == 1:
                out = out + d[None, :]
            else:
                out = out + np.repeat(d, self.d_q)[None, :]
        return out

    def _candidate_errors(self, slots, delta_vals):
        """J per node when that node alone moves to its candidate."""
        N, P = slots.shape[:2]
        d_q = self.d_q
        M_sel = self.M_pos[self.pos]
        dgam = delta_vals.reshape(N, self.K, d_q)
        dslots = np.einsum("npsk,nkd->npsd", M_sel, dgam)
        slots_c = slots + dslots
        Z = self._zeta(slots_c)
        _, G, Hd = self.L.jet_tensors(Z.reshape(N * P, -1), 2)
        R = self.layout.residual(G, Hd, slots_c.reshape(N * P, -1)).reshape(
            N, P, d_q
        )
        return np.einsum("npa,npa,p->n", R, R, self.w)

    # -- public stepping ---------------------------------------------------------

    def advance(self, state, guess, n_r=None, lam=None):
        n_r = self.config.n_r if n_r is None else n_r
        lam = self.config.lam if lam is None else lam
        t_new = state.t + self.config.dt
        old_flat = self._flat(state.values)
        new_flat = self._flat(guess.values.copy())
        self.apply_constraints(new_flat, t_new)
        for r in range(n_r):
            if self.quadratic is not None:
                self._round_quadratic(old_flat, new_flat, t_new, lam, r)
            else:
                self._round_generic(old_flat, new_flat, t_new, lam, r)
        out = FieldState(
            grid=state.grid,
            t=t_new,
            values=new_flat.reshape(state.values.shape),
        )
        if self.config.check_invariants:
            self.assert_constraints(out)
        return out


def jacobi_sweep(L, state_k, state_guess, config):
    """n_r Jacobi rounds of per-node Newton updates; returns the new state."""
    engine = SweepEngine(L, state_k.grid, config)
    return engine.advance(state_k, state_guess)


def step(L, history, config, engine=None):
    """Advance one time step from the trailing history."""
    if engine is None:
        engine = SweepEngine(L, history[-1].grid, config)
    guess = (
        history[-1].copy() if config.guess == "copy" else initial_guess(history)
    )
    return engine.advance(history[-1], guess)


def rollout(L, initial, config, n_steps, sinks=(), collect_errors=False):
    """Repeatedly step, streaming states to sinks; aborts on divergence."""
    if n_steps < 1:
        raise ValueError("n_steps must be >= 1")
    engine = SweepEngine(L, initial.grid, config)
    history = [initial]
    for s in sinks:
        s.on_step(initial, {"step": 0})
    try:
        for i in range(1, n_steps + 1):
            guess = (
                history[-1].copy()
                if config.guess == "copy"
                else initial_guess(history)
            )
            try:
                state = engine.advance(history[-1], guess)
            except DivergenceError as exc:
                exc.step = i
                raise
            info = {"step": i}
            if collect_errors:
                info["max_J"] = float(
                    np.max(
                        engine.node_errors(
                            engine._flat(history[-1].values),
                            engine._flat(state.values),
                        )
                    )
                )
            for s in sinks:
                s.on_step(state, info)
            history = [history[-1], state][-2:]
    finally:
        for s in sinks:
            close = getattr(s, "close", None)
            if close:
                close()
    return history[-1]


# -- symplecticity -----------------------------------------------------------------


@dataclass
class SymplecticityReport:
    deviation: float
    converged: bool
    max_patch_error: float


def _velocity_from_momentum(L, q, p):
    d = L.d_q
    qt = np.zeros(d)
    for _ in range(100):
        Z = np.concatenate([q, qt])[None, :]
        _, G, H = L.jet_tensors(Z, 2)
        grad = G[0][d : 2 * d] - p
        M = H[0][d : 2 * d, d : 2 * d]
        stepv = np.linalg.solve(M, grad)
        qt = qt - stepv
        if np.max(np.abs(stepv)) < 1e-14:
            break
    return qt


def _momentum(L, q, qt):
    Z = np.concatenate([q, qt])[None, :]
    _, G = L.jet_tensors(Z, 1)
    return G[0][L.d_q : 2 * L.d_q]


def check_symplecticity(L, state, config, perturbation=1e-6):
    """Deviation of the one-step map from preserving the canonical form.

    The step map is evaluated in (q, p) coordinates through the Legendre
    transform, with a copy initial guess so the map depends on the state
    alone; the Jacobian comes from central finite differences.
    """
    if state.grid.n_space != 0:
        raise ValueError("symplecticity check covers ODE systems")
    d = L.d_q
    engine = SweepEngine(L, state.grid, config)
    max_J = 0.0

    def phi(z):
        nonlocal max_J
        q, p = z[:d], z[d:]
        qt = _velocity_from_momentum(L, q, p)
        values = np.stack([q, qt])
        s0 = FieldState(grid=state.grid, t=state.t, values=values)
        s1 = engine.advance(s0, s0.copy())
        J = float(
            np.max(
                engine.node_errors(
                    engine._flat(s0.values), engine._flat(s1.values)
                )
            )
        )
        max_J = max(max_J, J)
        q1 = s1.values[0]
        p1 = _momentum(L, s1.values[0], s1.values[1])
        return np.concatenate([q1, p1])

    q0 = state.values[0]
    qt0 = state.values[1]
    z0 = np.concatenate([q0, _momentum(L, q0, qt0)])
    n = 2 * d
    D = np.zeros((n, n))
    for j in range(n):
        e = np.zeros(n)
        e[j] = perturbation
        D[:, j] = (phi(z0 + e) - phi(z0 - e)) / (2 * perturbation)
    Omega = np.zeros((n, n))
    Omega[:d, d:] = np.eye(d)
    Omega[d:, :d] = -np.eye(d)
    deviation = float(np.max(np.abs(D.T @ Omega @ D - Omega)))
    return SymplecticityReport(
        deviation=deviation,
        converged=max_J <= 1e-16,
        max_patch_error=max_J,
    )
