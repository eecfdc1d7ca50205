"""Grids and field states.

A grid stores uniform node coordinates per spatial axis (none for ODE
systems).  Periodic axes store the shared endpoint once, so n nodes span
[x0, x1) with spacing (x1 - x0)/n.  A field state holds one block of Hermite
degrees of freedom per node, ordered as :func:`layout.dof_kinds`, with the
field-component axis last.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .layout import dof_kinds


class Grid:
    def __init__(self, axes=(), periodic=()):
        self.axes = tuple(np.asarray(a, dtype=float) for a in axes)
        if not periodic:
            periodic = (False,) * len(self.axes)
        self.periodic = tuple(bool(p) for p in periodic)
        for a in self.axes:
            if a.size >= 3 and not np.allclose(np.diff(a), a[1] - a[0]):
                raise ValueError("grid axes must be uniform")

    @property
    def n_space(self):
        return len(self.axes)

    @property
    def shape(self):
        return tuple(a.size for a in self.axes)

    @property
    def spacing(self):
        return tuple(a[1] - a[0] for a in self.axes)

    @property
    def n_nodes(self):
        return int(np.prod(self.shape)) if self.axes else 1

    def coords(self):
        """Node coordinate arrays broadcast to the grid shape."""
        if not self.axes:
            return ()
        return np.meshgrid(*self.axes, indexing="ij")

    def n_cells(self):
        return tuple(
            n if p else n - 1 for n, p in zip(self.shape, self.periodic)
        )

    def __eq__(self, other):
        return (
            isinstance(other, Grid)
            and self.periodic == other.periodic
            and len(self.axes) == len(other.axes)
            and all(np.array_equal(a, b) for a, b in zip(self.axes, other.axes))
        )


def grid_1d(x0, x1, n, periodic=True):
    if periodic:
        return Grid(axes=(x0 + (x1 - x0) * np.arange(n) / n,), periodic=(True,))
    return Grid(axes=(np.linspace(x0, x1, n),), periodic=(False,))


def grid_2d(x0, x1, nx, y0, y1, ny):
    return Grid(
        axes=(np.linspace(x0, x1, nx), np.linspace(y0, y1, ny)),
        periodic=(False, False),
    )


def n_dofs(n_space):
    return len(dof_kinds(n_space))


@dataclass
class NodeState:
    """Hermite degrees of freedom of one node: (dof kind, field component)."""

    gamma: np.ndarray

    def finite(self):
        return bool(np.all(np.isfinite(self.gamma)))


@dataclass
class FieldState:
    grid: Grid
    t: float
    values: np.ndarray  # grid.shape + (n_dofs, d_q)

    @property
    def d_q(self):
        return self.values.shape[-1]

    def copy(self):
        return FieldState(grid=self.grid, t=self.t, values=self.values.copy())

    def q(self):
        """Field values over the grid (component axis kept)."""
        return self.values[..., 0, :]

    def node(self, index):
        return NodeState(gamma=self.values[index])


def seed_state(grid, t, dof_callables, d_q=1):
    """Build a state from one callable per dof kind.

    For PDE grids each callable receives the node coordinate arrays; for the
    ODE case it is called without arguments (or may be a constant).
    """
    kinds = dof_kinds(grid.n_space)
    values = np.zeros(grid.shape + (len(kinds), d_q))
    coords = grid.coords()
    for i, fn in enumerate(dof_callables):
        if fn is None:
            continue
        if callable(fn):
            v = fn(*coords) if coords else fn()
        else:
            v = fn
        v = np.asarray(v, dtype=float)
        if grid.axes:
            values[..., i, 0] = v
        else:
            values[i, :] = np.atleast_1d(v)
    return FieldState(grid=grid, t=t, values=values)


def _axis_derivative(arr, axis, dx, periodic):
    if periodic:
        return (np.roll(arr, -1, axis=axis) - np.roll(arr, 1, axis=axis)) / (2 * dx)
    out = np.gradient(arr, dx, axis=axis, edge_order=2)
    return out


def seed_from_frames(grid, q0, q1, dt_sample, t=0.0, d_q=1):
    """Finite-difference seeding from two closely spaced field samples.

    q0, q1: field values on the grid at t and t + dt_sample.  Spatial
    derivatives come from central differences, the time slots from the
    forward difference of the two frames.
    """
    q0 = np.asarray(q0, dtype=float)
    q1 = np.asarray(q1, dtype=float)
    qt = (q1 - q0) / dt_sample
    kinds = dof_kinds(grid.n_space)
    values = np.zeros(grid.shape + (len(kinds), d_q))

    def spatial(arr, kind):
        out = arr
        for ax in range(grid.n_space):
            for _ in range(kind[1 + ax]):
                out = _axis_derivative(
                    out, ax, grid.spacing[ax], grid.periodic[ax]
                )
        return out

    for i, kind in enumerate(kinds):
        base = qt if kind[0] == 1 else q0
        values[..., i, 0] = spatial(base, kind)
    return FieldState(grid=grid, t=t, values=values)
