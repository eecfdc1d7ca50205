"""Boundary conditions as constraints on optimized node variables.

Every condition is a linear reparametrization gamma_full = C gamma_free + d(t)
of a node's Hermite dof block:

* Dirichlet/Driven freeze the value slot and every slot with no derivative
  normal to the face (those are derivatives of the prescribed face data along
  the face and in time);
* Neumann freezes every slot containing the normal derivative;
* Mur ties each time-derivative slot without a normal derivative to its
  normal-spatial counterpart, q_t = -s c q_x along the face;
* Periodic needs no constraint (the grid stores the shared node once).

Freezing conditions take precedence over ties when both touch a slot, and a
driven face wins over an absorbing one at shared corners.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np

from .layout import dof_kinds


@dataclass(frozen=True)
class Periodic:
    pass


@dataclass(frozen=True)
class Dirichlet:
    value: float = 0.0


@dataclass(frozen=True)
class Neumann:
    pass


@dataclass(frozen=True)
class Driven:
    amplitude: float
    omega: float


@dataclass(frozen=True)
class Mur:
    speed: float | None = None  # None: estimate from the density


@dataclass
class BoundaryAssignment:
    """Face conditions plus an optional interior barrier mask.

    faces: mapping from "x_min"/"x_max"/"y_min"/"y_max" to a condition;
    barrier: boolean array over the grid marking internal Dirichlet nodes
    (a wall of nodes whose surface normal is ``barrier_axis``).
    """

    faces: dict
    barrier: np.ndarray | None = None
    barrier_axis: int = 0


_FACE_PRIORITY = {Mur: 0, Neumann: 1, Dirichlet: 2, Driven: 3}


def _freeze_entries(kinds, normal, values):
    """Freeze every kind without a normal derivative to the given values."""
    out = {}
    for ki, kind in enumerate(kinds):
        if kind[1 + normal] == 0:
            out[ki] = ("fixed", values(kind))
    return out


def _face_entries(bc, normal, side, kinds, mur_speed):
    if isinstance(bc, Periodic):
        return {}
    if isinstance(bc, Dirichlet):
        return _freeze_entries(
            kinds,
            normal,
            lambda kind: ("const", bc.value if sum(kind) == 0 else 0.0),
        )
    if isinstance(bc, Driven):

        def values(kind):
            if sum(kind) == 0:
                return ("drive_q", bc.amplitude, bc.omega)
            if kind[0] == 1 and sum(kind) == 1:
                return ("drive_qt", bc.amplitude, bc.omega)
            return ("const", 0.0)

        return _freeze_entries(kinds, normal, values)
    if isinstance(bc, Neumann):
        return {
            ki: ("fixed", ("const", 0.0))
            for ki, kind in enumerate(kinds)
            if kind[1 + normal] == 1
        }
    if isinstance(bc, Mur):
        c = bc.speed if bc.speed is not None else mur_speed
        if c is None:
            raise ValueError("Mur condition needs a wave speed")
        out = {}
        for ki, kind in enumerate(kinds):
            if kind[0] == 1 and kind[1 + normal] == 0:
                src = list(kind)
                src[0] = 0
                src[1 + normal] = 1
                src_ki = kinds.index(tuple(src))
                out[ki] = ("tied", src_ki, -side * c)
        return out
    raise TypeError(f"unknown boundary condition {bc!r}")


def _fixed_value(spec, t):
    tag = spec[0]
    if tag == "const":
        return spec[1]
    if tag == "drive_q":
        return spec[1] * np.sin(spec[2] * t)
    if tag == "drive_qt":
        return spec[1] * spec[2] * np.cos(spec[2] * t)
    raise ValueError(spec)


@dataclass
class ConstraintClass:
    """Nodes sharing one constraint structure."""

    nodes: np.ndarray  # flat node indices
    C: np.ndarray  # (n_kinds, n_free)
    free_kinds: np.ndarray  # anchor kind of each free parameter
    fixed: list  # (kind index, value spec)
    constrained: bool

    def offset(self, t):
        d = np.zeros(self.C.shape[0])
        for ki, spec in self.fixed:
            d[ki] = _fixed_value(spec, t)
        return d

    def reconstruct(self, free_values, t):
        """Full dof blocks from free parameters, shape (n_nodes, n_kinds)."""
        return free_values @ self.C.T + self.offset(t)[None, :]

    def free_of(self, full_values):
        return full_values[:, self.free_kinds]


def build_constraints(grid, bcs, mur_speed=None):
    """Group grid nodes into constraint classes.

    Returns (classes, constrained_mask) where constrained_mask flags nodes
    whose objective uses only the nearest patch.
    """
    kinds = dof_kinds(grid.n_space)
    K = len(kinds)
    shape = grid.shape
    n_nodes = int(np.prod(shape))

    node_entries = {}
    if bcs is not None:
        face_of = {
            "x_min": (0, -1),
            "x_max": (0, 1),
            "y_min": (1, -1),
            "y_max": (1, 1),
        }
        ordered = sorted(
            bcs.faces.items(), key=lambda kv: _FACE_PRIORITY[type(kv[1])]
        )
        for name, bc in ordered:
            axis, side = face_of[name]
            if grid.periodic[axis] and not isinstance(bc, Periodic):
                raise ValueError(f"face {name} lies on a periodic axis")
            entries = _face_entries(bc, axis, side, kinds, mur_speed)
            if not entries:
                continue
            idx = [slice(None)] * grid.n_space
            idx[axis] = 0 if side < 0 else shape[axis] - 1
            face_nodes = np.arange(n_nodes).reshape(shape)[tuple(idx)].ravel()
            for n in face_nodes:
                cur = node_entries.setdefault(int(n), {})
                for ki, entry in entries.items():
                    if entry[0] == "tied" and cur.get(ki, ("",))[0] == "fixed":
                        continue  # freezes win over ties
                    cur[ki] = entry
        if bcs.barrier is not None:
            entries = _face_entries(
                Dirichlet(0.0), bcs.barrier_axis, 1, kinds, mur_speed
            )
            for n in np.flatnonzero(np.asarray(bcs.barrier).ravel()):
                cur = node_entries.setdefault(int(n), {})
                cur.update(entries)

    # resolve ties whose source slot is frozen
    for entries in node_entries.values():
        for ki, entry in list(entries.items()):
            if entry[0] == "tied":
                src = entries.get(entry[1])
                if src is not None and src[0] == "fixed":
                    if src[1][0] != "const":
                        raise ValueError("tie source frozen to a driven value")
                    entries[ki] = ("fixed", ("const", entry[2] * src[1][1]))

    groups = {}
    assigned = np.zeros(n_nodes, dtype=bool)
    for n, entries in node_entries.items():
        key = tuple(entries.get(ki, ("free",)) for ki in range(K))
        groups.setdefault(key, []).append(n)
        assigned[n] = True

    classes = []
    interior = np.flatnonzero(~assigned)
    if interior.size:
        classes.append(
            ConstraintClass(
                nodes=interior,
                C=np.eye(K),
                free_kinds=np.arange(K),
                fixed=[],
                constrained=False,
            )
        )
    for key, nodes in groups.items():
        free, fixed, ties = [], [], []
        for ki, entry in enumerate(key):
            if entry[0] == "free":
                free.append(ki)
            elif entry[0] == "fixed":
                fixed.append((ki, entry[1]))
            else:
                ties.append((ki, entry[1], entry[2]))
        C = np.zeros((K, len(free)))
        for col, ki in enumerate(free):
            C[ki, col] = 1.0
        for ki, src, coef in ties:
            C[ki, free.index(src)] = coef
        classes.append(
            ConstraintClass(
                nodes=np.array(sorted(nodes)),
                C=C,
                free_kinds=np.array(free, dtype=int),
                fixed=fixed,
                constrained=True,
            )
        )
    constrained_mask = assigned
    return classes, constrained_mask
