"""Rollout sinks: CSV time series, grid snapshots, in-memory recorders.

All text output is locale-independent with 17 significant digits, so repeated
runs with identical configuration produce byte-identical files.
"""

from __future__ import annotations

import os

import numpy as np

from .analysis import energy, relative_l2


def _fmt(x):
    return format(float(x), ".17g")


class EnergySink:
    """Records t, E, |E-E0|/|E0| per step; optionally writes energy.csv."""

    def __init__(self, density, path=None):
        self.density = density
        self.path = path
        self.times = []
        self.values = []

    def on_step(self, state, info):
        self.times.append(state.t)
        self.values.append(energy(self.density, state))

    @property
    def rel_err(self):
        v = np.asarray(self.values)
        return np.abs(v - v[0]) / abs(v[0])

    def close(self):
        if self.path is None:
            return
        rel = self.rel_err
        with open(self.path, "w") as fh:
            fh.write("t,E,rel_err\n")
            for t, e, r in zip(self.times, self.values, rel):
                fh.write(f"{_fmt(t)},{_fmt(e)},{_fmt(r)}\n")


class L2Sink:
    """Records the relative L2 error against a reference while it is valid."""

    def __init__(self, reference, path=None, every=1):
        self.reference = reference
        self.path = path
        self.every = every
        self.times = []
        self.values = []

    def on_step(self, state, info):
        if info["step"] % self.every:
            return
        if state.t > self.reference.valid_until:
            return
        self.times.append(state.t)
        self.values.append(relative_l2(state, self.reference))

    def close(self):
        if self.path is None:
            return
        with open(self.path, "w") as fh:
            fh.write("t,rel_l2\n")
            for t, v in zip(self.times, self.values):
                fh.write(f"{_fmt(t)},{_fmt(v)}\n")


class SnapshotSink:
    """Writes the field values every ``every`` steps.

    Format: one header line with the grid dimensions and time, then the
    row-major field values, one grid row per line.
    """

    def __init__(self, out_dir, every=100, prefix="snapshot"):
        self.out_dir = out_dir
        self.every = every
        self.prefix = prefix
        self.written = []
        os.makedirs(out_dir, exist_ok=True)

    def on_step(self, state, info):
        if info["step"] % self.every:
            return
        q = state.values[..., 0, 0] if state.grid.n_space else state.values
        dims = " ".join(str(d) for d in (q.shape if q.ndim else (1,)))
        path = os.path.join(
            self.out_dir, f"{self.prefix}_{info['step']:08d}.txt"
        )
        with open(path, "w") as fh:
            fh.write(f"{dims} {_fmt(state.t)}\n")
            rows = np.atleast_2d(q)
            for row in rows:
                fh.write(" ".join(_fmt(v) for v in np.atleast_1d(row)) + "\n")
        self.written.append(path)

    def close(self):
        pass


class StateRecorder:
    """Keeps (copies of) states, optionally subsampled."""

    def __init__(self, every=1):
        self.every = every
        self.states = []

    def on_step(self, state, info):
        if info["step"] % self.every == 0:
            self.states.append(state.copy())

    def close(self):
        pass


class ProbeSink:
    """Records q at one grid index each step."""

    def __init__(self, index):
        self.index = index
        self.times = []
        self.values = []

    def on_step(self, state, info):
        self.times.append(state.t)
        self.values.append(float(state.values[self.index][0, 0]))

    def close(self):
        pass


class TimeAverageSink:
    """Accumulates the time average of a per-node function after a warmup."""

    def __init__(self, fn, t_start=0.0):
        self.fn = fn
        self.t_start = t_start
        self.accum = None
        self.count = 0

    def on_step(self, state, info):
        if state.t < self.t_start:
            return
        v = self.fn(state)
        self.accum = v if self.accum is None else self.accum + v
        self.count += 1

    @property
    def average(self):
        return self.accum / max(self.count, 1)

    def close(self):
        pass
