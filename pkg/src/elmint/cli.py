"""Command-line entry point: simulate, train, verify.

simulate runs a scenario with a chosen method and writes energy.csv, l2.csv
(when a reference exists), snapshot files, and rendered figures; train fits
an MLP density and writes the model file plus loss.csv; verify executes a
named check suite and prints a pass/fail table.

The ELM_WORKERS environment variable caps the numeric thread pools; it must
be applied before the numeric stack loads, which is why the imports below
are deferred.
"""

from __future__ import annotations

import argparse
import os
import sys


def _apply_worker_env():
    workers = os.environ.get("ELM_WORKERS")
    if workers:
        for var in (
            "OMP_NUM_THREADS",
            "OPENBLAS_NUM_THREADS",
            "MKL_NUM_THREADS",
            "NUMEXPR_NUM_THREADS",
        ):
            os.environ.setdefault(var, workers)


_apply_worker_env()

import numpy as np  # noqa: E402


def _fmt(x):
    return format(float(x), ".17g")


def build_parser():
    p = argparse.ArgumentParser(prog="elmint")
    sub = p.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="run a scenario")
    g = sim.add_mutually_exclusive_group(required=True)
    g.add_argument("--scenario", help="preset scenario name")
    g.add_argument("--config", help="path to a scenario config file")
    sim.add_argument(
        "--method",
        default="elm",
        choices=["elm", "rk4", "dopri", "midpoint", "glrk", "verlet", "fd4-glrk"],
    )
    sim.add_argument("--dt", type=float)
    sim.add_argument("--n-r", type=int, dest="n_r")
    sim.add_argument("--lam", type=float)
    sim.add_argument("--horizon", type=float)
    sim.add_argument("--seed", type=int, help="reserved; runs are deterministic")
    sim.add_argument("--density", help="model file overriding the scenario density")
    sim.add_argument("--out", default=None, help="output directory")
    sim.add_argument("--snapshot-every", type=int, dest="snapshot_every")
    sim.add_argument("--no-plots", action="store_true")

    tr = sub.add_parser("train", help="train an MLP density")
    tr.add_argument("--out", default="runs/train")
    tr.add_argument("--seed", type=int, default=0)
    tr.add_argument("--dim", type=int, default=1, choices=[1, 2])
    tr.add_argument("--c2", type=float, default=None)
    tr.add_argument("--k-bound", type=float, default=None, dest="k_bound")
    tr.add_argument("--samples", type=int, default=None)
    tr.add_argument("--steps", type=int, default=None)
    tr.add_argument("--batch", type=int, default=None)
    tr.add_argument("--width", type=int, default=None)
    tr.add_argument("--depth", type=int, default=None)
    tr.add_argument("--lr-peak", type=float, default=None, dest="lr_peak")
    tr.add_argument("--no-plots", action="store_true")

    ver = sub.add_parser("verify", help="run a named check suite")
    ver.add_argument("suite")
    return p


def _load_scenario(args):
    from .scenarios import get_scenario, scenario_from_config

    if args.scenario:
        sc = get_scenario(args.scenario)
    else:
        with open(args.config) as fh:
            sc = scenario_from_config(fh.read())
    if args.dt is not None:
        sc.integrator["dt"] = args.dt
    if args.n_r is not None:
        sc.integrator["n_r"] = args.n_r
    if args.lam is not None:
        sc.integrator["lam"] = args.lam
    if args.horizon is not None:
        sc.horizon = args.horizon
    if args.snapshot_every is not None:
        sc.output["snapshot_every"] = args.snapshot_every
    return sc


def _write_series(path, header, rows):
    with open(path, "w") as fh:
        fh.write(header + "\n")
        for row in rows:
            fh.write(",".join(_fmt(v) for v in row) + "\n")


def _render_outputs(out_dir, energy_rows, l2_rows, final_state, no_plots):
    if no_plots:
        return
    from . import report

    t = [r[0] for r in energy_rows]
    rel = [r[2] for r in energy_rows]
    report.render_energy(t, rel, out_dir)
    if l2_rows:
        report.render_l2([r[0] for r in l2_rows], [r[1] for r in l2_rows], out_dir)
    if final_state is not None:
        report.render_state(final_state, out_dir)


def cmd_simulate(args):
    from .integrator import DivergenceError, rollout
    from .scenarios import build_setup
    from .sinks import EnergySink, L2Sink, SnapshotSink, StateRecorder

    sc = _load_scenario(args)
    density_override = None
    if args.density:
        from .mlp import load_density

        density_override = load_density(args.density)
    setup = build_setup(sc, density_override=density_override)
    out_dir = args.out or os.path.join("runs", f"{sc.name}_{args.method}")
    os.makedirs(out_dir, exist_ok=True)
    n_steps = int(round(sc.horizon / setup.config.dt))

    if args.method == "elm":
        energy_sink = EnergySink(setup.density, os.path.join(out_dir, "energy.csv"))
        sinks = [
            energy_sink,
            SnapshotSink(out_dir, every=sc.output.get("snapshot_every", 200)),
        ]
        l2_sink = None
        if setup.reference is not None:
            l2_sink = L2Sink(setup.reference, os.path.join(out_dir, "l2.csv"))
            sinks.append(l2_sink)
        last = StateRecorder(every=max(n_steps, 1))
        sinks.append(last)
        try:
            rollout(setup.density, setup.initial, setup.config, n_steps, sinks)
        except DivergenceError as exc:
            print(
                f"ERROR kind=divergence step={exc.step} node={exc.node} "
                f"round={exc.round_index}",
                file=sys.stderr,
            )
            return 3
        rows = list(zip(energy_sink.times, energy_sink.values, energy_sink.rel_err))
        l2_rows = (
            list(zip(l2_sink.times, l2_sink.values)) if l2_sink is not None else []
        )
        _render_outputs(out_dir, rows, l2_rows, last.states[-1], args.no_plots)
        print(f"wrote {out_dir}")
        return 0

    return _simulate_baseline(args, sc, setup, out_dir, n_steps)


def _simulate_baseline(args, sc, setup, out_dir, n_steps):
    from .baselines import (
        dopri_integrate,
        fd4_semidiscretize,
        glrk_step,
        implicit_midpoint_step,
        lagrangian_ode_system,
        rk4_step,
        stencil_energy,
        stencil_verlet_step,
    )
    from .grid import FieldState
    from .lagrangian import estimate_wave_speed
    from .sinks import SnapshotSink

    method = args.method
    dt = setup.config.dt
    grid = setup.grid
    energy_rows = []
    l2_rows = []
    final_state = None
    snap = SnapshotSink(out_dir, every=sc.output.get("snapshot_every", 200))

    if grid.n_space == 0:
        if method in ("verlet", "fd4-glrk"):
            print(f"ERROR kind=config method {method} needs a field scenario", file=sys.stderr)
            return 1
        system = lagrangian_ode_system(setup.density)
        y = np.concatenate([setup.initial.values[0], setup.initial.values[1]])
        e0 = system.energy(y)
        energy_rows.append((0.0, e0, 0.0))
        if method == "dopri":
            def on_accept(t, yy):
                e = system.energy(yy)
                energy_rows.append((t, e, abs(e - e0) / abs(e0)))

            dopri_integrate(
                system, y, 0.0, sc.horizon, dt0=dt,
                rtol=sc.extras.get("dopri_rtol", 1e-8), atol=1e-10,
                on_accept=on_accept,
            )
            energy_rows = energy_rows[1:]
        else:
            stepper = {
                "rk4": rk4_step, "midpoint": implicit_midpoint_step, "glrk": glrk_step,
            }[method]
            for i in range(n_steps):
                y = stepper(system, y, i * dt, dt)
                e = system.energy(y)
                energy_rows.append(((i + 1) * dt, e, abs(e - e0) / abs(e0)))
    elif method == "verlet":
        if grid.n_space != 1 or not grid.periodic[0]:
            print("ERROR kind=config verlet needs a periodic 1D scenario", file=sys.stderr)
            return 1
        c2 = estimate_wave_speed(setup.density)
        dx = grid.spacing[0]
        q = setup.initial.values[:, 0, 0].copy()
        qt = setup.initial.values[:, 1, 0].copy()
        e0 = stencil_energy(q, qt, c2, dx)
        energy_rows.append((0.0, e0, 0.0))
        for i in range(n_steps):
            q, qt = stencil_verlet_step(q, qt, dt, c2, dx)
            t = (i + 1) * dt
            e = stencil_energy(q, qt, c2, dx)
            energy_rows.append((t, e, abs(e - e0) / abs(e0)))
            if setup.reference is not None and t <= setup.reference.valid_until:
                qref = setup.reference.evaluate(t, grid.axes[0])
                l2_rows.append((t, np.linalg.norm(q - qref) / np.linalg.norm(qref)))
        vals = np.zeros(grid.shape + (4, 1))
        vals[:, 0, 0] = q
        vals[:, 1, 0] = qt
        final_state = FieldState(grid=grid, t=n_steps * dt, values=vals)
    else:  # rk4 / dopri / midpoint / glrk / fd4-glrk via method of lines
        from .baselines import OdeSystem

        if grid.n_space != 1 or not grid.periodic[0]:
            print("ERROR kind=config method-of-lines baselines need a periodic 1D scenario", file=sys.stderr)
            return 1
        system = fd4_semidiscretize(setup.density, grid.axes[0])
        n = grid.shape[0]
        y = np.concatenate(
            [setup.initial.values[:, 0, 0], setup.initial.values[:, 1, 0]]
        )
        e0 = system.energy(y)
        energy_rows.append((0.0, e0, 0.0))
        stepper = {
            "rk4": rk4_step, "midpoint": implicit_midpoint_step,
            "glrk": glrk_step, "fd4-glrk": glrk_step,
        }.get(args.method)
        if args.method == "dopri":
            def on_accept(t, yy):
                e = system.energy(yy)
                energy_rows.append((t, e, abs(e - e0) / abs(e0)))

            y = dopri_integrate(
                system, y, 0.0, sc.horizon, dt0=dt, rtol=1e-8, atol=1e-10,
                on_accept=on_accept,
            )
            energy_rows = energy_rows[1:]
        else:
            for i in range(n_steps):
                y = stepper(system, y, i * dt, dt)
                t = (i + 1) * dt
                e = system.energy(y)
                energy_rows.append((t, e, abs(e - e0) / abs(e0)))
                if setup.reference is not None and t <= setup.reference.valid_until:
                    qref = setup.reference.evaluate(t, grid.axes[0])
                    l2_rows.append(
                        (t, np.linalg.norm(y[:n] - qref) / np.linalg.norm(qref))
                    )
        vals = np.zeros(grid.shape + (4, 1))
        vals[:, 0, 0] = y[:n]
        vals[:, 1, 0] = y[n:]
        final_state = FieldState(grid=grid, t=sc.horizon, values=vals)

    _write_series(os.path.join(out_dir, "energy.csv"), "t,E,rel_err", energy_rows)
    if l2_rows:
        _write_series(os.path.join(out_dir, "l2.csv"), "t,rel_l2", l2_rows)
    if final_state is not None:
        snap.on_step(final_state, {"step": 0})
    _render_outputs(out_dir, energy_rows, l2_rows, final_state, args.no_plots)
    print(f"wrote {out_dir}")
    return 0


def cmd_train(args):
    from .mlp import TrainConfig, TrainingDivergedError, save_density, train

    cfg = TrainConfig(n_space=args.dim, seed=args.seed)
    if args.dim == 2:
        cfg.c2 = 1.0
        cfg.k_bound = 6.0
        cfg.width = 40
        cfg.n_samples = 4000
    for name in ("c2", "k_bound", "samples", "steps", "batch", "width", "depth", "lr_peak"):
        val = getattr(args, name)
        if val is not None:
            field = {"samples": "n_samples", "batch": "batch_size"}.get(name, name)
            setattr(cfg, field, val)
    os.makedirs(args.out, exist_ok=True)
    try:
        result = train(cfg)
    except TrainingDivergedError as exc:
        print(f"ERROR kind=training-diverged step={exc.step}", file=sys.stderr)
        return 3
    model_path = os.path.join(args.out, "model.elmd")
    save_density(result.density, model_path)
    rows = [
        (i, result.loss_history[i], result.lr_history[i])
        for i in range(len(result.loss_history))
    ]
    _write_series(os.path.join(args.out, "loss.csv"), "step,loss,lr", rows)
    if not args.no_plots:
        from . import report

        report.render_loss(result.loss_history, args.out)
    print(f"wrote {model_path}")
    return 0


def cmd_verify(args):
    from .verify import run_suite

    try:
        results, ok = run_suite(args.suite)
    except KeyError as exc:
        print(f"ERROR kind=unknown-suite {exc}", file=sys.stderr)
        return 1
    width = max(len(r.name) for r in results)
    for r in results:
        mark = "PASS" if r.passed else "FAIL"
        print(f"{mark}  {r.name:<{width}}  {r.detail}")
    return 0 if ok else 1


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        if args.command == "simulate":
            return cmd_simulate(args)
        if args.command == "train":
            return cmd_train(args)
        return cmd_verify(args)
    except (ValueError, KeyError, OSError) as exc:
        print(f"ERROR kind=config {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
