"""Pre-built experiment definitions, runnable end-to-end with no extra inputs.

A scenario bundles flat, serializable specs for the density, grid, initial
condition, boundary conditions, integrator settings, horizon, reference
solution, and outputs.  Geometry constants the literature leaves unstated
(domain sizes, pulse widths, slit layout, drive parameters) are pinned here
so runs are reproducible; acceptance checks reference these fields rather
than hard-coded numbers.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .analysis import (
    dalembert_interface_reference,
    eigenmode_reference_2d,
    fourier_reference_1d,
)
from .boundary import (
    BoundaryAssignment,
    Dirichlet,
    Driven,
    Mur,
    Neumann,
)
from .grid import Grid, grid_1d, grid_2d, seed_state
from .integrator import IntegratorConfig
from .lagrangian import (
    DoublePendulumDensity,
    HarmonicOscillatorDensity,
    Wave1DDensity,
    Wave2DDensity,
    blend_densities,
)


@dataclass
class Scenario:
    name: str
    density: dict
    grid: dict
    ic: dict
    bcs: dict
    integrator: dict
    horizon: float
    reference: dict = field(default_factory=dict)
    output: dict = field(default_factory=lambda: {"snapshot_every": 200})
    extras: dict = field(default_factory=dict)


@dataclass
class RunSetup:
    scenario: Scenario
    density: object
    grid: Grid
    initial: object
    config: IntegratorConfig
    reference: object | None


# -- presets -----------------------------------------------------------------------


def scenario_double_pendulum():
    return Scenario(
        name="double_pendulum",
        density={"kind": "double_pendulum"},
        grid={"kind": "ode"},
        ic={"kind": "pendulum", "q1": 3 * math.pi / 7, "q2": 3 * math.pi / 4},
        bcs={},
        integrator={
            "dt": 0.02, "n_r": 10, "lam": 1.0, "quad": (2,), "guess": "extrapolate",
        },
        horizon=1000.0,
        extras={"dopri_rtol": 3e-7},
    )


_WAVE1D_PAIRINGS = {21: 0.4, 31: 0.2, 51: 0.1}


def scenario_wave_1d(n_nodes=51, dt=None):
    if dt is None:
        dt = _WAVE1D_PAIRINGS.get(n_nodes)
        if dt is None:
            raise ValueError(f"no preset time step for n={n_nodes}; pass dt")
    amplitude, sigma, center = 1.0, 0.5, 5.0
    return Scenario(
        name=f"wave1d_n{n_nodes}",
        density={"kind": "wave1d", "c2": 0.05},
        grid={"kind": "periodic1d", "x0": 0.0, "x1": 10.0, "n": n_nodes},
        ic={
            "kind": "gaussian1d",
            "amplitude": amplitude,
            "sigma": sigma,
            "center": center,
        },
        bcs={},
        integrator={
            "dt": dt, "n_r": 16, "lam": 1.0, "quad": (3, 6), "guess": "extrapolate",
        },
        horizon=1000.0,
        reference={"kind": "fourier1d", "n_modes": 256},
        extras={"mass": amplitude * sigma * math.sqrt(2 * math.pi)},
    )


def scenario_wave_2d():
    return Scenario(
        name="wave2d",
        density={"kind": "wave2d", "c2": 1.0},
        grid={
            "kind": "box2d",
            "x0": -1.0, "x1": 1.0, "nx": 31,
            "y0": -1.0, "y1": 1.0, "ny": 31,
        },
        ic={"kind": "gaussian2d", "amplitude": 1.0, "sigma": 0.18},
        bcs={
            "x_min": "dirichlet(0.0)", "x_max": "dirichlet(0.0)",
            "y_min": "dirichlet(0.0)", "y_max": "dirichlet(0.0)",
        },
        integrator={
            "dt": 0.02, "n_r": 20, "lam": 0.5, "quad": (3, 5, 5),
            "guess": "extrapolate",
        },
        horizon=100.0,
        reference={"kind": "eigenmode2d", "modes": 50},
    )


def scenario_interface():
    c2_left, c2_right = 0.05, 0.2
    sigma, center = 0.25, -0.5
    return Scenario(
        name="interface",
        density={
            "kind": "blend",
            "left": "wave1d", "left_c2": c2_left,
            "right": "wave1d", "right_c2": c2_right,
            "x0": 1.0, "sharpness": 40.0,
        },
        grid={"kind": "line1d", "x0": -2.0, "x1": 6.0, "n": 81},
        ic={
            "kind": "pulse1d",
            "amplitude": 1.0, "sigma": sigma, "center": center,
            "speed": math.sqrt(c2_left),
        },
        bcs={"x_min": "neumann", "x_max": "neumann"},
        integrator={
            "dt": 0.05, "n_r": 16, "lam": 1.0, "quad": (3, 6), "guess": "extrapolate",
        },
        horizon=20.0,
        reference={"kind": "dalembert"},
        extras={
            "interface_x": 1.0,
            "c2_left": c2_left,
            "c2_right": c2_right,
            "split_time": 12.0,
        },
    )


def scenario_double_slit():
    wavelength = 0.8
    omega = 2 * math.pi / wavelength  # c = 1
    return Scenario(
        name="double_slit",
        density={"kind": "wave2d", "c2": 1.0},
        grid={
            "kind": "box2d",
            "x0": 0.0, "x1": 4.0, "nx": 81,
            "y0": -2.0, "y1": 2.0, "ny": 81,
        },
        ic={"kind": "zero"},
        bcs={
            "x_min": f"driven(0.5,{omega!r})",
            "x_max": "mur", "y_min": "mur", "y_max": "mur",
        },
        integrator={
            "dt": 0.02, "n_r": 10, "lam": 0.5, "quad": (3, 5, 5),
            "guess": "extrapolate",
        },
        horizon=40.0,
        output={"snapshot_every": 500},
        extras={
            "barrier_x": 1.0,
            "slit_centers": (-0.5, 0.5),
            "slit_halfwidth": 0.075,
            "observe_x": 3.0,
            "wavelength": wavelength,
            "separation": 1.0,
            "average_start": 20.0,
        },
    )


_PRESETS = {
    "double_pendulum": scenario_double_pendulum,
    "wave1d_n21": lambda: scenario_wave_1d(21),
    "wave1d_n31": lambda: scenario_wave_1d(31),
    "wave1d_n51": lambda: scenario_wave_1d(51),
    "wave2d": scenario_wave_2d,
    "interface": scenario_interface,
    "double_slit": scenario_double_slit,
}


def scenario_names():
    return sorted(_PRESETS)


def get_scenario(name):
    if name not in _PRESETS:
        raise KeyError(f"unknown scenario {name!r}; known: {', '.join(scenario_names())}")
    return _PRESETS[name]()


# -- builders ----------------------------------------------------------------------


def build_density(spec):
    kind = spec["kind"]
    if kind == "wave1d":
        return Wave1DDensity(c2=spec.get("c2", 0.05))
    if kind == "wave2d":
        return Wave2DDensity(c2=spec.get("c2", 1.0))
    if kind == "double_pendulum":
        return DoublePendulumDensity()
    if kind == "oscillator":
        return HarmonicOscillatorDensity(omega=spec.get("omega", 1.0))
    if kind == "blend":
        left = build_density({"kind": spec["left"], "c2": spec["left_c2"]})
        right = build_density({"kind": spec["right"], "c2": spec["right_c2"]})
        return blend_densities(left, right, spec["x0"], spec["sharpness"])
    if kind == "mlp":
        from .mlp import load_density

        return load_density(spec["path"])
    raise ValueError(f"unknown density kind {kind!r}")


def build_grid(spec):
    kind = spec["kind"]
    if kind == "ode":
        return Grid()
    if kind == "periodic1d":
        return grid_1d(spec["x0"], spec["x1"], spec["n"], periodic=True)
    if kind == "line1d":
        return grid_1d(spec["x0"], spec["x1"], spec["n"], periodic=False)
    if kind == "box2d":
        return grid_2d(
            spec["x0"], spec["x1"], spec["nx"], spec["y0"], spec["y1"], spec["ny"]
        )
    raise ValueError(f"unknown grid kind {kind!r}")


def build_initial_state(spec, grid, d_q=1):
    kind = spec["kind"]
    if kind == "pendulum":
        values = np.zeros((2, 2))
        values[0] = [spec["q1"], spec["q2"]]
        from .grid import FieldState

        return FieldState(grid=grid, t=0.0, values=values)
    if kind == "zero":
        return seed_state(grid, 0.0, [None] * 8, d_q=d_q)
    if kind == "gaussian1d":
        A, s, c = spec["amplitude"], spec["sigma"], spec["center"]
        g = lambda x: A * np.exp(-((x - c) ** 2) / (2 * s**2))
        gx = lambda x: -(x - c) / s**2 * g(x)
        return seed_state(grid, 0.0, [g, None, gx, None], d_q=d_q)
    if kind == "pulse1d":
        A, s, c = spec["amplitude"], spec["sigma"], spec["center"]
        speed = spec["speed"]
        g = lambda x: A * np.exp(-((x - c) ** 2) / (2 * s**2))
        gx = lambda x: -(x - c) / s**2 * g(x)
        gxx = lambda x: ((x - c) ** 2 / s**4 - 1.0 / s**2) * g(x)
        return seed_state(
            grid,
            0.0,
            [g, lambda x: -speed * gx(x), gx, lambda x: -speed * gxx(x)],
            d_q=d_q,
        )
    if kind == "gaussian2d":
        A, s = spec["amplitude"], spec["sigma"]
        cx, cy = spec.get("center_x", 0.0), spec.get("center_y", 0.0)
        g = lambda x, y: A * np.exp(-(((x - cx) ** 2 + (y - cy) ** 2)) / (2 * s**2))
        return seed_state(
            grid,
            0.0,
            [
                g, None,
                lambda x, y: -(x - cx) / s**2 * g(x, y),
                lambda x, y: -(y - cy) / s**2 * g(x, y),
                None, None,
                lambda x, y: (x - cx) * (y - cy) / s**4 * g(x, y),
                None,
            ],
            d_q=d_q,
        )
    raise ValueError(f"unknown initial condition kind {kind!r}")


def _parse_bc(text):
    text = text.strip()
    if text.startswith("dirichlet"):
        inner = text[text.index("(") + 1 : text.rindex(")")] if "(" in text else "0.0"
        return Dirichlet(value=float(inner))
    if text == "neumann":
        return Neumann()
    if text == "mur":
        return Mur(speed=None)
    if text.startswith("mur("):
        return Mur(speed=float(text[4:-1]))
    if text.startswith("driven"):
        a, om = text[text.index("(") + 1 : text.rindex(")")].split(",")
        return Driven(amplitude=float(a), omega=float(om))
    raise ValueError(f"unknown boundary condition {text!r}")


def build_bcs(scenario, grid):
    if not scenario.bcs and "barrier_x" not in scenario.extras:
        return None
    faces = {name: _parse_bc(text) for name, text in scenario.bcs.items()}
    barrier = None
    ex = scenario.extras
    if "barrier_x" in ex:
        X, Y = grid.coords()
        col = np.argmin(np.abs(grid.axes[0] - ex["barrier_x"]))
        barrier = np.zeros(grid.shape, dtype=bool)
        open_mask = np.zeros(grid.shape[1], dtype=bool)
        for c in ex["slit_centers"]:
            open_mask |= np.abs(grid.axes[1] - c) <= ex["slit_halfwidth"] + 1e-12
        barrier[col, ~open_mask] = True
    if barrier is None:
        return BoundaryAssignment(faces=faces)
    return BoundaryAssignment(faces=faces, barrier=barrier, barrier_axis=0)


def build_config(scenario, grid):
    spec = scenario.integrator
    return IntegratorConfig(
        dt=spec["dt"],
        n_r=spec.get("n_r", 10),
        lam=spec.get("lam", 1.0),
        quad=tuple(spec["quad"]) if spec.get("quad") else None,
        bcs=build_bcs(scenario, grid),
        guess=spec.get("guess", "extrapolate"),
        fast_path=spec.get("fast_path", "auto"),
    )


def build_reference(scenario, density):
    spec = scenario.reference
    if not spec:
        return None
    kind = spec["kind"]
    if kind == "fourier1d":
        ic = scenario.ic
        A, s, c = ic["amplitude"], ic["sigma"], ic["center"]
        g = scenario.grid
        return fourier_reference_1d(
            lambda x: A * np.exp(-((x - c) ** 2) / (2 * s**2)),
            scenario.density["c2"],
            g["x1"] - g["x0"],
            spec.get("n_modes", 256),
            x0=g["x0"],
        )
    if kind == "eigenmode2d":
        ic = scenario.ic
        A, s = ic["amplitude"], ic["sigma"]
        g = scenario.grid
        return eigenmode_reference_2d(
            lambda x, y: A * np.exp(-(x**2 + y**2) / (2 * s**2)),
            spec.get("modes", 50),
            spec.get("modes", 50),
            (g["x0"], g["x1"], g["y0"], g["y1"]),
            c2=scenario.density["c2"],
        )
    if kind == "dalembert":
        ic = scenario.ic
        ex = scenario.extras
        A, s, c = ic["amplitude"], ic["sigma"], ic["center"]
        g = scenario.grid
        return dalembert_interface_reference(
            lambda u: A * np.exp(-((u - c) ** 2) / (2 * s**2)),
            ex["c2_left"],
            ex["c2_right"],
            ex["interface_x"],
            (c - 4 * s, c + 4 * s),
            (g["x0"], g["x1"]),
        )
    raise ValueError(f"unknown reference kind {kind!r}")


def build_setup(scenario, density_override=None):
    density = density_override or build_density(scenario.density)
    grid = build_grid(scenario.grid)
    initial = build_initial_state(scenario.ic, grid, d_q=density.d_q)
    config = build_config(scenario, grid)
    reference = None
    if density_override is None:
        reference = build_reference(scenario, density)
    elif scenario.reference:
        reference = build_reference(scenario, density)
    return RunSetup(
        scenario=scenario,
        density=density,
        grid=grid,
        initial=initial,
        config=config,
        reference=reference,
    )


# -- flat config serialization --------------------------------------------------------


def _encode(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, (int, float)):
        return repr(value)
    if isinstance(value, (tuple, list)):
        if len(value) == 1:
            return f"{_encode(value[0])},"
        return ", ".join(_encode(v) for v in value)
    return str(value)


def _decode(text):
    text = text.strip()
    if "," in text:
        return tuple(_decode(p) for p in text.split(",") if p.strip() != "")
    if text == "true":
        return True
    if text == "false":
        return False
    try:
        return int(text)
    except ValueError:
        pass
    try:
        return float(text)
    except ValueError:
        pass
    return text


_SECTIONS = ("density", "grid", "ic", "bcs", "integrator", "reference", "output", "extras")


def scenario_to_config(scenario):
    """Diff-friendly key = value text with sections."""
    lines = ["[scenario]", f"name = {scenario.name}", f"horizon = {_encode(scenario.horizon)}", ""]
    for section in _SECTIONS:
        data = getattr(scenario, section)
        if not data:
            continue
        lines.append(f"[{section}]")
        for key in data:
            lines.append(f"{key} = {_encode(data[key])}")
        lines.append("")
    return "\n".join(lines)


def scenario_from_config(text):
    sections = {}
    current = None
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("#") or line.startswith(";"):
            continue
        if line.startswith("[") and line.endswith("]"):
            current = line[1:-1]
            if current != "scenario" and current not in _SECTIONS:
                raise ValueError(f"unknown config section [{current}]")
            sections[current] = {}
            continue
        if current is None or "=" not in line:
            raise ValueError(f"malformed config line: {raw!r}")
        key, _, value = line.partition("=")
        sections[current][key.strip()] = value.strip()
    head = sections.pop("scenario", {})
    if "name" not in head or "horizon" not in head:
        raise ValueError("config must define [scenario] name and horizon")
    decoded = {}
    for sec, data in sections.items():
        if sec == "bcs":
            decoded[sec] = dict(data)
        else:
            decoded[sec] = {k: _decode(v) for k, v in data.items()}
    return Scenario(
        name=head["name"],
        horizon=float(_decode(head["horizon"])),
        density=decoded.get("density", {}),
        grid=decoded.get("grid", {}),
        ic=decoded.get("ic", {}),
        bcs=decoded.get("bcs", {}),
        integrator=decoded.get("integrator", {}),
        reference=decoded.get("reference", {}),
        output=decoded.get("output", {"snapshot_every": 200}),
        extras=decoded.get("extras", {}),
    )
