"""TOML run-configuration files.

Schema (all sections except [solver] have usable defaults):

    [medium]
    preset = "cosine-1d"        # "cosine-1d" | "constant" | "smoothed-square-2d"
    mean = 1.5                  # cosine-1d
    amplitude = 1.4             # cosine-1d
    value = 1.0                 # constant
    dimension = 1               # constant

    [datum]
    kind = "gaussian"
    sigma = 0.4
    axes = [0]                  # active axes; default: all axes

    [grid]
    half_widths = [52.0]        # omit for an automatic cone-check domain
    dx = [0.042]                # omit for the preset grid rules

    [solver]
    epsilon = 0.2
    final_time = 25.0           # or: t0 = 1.0  (horizon t0 / eps^2)
    dt = 0.008                  # omit for the preset time-step rules
    boundary = ["zero"]         # per axis: "zero" | "periodic"
    output_every = 0            # snapshot cadence in steps; 0 = final only
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass
from pathlib import Path

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from . import hetero_fdm
from .core_types import (InitialDatum, PeriodicMedium, SimulationConfig,
                         divisor_time_step, make_constant_medium,
                         make_cosine_medium_1d, make_gaussian_datum,
                         make_smoothed_square_medium_2d)
from .harness import metrics


@dataclass(frozen=True)
class RunSetup:
    medium: PeriodicMedium
    datum: InitialDatum
    config: SimulationConfig


def medium_from_spec(spec: dict) -> PeriodicMedium:
    preset = spec.get("preset", "cosine-1d")
    if preset == "cosine-1d":
        return make_cosine_medium_1d(spec.get("mean", 1.5), spec.get("amplitude", 1.4))
    if preset == "constant":
        return make_constant_medium(spec.get("value", 1.0), spec.get("dimension", 1))
    if preset == "smoothed-square-2d":
        return make_smoothed_square_medium_2d()
    raise ValueError(f"unknown medium preset {preset!r}")


def datum_from_spec(spec: dict, dimension: int) -> InitialDatum:
    kind = spec.get("kind", "gaussian")
    if kind != "gaussian":
        raise ValueError(f"unknown datum kind {kind!r}")
    sigma = spec.get("sigma", 0.4)
    axes = spec.get("axes")
    mask = None
    if axes is not None:
        mask = [d in set(axes) for d in range(dimension)]
    return make_gaussian_datum(sigma, dimension, mask)


def _auto_grid(medium: PeriodicMedium, datum: InitialDatum, epsilon: float,
               final_time: float, boundary: tuple[str, ...],
               dx: tuple[float, ...] | None) -> tuple[tuple[float, ...], tuple[float, ...]]:
    n = medium.dimension
    if dx is None:
        dx = tuple(2.0 * np.pi * epsilon / metrics.HETERO_POINTS_PER_PERIOD
                   for _ in range(n))
    amax = metrics.max_coefficient(medium)
    reach = datum.truncation_radius + math.sqrt(amax) * final_time
    half_widths = []
    for d in range(n):
        if boundary[d] == "periodic":
            half_widths.append(np.pi * epsilon)
        else:
            half_widths.append(reach + 4.0 * dx[d])
    return tuple(half_widths), tuple(dx)


def load_setup(path: str | Path) -> RunSetup:
    """Parse a TOML configuration file into (medium, datum, config)."""
    with open(path, "rb") as fh:
        doc = tomllib.load(fh)
    return setup_from_dict(doc)


def setup_from_dict(doc: dict) -> RunSetup:
    medium = medium_from_spec(doc.get("medium", {}))
    n = medium.dimension
    datum = datum_from_spec(doc.get("datum", {}), n)
    solver = doc.get("solver", {})
    if "epsilon" not in solver:
        raise ValueError("[solver] section must set epsilon")
    epsilon = float(solver["epsilon"])
    if "final_time" in solver:
        final_time = float(solver["final_time"])
    elif "t0" in solver:
        final_time = float(solver["t0"]) / epsilon**2
    else:
        raise ValueError("[solver] must set final_time or t0")
    boundary = solver.get("boundary", ["zero"] * n)
    if isinstance(boundary, str):
        boundary = [boundary] * n
    boundary = tuple(boundary)

    grid = doc.get("grid", {})
    dx = grid.get("dx")
    if dx is not None:
        dx = tuple(float(v) for v in (dx if isinstance(dx, list) else [dx] * n))
    half_widths = grid.get("half_widths")
    if half_widths is None or dx is None:
        auto_hw, auto_dx = _auto_grid(medium, datum, epsilon, final_time, boundary, dx)
        dx = dx or auto_dx
        half_widths = half_widths or auto_hw
    half_widths = tuple(float(v) for v in half_widths)

    dt = solver.get("dt")
    if dt is None:
        amax = metrics.max_coefficient(medium)
        target = metrics.HETERO_DT_1D if n == 1 else metrics.HETERO_DT_2D
        inv = sum(1.0 / d**2 for d in dx)
        bound = hetero_fdm.CFL_SAFETY / math.sqrt(amax * inv)
        dt = divisor_time_step(target, bound, final_time)
    config = SimulationConfig(
        epsilon=epsilon, final_time=final_time, half_widths=half_widths,
        dx=dx, dt=float(dt), boundary=boundary, datum=datum,
        output_every=int(solver.get("output_every", 0)))
    return RunSetup(medium=medium, datum=datum, config=config)
