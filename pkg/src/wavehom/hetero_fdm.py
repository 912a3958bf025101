"""Finite-difference solver for d_tt u = div(a_eps grad u) with a_eps(x) = a_Y(x/eps).

Space is discretized with a fourth-order divergence-form stencil built on
locally averaged coefficients,

    (A u)_j = (4/(3 dx)) [ a_{j+1/2} (u_{j+1}-u_j)/dx - a_{j-1/2} (u_j-u_{j-1})/dx ]
            - (1/(6 dx)) [ a_{j+1} (u_{j+2}-u_j)/(2 dx) - a_{j-1} (u_j-u_{j-2})/(2 dx) ],

    a_{j+1/2} = (1/dx) int_{x_j}^{x_{j+1}} a_eps,   a_j = (1/(2 dx)) int_{x_{j-1}}^{x_{j+1}} a_eps,

applied dimension by dimension for diagonal media in 2D.  Time stepping is
the centered second-order leapfrog u^{m+1} = 2 u^m - u^{m-1} + dt^2 (A u^m)_j
with the Taylor start u^1 = u^0 + (dt^2/2) A u^0.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .core_types import GridField, PeriodicMedium, SimulationConfig, WaveState

# Quadrature nodes per grid interval when averaging the coefficient; more
# nodes are used once dx exceeds a quarter period of the oscillation.
MIN_QUADRATURE_NODES = 8

# Fraction of the plain von Neumann limit dx/sqrt(max a) admitted by runs.
CFL_SAFETY = 0.5


class InstabilityError(RuntimeError):
    """The leapfrog iteration produced non-finite values."""

    def __init__(self, step: int, time_value: float):
        super().__init__(f"instability detected at step {step} (t = {time_value:g})")
        self.step = step
        self.time = time_value


class CFLError(ValueError):
    """Requested time step violates the stability rule."""


@dataclass(frozen=True, eq=False)
class AveragedCoefficients:
    """Cell averages of the oscillatory coefficient feeding the stencil.

    ``half[d]`` holds averages over the intervals between consecutive nodes of
    the axis-d grid extended by two ghost nodes per side (so axis d has
    N_d + 3 entries); ``integer[d]`` holds the centered two-interval averages
    aligned with the extended nodes (N_d + 4 entries, outermost two unused).
    In 2D the arrays keep interior size along the other axis.
    """

    spacing: tuple[float, ...]
    boundary: tuple[str, ...]
    shape: tuple[int, ...]
    half: tuple[np.ndarray, ...]
    integer: tuple[np.ndarray, ...]
    max_coefficient: float
    min_coefficient: float

    @property
    def dimension(self) -> int:
        return len(self.shape)


def _interval_nodes(edges: np.ndarray, n_nodes: int) -> tuple[np.ndarray, np.ndarray]:
    """Gauss-Legendre nodes/weights on each interval of a 1D edge array.

    Returns nodes of shape (n_intervals, n_nodes) and the common weight
    vector scaled for interval averages (weights sum to 1).
    """
    xi, wi = np.polynomial.legendre.leggauss(n_nodes)
    mid = 0.5 * (edges[:-1] + edges[1:])
    half = 0.5 * (edges[1:] - edges[:-1])
    nodes = mid[:, None] + half[:, None] * xi[None, :]
    return nodes, wi / 2.0


def average_coefficients(medium: PeriodicMedium, epsilon: float,
                         grid: GridField,
                         boundary: tuple[str, ...] | None = None) -> AveragedCoefficients:
    """Interval averages of a_eps = a_Y(./eps) along every axis of ``grid``.

    The quadrature resolves the eps-scale oscillation: the node count per
    interval is max(8, ceil(16 dx / eps)).
    """
    n = grid.dimension
    if boundary is None:
        boundary = ("zero",) * n
    halves, integers = [], []
    vmax, vmin = -np.inf, np.inf
    for d in range(n):
        dx = grid.spacing[d]
        n_nodes = max(MIN_QUADRATURE_NODES, int(math.ceil(16.0 * dx / epsilon)))
        edges = grid.origin[d] + dx * np.arange(-2, grid.shape[d] + 2)
        nodes, weights = _interval_nodes(edges, n_nodes)  # (N+3, nn)
        other = [grid.axis(e) for e in range(n) if e != d]
        shape = nodes.shape + tuple(len(ax) for ax in other)
        points = np.zeros(shape + (n,))
        expand = (slice(None), slice(None)) + (None,) * (n - 1)
        points[..., d] = nodes[expand]
        for pos, e in enumerate(e for e in range(n) if e != d):
            idx = [None] * (n + 1)
            idx[2 + pos] = slice(None)
            points[..., e] = other[pos][tuple(idx)]
        values = medium.diagonal(points / epsilon)[..., d]
        if not np.all(np.isfinite(values)):
            raise RuntimeError("coefficient evaluation returned non-finite values")
        half = np.tensordot(weights, values, axes=([0], [1]))  # (N+3, other...)
        integer = np.empty((half.shape[0] + 1,) + half.shape[1:])
        integer[1:-1] = 0.5 * (half[:-1] + half[1:])
        integer[0] = integer[1]
        integer[-1] = integer[-2]
        if np.min(half) <= 0.0 or np.min(integer) <= 0.0:
            raise RuntimeError("averaging lost positivity; the quadrature is broken")
        # restore grid axis order: the extended axis belongs at position d
        halves.append(np.ascontiguousarray(np.moveaxis(half, 0, d)))
        integers.append(np.ascontiguousarray(np.moveaxis(integer, 0, d)))
        vmax = max(vmax, float(np.max(values)))
        vmin = min(vmin, float(np.min(values)))
    return AveragedCoefficients(
        spacing=grid.spacing,
        boundary=tuple(boundary),
        shape=grid.shape,
        half=tuple(halves),
        integer=tuple(integers),
        max_coefficient=vmax,
        min_coefficient=vmin,
    )


def _padded(values: np.ndarray, boundary: tuple[str, ...]) -> np.ndarray:
    out = np.zeros(tuple(s + 4 for s in values.shape))
    core = tuple(slice(2, -2) for _ in values.shape)
    out[core] = values
    if values.ndim == 1:
        _kernels.refresh_ghosts_1d(out, boundary[0] == "periodic")
    else:
        _kernels.refresh_ghosts_2d(out, boundary[0] == "periodic",
                                   boundary[1] == "periodic")
    return out


def apply_stencil(u: GridField, coeffs: AveragedCoefficients) -> GridField:
    """One application of the fourth-order operator A to a field."""
    if u.shape != coeffs.shape:
        raise ValueError("field and coefficients live on different grids")
    padded = _padded(np.asarray(u.values, dtype=float), coeffs.boundary)
    out = np.empty(u.shape)
    if u.dimension == 1:
        _kernels.apply_hetero_1d(padded, coeffs.integer[0], coeffs.half[0],
                                 coeffs.spacing[0], out)
    elif u.dimension == 2:
        _kernels.apply_hetero_2d(padded, coeffs.integer[0], coeffs.half[0],
                                 coeffs.integer[1], coeffs.half[1],
                                 coeffs.spacing[0], coeffs.spacing[1], out)
    else:
        raise NotImplementedError("stencil implemented for 1D and 2D grids")
    return u.with_values(out)


def first_step(f: GridField, coeffs: AveragedCoefficients, dt: float) -> WaveState:
    """Initialize the leapfrog: u^0 = f, u^1 = u^0 + (dt^2/2) A u^0."""
    accel = apply_stencil(f, coeffs)
    u1 = f.with_values(f.values + 0.5 * dt * dt * accel.values)
    return WaveState(u_prev=f, u_curr=u1, step_index=1, dt=dt)


def step(state: WaveState, coeffs: AveragedCoefficients) -> WaveState:
    """One leapfrog step u^{m+1} = 2 u^m - u^{m-1} + dt^2 A u^m."""
    accel = apply_stencil(state.u_curr, coeffs)
    new = 2.0 * state.u_curr.values - state.u_prev.values + state.dt**2 * accel.values
    if not np.all(np.isfinite(new)):
        raise InstabilityError(state.step_index + 1, (state.step_index + 1) * state.dt)
    return WaveState(u_prev=state.u_curr, u_curr=state.u_curr.with_values(new),
                     step_index=state.step_index + 1, dt=state.dt)


def discrete_energy(state: WaveState, coeffs: AveragedCoefficients) -> float:
    """Leapfrog energy (1/2)||(u^m - u^{m-1})/dt||^2 - (1/2) <A u^m, u^{m-1}>.

    The potential part interpolates the a-weighted gradient square between
    the two stored time levels, which makes the quantity an exact invariant
    of the scheme; its boundedness is the discrete counterpart of the
    continuous energy identity.
    """
    vol = state.u_curr.cell_volume()
    rate = (state.u_curr.values - state.u_prev.values) / state.dt
    kinetic = 0.5 * float(np.sum(rate * rate)) * vol
    accel = apply_stencil(state.u_curr, coeffs)
    potential = -0.5 * float(np.sum(accel.values * state.u_prev.values)) * vol
    return kinetic + potential


def cfl_time_step(coeffs: AveragedCoefficients) -> float:
    """Largest admitted dt: CFL_SAFETY / sqrt(max a * sum_d dx_d^-2)."""
    inv = sum(1.0 / dx**2 for dx in coeffs.spacing)
    return CFL_SAFETY / math.sqrt(coeffs.max_coefficient * inv)


@dataclass(frozen=True, eq=False)
class RunResult:
    """Snapshot sequence and effective parameters of one solver run."""

    times: tuple[float, ...]
    fields: tuple[GridField, ...]
    dt: float
    steps: int
    wall_clock: float
    energies: tuple[float, ...]
    params: dict

    def final(self) -> GridField:
        return self.fields[-1]

    @property
    def final_time(self) -> float:
        return self.times[-1]


def _snapshot_steps(n_steps: int, every: int) -> list[int]:
    if every and every > 0:
        marks = sorted(set(range(0, n_steps + 1, every)) | {0, n_steps})
    else:
        marks = [0, n_steps]
    return marks


def run(config: SimulationConfig, medium: PeriodicMedium,
        track_energy: bool = False) -> RunResult:
    """Advance the heterogeneous wave equation to the configured final time."""
    if medium.dimension != config.dimension:
        raise ValueError("medium and configuration dimensions differ")
    started = time.perf_counter()
    grid = config.build_grid()
    coeffs = average_coefficients(medium, config.epsilon, grid, config.boundary)
    config.check_domain(math.sqrt(coeffs.max_coefficient))
    dt_max = cfl_time_step(coeffs)
    if config.dt > dt_max * (1.0 + 1e-9):
        raise CFLError(f"dt = {config.dt:g} exceeds the stability rule "
                       f"{dt_max:g} = {CFL_SAFETY} * dx / sqrt(max a)")
    n_steps = config.n_steps()
    u0 = config.sample_datum()

    state = first_step(u0, coeffs, config.dt)
    curr = _padded(state.u_curr.values, coeffs.boundary)
    prev = _padded(state.u_prev.values, coeffs.boundary)
    core = tuple(slice(2, -2) for _ in grid.shape)

    times, fields, energies = [0.0], [u0], []
    marks = [m for m in _snapshot_steps(n_steps, config.output_every) if m >= 1]
    m_now = 1
    for mark in marks:
        block = mark - m_now
        if block > 0:
            if grid.dimension == 1:
                done, ok = _kernels.advance_hetero_1d(
                    prev, curr, coeffs.integer[0], coeffs.half[0],
                    coeffs.spacing[0], config.dt, block,
                    coeffs.boundary[0] == "periodic")
            elif grid.dimension == 2:
                done, ok = _kernels.advance_hetero_2d(
                    prev, curr, coeffs.integer[0], coeffs.half[0],
                    coeffs.integer[1], coeffs.half[1],
                    coeffs.spacing[0], coeffs.spacing[1], config.dt, block,
                    coeffs.boundary[0] == "periodic",
                    coeffs.boundary[1] == "periodic")
            else:
                raise NotImplementedError("runs implemented for 1D and 2D grids")
            if done % 2 == 1:
                prev, curr = curr, prev
            m_now += done
            if not ok:
                raise InstabilityError(m_now, m_now * config.dt)
        times.append(mark * config.dt)
        fields.append(grid.with_values(curr[core].copy()))
        if track_energy:
            snap_state = WaveState(u_prev=grid.with_values(prev[core].copy()),
                                   u_curr=grid.with_values(curr[core].copy()),
                                   step_index=m_now, dt=config.dt)
            energies.append(discrete_energy(snap_state, coeffs))
    wall = time.perf_counter() - started
    params = {
        "solver": "hetero_fdm",
        "kernel_backend": _kernels.backend(),
        "epsilon": config.epsilon,
        "dt": config.dt,
        "dx": list(config.dx),
        "boundary": list(config.boundary),
        "final_time": n_steps * config.dt,
        "steps": n_steps,
        "grid_shape": list(grid.shape),
        "medium": medium.label,
        "datum": config.datum.label,
        "max_coefficient": coeffs.max_coefficient,
    }
    return RunResult(times=tuple(times), fields=tuple(fields), dt=config.dt,
                     steps=n_steps, wall_clock=wall, energies=tuple(energies),
                     params=params)
