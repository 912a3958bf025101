"""Solver for the well-posed weakly dispersive effective equation.

The semidiscrete problem couples second-order centered stencils,

    (I - eps^2 E D2) d_tt w = (A D2 - eps^2 F D4) w,

and time is advanced with the same centered second-order rule as the
heterogeneous solver.  Each step solves one symmetric positive-definite
banded system for the acceleration; the operator I - eps^2 E D2 is assembled
and factorized once per run.
"""

from __future__ import annotations

import math
import time
from dataclasses import dataclass
from typing import Callable

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla
from scipy.linalg import cho_solve_banded, cholesky_banded

from .core_types import GridField, SimulationConfig, WaveState
from .dispersion import EffectiveTensors
from .hetero_fdm import InstabilityError, RunResult, _snapshot_steps


class FactorizationError(RuntimeError):
    """The implicit operator could not be factorized (non-SPD assembly)."""


def _padded(values: np.ndarray, boundary: tuple[str, ...], width: int) -> np.ndarray:
    out = np.pad(values, width, mode="wrap")
    for d, mode in enumerate(boundary):
        if mode != "periodic":
            sl = [slice(None)] * out.ndim
            sl[d] = slice(0, width)
            out[tuple(sl)] = 0.0
            sl[d] = slice(out.shape[d] - width, out.shape[d])
            out[tuple(sl)] = 0.0
    return out


def _d2_values(values: np.ndarray, axis: int, dx: float,
               boundary: tuple[str, ...]) -> np.ndarray:
    p = _padded(values, boundary, 1)
    lo = [slice(1, -1)] * values.ndim
    hi = [slice(1, -1)] * values.ndim
    lo[axis] = slice(0, -2)
    hi[axis] = slice(2, None)
    core = tuple(slice(1, -1) for _ in range(values.ndim))
    return (p[tuple(hi)] - 2.0 * p[core] + p[tuple(lo)]) / (dx * dx)


def _d4_values(values: np.ndarray, axis: int, dx: float,
               boundary: tuple[str, ...]) -> np.ndarray:
    p = _padded(values, boundary, 2)
    core = tuple(slice(2, -2) for _ in range(values.ndim))

    def shifted(offset: int) -> np.ndarray:
        sl = [slice(2, -2)] * values.ndim
        sl[axis] = slice(2 + offset, values.shape[axis] + 2 + offset)
        return p[tuple(sl)]

    return (shifted(2) - 4.0 * shifted(1) + 6.0 * p[core] - 4.0 * shifted(-1)
            + shifted(-2)) / dx**4


def stencil_d2(u: GridField, axis: int, boundary="zero") -> GridField:
    """Standard centered second difference (D2 w)_j = (w_{j+1}-2w_j+w_{j-1})/dx^2."""
    if u.shape[axis] < 3:
        raise ValueError("second-difference stencil needs at least 3 points")
    bnd = (boundary,) * u.dimension if isinstance(boundary, str) else tuple(boundary)
    return u.with_values(_d2_values(np.asarray(u.values, dtype=float), axis,
                                    u.spacing[axis], bnd))


def stencil_d4(u: GridField, axis: int, boundary="zero") -> GridField:
    """Pure fourth difference on one axis (mixed derivatives compose two D2)."""
    if u.shape[axis] < 5:
        raise ValueError("fourth-difference stencil needs at least 5 points")
    bnd = (boundary,) * u.dimension if isinstance(boundary, str) else tuple(boundary)
    return u.with_values(_d4_values(np.asarray(u.values, dtype=float), axis,
                                    u.spacing[axis], bnd))


def _scalar_of_identity(matrix: np.ndarray, name: str) -> float:
    matrix = np.asarray(matrix, dtype=float)
    n = matrix.shape[0]
    value = float(matrix[0, 0])
    if not np.allclose(matrix, value * np.eye(n), atol=1e-13 * (1.0 + abs(value))):
        raise ValueError(f"{name} must be a multiple of the identity")
    return value


def _symmetrize4(t: np.ndarray) -> np.ndarray:
    from itertools import permutations

    acc = np.zeros_like(t)
    for perm in permutations(range(4)):
        acc += np.transpose(t, perm)
    return acc / 24.0


def _fourth_order_coefficients(f: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Split a fourth-order tensor into axis-quartic and pair-product terms.

    Returns (diag, cross) with diag[i] = F_iiii and cross[i, j] the total
    coefficient of d_i^2 d_j^2 for i < j.  Since partial derivatives commute,
    the operator F D4 only sees the symmetrization of F; tensors whose
    symmetrization carries other monomials (three-plus-one index splits) are
    rejected.
    """
    f = np.asarray(f, dtype=float)
    n = f.shape[0]
    diag = np.array([f[i, i, i, i] for i in range(n)])
    cross = np.zeros((n, n))
    rebuilt = np.zeros_like(f)
    for i in range(n):
        rebuilt[i, i, i, i] = diag[i]
    for i in range(n):
        for j in range(i + 1, n):
            total = (f[i, i, j, j] + f[i, j, i, j] + f[i, j, j, i]
                     + f[j, j, i, i] + f[j, i, j, i] + f[j, i, i, j])
            cross[i, j] = total
            share = total / 6.0
            for idx in ((i, i, j, j), (i, j, i, j), (i, j, j, i),
                        (j, j, i, i), (j, i, j, i), (j, i, i, j)):
                rebuilt[idx] = share
    gap = np.max(np.abs(_symmetrize4(f) - _symmetrize4(rebuilt)))
    if gap > 1e-12 * (1.0 + np.max(np.abs(f))):
        raise ValueError("fourth-order tensor has unsupported index structure")
    return diag, cross


def _apply_second_order(a: np.ndarray, values: np.ndarray,
                        spacing: tuple[float, ...],
                        boundary: tuple[str, ...]) -> np.ndarray:
    out = np.zeros_like(values)
    for d in range(values.ndim):
        out += a[d, d] * _d2_values(values, d, spacing[d], boundary)
    return out


def _apply_fourth_order(diag: np.ndarray, cross: np.ndarray, values: np.ndarray,
                        spacing: tuple[float, ...],
                        boundary: tuple[str, ...]) -> np.ndarray:
    out = np.zeros_like(values)
    n = values.ndim
    for d in range(n):
        if diag[d] != 0.0:
            out += diag[d] * _d4_values(values, d, spacing[d], boundary)
    for i in range(n):
        for j in range(i + 1, n):
            if cross[i, j] != 0.0:
                inner = _d2_values(values, j, spacing[j], boundary)
                out += cross[i, j] * _d2_values(inner, i, spacing[i], boundary)
    return out


@dataclass(eq=False)
class ImplicitOperator:
    """Factorized representation of I - eps^2 E D2 on a fixed grid."""

    epsilon: float
    e_value: float
    spacing: tuple[float, ...]
    shape: tuple[int, ...]
    boundary: tuple[str, ...]
    _solve: Callable[[np.ndarray], np.ndarray]

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        return self._solve(np.asarray(rhs, dtype=float))

    def apply(self, values: np.ndarray) -> np.ndarray:
        """Matrix-free application of I - eps^2 E D2 (residual checks)."""
        lap = np.zeros_like(values)
        for d in range(values.ndim):
            lap += _d2_values(values, d, self.spacing[d], self.boundary)
        return values - self.epsilon**2 * self.e_value * lap

    def residual(self, x: np.ndarray, rhs: np.ndarray) -> float:
        num = np.linalg.norm((self.apply(x) - rhs).ravel())
        den = np.linalg.norm(np.asarray(rhs).ravel())
        return float(num / den) if den > 0 else float(num)


def _d2_matrix_1d(n: int, dx: float, periodic: bool) -> sp.csc_matrix:
    main = -2.0 * np.ones(n)
    off = np.ones(n - 1)
    mat = sp.diags([off, main, off], [-1, 0, 1], format="lil")
    if periodic:
        mat[0, n - 1] = 1.0
        mat[n - 1, 0] = 1.0
    return (mat / (dx * dx)).tocsc()


def build_implicit(e, epsilon: float, grid: GridField,
                   boundary="zero") -> ImplicitOperator:
    """Assemble and factorize I - eps^2 E D2 once per run.

    ``e`` may be the (nonnegative) scalar E or the matrix E = e I.  The
    assembled system is symmetric positive definite because -D2 is positive
    semidefinite; a sparse direct factorization gives solves exact to
    rounding.
    """
    bnd = (boundary,) * grid.dimension if isinstance(boundary, str) else tuple(boundary)
    e_value = _scalar_of_identity(e, "E") if np.ndim(e) == 2 else float(e)
    if e_value < 0:
        raise ValueError("E must be positive semidefinite")
    shape = grid.shape
    if e_value == 0.0:
        solve = lambda rhs: rhs.copy()  # noqa: E731  identity: case E = 0
        return ImplicitOperator(epsilon, e_value, grid.spacing, shape, bnd, solve)
    if grid.dimension == 1 and bnd[0] == "zero":
        # tridiagonal SPD system: factor once with a banded Cholesky
        n = shape[0]
        c = epsilon**2 * e_value / grid.spacing[0] ** 2
        bands = np.zeros((2, n))
        bands[0, 1:] = -c
        bands[1, :] = 1.0 + 2.0 * c
        try:
            factor = cholesky_banded(bands, lower=False)
        except np.linalg.LinAlgError as exc:
            raise FactorizationError(f"banded factorization failed: {exc}") from exc
        solve = lambda rhs: cho_solve_banded((factor, False), rhs)  # noqa: E731
        return ImplicitOperator(epsilon, e_value, grid.spacing, shape, bnd, solve)
    mats = [_d2_matrix_1d(shape[d], grid.spacing[d], bnd[d] == "periodic")
            for d in range(grid.dimension)]
    lap = None
    for d, m in enumerate(mats):
        eyes = [sp.identity(shape[e]) for e in range(grid.dimension)]
        eyes[d] = m
        term = eyes[0]
        for other in eyes[1:]:
            term = sp.kron(term, other)
        lap = term if lap is None else lap + term
    system = (sp.identity(int(np.prod(shape))) - epsilon**2 * e_value * lap).tocsc()
    try:
        factor = spla.splu(system)
    except RuntimeError as exc:
        raise FactorizationError(f"implicit operator factorization failed: {exc}") from exc

    def solve(rhs: np.ndarray) -> np.ndarray:
        return factor.solve(rhs.ravel()).reshape(shape)

    return ImplicitOperator(epsilon, e_value, grid.spacing, shape, bnd, solve)


def _acceleration(values: np.ndarray, op: ImplicitOperator, a: np.ndarray,
                  f_diag: np.ndarray, f_cross: np.ndarray,
                  source: np.ndarray | None = None) -> np.ndarray:
    rhs = _apply_second_order(a, values, op.spacing, op.boundary)
    rhs -= op.epsilon**2 * _apply_fourth_order(f_diag, f_cross, values,
                                               op.spacing, op.boundary)
    if source is not None:
        rhs = rhs + source
    return op.solve(rhs)


def first_step(f: GridField, op: ImplicitOperator, a: np.ndarray,
               f_tensor: np.ndarray, epsilon: float, dt: float,
               source: np.ndarray | None = None) -> WaveState:
    """w^0 = f and w^1 = w^0 + (dt^2/2) z^0 with (I - eps^2 E D2) z^0 = rhs(w^0)."""
    del epsilon  # carried by the operator; kept for signature symmetry
    a = np.asarray(a, dtype=float)
    diag, cross = _fourth_order_coefficients(f_tensor)
    z0 = _acceleration(np.asarray(f.values, dtype=float), op, a, diag, cross, source)
    u1 = f.with_values(f.values + 0.5 * dt * dt * z0)
    return WaveState(u_prev=f, u_curr=u1, step_index=1, dt=dt)


def step(state: WaveState, op: ImplicitOperator, a: np.ndarray,
         f_tensor: np.ndarray, epsilon: float,
         source: np.ndarray | None = None) -> WaveState:
    """One centered step with the per-step implicit acceleration solve."""
    del epsilon
    a = np.asarray(a, dtype=float)
    diag, cross = _fourth_order_coefficients(f_tensor)
    z = _acceleration(np.asarray(state.u_curr.values, dtype=float), op, a,
                      diag, cross, source)
    new = 2.0 * state.u_curr.values - state.u_prev.values + state.dt**2 * z
    if not np.all(np.isfinite(new)):
        raise InstabilityError(state.step_index + 1, (state.step_index + 1) * state.dt)
    return WaveState(u_prev=state.u_curr, u_curr=state.u_curr.with_values(new),
                     step_index=state.step_index + 1, dt=state.dt)


def discrete_energy(state: WaveState, op: ImplicitOperator, a: np.ndarray,
                    f_tensor: np.ndarray) -> float:
    """Exact leapfrog invariant of the implicit scheme.

    (1/2) <(I - eps^2 E D2) d, d>/dt^2 - (1/2) <(A D2 - eps^2 F D4) w^m, w^{m-1}>
    with d = w^m - w^{m-1}; bounded iff the run is stable.
    """
    a = np.asarray(a, dtype=float)
    diag, cross = _fourth_order_coefficients(f_tensor)
    vol = state.u_curr.cell_volume()
    d = (state.u_curr.values - state.u_prev.values) / state.dt
    kinetic = 0.5 * float(np.sum(d * op.apply(d))) * vol
    b = _apply_second_order(a, state.u_curr.values, op.spacing, op.boundary)
    b -= op.epsilon**2 * _apply_fourth_order(diag, cross, state.u_curr.values,
                                             op.spacing, op.boundary)
    potential = -0.5 * float(np.sum(b * state.u_prev.values)) * vol
    return kinetic + potential


def stability_time_step(tensors: EffectiveTensors, epsilon: float,
                        spacing: tuple[float, ...]) -> float:
    """Largest stable dt of the centered scheme (PSD tensors only)."""
    s2 = np.array([4.0 / dx**2 for dx in spacing])
    diag, cross = _fourth_order_coefficients(tensors.f)
    num = float(np.sum(np.diag(tensors.a) * s2)
                + epsilon**2 * (np.sum(diag * s2**2)
                                + sum(cross[i, j] * s2[i] * s2[j]
                                      for i in range(len(s2))
                                      for j in range(i + 1, len(s2)))))
    den = 1.0 + epsilon**2 * _scalar_of_identity(tensors.e, "E") * float(np.sum(s2))
    if num <= 0.0:
        return math.inf
    return 2.0 * math.sqrt(den / num)


def _reduced_tensors(tensors: EffectiveTensors) -> EffectiveTensors:
    # strip reduction: x2-independent data keep only axis-1 blocks
    take = lambda t: np.asarray(t)[:1, :1] if t is not None else None  # noqa: E731
    return EffectiveTensors(
        a=take(tensors.a),
        c=tensors.c[:1, :1, :1, :1],
        e=take(tensors.e),
        f=tensors.f[:1, :1, :1, :1] if tensors.f is not None else None,
        case=tensors.case,
    )


def run(config: SimulationConfig, tensors: EffectiveTensors,
        track_energy: bool = False) -> RunResult:
    """Advance the effective equation; snapshots live on the eps-free grid.

    2D configurations whose initial data do not vary along x2 are reduced to
    the corresponding 1D-in-x1 equation (the mixed fourth-order term drops
    out on x2-constant fields).
    """
    if tensors.e is None or tensors.f is None:
        raise ValueError("run requires decomposed tensors (E, F present)")
    started = time.perf_counter()
    if config.dimension == 2:
        probe = config.sample_datum()
        span = float(np.max(np.abs(probe.values - probe.values[:, :1])))
        if span <= 1e-13 * max(1.0, float(np.max(np.abs(probe.values)))):
            reduced = SimulationConfig(
                epsilon=config.epsilon, final_time=config.final_time,
                half_widths=config.half_widths[:1], dx=config.dx[:1],
                dt=config.dt, boundary=config.boundary[:1],
                datum=config.datum.reduced(), output_every=config.output_every)
            result = run(reduced, _reduced_tensors(tensors), track_energy)
            result.params["strip_reduced"] = True
            return result

    grid = config.build_grid()
    a = np.asarray(tensors.a, dtype=float)
    config.check_domain(math.sqrt(float(np.max(np.diag(a)))))
    diag, cross = _fourth_order_coefficients(tensors.f)
    psd = float(np.min(np.diag(tensors.e))) >= 0.0 and np.min(diag) >= 0.0 \
        and np.min(cross) >= 0.0
    if psd:
        dt_max = stability_time_step(tensors, config.epsilon, grid.spacing)
        if config.dt > dt_max * (1.0 + 1e-9):
            raise ValueError(f"dt = {config.dt:g} exceeds the stability bound {dt_max:g}")
    op = build_implicit(tensors.e, config.epsilon, grid, config.boundary)
    n_steps = config.n_steps()
    u0 = config.sample_datum()

    state = first_step(u0, op, a, tensors.f, config.epsilon, config.dt)
    prev = np.asarray(state.u_prev.values, dtype=float).copy()
    curr = np.asarray(state.u_curr.values, dtype=float).copy()

    if grid.dimension == 1:
        # allocation-light acceleration for the long 1D runs
        a00 = float(a[0, 0]) / grid.spacing[0] ** 2
        f_quartic = config.epsilon**2 * float(diag[0])
        periodic = config.boundary[0] == "periodic"
        buf = np.empty_like(curr)

        def accelerate(w: np.ndarray) -> np.ndarray:
            buf[1:-1] = w[2:] - 2.0 * w[1:-1] + w[:-2]
            if periodic:
                buf[0] = w[1] - 2.0 * w[0] + w[-1]
                buf[-1] = w[0] - 2.0 * w[-1] + w[-2]
            else:
                buf[0] = w[1] - 2.0 * w[0]
                buf[-1] = w[-2] - 2.0 * w[-1]
            np.multiply(buf, a00, out=buf)
            if f_quartic != 0.0:
                np.subtract(buf, f_quartic * _d4_values(w, 0, grid.spacing[0],
                                                        config.boundary),
                            out=buf)
            return op.solve(buf)
    else:
        def accelerate(w: np.ndarray) -> np.ndarray:
            return _acceleration(w, op, a, diag, cross)

    times, fields, energies = [0.0], [u0], []
    marks = [m for m in _snapshot_steps(n_steps, config.output_every) if m >= 1]
    m_now = 1
    for mark in marks:
        check_at = min(mark, m_now + 256)
        while m_now < mark:
            z = accelerate(curr)
            nxt = 2.0 * curr - prev + config.dt**2 * z
            prev, curr = curr, nxt
            m_now += 1
            if m_now >= check_at:
                if not np.max(np.abs(curr)) < 1e300:
                    raise InstabilityError(m_now, m_now * config.dt)
                check_at = min(mark, m_now + 256)
        times.append(mark * config.dt)
        fields.append(grid.with_values(curr.copy()))
        if track_energy:
            snap = WaveState(u_prev=grid.with_values(prev.copy()),
                             u_curr=grid.with_values(curr.copy()),
                             step_index=m_now, dt=config.dt)
            energies.append(discrete_energy(snap, op, a, tensors.f))
    wall = time.perf_counter() - started
    params = {
        "solver": "effective_fdm",
        "epsilon": config.epsilon,
        "dt": config.dt,
        "dx": list(config.dx),
        "boundary": list(config.boundary),
        "final_time": n_steps * config.dt,
        "steps": n_steps,
        "grid_shape": list(grid.shape),
        "datum": config.datum.label,
        "a_star": float(a[0, 0]),
        "e_value": float(np.asarray(tensors.e)[0, 0]),
        "case": tensors.case,
    }
    return RunResult(times=tuple(times), fields=tuple(fields), dt=config.dt,
                     steps=n_steps, wall_clock=wall, energies=tuple(energies),
                     params=params)
