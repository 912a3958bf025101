"""Shared domain types: periodic media, initial data, grids, and run configuration.

The unit cell is always Y = (-pi, pi)^n and the reciprocal cell Z = (-1/2, 1/2)^n.
All Fourier statements use the unitary convention

    f(x) = (2*pi)^(-n/2) * integral F0(k) exp(+i k.x) dk,

so F0(k) = (2*pi)^(-n/2) * integral f(x) exp(-i k.x) dx.  Every module in the
package shares this convention.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

# |F0| below this value counts as "outside the spectral support".
SUPPORT_TOLERANCE = 1e-12

# Number of random unit directions probed when validating ellipticity.
ELLIPTICITY_PROBES = 200

_PROBE_SEED = 1274


class DomainError(ValueError):
    """Computational domain cannot contain the solution up to the final time."""


def wrap_to_cell(y: np.ndarray) -> np.ndarray:
    """Map points of shape (..., n) into the periodicity cell [-pi, pi)^n."""
    return (np.asarray(y, dtype=float) + np.pi) % (2.0 * np.pi) - np.pi


@dataclass(frozen=True, eq=False)
class PeriodicMedium:
    """Y-periodic symmetric positive-definite coefficient field a_Y.

    ``matrix`` maps points of shape (..., n) to matrices of shape (..., n, n);
    it must be pure and re-entrant.  ``ellipticity`` is a valid lower bound
    gamma with xi.a(y).xi >= gamma |xi|^2.
    """

    dimension: int
    matrix: Callable[[np.ndarray], np.ndarray]
    ellipticity: float
    reflection_symmetric: bool = False
    permutation_symmetric: bool = False
    label: str = ""

    def diagonal(self, y: np.ndarray) -> np.ndarray:
        """Diagonal entries a_ii at points of shape (..., n), shape (..., n)."""
        a = self.matrix(np.asarray(y, dtype=float))
        return np.einsum("...ii->...i", a)

    def validate(self, n_points: int = 200, tol: float = 1e-12) -> None:
        """Check matrix symmetry, ellipticity and the declared cell symmetries.

        Raises ValueError on the first violated invariant.
        """
        rng = np.random.default_rng(_PROBE_SEED)
        n = self.dimension
        y = rng.uniform(-np.pi, np.pi, size=(n_points, n))
        a = self.matrix(y)
        if a.shape != (n_points, n, n):
            raise ValueError(f"matrix evaluator returned shape {a.shape}, "
                             f"expected {(n_points, n, n)}")
        if not np.all(np.isfinite(a)):
            raise ValueError("matrix evaluator returned non-finite entries")
        asym = np.max(np.abs(a - np.swapaxes(a, -1, -2)))
        if asym > tol:
            raise ValueError(f"coefficient matrix not symmetric (max |a_ij - a_ji| = {asym:g})")
        xi = rng.standard_normal((ELLIPTICITY_PROBES, n))
        xi /= np.linalg.norm(xi, axis=1, keepdims=True)
        quad = np.einsum("pi,qij,pj->qp", xi, a, xi)
        if np.min(quad) < self.ellipticity - 1e-10:
            raise ValueError(f"ellipticity violated: min quadratic form {np.min(quad):g} "
                             f"below gamma = {self.ellipticity:g}")
        if self.reflection_symmetric:
            for i in range(n):
                ys = y.copy()
                ys[:, i] *= -1.0
                gap = np.max(np.abs(self.matrix(ys) - a))
                if gap > tol:
                    raise ValueError(f"reflection symmetry violated on axis {i} (gap {gap:g})")
        if self.permutation_symmetric and n >= 2:
            for i in range(n):
                for j in range(i + 1, n):
                    ys = y.copy()
                    ys[:, [i, j]] = ys[:, [j, i]]
                    gap = np.max(np.abs(self.matrix(ys) - a))
                    if gap > tol:
                        raise ValueError(f"permutation symmetry violated for axes "
                                         f"({i},{j}) (gap {gap:g})")


def make_cosine_medium_1d(mean: float, amplitude: float) -> PeriodicMedium:
    """1D medium a_Y(y) = mean + amplitude*cos(y); requires mean > |amplitude|."""
    mean = float(mean)
    amplitude = float(amplitude)
    if mean <= abs(amplitude):
        raise ValueError(f"mean must exceed |amplitude| for ellipticity "
                         f"(mean={mean}, amplitude={amplitude})")

    def matrix(y: np.ndarray) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        a = mean + amplitude * np.cos(y[..., 0])
        return a[..., None, None]

    return PeriodicMedium(
        dimension=1,
        matrix=matrix,
        ellipticity=mean - abs(amplitude),
        reflection_symmetric=True,
        permutation_symmetric=True,
        label=f"cosine1d(mean={mean:g}, amplitude={amplitude:g})",
    )


def make_constant_medium(value: float, dimension: int) -> PeriodicMedium:
    """Homogeneous isotropic medium a_Y = value * I."""
    value = float(value)
    if value <= 0:
        raise ValueError("constant coefficient must be positive")

    def matrix(y: np.ndarray) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        eye = np.eye(dimension)
        return np.broadcast_to(value * eye, y.shape[:-1] + (dimension, dimension)).copy()

    return PeriodicMedium(
        dimension=dimension,
        matrix=matrix,
        ellipticity=value,
        reflection_symmetric=True,
        permutation_symmetric=True,
        label=f"constant(value={value:g}, n={dimension})",
    )


def _square_profile(s: np.ndarray) -> np.ndarray:
    # smoothed indicator of (-3pi/5, 3pi/5); values in (0, 4)
    return (1.0 + np.tanh(4.0 * (s + 0.6 * np.pi))) * (1.0 - np.tanh(4.0 * (s - 0.6 * np.pi)))


def make_smoothed_square_medium_2d() -> PeriodicMedium:
    """2D isotropic medium a_Y(y) = (1 + c(y) - mean(c)) * I.

    c is a product of tanh-smoothed square bumps, one per axis; its cell mean
    is removed so that the coefficient has unit cell average.
    """
    # The profile is separable, so the cell mean is the square of the 1D mean.
    grid = np.linspace(-np.pi, np.pi, 1 << 14, endpoint=False)
    p = _square_profile(grid)
    profile_mean = float(np.mean(p))
    profile_min = float(np.min(p))
    c_mean = profile_mean**2 / 8.0
    c_min = profile_min**2 / 8.0

    def matrix(y: np.ndarray) -> np.ndarray:
        yw = wrap_to_cell(y)
        c = _square_profile(yw[..., 0]) * _square_profile(yw[..., 1]) / 8.0
        a = 1.0 + c - c_mean
        out = np.zeros(a.shape + (2, 2))
        out[..., 0, 0] = a
        out[..., 1, 1] = a
        return out

    return PeriodicMedium(
        dimension=2,
        matrix=matrix,
        ellipticity=1.0 + c_min - c_mean,
        reflection_symmetric=True,
        permutation_symmetric=True,
        label="smoothed_square_2d",
    )


def tabulated_medium(values: np.ndarray, reflection_symmetric: bool = False,
                     permutation_symmetric: bool = False, label: str = "tabulated") -> PeriodicMedium:
    """Isotropic medium from a periodic sample table with multilinear interpolation.

    ``values`` holds scalar samples on the uniform grid y_j = -pi + 2*pi*j/N per
    axis (no duplicated endpoint); at least 64 samples per axis are required.
    """
    values = np.asarray(values, dtype=float)
    n = values.ndim
    if any(s < 64 for s in values.shape):
        raise ValueError("sample tables need at least 64 points per axis")
    if np.min(values) <= 0:
        raise ValueError("tabulated coefficient must be positive")
    shape = values.shape

    def scalar(y: np.ndarray) -> np.ndarray:
        y = np.asarray(y, dtype=float)
        out = None
        # periodic multilinear interpolation, one corner of the cell at a time
        frac = []
        base = []
        for d in range(n):
            t = (y[..., d] + np.pi) / (2.0 * np.pi) * shape[d]
            i0 = np.floor(t).astype(int)
            frac.append(t - i0)
            base.append(i0)
        for corner in np.ndindex(*(2,) * n):
            w = 1.0
            idx = []
            for d in range(n):
                w = w * (frac[d] if corner[d] else 1.0 - frac[d])
                idx.append((base[d] + corner[d]) % shape[d])
            term = w * values[tuple(idx)]
            out = term if out is None else out + term
        return out

    def matrix(y: np.ndarray) -> np.ndarray:
        a = scalar(y)
        out = np.zeros(a.shape + (n, n))
        for d in range(n):
            out[..., d, d] = a
        return out

    return PeriodicMedium(
        dimension=n,
        matrix=matrix,
        ellipticity=float(np.min(values)),
        reflection_symmetric=reflection_symmetric,
        permutation_symmetric=permutation_symmetric,
        label=label,
    )


@dataclass(frozen=True, eq=False)
class InitialDatum:
    """Initial displacement f with its Fourier descriptor F0.

    ``fourier`` is the closed form of F0 over the *active* axes (those on
    which f actually varies); ``support_radius`` is the radius rho_K outside
    of which |F0| < SUPPORT_TOLERANCE.
    """

    dimension: int
    evaluator: Callable[[np.ndarray], np.ndarray]
    fourier: Callable[[np.ndarray], np.ndarray]
    support_radius: float
    active_axes: tuple[int, ...]
    truncation_radius: float  # |f| < 1e-14 outside this radius (active axes)
    label: str = ""

    @property
    def active_dimension(self) -> int:
        return len(self.active_axes)

    def reduced(self) -> "InitialDatum":
        """The same datum viewed on its active axes only."""
        if self.active_dimension == self.dimension:
            return self
        axes = self.active_axes
        outer = self

        def evaluator(x: np.ndarray) -> np.ndarray:
            x = np.asarray(x, dtype=float)
            full = np.zeros(x.shape[:-1] + (outer.dimension,))
            for a, ax in enumerate(axes):
                full[..., ax] = x[..., a]
            return outer.evaluator(full)

        return InitialDatum(
            dimension=len(axes),
            evaluator=evaluator,
            fourier=self.fourier,
            support_radius=self.support_radius,
            active_axes=tuple(range(len(axes))),
            truncation_radius=self.truncation_radius,
            label=self.label + "[reduced]",
        )


def make_gaussian_datum(sigma: float, n: int,
                        axis_mask: Sequence[bool] | None = None) -> InitialDatum:
    """Gaussian datum f(x) = exp(-sigma * sum over masked axes of x_i^2).

    F0 over the m active axes is (2*sigma)^(-m/2) * exp(-|k|^2 / (4*sigma)),
    which follows from the package Fourier convention.
    """
    sigma = float(sigma)
    if sigma <= 0:
        raise ValueError("sigma must be positive")
    if axis_mask is None:
        axis_mask = (True,) * n
    axis_mask = tuple(bool(b) for b in axis_mask)
    if len(axis_mask) != n or not any(axis_mask):
        raise ValueError("axis_mask must have length n with at least one active axis")
    active = tuple(i for i, b in enumerate(axis_mask) if b)
    m = len(active)
    amplitude = (2.0 * sigma) ** (-m / 2.0)

    def evaluator(x: np.ndarray) -> np.ndarray:
        x = np.asarray(x, dtype=float)
        r2 = np.zeros(x.shape[:-1])
        for ax in active:
            r2 = r2 + x[..., ax] ** 2
        return np.exp(-sigma * r2)

    def fourier(k: np.ndarray) -> np.ndarray:
        k = np.asarray(k, dtype=float)
        if k.shape[-1] != m:
            raise ValueError(f"fourier descriptor expects k over the {m} active axes")
        k2 = np.sum(k**2, axis=-1)
        return (amplitude * np.exp(-k2 / (4.0 * sigma))).astype(complex)

    # |F0| = amplitude * exp(-rho^2/(4 sigma)) = SUPPORT_TOLERANCE at rho_K
    rho = math.sqrt(max(4.0 * sigma * math.log(amplitude / SUPPORT_TOLERANCE), 0.0))
    # |f| = exp(-sigma r^2) < 1e-14 outside r_trunc
    r_trunc = math.sqrt(math.log(1e14) / sigma)
    return InitialDatum(
        dimension=n,
        evaluator=evaluator,
        fourier=fourier,
        support_radius=rho,
        active_axes=active,
        truncation_radius=r_trunc,
        label=f"gaussian(sigma={sigma:g}, n={n}, active={active})",
    )


@dataclass(frozen=True, eq=False)
class GridField:
    """Real- or complex-valued field on a uniform tensor grid.

    ``values`` is indexed row-major by axis; point j along axis d sits at
    origin[d] + j * spacing[d].
    """

    values: np.ndarray
    spacing: tuple[float, ...]
    origin: tuple[float, ...]

    def __post_init__(self):
        values = np.asarray(self.values)
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "spacing", tuple(float(s) for s in self.spacing))
        object.__setattr__(self, "origin", tuple(float(o) for o in self.origin))
        if values.ndim != len(self.spacing) or values.ndim != len(self.origin):
            raise ValueError("values rank must match spacing/origin length")
        if any(s <= 0 for s in self.spacing):
            raise ValueError("grid spacing must be positive")
        if any(c < 5 for c in values.shape):
            raise ValueError("grids need at least 5 points per axis (stencil width)")

    @property
    def dimension(self) -> int:
        return self.values.ndim

    @property
    def shape(self) -> tuple[int, ...]:
        return self.values.shape

    def axis(self, d: int) -> np.ndarray:
        return self.origin[d] + self.spacing[d] * np.arange(self.shape[d])

    def meshgrid(self) -> tuple[np.ndarray, ...]:
        return tuple(np.meshgrid(*(self.axis(d) for d in range(self.dimension)),
                                 indexing="ij"))

    def points(self) -> np.ndarray:
        """All grid points stacked as an array of shape (*shape, n)."""
        return np.stack(self.meshgrid(), axis=-1)

    def with_values(self, values: np.ndarray) -> "GridField":
        return GridField(values, self.spacing, self.origin)

    def same_grid(self, other: "GridField") -> bool:
        return (self.shape == other.shape and self.spacing == other.spacing
                and self.origin == other.origin)

    def cell_volume(self) -> float:
        return float(np.prod(self.spacing))


def symmetric_axis(half_width: float, dx: float) -> tuple[float, int]:
    """Origin and point count of a grid symmetric about 0 covering [-hw, hw]."""
    m = int(math.ceil(half_width / dx - 1e-12))
    return -m * dx, 2 * m + 1


def periodic_axis(width: float, dx: float) -> tuple[float, int]:
    """Origin and point count of a periodic axis of exact extent ``width``.

    dx must divide the width; the duplicate right endpoint is excluded.
    """
    n = int(round(width / dx))
    if abs(n * dx - width) > 1e-10 * width:
        raise ValueError(f"dx = {dx:g} does not divide the periodic width {width:g}")
    return -width / 2.0, n


@dataclass(frozen=True, eq=False)
class WaveState:
    """Two consecutive time levels of a leapfrog evolution."""

    u_prev: GridField
    u_curr: GridField
    step_index: int
    dt: float

    def __post_init__(self):
        if not self.u_prev.same_grid(self.u_curr):
            raise ValueError("time levels must share identical grid metadata")
        if self.dt <= 0:
            raise ValueError("dt must be positive")

    @property
    def time(self) -> float:
        return self.step_index * self.dt


@dataclass(frozen=True, eq=False)
class SimulationConfig:
    """Parameters of one solver run.

    ``boundary`` holds one mode per axis, each either "zero" (zero exterior)
    or "periodic"; periodic axes use half_width as half of the exact period.
    """

    epsilon: float
    final_time: float
    half_widths: tuple[float, ...]
    dx: tuple[float, ...]
    dt: float
    boundary: tuple[str, ...]
    datum: InitialDatum
    output_every: int = 0

    def __post_init__(self):
        object.__setattr__(self, "half_widths", tuple(float(h) for h in self.half_widths))
        dx = self.dx if isinstance(self.dx, (tuple, list)) else (self.dx,) * len(self.half_widths)
        object.__setattr__(self, "dx", tuple(float(d) for d in dx))
        bnd = self.boundary if isinstance(self.boundary, (tuple, list)) \
            else (self.boundary,) * len(self.half_widths)
        object.__setattr__(self, "boundary", tuple(str(b) for b in bnd))
        if self.epsilon <= 0:
            raise ValueError("epsilon must be positive")
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.final_time <= 0:
            raise ValueError("final time must be positive")
        if len(self.dx) != len(self.half_widths) or len(self.boundary) != len(self.half_widths):
            raise ValueError("half_widths, dx and boundary must have one entry per axis")
        for b in self.boundary:
            if b not in ("zero", "periodic"):
                raise ValueError(f"unknown boundary mode {b!r}")

    @property
    def dimension(self) -> int:
        return len(self.half_widths)

    @classmethod
    def horizon(cls, t0: float, epsilon: float, **kw) -> "SimulationConfig":
        """Config with final time t0 / epsilon^2."""
        return cls(epsilon=epsilon, final_time=t0 / epsilon**2, **kw)

    def build_grid(self) -> GridField:
        """Zero-valued field on the configured grid (symmetric about 0)."""
        origins, counts = [], []
        for d in range(self.dimension):
            if self.boundary[d] == "periodic":
                o, c = periodic_axis(2.0 * self.half_widths[d], self.dx[d])
            else:
                o, c = symmetric_axis(self.half_widths[d], self.dx[d])
            origins.append(o)
            counts.append(c)
        return GridField(np.zeros(tuple(counts)), tuple(self.dx), tuple(origins))

    def sample_datum(self) -> GridField:
        grid = self.build_grid()
        return grid.with_values(self.datum.evaluator(grid.points()))

    def n_steps(self) -> int:
        steps = int(round(self.final_time / self.dt))
        if abs(steps * self.dt - self.final_time) > 1e-9 * max(1.0, self.final_time):
            raise ValueError(f"dt = {self.dt:g} does not divide the final time "
                             f"{self.final_time:g}")
        return steps

    def check_domain(self, speed_bound: float) -> None:
        """Cone check: support + speed * final_time must fit inside zero axes."""
        reach = self.datum.truncation_radius + speed_bound * self.final_time
        for d in range(self.dimension):
            if self.boundary[d] == "periodic":
                continue
            if self.half_widths[d] < reach + 2.0 * self.dx[d]:
                raise DomainError(
                    f"axis {d}: half-width {self.half_widths[d]:g} smaller than "
                    f"propagation reach {reach:g} at t = {self.final_time:g}")


def divisor_time_step(target_dt: float, bound: float, final_time: float) -> float:
    """Largest dt <= min(target_dt, bound) that divides final_time exactly."""
    dt = min(target_dt, bound)
    return final_time / math.ceil(final_time / dt - 1e-12)
