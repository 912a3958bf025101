"""Shifted periodic eigenvalue problem on the unit cell.

The operator -(grad + i k) . (a_Y(y) (grad + i k) .) acting on Y-periodic
functions is discretized with a plane-wave Galerkin basis
{ exp(i l.y) : l integer, |l_j| <= M } and cell quadrature on a uniform
4M-per-axis grid.  The lowest band mu_0(k) and its eigenfunction feed both
the dispersion-coefficient extraction and the quadrature oracles.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import LinAlgError, eigh

from .core_types import PeriodicMedium

# Plane-wave cutoff per axis used when none is requested explicitly.
DEFAULT_CUTOFF = {1: 64, 2: 24, 3: 8}

# Relative tolerance for the Rayleigh residual of a converged mode.
RAYLEIGH_RTOL = 1e-9


class QuadratureError(RuntimeError):
    """Cell quadrature produced non-finite coefficient values."""


class EigenSolveError(RuntimeError):
    """The dense Hermitian eigensolver failed to converge."""


@dataclass(frozen=True, eq=False)
class BlochOperatorDiscretization:
    """Galerkin matrix of the shifted cell operator at one wave vector.

    ``lattice`` lists the integer modes l (one row per basis function); the
    matrix entry for modes (l, l') is sum_pq (l+k)_p (l'+k)_q ahat_pq(l-l')
    with ahat the Fourier coefficients of a_Y.  The matrix is Hermitian and
    nonnegative; it is stored real whenever the coefficients allow it.
    """

    wave_vector: np.ndarray
    cutoff: int
    lattice: np.ndarray
    matrix: np.ndarray

    @property
    def n_modes(self) -> int:
        return self.lattice.shape[0]


@dataclass(frozen=True, eq=False)
class BlochMode:
    """One eigenpair of a BlochOperatorDiscretization.

    ``coefficients`` are the plane-wave coefficients of psi_m(., k) in the
    orthonormal basis |Y|^(-1/2) exp(i l.y); they satisfy sum |c_l|^2 = 1,
    i.e. the mode is L2(Y)-normalized.  The phase is fixed by making the
    coefficient of largest modulus real and positive.
    """

    wave_vector: np.ndarray
    band: int
    eigenvalue: float
    coefficients: np.ndarray
    lattice: np.ndarray


def lattice_modes(dimension: int, cutoff: int) -> np.ndarray:
    """Integer modes l with |l_j| <= cutoff, shape (n_modes, dimension)."""
    axes = [np.arange(-cutoff, cutoff + 1)] * dimension
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack([m.ravel() for m in mesh], axis=-1)


def _cell_grid(dimension: int, n_per_axis: int) -> np.ndarray:
    """Uniform quadrature points on the cell, shape (n, ..., n, dimension).

    Points start at y = 0 so that the trapezoid sums match the discrete
    Fourier transform without an extra phase.
    """
    axis = 2.0 * np.pi * np.arange(n_per_axis) / n_per_axis
    mesh = np.meshgrid(*([axis] * dimension), indexing="ij")
    return np.stack(mesh, axis=-1)


def assemble(medium: PeriodicMedium, k, cutoff: int) -> BlochOperatorDiscretization:
    """Assemble the plane-wave Galerkin matrix at wave vector k.

    Requires k in the closure of Z = (-1/2, 1/2)^n and cutoff >= 4.  The
    Fourier coefficients of a_Y come from the FFT of samples on a uniform
    grid with 4*cutoff points per axis, which integrates all band-limited
    products appearing in the Galerkin entries exactly.
    """
    n = medium.dimension
    k = np.atleast_1d(np.asarray(k, dtype=float))
    if k.shape != (n,):
        raise ValueError(f"wave vector must have shape ({n},)")
    if np.any(np.abs(k) > 0.5 + 1e-12):
        raise ValueError(f"wave vector {k} outside the closed reciprocal cell")
    if cutoff < 1:
        raise ValueError("plane-wave cutoff must be positive")

    ngrid = 4 * cutoff
    points = _cell_grid(n, ngrid)
    a = medium.matrix(points)
    if not np.all(np.isfinite(a)):
        bad = np.argwhere(~np.all(np.isfinite(a), axis=(-2, -1)))[0]
        y_bad = points[tuple(bad)]
        raise QuadratureError(f"non-finite coefficient value at y = {y_bad}")
    ahat = np.fft.fftn(a, axes=tuple(range(n))) / float(ngrid**n)

    lattice = lattice_modes(n, cutoff)
    diff = lattice[:, None, :] - lattice[None, :, :]
    idx = tuple(diff[..., d] % ngrid for d in range(n))
    shifted = lattice + k
    h = np.zeros((lattice.shape[0],) * 2, dtype=complex)
    for p in range(n):
        for q in range(n):
            h += np.multiply.outer(shifted[:, p], shifted[:, q]) * ahat[idx + (p, q)]
    h = 0.5 * (h + h.conj().T)
    if np.max(np.abs(h.imag)) <= 1e-14 * max(np.max(np.abs(h.real)), 1.0):
        h = np.ascontiguousarray(h.real)
    return BlochOperatorDiscretization(k.copy(), cutoff, lattice, h)


def _refined_eigenvalue(matrix: np.ndarray, vector: np.ndarray) -> float:
    # Rayleigh quotient of the computed eigenvector: for an isolated smallest
    # eigenvalue this is accurate to ~|terms| * eps rather than ||H|| * eps,
    # which the k-derivative stencils in the dispersion module rely on.
    num = np.vdot(vector, matrix @ vector).real
    den = np.vdot(vector, vector).real
    return float(num / den)


def _fix_phase(vector: np.ndarray) -> np.ndarray:
    i0 = int(np.argmax(np.abs(vector)))
    pivot = vector[i0]
    vector = vector * (np.conj(pivot) / abs(pivot))
    if not np.iscomplexobj(vector):
        vector = vector.astype(float)
    return vector / np.linalg.norm(vector)


def bands(disc: BlochOperatorDiscretization, count: int) -> list[BlochMode]:
    """The ``count`` lowest eigenpairs, Rayleigh-refined and phase-fixed."""
    try:
        vals, vecs = eigh(disc.matrix, subset_by_index=[0, count - 1])
    except LinAlgError as exc:
        raise EigenSolveError(f"eigensolve failed at k = {disc.wave_vector}: {exc}") from exc
    out = []
    for m in range(count):
        v = _fix_phase(vecs[:, m])
        out.append(BlochMode(
            wave_vector=disc.wave_vector,
            band=m,
            eigenvalue=_refined_eigenvalue(disc.matrix, v),
            coefficients=v.astype(complex),
            lattice=disc.lattice,
        ))
    return out


def lowest_band(disc: BlochOperatorDiscretization) -> BlochMode:
    """Smallest eigenpair of the assembled discretization."""
    return bands(disc, 1)[0]


def mu0(medium: PeriodicMedium, k, cutoff: int | None = None) -> float:
    """Lowest Bloch eigenvalue mu_0(k)."""
    if cutoff is None:
        cutoff = DEFAULT_CUTOFF[medium.dimension]
    return lowest_band(assemble(medium, k, cutoff)).eigenvalue


def evaluate_mode(mode: BlochMode, y: np.ndarray) -> np.ndarray:
    """psi_m(y, k) at arbitrary points of shape (..., n), complex valued.

    psi = |Y|^(-1/2) * sum_l c_l exp(i l.y).
    """
    y = np.asarray(y, dtype=float)
    n = mode.lattice.shape[1]
    phase = np.tensordot(y, mode.lattice.T.astype(float), axes=([-1], [0]))
    values = np.exp(1j * phase) @ mode.coefficients
    return values * (2.0 * np.pi) ** (-n / 2.0)


def rayleigh(medium: PeriodicMedium, mode: BlochMode) -> float:
    """Quadratic form I(psi, k) = integral_Y |(grad + i k) psi|^2_{a_Y} dy.

    Evaluated by cell quadrature on the same 4M-per-axis grid as the
    assembly; for a converged normalized mode this must match the
    eigenvalue to RAYLEIGH_RTOL.
    """
    n = medium.dimension
    cutoff = int(np.max(np.abs(mode.lattice)))
    ngrid = 4 * cutoff
    points = _cell_grid(n, ngrid)
    a = medium.matrix(points)

    # shifted gradient components G_p(y) = sum_l c_l i (l + k)_p exp(i l.y),
    # synthesized through a zero-padded inverse FFT
    grads = []
    for p in range(n):
        spectrum = np.zeros((ngrid,) * n, dtype=complex)
        idx = tuple(mode.lattice[:, d] % ngrid for d in range(n))
        spectrum[idx] = mode.coefficients * 1j * (mode.lattice[:, p] + mode.wave_vector[p])
        grads.append(np.fft.ifftn(spectrum) * float(ngrid**n))

    integrand = np.zeros((ngrid,) * n)
    for p in range(n):
        for q in range(n):
            integrand += (np.conj(grads[p]) * a[..., p, q] * grads[q]).real
    return float(np.mean(integrand))
