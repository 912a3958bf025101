"""Quadrature-based reference constructions from the Bloch expansion.

These oracles are independent of both finite-difference solvers: they
evaluate the band-0 expansion coefficients, the spectral approximations

    U(x,t) = (2 pi)^(-n/2) int_K F0(k) exp(i k.x) cos(t sqrt(mu_0(eps k))/eps) dk,
    v(x,t) = (2 pi)^(-n/2) int_K F0(k) exp(i k.x) cos(t [sqrt(A(k,k)) +
                 (eps^2/2) C(k,k,k,k)/sqrt(A(k,k))]) dk,

and the Parseval band sum.  All k-integrals use composite Gauss-Legendre
panels sized so that the exp(i k.x) oscillation stays resolved over the
target grid.  The Bloch-coefficient quadratures (hat f_m, band-0 field,
Parseval) are desk-scale tools and are implemented in one dimension.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import bloch_cell
from .core_types import GridField, InitialDatum, PeriodicMedium
from .dispersion import DispersionCoefficients, build_tensors, quadratic_symbol, quartic_symbol

# Default Gauss-Legendre node counts per axis for k-quadratures.
DEFAULT_K_NODES = {1: 256, 2: 64, 3: 24}

# Nodes per composite panel; a panel resolves phases up to ~0.7 * this count.
PANEL_NODES = 16

_X_CHUNK = 4096


class QuadratureError(RuntimeError):
    """Doubling the quadrature nodes moved the result beyond tolerance."""


@dataclass(frozen=True, eq=False)
class SpectralDatum:
    """Quadrature nodes over the spectral support with F0 samples.

    Nodes tile the bounding box [-radius, radius]^n of the support ball;
    F0 is numerically zero between ball and box, so the box is the
    effective integration domain and the weights sum to its volume.  When
    built with an epsilon the radius is clipped to keep the nodes inside
    the rescaled reciprocal cell Z/eps.
    """

    nodes: np.ndarray    # (Q, n)
    weights: np.ndarray  # (Q,)
    f0: np.ndarray       # (Q,) complex
    radius: float
    hat_f0: np.ndarray | None = None

    @property
    def domain_volume(self) -> float:
        return (2.0 * self.radius) ** self.nodes.shape[1]


def _gauss_panels(lo: float, hi: float, n_nodes: int) -> tuple[np.ndarray, np.ndarray]:
    """Composite Gauss-Legendre rule with PANEL_NODES-point panels."""
    n_panels = max(1, math.ceil(n_nodes / PANEL_NODES))
    xi, wi = np.polynomial.legendre.leggauss(PANEL_NODES)
    edges = np.linspace(lo, hi, n_panels + 1)
    mid = 0.5 * (edges[:-1] + edges[1:])
    half = 0.5 * (edges[1:] - edges[:-1])
    nodes = (mid[:, None] + half[:, None] * xi[None, :]).ravel()
    weights = (half[:, None] * wi[None, :]).ravel()
    return nodes, weights


def _k_node_count(radius: float, x_max: float, base: int) -> int:
    # resolve exp(i k x): a 16-point panel handles a phase half-range of
    # ~0.35 * 16, so 9 nodes per oscillation cycle keep the tail below 1e-8
    cycles = 2.0 * radius * max(x_max, 1.0) / (2.0 * np.pi)
    return max(base, int(math.ceil(9.0 * cycles)))


def spectral_datum(datum: InitialDatum, epsilon: float | None = None,
                   n_nodes: int | None = None, x_max: float = 1.0) -> SpectralDatum:
    """Tensor-product Gauss-Legendre nodes over the spectral support of F0."""
    n = datum.active_dimension
    if n != datum.dimension:
        raise ValueError("spectral quadrature needs a datum active on all axes; "
                         "reduce() it first")
    radius = datum.support_radius
    if epsilon is not None:
        radius = min(radius, 0.5 / epsilon * (1.0 - 1e-12))
    base = n_nodes if n_nodes is not None else DEFAULT_K_NODES[n]
    count = _k_node_count(radius, x_max, base)
    nodes1, weights1 = _gauss_panels(-radius, radius, count)
    if n == 1:
        nodes = nodes1[:, None]
        weights = weights1
    else:
        grids = np.meshgrid(*([nodes1] * n), indexing="ij")
        nodes = np.stack([g.ravel() for g in grids], axis=-1)
        wg = np.meshgrid(*([weights1] * n), indexing="ij")
        weights = np.prod(np.stack([w.ravel() for w in wg], axis=-1), axis=-1)
    return SpectralDatum(nodes=nodes, weights=weights,
                         f0=np.asarray(datum.fourier(nodes), dtype=complex),
                         radius=radius)


def _x_quadrature(datum: InitialDatum, epsilon: float,
                  refine: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """Composite panels covering the support of f, resolving the eps scale."""
    radius = datum.truncation_radius + 2.0 * np.pi * epsilon
    width = 2.0 * np.pi * epsilon / (10.0 * refine)
    n_panels = int(math.ceil(2.0 * radius / width))
    xi, wi = np.polynomial.legendre.leggauss(10)
    edges = np.linspace(-radius, radius, n_panels + 1)
    mid = 0.5 * (edges[:-1] + edges[1:])
    half = 0.5 * (edges[1:] - edges[:-1])
    nodes = (mid[:, None] + half[:, None] * xi[None, :]).ravel()
    weights = (half[:, None] * wi[None, :]).ravel()
    return nodes, weights


def _require_1d(medium: PeriodicMedium, what: str) -> None:
    if medium.dimension != 1:
        raise NotImplementedError(f"{what} is a desk-scale (one-dimensional) oracle")


def _band_coefficients(datum: InitialDatum, medium: PeriodicMedium, epsilon: float,
                       ks: np.ndarray, band_count: int, cutoff: int | None,
                       refine: int = 1) -> tuple[np.ndarray, list[list[bloch_cell.BlochMode]]]:
    """hat f_m(k) = int f(x) psi_m(x/eps, eps k)* exp(-i k x) dx for each k row.

    Returns the coefficient array of shape (len(ks), band_count) and the
    modes used (so callers can reuse the eigenfunctions).
    """
    if cutoff is None:
        cutoff = bloch_cell.DEFAULT_CUTOFF[1]
    xq, wq = _x_quadrature(datum, epsilon, refine)
    points = xq[:, None]
    fw = datum.evaluator(points) * wq
    lattice = None
    modes_per_k: list[list[bloch_cell.BlochMode]] = []
    coeff_rows = []
    for k in np.atleast_1d(np.asarray(ks, dtype=float)).reshape(-1):
        disc = bloch_cell.assemble(medium, [epsilon * k], cutoff)
        modes = bloch_cell.bands(disc, band_count)
        modes_per_k.append(modes)
        if lattice is None:
            lattice = modes[0].lattice[:, 0].astype(float)
        coeff_rows.append(np.stack([m.coefficients for m in modes]))
    coeffs = np.stack(coeff_rows)  # (Q, bands, L)
    # plane-wave synthesis: psi*(x/eps) exp(-i k x) has frequencies -(k + l/eps)
    modes_x = np.exp(-1j * np.outer(lattice / epsilon, xq))  # (L, Nx)
    ks_flat = np.atleast_1d(np.asarray(ks, dtype=float)).reshape(-1)
    phase = np.exp(-1j * np.outer(ks_flat, xq))  # (Q, Nx)
    hat = np.einsum("qbl,lx,qx,x->qb", coeffs.conj(), modes_x, phase, fw,
                    optimize=True)
    hat *= (2.0 * np.pi) ** -0.5  # |Y|^(-1/2) factor of psi
    return hat, modes_per_k


def bloch_coefficient(datum: InitialDatum, medium: PeriodicMedium, epsilon: float,
                      k: float, cutoff: int | None = None, check: bool = True,
                      rtol: float = 1e-8) -> complex:
    """Band-0 Bloch coefficient hat f_0(k) of the initial datum.

    ``k`` must lie in the rescaled reciprocal cell Z/eps.  With ``check``
    the x-quadrature is repeated at doubled resolution and a disagreement
    beyond ``rtol`` raises QuadratureError.
    """
    _require_1d(medium, "bloch_coefficient")
    k = float(np.atleast_1d(k)[0])
    if abs(epsilon * k) > 0.5 + 1e-12:
        raise ValueError(f"k = {k:g} lies outside Z/eps")
    hat, _ = _band_coefficients(datum, medium, epsilon, [k], 1, cutoff)
    value = complex(hat[0, 0])
    if check:
        hat2, _ = _band_coefficients(datum, medium, epsilon, [k], 1, cutoff, refine=2)
        if abs(hat2[0, 0] - value) > rtol * (1.0 + abs(value)):
            raise QuadratureError(
                f"hat f_0({k:g}) moved by {abs(hat2[0, 0] - value):g} under node doubling")
    return value


def bloch_coefficient_error(datum: InitialDatum, medium: PeriodicMedium,
                            epsilon: float, n_nodes: int = 256,
                            cutoff: int | None = None) -> float:
    """L1 distance over K (clipped to Z/eps) between hat f_0 and F0."""
    _require_1d(medium, "bloch_coefficient_error")
    sd = spectral_datum(datum.reduced(), epsilon, n_nodes)
    hat, _ = _band_coefficients(datum, medium, epsilon, sd.nodes[:, 0], 1, cutoff)
    return float(np.sum(sd.weights * np.abs(hat[:, 0] - sd.f0)))


def _chunked_plane_waves(nodes: np.ndarray, amplitudes: np.ndarray,
                         grid: GridField) -> np.ndarray:
    """sum_q amplitudes_q exp(i k_q . x) over all grid points, chunked."""
    points = grid.points().reshape(-1, grid.dimension)
    out = np.empty(points.shape[0], dtype=complex)
    for start in range(0, points.shape[0], _X_CHUNK):
        block = points[start:start + _X_CHUNK]
        phase = nodes @ block.T  # (Q, chunk)
        out[start:start + _X_CHUNK] = amplitudes @ np.exp(1j * phase)
    return out.reshape(grid.shape)


def _grid_extent(grid: GridField) -> float:
    return max(max(abs(grid.axis(d)[0]), abs(grid.axis(d)[-1]))
               for d in range(grid.dimension))


def _as_real(values: np.ndarray, what: str, tol: float = 1e-8) -> np.ndarray:
    residue = float(np.max(np.abs(values.imag)))
    if residue > tol * max(1.0, float(np.max(np.abs(values.real)))):
        raise RuntimeError(f"{what} has imaginary residue {residue:g}")
    return np.ascontiguousarray(values.real)


def evaluate_U(datum: InitialDatum, medium: PeriodicMedium, epsilon: float,
               grid: GridField, t: float, n_nodes: int | None = None,
               cutoff: int | None = None) -> GridField:
    """Band-0 spectral approximation built from the exact eigenvalue mu_0."""
    sd = spectral_datum(datum.reduced(), epsilon, n_nodes, x_max=_grid_extent(grid))
    mus = np.array([bloch_cell.mu0(medium, epsilon * k, cutoff) for k in sd.nodes])
    omega = np.sqrt(np.maximum(mus, 0.0)) / epsilon
    amplitudes = sd.weights * sd.f0 * np.cos(t * omega)
    n = sd.nodes.shape[1]
    values = (2.0 * np.pi) ** (-n / 2.0) * _chunked_plane_waves(sd.nodes, amplitudes, grid)
    return grid.with_values(_as_real(values, "U field"))


def evaluate_v(datum: InitialDatum, coeffs: DispersionCoefficients, epsilon: float,
               grid: GridField, t: float, n_nodes: int | None = None,
               derivative: str | tuple[str, int] | None = None) -> GridField:
    """Two-branch stationary-phase approximation with Taylor dispersion.

    ``derivative`` may be "t" for the time derivative or ("x", axis) for a
    spatial gradient component; both are exact Fourier-multiplier versions
    of the same quadrature.
    """
    tensors = build_tensors(coeffs)
    sd = spectral_datum(datum.reduced(), None, n_nodes, x_max=_grid_extent(grid))
    a_kk = np.maximum(quadratic_symbol(tensors.a, sd.nodes), 1e-300)
    root = np.sqrt(a_kk)
    c_kk = quartic_symbol(tensors.c, sd.nodes)
    rate = root + 0.5 * epsilon**2 * c_kk / root
    if derivative is None:
        temporal = np.cos(t * rate).astype(complex)
    elif derivative == "t":
        temporal = (-rate * np.sin(t * rate)).astype(complex)
    elif isinstance(derivative, tuple) and derivative[0] == "x":
        temporal = np.cos(t * rate) * 1j * sd.nodes[:, derivative[1]]
    else:
        raise ValueError(f"unknown derivative request {derivative!r}")
    amplitudes = sd.weights * sd.f0 * temporal
    n = sd.nodes.shape[1]
    values = (2.0 * np.pi) ** (-n / 2.0) * _chunked_plane_waves(sd.nodes, amplitudes, grid)
    return grid.with_values(_as_real(values, "v field"))


def band_m0_solution(datum: InitialDatum, medium: PeriodicMedium, epsilon: float,
                     grid: GridField, t: float, n_nodes: int | None = None,
                     cutoff: int | None = None) -> GridField:
    """Band-0 reconstruction u_0 = int_{Z/eps} hat f_0 w_0 cos(t sqrt(mu_0^eps)) dk."""
    _require_1d(medium, "band_m0_solution")
    half = 0.5 / epsilon * (1.0 - 1e-12)
    base = n_nodes if n_nodes is not None else DEFAULT_K_NODES[1]
    count = _k_node_count(half, _grid_extent(grid), base)
    knodes, kweights = _gauss_panels(-half, half, count)
    hat, modes = _band_coefficients(datum, medium, epsilon, knodes, 1, cutoff)
    mus = np.array([m[0].eigenvalue for m in modes])
    omega = np.sqrt(np.maximum(mus, 0.0)) / epsilon
    coefs = np.stack([m[0].coefficients for m in modes])  # (Q, L)
    lattice = modes[0][0].lattice[:, 0].astype(float)
    weights = kweights * hat[:, 0] * np.cos(t * omega) * (2.0 * np.pi) ** -0.5

    points = grid.points().reshape(-1)
    out = np.empty(points.shape[0], dtype=complex)
    for start in range(0, points.shape[0], _X_CHUNK):
        x = points[start:start + _X_CHUNK]
        psi = coefs @ np.exp(1j * np.outer(lattice / epsilon, x))  # (Q, chunk)
        psi *= np.exp(1j * np.outer(knodes, x))
        out[start:start + _X_CHUNK] = weights @ psi
    return grid.with_values(_as_real(out.reshape(grid.shape), "band-0 field"))


def parseval_check(datum: InitialDatum, medium: PeriodicMedium, epsilon: float,
                   band_cutoff: int, n_k: int = 256,
                   cutoff: int | None = None) -> tuple[float, float, float]:
    """Compare ||f||^2 with the band sum over m <= band_cutoff.

    Returns (lhs, rhs, gap); the gap must shrink as band_cutoff grows.
    """
    _require_1d(medium, "parseval_check")
    xq, wq = _x_quadrature(datum, epsilon)
    f_vals = datum.evaluator(xq[:, None])
    lhs = float(np.sum(wq * f_vals**2))
    half = 0.5 / epsilon
    knodes, kweights = _gauss_panels(-half, half, n_k)
    hat, _ = _band_coefficients(datum, medium, epsilon, knodes, band_cutoff + 1, cutoff)
    rhs = float(np.sum(kweights[:, None] * np.abs(hat) ** 2))
    return lhs, rhs, lhs - rhs
