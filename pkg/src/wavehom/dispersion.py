"""Dispersion coefficients of the lowest Bloch band and the operator split.

The band mu_0 is even with mu_0(0) = 0, and for media symmetric under axis
reflections and coordinate exchanges its fourth-order Taylor polynomial is
fixed by three numbers:

    mu_0(k) = a* |k|^2 + alpha * sum_i k_i^4 + 6 beta * sum_{i<j} k_i^2 k_j^2 + O(|k|^6).

a*, alpha and beta are extracted by evenness-reduced central differences in k
with Richardson extrapolation.  The second half of the module rewrites the
ill-posed fourth-order operator -C D^4 as E D^2 A D^2 - F D^4 with E, F
positive semidefinite, which is what makes the dispersive effective equation
well posed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import bloch_cell
from .core_types import PeriodicMedium

# Central-difference steps in k, coarse to fine; each halves the previous one.
# Four levels are needed for the convergence check below: the band has large
# sixth-order Taylor content, so the three-level diagonal still moves at 3e-5.
STEP_SCHEDULE = (0.04, 0.02, 0.01, 0.005)

# Successive Richardson extrapolants must agree to this relative tolerance.
RICHARDSON_RTOL = 1e-6


class RichardsonError(RuntimeError):
    """The Richardson table did not settle to the requested tolerance."""


@dataclass(frozen=True)
class DispersionCoefficients:
    """The triple (a*, alpha, beta); beta is stored as 0 in one dimension."""

    a_star: float
    alpha: float
    beta: float
    dimension: int
    h_k: float  # finest finite-difference step used in k

    def __post_init__(self):
        if not (np.isfinite(self.a_star) and np.isfinite(self.alpha)
                and np.isfinite(self.beta)):
            raise ValueError("dispersion coefficients must be finite")
        if self.a_star <= 0:
            raise ValueError("a* must be positive")


@dataclass(frozen=True, eq=False)
class EffectiveTensors:
    """Constant tensors of the effective equations.

    a is the homogenized matrix a* I, c the fourth-order Taylor tensor.  e and
    f hold the positive-semidefinite split -C D^4 = E D^2 A D^2 - F D^4; they
    are None until ``decompose`` fills them.  ``case`` labels the sign pattern
    of (alpha, beta): 1 for both <= 0, 2 for alpha <= 0 < beta, 3 for
    beta <= 0 < alpha, 4 for both >= 0.
    """

    a: np.ndarray
    c: np.ndarray
    e: np.ndarray | None = None
    f: np.ndarray | None = None
    case: int | None = None

    @property
    def dimension(self) -> int:
        return self.a.shape[0]


class _Mu0Cache:
    """Memoized mu_0 evaluations shared by the stencils of one fit."""

    def __init__(self, medium: PeriodicMedium, cutoff: int | None):
        self.medium = medium
        self.cutoff = cutoff
        self._values: dict[tuple[float, ...], float] = {}

    def __call__(self, k) -> float:
        key = tuple(float(x) for x in np.atleast_1d(k))
        if key not in self._values:
            if all(x == 0.0 for x in key):
                # exact: the constant mode is in the kernel at k = 0
                self._values[key] = 0.0
            else:
                self._values[key] = bloch_cell.mu0(self.medium, key, self.cutoff)
        return self._values[key]


def _richardson(samples: list[float]) -> float:
    """Limit of a sequence f(h_i) = L + c1 h_i^2 + c2 h_i^4 + ... with h halving.

    Raises RichardsonError unless the last two diagonal extrapolants agree to
    RICHARDSON_RTOL relative.
    """
    rows = [[float(samples[0])]]
    for i in range(1, len(samples)):
        row = [float(samples[i])]
        for j in range(1, i + 1):
            factor = 4.0**j
            row.append((factor * row[j - 1] - rows[i - 1][j - 1]) / (factor - 1.0))
        rows.append(row)
    best = rows[-1][-1]
    prev = rows[-2][-1]
    if abs(best - prev) > RICHARDSON_RTOL * (1.0 + abs(best)):
        raise RichardsonError(
            f"extrapolants {prev:.12g} and {best:.12g} differ beyond tolerance")
    return best


def _require_symmetric(medium: PeriodicMedium) -> None:
    if not (medium.reflection_symmetric and medium.permutation_symmetric):
        raise ValueError("coefficient extraction requires both symmetry flags; "
                         "non-symmetric tensor pipelines are unsupported")


def fit_dispersion(medium: PeriodicMedium, cutoff: int | None = None,
                   steps: tuple[float, ...] = STEP_SCHEDULE) -> DispersionCoefficients:
    """Extract (a*, alpha, beta) from central differences of mu_0 at k = 0.

    Uses mu_0(0) = 0 and evenness to halve the stencil evaluations:

        a*    = lim mu_0(h e1) / h^2
        alpha = lim (2 mu_0(2h e1) - 8 mu_0(h e1)) / (24 h^4)
        beta  = lim (4 mu_0(h(e1+e2)) - 8 mu_0(h e1)) / (24 h^4)   (n >= 2)
    """
    _require_symmetric(medium)
    n = medium.dimension
    mu = _Mu0Cache(medium, cutoff)

    def e1(h: float) -> tuple[float, ...]:
        return (h,) + (0.0,) * (n - 1)

    def diag(h: float) -> tuple[float, ...]:
        return (h, h) + (0.0,) * (n - 2)

    a_star = _richardson([mu(e1(h)) / h**2 for h in steps])
    alpha = _richardson([(2.0 * mu(e1(2 * h)) - 8.0 * mu(e1(h))) / (24.0 * h**4)
                         for h in steps])
    if n >= 2:
        beta = _richardson([(4.0 * mu(diag(h)) - 8.0 * mu(e1(h))) / (24.0 * h**4)
                            for h in steps])
    else:
        beta = 0.0
    return DispersionCoefficients(a_star=a_star, alpha=alpha, beta=beta,
                                  dimension=n, h_k=min(steps))


def fit_a_star(medium: PeriodicMedium, cutoff: int | None = None) -> float:
    """Homogenized coefficient a* = (1/2) d^2/dk_1^2 mu_0(0)."""
    _require_symmetric(medium)
    mu = _Mu0Cache(medium, cutoff)
    n = medium.dimension
    return _richardson([mu((h,) + (0.0,) * (n - 1)) / h**2 for h in STEP_SCHEDULE])


def fit_alpha_beta(medium: PeriodicMedium, cutoff: int | None = None) -> tuple[float, float]:
    """Fourth-order coefficients (alpha, beta); beta is 0 in one dimension."""
    coeffs = fit_dispersion(medium, cutoff)
    return coeffs.alpha, coeffs.beta


def build_tensors(coeffs: DispersionCoefficients) -> EffectiveTensors:
    """Populate A = a* I and the sparse fourth-order tensor C."""
    n = coeffs.dimension
    a = coeffs.a_star * np.eye(n)
    c = np.zeros((n, n, n, n))
    for i in range(n):
        c[i, i, i, i] = coeffs.alpha
    for i in range(n):
        for j in range(n):
            if i != j:
                c[i, i, j, j] = coeffs.beta
                c[i, j, i, j] = coeffs.beta
                c[i, j, j, i] = coeffs.beta
    return EffectiveTensors(a=a, c=c)


def _positive_part(x: float) -> float:
    # exact-zero passthrough: no epsilon snapping
    return x if x > 0.0 else 0.0


def sign_case(alpha: float, beta: float) -> int:
    if alpha >= 0.0 and beta >= 0.0:
        return 4
    if alpha <= 0.0 and beta <= 0.0:
        return 1
    return 2 if beta > 0.0 else 3


def decompose(coeffs: DispersionCoefficients) -> EffectiveTensors:
    """Split -C D^4 = E D^2 A D^2 - F D^4 with E, F positive semidefinite.

    E is the multiple of the identity ( {-alpha}_+ + 3 {-beta}_+ ) / a*; the
    only nonzero entries of F are F_iiii = {alpha}_+ + 3 {-beta}_+ and
    F_ijij = {-alpha}_+ + 3 {beta}_+ for i != j.
    """
    if coeffs.a_star <= 0:
        raise ValueError("decomposition requires a* > 0")
    base = build_tensors(coeffs)
    n = coeffs.dimension
    e_value = (_positive_part(-coeffs.alpha) + 3.0 * _positive_part(-coeffs.beta)) / coeffs.a_star
    f_diag = _positive_part(coeffs.alpha) + 3.0 * _positive_part(-coeffs.beta)
    f_cross = _positive_part(-coeffs.alpha) + 3.0 * _positive_part(coeffs.beta)
    e = e_value * np.eye(n)
    f = np.zeros((n, n, n, n))
    for i in range(n):
        f[i, i, i, i] = f_diag
    for i in range(n):
        for j in range(n):
            if i != j:
                f[i, j, i, j] = f_cross
    return EffectiveTensors(a=base.a, c=base.c, e=e, f=f,
                            case=sign_case(coeffs.alpha, coeffs.beta))


def quartic_symbol(tensor: np.ndarray, k: np.ndarray) -> np.ndarray:
    """T(k,k,k,k) for a fourth-order tensor; k has shape (..., n)."""
    return np.einsum("ijkl,...i,...j,...k,...l->...", tensor, k, k, k, k)


def quadratic_symbol(tensor: np.ndarray, k: np.ndarray) -> np.ndarray:
    return np.einsum("ij,...i,...j->...", tensor, k, k)


def symbol_residual(tensors: EffectiveTensors, k) -> float:
    """| -C(k,k,k,k) - ( E(k,k) A(k,k) - F(k,k,k,k) ) | at one wave vector."""
    if tensors.e is None or tensors.f is None:
        raise ValueError("tensors must carry the (E, F) decomposition")
    k = np.asarray(k, dtype=float)
    lhs = -quartic_symbol(tensors.c, k)
    rhs = quadratic_symbol(tensors.e, k) * quadratic_symbol(tensors.a, k) \
        - quartic_symbol(tensors.f, k)
    return float(np.abs(lhs - rhs))
