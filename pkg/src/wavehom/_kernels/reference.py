"""Pure-NumPy fallback for the hot finite-difference kernels.

All kernels work on padded arrays with two ghost layers per side.  Interior
point j of an axis sits at padded index j + 2.  Ghost entries are zero for
zero-exterior boundaries and are refreshed from the opposite side for
periodic ones.  ``advance_*`` kernels run the leapfrog loop in place over the
two passed buffers; after an odd number of steps the roles of the buffers are
exchanged (the caller tracks parity).
"""

from __future__ import annotations

import numpy as np

_BLOWUP = 1e300


def refresh_ghosts_1d(u: np.ndarray, periodic: bool) -> None:
    if periodic:
        n = u.shape[0] - 4
        u[0] = u[n]
        u[1] = u[n + 1]
        u[n + 2] = u[2]
        u[n + 3] = u[3]


def refresh_ghosts_2d(u: np.ndarray, periodic0: bool, periodic1: bool) -> None:
    if periodic0:
        n = u.shape[0] - 4
        u[0, :] = u[n, :]
        u[1, :] = u[n + 1, :]
        u[n + 2, :] = u[2, :]
        u[n + 3, :] = u[3, :]
    if periodic1:
        n = u.shape[1] - 4
        u[:, 0] = u[:, n]
        u[:, 1] = u[:, n + 1]
        u[:, n + 2] = u[:, 2]
        u[:, n + 3] = u[:, 3]


def apply_hetero_1d(u: np.ndarray, a_int: np.ndarray, a_half: np.ndarray,
                    dx: float, out: np.ndarray) -> None:
    """Fourth-order divergence-form stencil on the interior of a padded line."""
    c1 = 4.0 / (3.0 * dx * dx)
    c2 = 1.0 / (12.0 * dx * dx)
    ui = u[2:-2]
    term1 = a_half[2:-1] * (u[3:-1] - ui) - a_half[1:-2] * (ui - u[1:-3])
    term2 = a_int[3:-1] * (u[4:] - ui) - a_int[1:-3] * (ui - u[:-4])
    out[:] = c1 * term1 - c2 * term2


def apply_hetero_2d(u: np.ndarray, a0_int: np.ndarray, a0_half: np.ndarray,
                    a1_int: np.ndarray, a1_half: np.ndarray,
                    dx0: float, dx1: float, out: np.ndarray) -> None:
    """Dimension-by-dimension fourth-order stencil for diagonal media.

    Coefficient arrays are averaged along their own axis: a0_* have the
    extended axis-0 length and interior axis-1 length, a1_* the converse.
    """
    c1 = 4.0 / (3.0 * dx0 * dx0)
    c2 = 1.0 / (12.0 * dx0 * dx0)
    ui = u[2:-2, 2:-2]
    term1 = a0_half[2:-1, :] * (u[3:-1, 2:-2] - ui) - a0_half[1:-2, :] * (ui - u[1:-3, 2:-2])
    term2 = a0_int[3:-1, :] * (u[4:, 2:-2] - ui) - a0_int[1:-3, :] * (ui - u[:-4, 2:-2])
    out[:] = c1 * term1 - c2 * term2
    c1 = 4.0 / (3.0 * dx1 * dx1)
    c2 = 1.0 / (12.0 * dx1 * dx1)
    term1 = a1_half[:, 2:-1] * (u[2:-2, 3:-1] - ui) - a1_half[:, 1:-2] * (ui - u[2:-2, 1:-3])
    term2 = a1_int[:, 3:-1] * (u[2:-2, 4:] - ui) - a1_int[:, 1:-3] * (ui - u[2:-2, :-4])
    out += c1 * term1 - c2 * term2


def advance_hetero_1d(u_prev: np.ndarray, u_curr: np.ndarray,
                      a_int: np.ndarray, a_half: np.ndarray,
                      dx: float, dt: float, n_steps: int,
                      periodic: bool) -> tuple[int, bool]:
    """Run ``n_steps`` leapfrog steps in place; returns (steps done, finite)."""
    dt2 = dt * dt
    scratch = np.empty(u_curr.shape[0] - 4)
    a, b = u_prev, u_curr
    for s in range(n_steps):
        refresh_ghosts_1d(b, periodic)
        apply_hetero_1d(b, a_int, a_half, dx, scratch)
        a[2:-2] = 2.0 * b[2:-2] - a[2:-2] + dt2 * scratch
        m = np.max(np.abs(a[2:-2]))
        a, b = b, a
        if not m < _BLOWUP:
            return s + 1, False
    return n_steps, True


def advance_hetero_2d(u_prev: np.ndarray, u_curr: np.ndarray,
                      a0_int: np.ndarray, a0_half: np.ndarray,
                      a1_int: np.ndarray, a1_half: np.ndarray,
                      dx0: float, dx1: float, dt: float, n_steps: int,
                      periodic0: bool, periodic1: bool) -> tuple[int, bool]:
    dt2 = dt * dt
    scratch = np.empty((u_curr.shape[0] - 4, u_curr.shape[1] - 4))
    a, b = u_prev, u_curr
    for s in range(n_steps):
        refresh_ghosts_2d(b, periodic0, periodic1)
        apply_hetero_2d(b, a0_int, a0_half, a1_int, a1_half, dx0, dx1, scratch)
        a[2:-2, 2:-2] = 2.0 * b[2:-2, 2:-2] - a[2:-2, 2:-2] + dt2 * scratch
        m = np.max(np.abs(a[2:-2, 2:-2]))
        a, b = b, a
        if not m < _BLOWUP:
            return s + 1, False
    return n_steps, True
