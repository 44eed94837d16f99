"""The real-line RH problem of the Sasa-Satsuma equation and the
reconstruction ``u(x, t) = 2i (m_1)_13``.

With ``rho = (rho1, rho2)`` and ``theta = 2ikx - 8ik^3 t`` the jump is
``v = [[I, rho^dagger e^{-theta}], [rho e^{theta}, 1 + rho rho^dagger]]``,
factored as ``v = (I - w^-)^{-1}(I + w^+)`` with ``w^-`` carrying
``rho e^{theta}`` in the third row and ``w^+`` carrying
``rho^dagger e^{-theta}`` in the third column.
"""

from __future__ import annotations

import numpy as np

from ..errors import InvalidInputError, OscillationBudgetError
from .line import LineGrid
from .solver import RHData, cauchy_operators, recover_u, solve_rh

BUDGET = np.pi / 4
RHO_FLOOR = 1e-8
DEFAULT_NODES = 384
DEFAULT_SCALE = 4.0


def cauchy_boundary(h, grid: LineGrid, side, decay_tol=1e-10):
    """``C_+ h`` (``side='plus'``) or ``C_- h`` (``side='minus'``) at the
    nodes of a real-line grid."""
    h = np.asarray(h, dtype=complex)
    ends = np.argsort(np.abs(grid.k))[-2:]
    if np.max(np.abs(h[ends])) >= decay_tol:
        raise InvalidInputError("density does not decay at the ends of the line grid")
    if side in ("plus", "+", 1):
        return grid.c_plus(h)
    if side in ("minus", "-", -1):
        return grid.c_minus(h)
    raise InvalidInputError(f"side must be 'plus' or 'minus', not {side!r}")


def oscillation_measure(x, t, grid: LineGrid, rho_abs):
    """``max |d/dk (2kx - 8k^3 t)| * dk`` over nodes where ``|rho| > RHO_FLOOR``."""
    keep = rho_abs > RHO_FLOOR
    if not np.any(keep):
        return 0.0
    k = grid.k[keep]
    return float(np.max(np.abs(2 * x - 24 * k * k * t) * grid.spacing()[keep]))


def rho_on_grid(rho1, grid: LineGrid):
    """``(rho1, rho2)`` at the grid nodes. ``rho1`` is a callable, a record
    with ``rho_at`` or an array already sampled at ``grid.k``."""
    if hasattr(rho1, "rho_at"):
        return rho1.rho_at(grid.k)
    if callable(rho1):
        r1 = np.asarray(rho1(grid.k), dtype=complex)
        r2 = np.conj(np.asarray(rho1(-grid.k), dtype=complex))
        return r1, r2
    r1 = np.asarray(rho1, dtype=complex)
    if r1.shape != grid.k.shape:
        raise InvalidInputError("sampled rho1 must live on the grid nodes")
    # node j pairs with node n-1-j under k -> -k
    return r1, np.conj(r1[::-1])


def build_jump_v(x, t, rho1, grid: LineGrid | None = None, check_budget=True):
    """RH data on the real line for ``(x, t)``.

    Raises :class:`OscillationBudgetError` if the phase varies by more
    than ``pi/4`` between neighbouring nodes where ``rho`` matters; such
    ``(x, t)`` belong to the long-time asymptotics module.
    """
    grid = LineGrid(DEFAULT_NODES, DEFAULT_SCALE) if grid is None else grid
    r1, r2 = rho_on_grid(rho1, grid)
    if check_budget:
        osc = oscillation_measure(x, t, grid, np.maximum(np.abs(r1), np.abs(r2)))
        if osc > BUDGET:
            raise OscillationBudgetError(
                f"phase step {osc:.3f} > pi/4 at (x, t) = ({x}, {t}); use the "
                "long-time asymptotics (asympt module) for this region")
    k = grid.k
    e = np.exp(2j * k * x - 8j * k**3 * t)
    n = k.size
    wm = np.zeros((n, 3, 3), dtype=complex)
    wp = np.zeros((n, 3, 3), dtype=complex)
    wm[:, 2, 0] = r1 * e
    wm[:, 2, 1] = r2 * e
    wp[:, 0, 2] = np.conj(r1) / e
    wp[:, 1, 2] = np.conj(r2) / e
    return RHData(grid, wp, wm, meta={"x": x, "t": t})


def jump_matrix(data: RHData):
    """Full jump ``v`` at the nodes."""
    return data.jump


def reconstruct(rho1, x_values, t, grid: LineGrid | None = None, tol=1e-10,
                check_budget=True):
    """``u(x, t)`` at each ``x`` from one RH solve per point.

    Returns ``(u, residuals, solutions)``.
    """
    grid = LineGrid(DEFAULT_NODES, DEFAULT_SCALE) if grid is None else grid
    ops = cauchy_operators(grid, two_sided=True)
    xs = np.atleast_1d(np.asarray(x_values, dtype=float))
    u = np.empty(xs.size, dtype=complex)
    res = np.empty(xs.size)
    sols = []
    for i, x in enumerate(xs):
        data = build_jump_v(x, t, rho1, grid, check_budget=check_budget)
        sol = solve_rh(data, tol=tol, operators=ops)
        u[i] = recover_u(sol)
        res[i] = sol.residual
        sols.append(sol)
    return u, res, sols
