"""Singular-integral-equation solver for 3x3 matrix RH problems.

The boundary unknown ``mu`` solves ``(I - C_w) mu = I`` with
``C_w f = C_+(f w^-) + C_-(f w^+)`` and the jump factored as
``v = (I - w^-)^{-1} (I + w^+)``. On general contours the one-sided choice
``w^- = 0, w^+ = v - I`` is used. The solution off the contour is
``m = I + C(mu (w^+ + w^-))`` and its 1/z coefficient is obtained by
quadrature of the density, never by sampling m at large z.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
import scipy.linalg as sla
from scipy.sparse.linalg import LinearOperator, gmres

from ..algebra import IDENTITY, dagger, swap_conj
from ..errors import AccuracyError, NumericalError
from .contour import Contour
from .line import LineGrid

DENSE_LIMIT = 4000
DEFAULT_TOL = 1e-10


@dataclass
class RHData:
    """Contour plus jump factors sampled at the quadrature nodes.

    ``w_minus``/``w_plus`` have shape ``(N, 3, 3)``; ``w_minus`` may be
    ``None`` (one-sided convention).
    """

    contour: object
    w_plus: np.ndarray
    w_minus: Optional[np.ndarray] = None
    meta: dict = field(default_factory=dict)

    @property
    def jump(self):
        """Jump matrix ``v = (I - w^-)^{-1}(I + w^+)`` at the nodes."""
        vp = IDENTITY + self.w_plus
        if self.w_minus is None:
            return vp
        return np.linalg.solve(IDENTITY - self.w_minus, vp)


@dataclass
class RHSolution:
    mu: np.ndarray
    m1: np.ndarray
    m2: np.ndarray
    residual: float
    data: RHData = field(repr=False)

    def symmetry_defects(self):
        """Defects of ``m1 = -m1^dagger`` and ``m1 = -SWAP conj(m1) SWAP``."""
        m1 = self.m1
        return (
            float(np.max(np.abs(m1 + dagger(m1)))),
            float(np.max(np.abs(m1 + swap_conj(m1)))),
        )

    def evaluate(self, points):
        """``m`` at off-contour points (shape ``(P, 3, 3)``)."""
        dens = _density(self.mu, self.data)
        return IDENTITY + self.data.contour.apply_cauchy(dens, targets=points, side=0)

    def to_dict(self, **extra):
        out = dict(extra)
        out["residual"] = self.residual
        out["m1"] = [[[float(v.real), float(v.imag)] for v in row] for row in self.m1]
        return out


def _density(mu, data):
    w = data.w_plus if data.w_minus is None else data.w_plus + data.w_minus
    return mu @ w


def _moment(contour, dens, power):
    zp = contour.z**power
    return contour.integrate(zp[:, None, None] * dens)


def _apply(op, f):
    if hasattr(op, "apply"):
        return op.apply(f)
    return np.tensordot(op, f, axes=(1, 0))


def _apply_cw(contour, rows, data, kminus, kplus):
    """``C_w`` applied to a stack of row-vector densities ``rows`` (N, R, 3)."""
    out = _apply(kminus, rows @ data.w_plus)
    if data.w_minus is not None:
        out = out + _apply(kplus, rows @ data.w_minus)
    return out


def solve_rh(data: RHData, tol=DEFAULT_TOL, operators=None):
    """Solve the singular integral equation for ``mu`` and extract ``m1``.

    ``operators`` optionally carries precomputed ``(K_minus, K_plus)``
    Cauchy matrices, which lets repeated solves on a fixed contour skip
    their assembly. Raises :class:`NumericalError` if the linear solve
    fails and :class:`AccuracyError` if the collocated residual exceeds
    ``tol``.
    """
    contour = data.contour
    n = contour.size
    if operators is None:
        operators = cauchy_operators(contour, two_sided=data.w_minus is not None)
    kminus, kplus = operators

    if 3 * n <= DENSE_LIMIT and not isinstance(kminus, LinearOperator):
        # A[(i,b),(j,c)] = delta - K-_ij w+_j[c,b] - K+_ij w-_j[c,b]
        amat = kminus[:, None, :, None] * np.transpose(data.w_plus, (2, 0, 1))[None]
        if data.w_minus is not None:
            amat = amat + kplus[:, None, :, None] * np.transpose(data.w_minus, (2, 0, 1))[None]
        amat = np.eye(3 * n, dtype=complex) - amat.reshape(3 * n, 3 * n)
        rhs = np.tile(IDENTITY, (n, 1))  # rows (i, b), columns a
        try:
            lu = sla.lu_factor(amat, check_finite=True)
        except (ValueError, sla.LinAlgError) as exc:
            raise NumericalError(f"dense RH solve failed: {exc}") from exc
        sol = sla.lu_solve(lu, rhs)
        # sol[(i,b), a] = mu_i[a, b]
        mu = np.transpose(sol.reshape(n, 3, 3), (0, 2, 1))
        if not np.all(np.isfinite(mu)):
            cond = np.linalg.cond(amat)
            raise NumericalError(f"non-finite RH solution (condition ~ {cond:.3g})")
    else:
        mu = _solve_iterative(contour, data, kminus, kplus, tol)

    resid = mu - IDENTITY - _apply_cw(contour, mu, data, kminus, kplus)
    residual = float(np.max(np.abs(resid)))
    if residual > tol:
        raise AccuracyError(f"RH residual {residual:.3e} above tolerance {tol:.1e}")
    dens = _density(mu, data)
    m1 = -_moment(contour, dens, 0) / (2j * np.pi)
    m2 = -_moment(contour, dens, 1) / (2j * np.pi)
    return RHSolution(mu=mu, m1=m1, m2=m2, residual=residual, data=data)


def _solve_iterative(contour, data, kminus, kplus, tol):
    n = contour.size

    def matvec(vec):
        rows = vec.reshape(n, 1, 3)
        return (rows - _apply_cw(contour, rows, data, kminus, kplus)).ravel()

    op = LinearOperator((3 * n, 3 * n), matvec=matvec, dtype=complex)
    mu = np.empty((n, 3, 3), dtype=complex)
    for a in range(3):
        rhs = np.tile(IDENTITY[a], n)
        x, info = gmres(op, rhs, rtol=tol * 1e-2, atol=0.0, restart=200, maxiter=50)
        if info != 0:
            raise NumericalError(f"GMRES did not converge (info={info}) for row {a}")
        mu[:, a, :] = x.reshape(n, 3)
    return mu


def cauchy_operators(contour, two_sided=True):
    """``(C_-, C_+)`` on the contour, as dense matrices or linear operators."""
    if isinstance(contour, LineGrid):
        return contour.operators(dense=3 * contour.size <= DENSE_LIMIT)
    kminus = contour.cauchy_matrix(side=-1)
    kplus = contour.cauchy_matrix(side=+1) if two_sided else None
    return kminus, kplus


def recover_u(sol: RHSolution):
    """``u = 2i (m1)_13``."""
    return complex(2j * sol.m1[0, 2])


def solution_json(sol: RHSolution, x, t):
    u = recover_u(sol)
    return json.dumps(sol.to_dict(x=x, t=t, u_re=u.real, u_im=u.imag))
