"""Modified Painleve II: the 3x3 RH problem on the four-ray contour, the
model problem on the shifted contour, and the ODE cross-check.

The ODE is ``u'' + y u + 2 u |u|^2 = 0``. For each ``y`` the RH problem
with jump ``exp(-i(yz - 4z^3/3) ad Lambda) S_n`` on the rays
``arg z = pi/6, 5pi/6`` (n = 1) and ``arg z = -pi/6, -5pi/6`` (n = 2) is
solved and ``u_P = 2 sqrt(2) (m_1)_13``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import brentq

from .algebra import IDENTITY, LAMBDA, commutator, dagger, swap_conj
from .errors import InvalidInputError, NumericalError, SasaSatsumaError
from .rh.contour import Contour, Piece, graded_breaks, ray
from .rh.solver import RHData, cauchy_operators, solve_rh

SQRT2 = np.sqrt(2.0)
UPPER, LOWER, SEGMENT = 1, 2, 5
JUMP_CUTOFF = 1e-15
MERGE_THRESHOLD = 1e-3


@dataclass
class PainleveData:
    s: complex
    y_grid: np.ndarray

    def __post_init__(self):
        self.y_grid = np.asarray(self.y_grid, dtype=float)
        if self.y_grid.ndim != 1 or self.y_grid.size < 2:
            raise InvalidInputError("y_grid must be a 1-D grid with at least 2 points")
        if np.any(np.diff(self.y_grid) <= 0):
            raise InvalidInputError("y_grid must be strictly increasing")


@dataclass
class PainleveSolution:
    s: complex
    y: np.ndarray
    u: np.ndarray
    u_prime: np.ndarray
    m1: np.ndarray
    residuals: np.ndarray
    ode_residual: float = field(default=np.nan)

    @property
    def psi(self):
        """``(psi1, psi2, psi3, psi4)`` read off the first and last rows of m1."""
        m1 = self.m1
        return m1[:, 0, 0], m1[:, 0, 1], m1[:, 0, 2], m1[:, 2, 2]

    def phase_spread(self, floor=1e-6):
        return phase_spread(self.u, floor)

    def structure_defects(self):
        """Max defects of ``(m1)_13 = u/(2 sqrt 2)``, ``psi1, psi4`` imaginary,
        and the two symmetries of m1."""
        p1, _, p3, p4 = self.psi
        return {
            "m13": float(np.max(np.abs(p3 - self.u / (2 * SQRT2)))),
            "psi_imag": float(max(np.max(np.abs(p1.real)), np.max(np.abs(p4.real)))),
            "antihermitian": float(np.max(np.abs(self.m1 + dagger(self.m1)))),
            "swap": float(np.max(np.abs(self.m1 + swap_conj(self.m1)))),
        }

    def to_csv_rows(self, window=None):
        res = pointwise_ode_residual(self.y, self.u)
        for i, (y, u) in enumerate(zip(self.y, self.u)):
            yield (y, u.real, u.imag, abs(u), np.angle(u), res[i])

    def to_json(self):
        p1, p2, p3, p4 = self.psi
        pack = lambda a: [[float(v.real), float(v.imag)] for v in a]  # noqa: E731
        return json.dumps({
            "s": [self.s.real, self.s.imag],
            "y": self.y.tolist(),
            "psi1": pack(p1), "psi2": pack(p2), "psi3": pack(p3), "psi4": pack(p4),
            "m1_entries": {f"{a+1}{b+1}": pack(self.m1[:, a, b])
                           for a in range(3) for b in range(3)},
            "ode_residual": self.ode_residual,
        })


def phase_spread(u, floor=1e-6):
    """Standard deviation of ``arg u`` (mod pi) over samples with
    ``|u| > floor``.

    u_P is a real profile times a fixed unit phase; the profile changes
    sign, so the phase is only defined modulo pi. It is measured relative
    to the phase at the largest sample.
    """
    u = np.asarray(u)
    big = np.abs(u) > floor
    if np.count_nonzero(big) < 2:
        return 0.0
    ref = u[big][np.argmax(np.abs(u[big]))]
    rel = 0.5 * np.angle((u[big] * np.conj(ref)) ** 2)
    return float(np.std(rel))


def truncation_radius(y_max, amplitude=1.0, z0=0.0, degree=0, cutoff=JUMP_CUTOFF):
    """Radius past which ``|jump - I|`` stays below ``cutoff`` on every ray.

    Uses the exact decay rate on the ray from ``z0`` at angle pi/6,
    ``-8r^3/3 - 4 sqrt(3) r^2 z0 + r (y - 4 z0^2)``, plus a polynomial
    factor ``amplitude * (1 + |z|)^degree`` for the data.
    """
    y_max = max(float(y_max), 0.0)

    def excess(r):
        expo = -8 * r**3 / 3 - 4 * np.sqrt(3) * r**2 * z0 + r * (y_max - 4 * z0**2)
        return expo + np.log(max(amplitude, 1e-300)) + degree * np.log1p(z0 + r) - np.log(cutoff)

    hi = 1.0
    while excess(hi) > 0:
        hi *= 2
    # excess is eventually decreasing; take the last crossing
    return brentq(excess, 0.5 * hi if excess(0.5 * hi) > 0 else 0.0, hi) + 0.25


def contour_P(radius, levels=2, max_panel=1.5, order=16):
    """Four rays from the origin, all oriented left to right."""
    kw = dict(levels=levels, max_panel=max_panel)
    pieces = [
        ray(0j, np.pi / 6, radius, outward=True, label="P1+", tag=UPPER, **kw),
        ray(0j, 5 * np.pi / 6, radius, outward=False, label="P1-", tag=UPPER, **kw),
        ray(0j, -5 * np.pi / 6, radius, outward=False, label="P2-", tag=LOWER, **kw),
        ray(0j, -np.pi / 6, radius, outward=True, label="P2+", tag=LOWER, **kw),
    ]
    return Contour(pieces, order=order)


def contour_Z(z0, radius, levels=2, max_panel=1.5, order=16):
    """Rays from ``+-z0`` plus the segment ``[-z0, z0]``; degenerates to the
    four-ray contour for ``z0 < MERGE_THRESHOLD``."""
    if z0 < MERGE_THRESHOLD:
        return contour_P(radius, levels, max_panel, order)
    kw = dict(levels=levels, max_panel=max_panel)
    z0 = float(z0)
    pieces = [
        ray(z0, np.pi / 6, radius, outward=True, label="Z1", tag=UPPER, **kw),
        ray(-z0, 5 * np.pi / 6, radius, outward=False, label="Z2", tag=UPPER, **kw),
        ray(-z0, -5 * np.pi / 6, radius, outward=False, label="Z3", tag=LOWER, **kw),
        ray(z0, -np.pi / 6, radius, outward=True, label="Z4", tag=LOWER, **kw),
        Piece(complex(-z0), complex(z0),
              graded_breaks(2 * z0, toward_start=True, toward_end=True, **kw),
              "Z5", SEGMENT),
    ]
    return Contour(pieces, order=order)


def _phase(y, z):
    return y * z - 4 * z**3 / 3


def painleve_jump(contour, s, y):
    """``w = v - I`` of the modified Painleve II problem at the nodes."""
    z = contour.z
    w = np.zeros((z.size, 3, 3), dtype=complex)
    th = _phase(y, z)
    up = contour.tag == UPPER
    lo = contour.tag == LOWER
    e = np.exp(-2j * th[up])
    w[up, 0, 2] = np.conj(s) * e
    w[up, 1, 2] = s * e
    e = np.exp(2j * th[lo])
    w[lo, 2, 0] = s * e
    w[lo, 2, 1] = np.conj(s) * e
    return w


def build_painleve_rh(s, y, radius=None, **contour_kw):
    """RH data for the modified Painleve II problem at a single ``y``."""
    s = complex(s)
    if radius is None:
        radius = truncation_radius(y, amplitude=abs(s) + 1.0)
    contour = contour_P(radius, **contour_kw)
    return RHData(contour, painleve_jump(contour, s, y), meta={"s": s, "y": y})


class PainleveSolver:
    """Repeated RH solves on one fixed contour; the Cauchy matrix is built
    once, so the discretization error is a smooth function of ``y``."""

    def __init__(self, s, y_max=4.0, radius=None, **contour_kw):
        self.s = complex(s)
        if radius is None:
            radius = truncation_radius(y_max, amplitude=abs(self.s) + 1.0)
        self.radius = radius
        self.y_max = y_max
        self.contour = contour_P(radius, **contour_kw)
        self.operators = cauchy_operators(self.contour, two_sided=False)

    def solve(self, y):
        if y > self.y_max + 1e-12:
            raise InvalidInputError(f"y = {y} beyond the contour's design range {self.y_max}")
        data = RHData(self.contour, painleve_jump(self.contour, self.s, y),
                      meta={"s": self.s, "y": y})
        try:
            return solve_rh(data, operators=self.operators)
        except SasaSatsumaError as exc:
            raise NumericalError(f"Painleve RH solve failed at y = {y}: {exc}") from exc


def _u_prime(m1, m2):
    """``d/dy (m1)_13`` from the Lax equation ``m1' = U0 m1 - i[Lambda, m2]``
    with ``U0 = i[Lambda, m1]``."""
    u0 = 1j * commutator(LAMBDA, m1)
    return (u0 @ m1)[..., 0, 2] - 2j * m2[..., 0, 2]


def solve_painleve(data: PainleveData, **solver_kw):
    """u_P on ``data.y_grid`` from one RH solve per grid point."""
    solver = PainleveSolver(data.s, y_max=max(data.y_grid.max(), 0.0), **solver_kw)
    n = data.y_grid.size
    m1 = np.empty((n, 3, 3), dtype=complex)
    m2 = np.empty((n, 3, 3), dtype=complex)
    res = np.empty(n)
    for i, y in enumerate(data.y_grid):
        sol = solver.solve(y)
        m1[i], m2[i], res[i] = sol.m1, sol.m2, sol.residual
    u = 2 * SQRT2 * m1[:, 0, 2]
    up = 2 * SQRT2 * _u_prime(m1, m2)
    out = PainleveSolution(s=complex(data.s), y=data.y_grid.copy(), u=u, u_prime=up,
                           m1=m1, residuals=res)
    out.ode_residual = ode_residual(out.y, out.u)
    return out


def _d2(f, h):
    """Fourth-order centered second difference on the points ``2:-2``."""
    return (-f[4:] + 16 * f[3:-1] - 30 * f[2:-2] + 16 * f[1:-3] - f[:-4]) / (12 * h * h)


def _d1(f, h):
    """Fourth-order centered first difference on the points ``2:-2``."""
    return (-f[4:] + 8 * f[3:-1] - 8 * f[1:-3] + f[:-4]) / (12 * h)


def pointwise_ode_residual(y, u):
    """``|u'' + y u + 2u|u|^2|`` by fourth-order centered differences on a
    uniform grid; NaN at the two end points on each side."""
    y = np.asarray(y)
    u = np.asarray(u)
    out = np.full(y.size, np.nan)
    if y.size < 5:
        return out
    h = y[1] - y[0]
    uc = u[2:-2]
    out[2:-2] = np.abs(_d2(u, h) + y[2:-2] * uc + 2 * uc * np.abs(uc) ** 2)
    return out


def ode_residual(y, u, window=None):
    """Max pointwise residual, optionally restricted to ``window=(lo, hi)``."""
    res = pointwise_ode_residual(y, u)
    mask = np.isfinite(res)
    if window is not None:
        mask &= (y >= window[0] - 1e-12) & (y <= window[1] + 1e-12)
    return float(np.max(res[mask])) if np.any(mask) else 0.0


def psi_system_defects(sol: PainleveSolution, window=None):
    """Defects of ``psi1' = -2i|psi3|^2``, ``psi2' = 2i psi3^2``,
    ``psi4' = 4i|psi3|^2`` and ``psi3'' + y psi3 + 16 psi3 |psi3|^2 = 0``
    on the grid interior (fourth-order centered differences)."""
    y = sol.y
    h = y[1] - y[0]
    p1, p2, p3, p4 = sol.psi
    c = slice(2, -2)
    mod2 = np.abs(p3[c]) ** 2
    d = {
        "psi1": np.abs(_d1(p1, h) + 2j * mod2),
        "psi2": np.abs(_d1(p2, h) - 2j * p3[c] ** 2),
        "psi4": np.abs(_d1(p4, h) - 4j * mod2),
        "psi3": np.abs(_d2(p3, h) + y[c] * p3[c] + 16 * p3[c] * mod2),
    }
    mask = np.ones(y.size - 4, dtype=bool)
    if window is not None:
        yc = y[c]
        mask = (yc >= window[0] - 1e-12) & (yc <= window[1] + 1e-12)
    return {k: float(np.max(v[mask])) for k, v in d.items()}


def psi_system_check(sol: PainleveSolution, window=None):
    """Largest defect over the four psi relations."""
    return max(psi_system_defects(sol, window).values())


def phase_flux(sol: PainleveSolution):
    """``|psi3|^2 (arg psi3)' = Im(conj(psi3) psi3')``, the conserved
    quantity whose vanishing forces a constant phase."""
    p3 = sol.u / (2 * SQRT2)
    p3p = sol.u_prime / (2 * SQRT2)
    return np.imag(np.conj(p3) * p3p)


def solve_painleve_ode(s, anchor, y_grid, rtol=1e-12, atol=1e-14):
    """Integrate ``u'' = -y u - 2u|u|^2`` from ``anchor = (y0, u(y0), u'(y0))``
    in both directions and sample on ``y_grid``."""
    y0, u0, up0 = anchor
    y_grid = np.asarray(y_grid, dtype=float)

    def rhs(y, q):
        u = q[0] + 1j * q[1]
        up = q[2] + 1j * q[3]
        upp = -y * u - 2 * u * abs(u) ** 2
        return [up.real, up.imag, upp.real, upp.imag]

    q0 = [complex(u0).real, complex(u0).imag, complex(up0).real, complex(up0).imag]
    out = np.empty(y_grid.size, dtype=complex)
    for part in (y_grid < y0, y_grid >= y0):
        pts = y_grid[part]
        if pts.size == 0:
            continue
        end = pts.min() if pts[0] < y0 else pts.max()
        if end == y0:
            out[part] = complex(u0)
            continue
        order = np.argsort(pts) if end > y0 else np.argsort(pts)[::-1]
        sol = solve_ivp(rhs, (y0, end), q0, method="DOP853", t_eval=pts[order],
                        rtol=rtol, atol=atol)
        if not sol.success:
            raise NumericalError(f"Painleve ODE integration failed: {sol.message}")
        vals = sol.y[0] + 1j * sol.y[1]
        tmp = np.empty(pts.size, dtype=complex)
        tmp[order] = vals
        out[part] = tmp
    return out


# --- model problem -------------------------------------------------------


@dataclass
class ModelProblemData:
    y: float
    t: float
    z0: float
    s: complex
    p_coeffs: tuple = ()

    def check_parameter_set(self, c1=4.0, c2=4.0):
        """Raise unless ``0 <= y <= C1``, ``t >= 1``, ``sqrt(y)/2 <= z0 <= C2``."""
        if not (0 <= self.y <= c1):
            raise InvalidInputError(f"y = {self.y} outside [0, {c1}]")
        if self.t < 1:
            raise InvalidInputError("t must be >= 1")
        if not (np.sqrt(self.y) / 2 - 1e-14 <= self.z0 <= c2):
            raise InvalidInputError(f"z0 = {self.z0} outside [sqrt(y)/2, {c2}]")


def _poly(coeffs, z, t):
    """``sum_j c_j z^j t^(-j/3)`` for ``coeffs = (c_0, c_1, ...)``."""
    out = np.zeros_like(z, dtype=complex)
    for j, c in enumerate(coeffs):
        out = out + c * z**j * t ** (-j / 3)
    return out


def model_jump(contour, data: ModelProblemData, t=None):
    """``w = v - I`` of the model problem with polynomial data."""
    t = data.t if t is None else t
    coeffs = (complex(data.s),) + tuple(complex(c) for c in data.p_coeffs)
    ccoeffs = tuple(np.conj(c) for c in coeffs)
    z = contour.z
    th = _phase(data.y, z)
    # p = (p1, p2), p2(z) = conj p1(-conj z); p^dagger(conj z) = (p1*(z), p1(-z))^T
    p1 = _poly(coeffs, z, t)
    p2 = _poly(ccoeffs, -z, t)
    q1 = _poly(ccoeffs, z, t)
    q2 = _poly(coeffs, -z, t)
    w = np.zeros((z.size, 3, 3), dtype=complex)
    up = contour.tag == UPPER
    lo = contour.tag == LOWER
    seg = contour.tag == SEGMENT
    ep = np.exp(2j * th)
    em = np.exp(-2j * th)
    for mask, upper, lower in ((up, True, False), (lo, False, True), (seg, True, True)):
        if upper:
            w[mask, 0, 2] = q1[mask] * em[mask]
            w[mask, 1, 2] = q2[mask] * em[mask]
        if lower:
            w[mask, 2, 0] = p1[mask] * ep[mask]
            w[mask, 2, 1] = p2[mask] * ep[mask]
    w[seg, 2, 2] = p1[seg] * q1[seg] + p2[seg] * q2[seg]
    return w


def solve_model_problem(data: ModelProblemData, t_factor=8.0, enforce_parameter_set=True,
                        return_solution=False, **contour_kw):
    """Return ``(m10, table)`` where ``m10`` is the ``1/z, t^0`` coefficient.

    The ``t^{-1/3}`` term is removed by Richardson elimination between
    ``t`` and ``t_factor * t``; with constant data (no ``p_coeffs``) the
    solution does not depend on ``t`` and a single solve is used.
    """
    if enforce_parameter_set:
        data.check_parameter_set()
    coeffs = (complex(data.s),) + tuple(complex(c) for c in data.p_coeffs)
    amp = sum(abs(c) for c in coeffs) + 1.0
    radius = truncation_radius(data.y, amplitude=amp, z0=data.z0,
                               degree=len(coeffs) - 1)
    contour = contour_Z(data.z0, radius, **contour_kw)
    ops = cauchy_operators(contour, two_sided=False)

    def m1_at(t):
        rh = RHData(contour, model_jump(contour, data, t), meta={"t": t})
        return solve_rh(rh, operators=ops)

    first = m1_at(data.t)
    table = {"t": [data.t], "m1": [first.m1]}
    if len(coeffs) == 1:
        m10 = first.m1
    else:
        t2 = t_factor * data.t
        second = m1_at(t2)
        table["t"].append(t2)
        table["m1"].append(second.m1)
        ratio = t_factor ** (-1 / 3)
        m10 = (second.m1 - ratio * first.m1) / (1 - ratio)
        table["m11"] = (first.m1 - m10) * data.t ** (1 / 3)
    if return_solution:
        return m10, table, first
    return m10, table
