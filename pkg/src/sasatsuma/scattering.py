"""Direct scattering: Jost functions, the scattering matrix ``s(k)``, the
reflection coefficient and the solitonless (winding) certificate.

The Jost function ``X`` solves ``X_x + ik[Lambda, X] = U0 X`` with
``X -> I`` as ``x -> +inf``. In the interaction picture
``Y = exp(ikx ad Lambda) X`` this reads ``Y_x = A(x) Y`` with
``A = exp(ikx ad Lambda) U0`` and ``s(k) = Y(-inf)``. For real ``k`` the
equation is integrated with the fourth-order Magnus scheme, which keeps
``Y`` exactly unitary with unit determinant and preserves the swap
symmetry.
"""

from __future__ import annotations

import csv
import io
import json
import warnings
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np
from scipy.interpolate import CubicSpline

from .algebra import IDENTITY, LAMBDA, build_U, dagger, det3, inv3, swap_conj
from .errors import (
    ConsistencyError,
    InvalidInputError,
    NumericalError,
    SpectralSingularityError,
)

DECAY_TOL = 1e-10
MIN_POINTS = 64
SYMMETRY_TOL = 1e-8
RHO_DECAY_TOL = 1e-8
# largest 2 |k| h per Magnus step
_OSC_STEP = 0.25
_GAUSS = (0.5 - np.sqrt(3) / 6, 0.5 + np.sqrt(3) / 6)


@dataclass
class InitialDatum:
    """Samples of ``u0`` on a uniform grid, optionally with the exact
    profile as a callable (used in place of spline interpolation)."""

    x: np.ndarray
    values: np.ndarray
    func: Optional[Callable] = None
    decay_tol: float = DECAY_TOL
    label: str = "samples"

    def __post_init__(self):
        self.x = np.asarray(self.x, dtype=float)
        self.values = np.asarray(self.values, dtype=complex)
        if self.x.ndim != 1 or self.x.shape != self.values.shape:
            raise InvalidInputError("x and values must be 1-D arrays of equal length")
        if self.x.size < MIN_POINTS:
            raise InvalidInputError(f"need at least {MIN_POINTS} grid points, got {self.x.size}")
        dx = np.diff(self.x)
        if np.any(dx <= 0) or np.ptp(dx) > 1e-9 * dx.mean():
            raise InvalidInputError("x grid must be uniform and increasing")
        if not np.all(np.isfinite(self.values)):
            raise InvalidInputError("u0 samples must be finite")
        edge = max(abs(self.values[0]), abs(self.values[-1]))
        if edge >= self.decay_tol:
            raise InvalidInputError(
                f"u0 not decayed at the grid ends (|u0| = {edge:.2e} >= {self.decay_tol:.0e})")
        self._spline = None

    @property
    def spacing(self):
        return self.x[1] - self.x[0]

    def __call__(self, xq):
        if self.func is not None:
            return np.asarray(self.func(xq), dtype=complex)
        if self._spline is None:
            self._spline = CubicSpline(self.x, self.values)
        return self._spline(xq)

    def on_grid(self, xq):
        """``u0`` at arbitrary points: the exact profile when known, else the
        spline inside the sampled range and zero outside it."""
        xq = np.asarray(xq, dtype=float)
        if self.func is not None:
            return np.asarray(self.func(xq), dtype=complex)
        inside = (xq >= self.x[0]) & (xq <= self.x[-1])
        out = np.zeros(xq.shape, dtype=complex)
        out[inside] = self(xq[inside])
        return out

    def scaled(self, factor):
        func = None if self.func is None else (lambda xq, f=self.func: factor * f(xq))
        return InitialDatum(self.x, factor * self.values, func, self.decay_tol,
                            f"{factor}*{self.label}")

    @classmethod
    def from_function(cls, func, x_min, x_max, n, label="function", **kw):
        x = np.linspace(x_min, x_max, n)
        return cls(x, func(x), func, label=label, **kw)

    @classmethod
    def profile(cls, name, n=1024, x_range=None, **params):
        """Named analytic profiles: ``gaussian`` (eps, width, x0, phase),
        ``sech`` (amplitude, width, x0, phase) and ``soliton`` (a, phi, x0)."""
        name = name.lower()
        if name == "gaussian":
            eps = params.pop("eps", 0.1)
            w = params.pop("width", 1.0)
            x0 = params.pop("x0", 0.0)
            ph = params.pop("phase", 0.0)
            func = lambda x: eps * np.exp(1j * ph) * np.exp(-((x - x0) / w) ** 2)  # noqa: E731
            half = w * 6.0 + abs(x0)
        elif name == "sech":
            amp = params.pop("amplitude", 1.0)
            w = params.pop("width", 1.0)
            x0 = params.pop("x0", 0.0)
            ph = params.pop("phase", 0.0)
            func = lambda x: amp * np.exp(1j * ph) / np.cosh((x - x0) / w)  # noqa: E731
            half = w * (np.log(2 * max(abs(amp), 1e-300) / DECAY_TOL) + 2) + abs(x0)
        elif name == "soliton":
            from .pde import one_soliton

            a = params.pop("a", 1.0)
            phi = params.pop("phi", 0.0)
            x0 = params.pop("x0", 0.0)
            func = lambda x: one_soliton(a, phi, x0, x, 0.0)  # noqa: E731
            half = (np.log(2 * a / DECAY_TOL) + 2) / a + abs(x0)
        elif name == "zero":
            func = lambda x: np.zeros_like(np.asarray(x, dtype=float), dtype=complex)  # noqa: E731
            half = 10.0
        else:
            raise InvalidInputError(f"unknown profile {name!r}")
        if params:
            raise InvalidInputError(f"unknown parameters for {name}: {sorted(params)}")
        lo, hi = x_range if x_range is not None else (-half, half)
        return cls.from_function(func, lo, hi, n, label=name)


def read_datum(path, **kw):
    """Read ``x, Re u0, Im u0`` records (comma or whitespace separated,
    ``#`` comments) into an :class:`InitialDatum`."""
    rows = []
    with open(path) as fh:
        for line in fh:
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            parts = line.replace(",", " ").split()
            if len(parts) != 3:
                raise InvalidInputError(f"expected 3 columns, got {len(parts)}: {line!r}")
            try:
                rows.append([float(p) for p in parts])
            except ValueError:
                if rows:
                    raise InvalidInputError(f"malformed record {line!r}") from None
                continue  # header line
    if not rows:
        raise InvalidInputError(f"no records in {path}")
    data = np.array(rows)
    return InitialDatum(data[:, 0], data[:, 1] + 1j * data[:, 2], label=str(path), **kw)


# --- integration -----------------------------------------------------------


def _steps(datum, kmax):
    """Backward step nodes ``x_max = x_0 > ... > x_N = x_min``; every data
    interval is split so that ``2 |k| h`` stays below ``_OSC_STEP``."""
    h = datum.spacing
    sub = max(1, int(np.ceil(2 * max(kmax, 1.0) * h / _OSC_STEP)))
    n = (datum.x.size - 1) * sub
    return np.linspace(datum.x[-1], datum.x[0], n + 1), sub


def _interaction_matrix(u, x, k):
    """``A = exp(ikx ad Lambda) U`` for ``u`` at points ``x`` (shape ``(P,)``)
    and wavenumbers ``k`` (shape ``(K,)``); result ``(K, P, 3, 3)``."""
    e = np.exp(2j * np.multiply.outer(k, x))
    ub = np.conj(u)
    a = np.zeros(e.shape + (3, 3), dtype=complex)
    a[..., 0, 2] = u * e
    a[..., 1, 2] = ub * e
    a[..., 2, 0] = -ub / e
    a[..., 2, 1] = -u / e
    return a


def _expm_skew(omega):
    """``exp(omega)`` for a stack of anti-Hermitian 3x3 matrices."""
    w, v = np.linalg.eigh(1j * omega)
    return (v * np.exp(-1j * w)[..., None, :]) @ dagger(v)


def _magnus_sweep(datum, k, record=False, kmax=None):
    """Integrate ``Y_x = A Y`` from ``x_max`` to ``x_min`` for real ``k``.

    Returns ``Y(x_min)`` of shape ``(K, 3, 3)`` and, with ``record``, the
    values at every data node (``(K, n, 3, 3)``, ascending x).
    """
    k = np.atleast_1d(np.asarray(k, dtype=float))
    nodes, sub = _steps(datum, np.max(np.abs(k)) if kmax is None else kmax)
    hs = np.diff(nodes)  # negative
    xa = nodes[:-1] + _GAUSS[0] * hs
    xb = nodes[:-1] + _GAUSS[1] * hs
    ua, ub = datum(xa), datum(xb)
    y = np.broadcast_to(IDENTITY, (k.size, 3, 3)).copy()
    out = None
    if record:
        out = np.empty((k.size, datum.x.size, 3, 3), dtype=complex)
        out[:, -1] = y
    c = np.sqrt(3) / 12
    block = 256
    for s0 in range(0, hs.size, block):
        sl = slice(s0, min(s0 + block, hs.size))
        h = hs[sl][None, :, None, None]
        a1 = _interaction_matrix(ua[sl], xa[sl], k)
        a2 = _interaction_matrix(ub[sl], xb[sl], k)
        omega = 0.5 * h * (a1 + a2) + c * h * h * (a2 @ a1 - a1 @ a2)
        steps = _expm_skew(omega)
        for j in range(steps.shape[1]):
            y = steps[:, j] @ y
            idx = s0 + j + 1
            if record and idx % sub == 0:
                out[:, datum.x.size - 1 - idx // sub] = y
    if not np.all(np.isfinite(y)):
        raise NumericalError("non-finite values while integrating the Jost equation")
    return y, out


def _column3_rk4(datum, k, record=False):
    """Third column of ``X`` at ``x_min`` for complex ``k`` (``Im k >= 0``)
    by classical RK4 on ``X3' = -ik diag(2, 2, 0) X3 + U0 X3``, integrated
    from ``x_max`` where ``X3 = e3``. This column is analytic in the upper
    half-plane and the backward integration is stable there."""
    k = np.atleast_1d(np.asarray(k, dtype=complex))
    nodes, sub = _steps(datum, np.max(np.abs(k)))
    hs = np.diff(nodes)
    xm = nodes[:-1] + 0.5 * hs
    u0, um, u1 = datum(nodes[:-1]), datum(xm), datum(nodes[1:])
    d = -1j * np.multiply.outer(k, [2.0, 2.0, 0.0])
    x3 = np.zeros((k.size, 3), dtype=complex)
    x3[:, 2] = 1.0
    out = None
    if record:
        out = np.empty((k.size, datum.x.size, 3), dtype=complex)
        out[:, -1] = x3

    def f(u, v):
        ub = np.conj(u)
        uv = np.stack([u * v[:, 2], ub * v[:, 2], -ub * v[:, 0] - u * v[:, 1]], axis=1)
        return d * v + uv

    for j, h in enumerate(hs):
        q1 = f(u0[j], x3)
        q2 = f(um[j], x3 + 0.5 * h * q1)
        q3 = f(um[j], x3 + 0.5 * h * q2)
        q4 = f(u1[j], x3 + h * q3)
        x3 = x3 + h / 6 * (q1 + 2 * q2 + 2 * q3 + q4)
        if record and (j + 1) % sub == 0:
            out[:, datum.x.size - 1 - (j + 1) // sub] = x3
    if not np.all(np.isfinite(x3)):
        raise NumericalError("non-finite values in the upper half-plane Jost column")
    return (x3, out) if record else x3


@dataclass
class JostSolution:
    """``X(x, k)`` on the data grid for one ``k``."""

    k: complex
    x: np.ndarray
    values: np.ndarray
    analytic_columns: tuple = (0, 1, 2)

    def __call__(self, xq):
        spline = CubicSpline(self.x, self.values, axis=0)
        return spline(xq)


def solve_X(datum: InitialDatum, k):
    """Jost solution normalized at ``+inf``.

    For real ``k`` all three columns are returned. For ``Im k > 0`` only
    the third column (analytic in the upper half-plane) is computed; the
    others are NaN.
    """
    if np.imag(k) == 0:
        _, ys = _magnus_sweep(datum, [float(np.real(k))], record=True)
        phase = 1j * float(np.real(k)) * datum.x
        lam = np.diag(LAMBDA).real
        # X = exp(-ikx ad Lambda) Y
        factor = np.exp(-phase[:, None, None] * (lam[:, None] - lam[None, :]))
        return JostSolution(complex(k), datum.x, ys[0] * factor)
    if np.imag(k) < 0:
        raise InvalidInputError("complex k must lie in the upper half-plane")
    vals = np.full((datum.x.size, 3, 3), np.nan, dtype=complex)
    _, col = _column3_rk4(datum, [k], record=True)
    vals[:, :, 2] = col[0]
    return JostSolution(complex(k), datum.x, vals, analytic_columns=(2,))


def born_X(datum: InitialDatum, k, x=None):
    """First Born iterate ``X - I = -int_x^inf exp(ik(x'-x) ad Lambda) U0 dx'``
    by trapezoid quadrature on a refined grid (real ``k``)."""
    x = datum.x if x is None else np.asarray(x)
    fine = np.linspace(datum.x[0], datum.x[-1], 8 * datum.x.size - 7)
    u = datum(fine)
    out = np.zeros((x.size, 3, 3), dtype=complex)
    for i, xi in enumerate(x):
        m = fine >= xi
        xs, us = fine[m], u[m]
        if xs.size < 2:
            continue
        e = np.exp(2j * k * (xs - xi))
        big = build_U(us)
        big[:, 0, 2] *= e
        big[:, 1, 2] *= e
        big[:, 2, 0] /= e
        big[:, 2, 1] /= e
        out[i] = -np.trapezoid(big, xs, axis=0)
    return out


def born_s13(datum: InitialDatum, k):
    """``-int e^{2ikx} u0(x) dx`` by trapezoid quadrature on a refined grid."""
    fine = np.linspace(datum.x[0], datum.x[-1], 8 * datum.x.size - 7)
    u = datum(fine)
    k = np.atleast_1d(k)
    return -np.trapezoid(np.exp(2j * np.multiply.outer(k, fine)) * u, fine, axis=-1)


# --- scattering record ------------------------------------------------------


@dataclass
class ScatteringRecord:
    k: np.ndarray
    s: np.ndarray
    rho1: np.ndarray
    rho2: np.ndarray
    winding_s33: Optional[int]
    det_defect: float
    unitarity_defect: float
    swap_defect: float
    rho_tail: float
    meta: dict = field(default_factory=dict)

    def rho_at(self, kq):
        """``(rho1, rho2)`` interpolated at ``kq`` (cubic), zero outside the grid."""
        kq = np.asarray(kq, dtype=float)
        r1 = CubicSpline(self.k, self.rho1)(kq)
        inside = np.abs(kq) <= self.k[-1]
        r1 = np.where(inside, r1, 0.0)
        r2 = np.conj(np.where(inside, CubicSpline(self.k, self.rho1)(-kq), 0.0))
        return r1, r2

    @property
    def s_at_zero(self):
        """``rho1(0)`` read at the central node of the symmetric grid."""
        mid = self.k.size // 2
        if abs(self.k[mid]) > 1e-14:
            return complex(CubicSpline(self.k, self.rho1)(0.0))
        return complex(self.rho1[mid])

    def summary(self):
        return {
            "det_defect": self.det_defect,
            "unitarity_defect": self.unitarity_defect,
            "swap_defect": self.swap_defect,
            "winding_s33": self.winding_s33,
            "rho_tail": self.rho_tail,
            "K": float(self.k[-1]),
            "n_k": int(self.k.size),
            "rho1_at_0": [self.s_at_zero.real, self.s_at_zero.imag],
            **self.meta,
        }

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        head = ["k"]
        for a in range(3):
            for b in range(3):
                head += [f"re_s{a+1}{b+1}", f"im_s{a+1}{b+1}"]
        w.writerow(head + ["re_rho1", "im_rho1"])
        for i, k in enumerate(self.k):
            row = [k]
            for v in self.s[i].ravel():
                row += [v.real, v.imag]
            row += [self.rho1[i].real, self.rho1[i].imag]
            w.writerow([_fmt(v) for v in row])
        return buf.getvalue()

    def to_json(self):
        return json.dumps(self.summary(), indent=2, sort_keys=True)

    @classmethod
    def from_csv(cls, text, sidecar=None):
        rows = list(csv.reader(io.StringIO(text)))
        data = np.array(rows[1:], dtype=float)
        k = data[:, 0]
        s = (data[:, 1:19:2] + 1j * data[:, 2:19:2]).reshape(-1, 3, 3)
        rho1 = data[:, 19] + 1j * data[:, 20]
        side = json.loads(sidecar) if sidecar else {}
        return cls(k=k, s=s, rho1=rho1, rho2=np.conj(rho1[::-1]),
                   winding_s33=side.get("winding_s33"),
                   det_defect=side.get("det_defect", np.nan),
                   unitarity_defect=side.get("unitarity_defect", np.nan),
                   swap_defect=side.get("swap_defect", np.nan),
                   rho_tail=side.get("rho_tail", np.nan))


def _fmt(v):
    return f"{float(v):.17g}"


def symmetric_k_grid(K=12.0, n=1025):
    if n % 2 == 0:
        raise InvalidInputError("symmetric k-grid needs an odd node count (k = 0 included)")
    k = np.linspace(-K, K, n)
    k[n // 2] = 0.0
    k[n // 2 + 1:] = -k[: n // 2][::-1]
    return k


def _scattering_matrices(datum, k):
    """``s(k)`` on a k-grid, in blocks to bound memory."""
    out = np.empty((k.size, 3, 3), dtype=complex)
    block = 128
    # one step size for the whole grid keeps s(k) and s(-k) consistent
    kmax = np.max(np.abs(k))
    for i in range(0, k.size, block):
        out[i:i + block], _ = _magnus_sweep(datum, k[i:i + block], kmax=kmax)
    return out


def compute_s(datum: InitialDatum, K=12.0, n_k=1025, k_grid=None, adapt=True,
              max_doublings=3, check=True):
    """Scattering matrix and reflection coefficient on a symmetric k-grid.

    With ``adapt`` the grid half-width ``K`` is doubled (at fixed spacing)
    until ``|rho1| < 1e-8`` on the outer 5% of nodes.
    """
    for attempt in range(max_doublings + 1):
        k = symmetric_k_grid(K, n_k) if k_grid is None else np.asarray(k_grid, dtype=float)
        if not np.allclose(k, -k[::-1], atol=1e-14, rtol=0):
            raise InvalidInputError("k_grid must be symmetric about 0")
        s = _scattering_matrices(datum, k)
        rho1 = reflection_coefficient_from_s(s)
        tail = _rho_tail(rho1)
        if tail < RHO_DECAY_TOL or not adapt or k_grid is not None:
            break
        K, n_k = 2 * K, 2 * n_k - 1
    det_def = float(np.max(np.abs(det3(s) - 1)))
    unit_def = float(np.max(np.abs(s - inv3(dagger(s)))))
    swap_def = float(np.max(np.abs(s - swap_conj(s[::-1]))))
    rec = ScatteringRecord(k=k, s=s, rho1=rho1, rho2=np.conj(rho1[::-1]), winding_s33=None,
                           det_defect=det_def, unitarity_defect=unit_def, swap_defect=swap_def,
                           rho_tail=tail, meta={"datum": datum.label})
    if check:
        for name, val in (("det s = 1", det_def), ("s = (s^dagger)^-1", unit_def),
                          ("s = SWAP conj(s(-k)) SWAP", swap_def)):
            if not val < SYMMETRY_TOL:
                raise ConsistencyError(f"scattering symmetry {name} violated: defect {val:.3e}")
    if tail >= RHO_DECAY_TOL:
        warnings.warn(f"|rho1| = {tail:.2e} on the outer 5% of the k-grid", RuntimeWarning,
                      stacklevel=2)
    rec.winding_s33 = solitonless_certificate(rec)
    return rec


def _rho_tail(rho1):
    m = max(1, int(np.ceil(0.05 * rho1.size)))
    return float(max(np.max(np.abs(rho1[:m])), np.max(np.abs(rho1[-m:]))))


def reflection_coefficient_from_s(s):
    s33 = s[:, 2, 2]
    small = np.abs(s33) < 1e-10
    if np.any(small):
        raise SpectralSingularityError(
            f"|s33| < 1e-10 on the real line ({np.count_nonzero(small)} nodes)")
    return np.conj(s[:, 0, 2]) / np.conj(s33)


def reflection_coefficient(record: ScatteringRecord):
    """``rho1 = conj(s13)/conj(s33)`` on the record's grid."""
    return reflection_coefficient_from_s(record.s)


def solitonless_certificate(record: ScatteringRecord):
    """Winding number of ``s33`` along the real line, closed at infinity
    through ``s33 -> 1``; equals the number of zeros in the upper
    half-plane."""
    s33 = record.s[:, 2, 2]
    ph = np.angle(s33)
    inc = np.angle(s33[1:] / s33[:-1])
    if np.any(np.abs(inc) >= np.pi / 2):
        raise NumericalError("arg s33 changes by >= pi/2 between k-nodes; refine the k-grid")
    total = np.sum(inc) + ph[0] - ph[-1]  # closing arc: from arg s33(K) back to arg s33(-K)
    # the closing contribution vanishes once s33(+-K) ~ 1
    return int(np.rint(total / (2 * np.pi)))


def s33_upper(datum: InitialDatum, k):
    """``s33(k)`` for ``Im k >= 0`` from the analytic third Jost column."""
    return _column3_rk4(datum, k)[:, 2]


def count_zeros_upper(datum: InitialDatum, kmax=4.0, n=80):
    """Dense evaluation of ``s33`` on ``[-kmax, kmax] x (0, kmax]`` and an
    argument-principle count around the box boundary."""
    side = np.linspace(-kmax, kmax, n)
    up = np.linspace(1e-3, kmax, n // 2)
    path = np.concatenate([
        side + 1e-3j,
        kmax + 1j * up[1:],
        side[::-1][1:] + 1j * kmax,
        -kmax + 1j * up[::-1][1:],
    ])
    vals = s33_upper(datum, path)
    inc = np.angle(np.roll(vals, -1) / vals)
    return int(np.rint(np.sum(inc) / (2 * np.pi))), path, vals
