"""Long-time asymptotics in the Painleve sector ``|x| <= M t^(1/3)``.

The leading term is ``u ~ t^(-1/3) u1(y)`` with ``y = x/(3t)^(1/3)`` and
``u1(y) = i u_P(y; s)/(3^(1/3) sqrt 2)``, ``s = rho1(0)``. The validator
evolves the initial datum with the spectral reference solver, measures the
in-sector error at several times and fits its decay exponent.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.interpolate import CubicSpline

from .errors import InvalidInputError, RangeError, SolitonsPresentError
from .painleve import PainleveData, PainleveSolution, phase_spread, solve_painleve
from .pde import EvolveConfig, Sponge, WaveField, evolve
from .scattering import InitialDatum, compute_s

CUBE_ROOT_3 = 3 ** (1 / 3)
SECTOR_POINTS = 41


@dataclass(frozen=True)
class SectorPoint:
    x: float
    t: float
    M: float | None = None

    def __post_init__(self):
        if self.t < 1:
            raise InvalidInputError("sector points need t >= 1")
        if self.M is not None and abs(self.x) > self.M * self.t ** (1 / 3) * (1 + 1e-12):
            raise InvalidInputError(f"|x| = {abs(self.x)} outside the sector M t^(1/3)")

    @property
    def y(self):
        return self.x / (3 * self.t) ** (1 / 3)

    @property
    def zeta(self):
        return self.x / self.t

    @property
    def k0(self):
        """Stationary point ``sqrt(x/12t)``; ``0.0`` for ``x < 0`` (no real
        stationary points there, see ``has_real_k0``)."""
        return float(np.sqrt(self.x / (12 * self.t))) if self.x >= 0 else 0.0

    @property
    def has_real_k0(self):
        return self.x >= 0


def phase_function(pt: SectorPoint, k):
    """``Phi(zeta, k) = 2ik zeta - 8ik^3``."""
    k = np.asarray(k, dtype=complex)
    return 2j * k * pt.zeta - 8j * k**3


def phase_derivative(pt: SectorPoint, k):
    k = np.asarray(k, dtype=complex)
    return 2j * pt.zeta - 24j * k**2


class LeadingTerm:
    """Cubic interpolant of ``u1`` built from a Painleve solution."""

    def __init__(self, painleve_sol: PainleveSolution):
        self.sol = painleve_sol
        self.y = painleve_sol.y
        self.u1 = 1j * painleve_sol.u / (CUBE_ROOT_3 * np.sqrt(2))
        self._spline = CubicSpline(self.y, self.u1)

    def u1_at(self, y):
        y = np.asarray(y, dtype=float)
        if np.any(y < self.y[0] - 1e-12) or np.any(y > self.y[-1] + 1e-12):
            raise RangeError(f"y outside the Painleve grid [{self.y[0]}, {self.y[-1]}]")
        return self._spline(y)

    def __call__(self, x, t):
        x = np.asarray(x, dtype=float)
        y = x / (3 * t) ** (1 / 3)
        return t ** (-1 / 3) * self.u1_at(y)


def leading_term(x, t, painleve_sol):
    """``t^(-1/3) i u_P(y; s)/(3^(1/3) sqrt 2)`` at ``y = x/(3t)^(1/3)``."""
    lt = painleve_sol if isinstance(painleve_sol, LeadingTerm) else LeadingTerm(painleve_sol)
    return lt(x, t)


def hierarchy_residual(y, u1, window=None):
    """Max defect of ``u1''' + y u1' + u1 + 3^(5/3)(3|u1|^2 u1' + u1^2 conj(u1)')``
    by centered second-order differences on a uniform grid."""
    y = np.asarray(y, dtype=float)
    u = np.asarray(u1, dtype=complex)
    if y.size < 5:
        return 0.0
    h = y[1] - y[0]
    if np.ptp(np.diff(y)) > 1e-9 * h:
        raise InvalidInputError("hierarchy residual needs a uniform grid")
    c = slice(2, -2)
    d1 = (u[3:-1] - u[1:-3]) / (2 * h)
    d3 = (u[4:] - 2 * u[3:-1] + 2 * u[1:-3] - u[:-4]) / (2 * h**3)
    uc = u[c]
    rhs = -(3 ** (5 / 3)) * (3 * np.abs(uc) ** 2 * d1 + uc**2 * np.conj(d1))
    res = np.abs(d3 + y[c] * d1 + uc - rhs)
    if window is not None:
        res = res[(y[c] >= window[0] - 1e-12) & (y[c] <= window[1] + 1e-12)]
    return float(np.max(res)) if res.size else 0.0


@dataclass
class LongRunBox:
    """Periodic box for long runs. All linear waves travel right (group
    velocity ``3 xi^2``), so a sponge near the right edge absorbs the
    radiation before it re-enters from the left."""

    L: float = 400.0
    n: int = 2048
    dt: float = 0.01
    sponge_start: float = 100.0
    sponge_ramp: float = 40.0
    sponge_strength: float = 5.0

    def config(self, T):
        return EvolveConfig(dt=self.dt, T=T,
                            sponge=Sponge(self.sponge_start, self.sponge_ramp, self.sponge_strength))


@dataclass
class AsymptoticsReport:
    t_list: list
    M: float
    s: complex
    sup_errors: list
    left_errors: list
    right_errors: list
    exponent: float
    left_exponent: float
    right_exponent: float
    phase_flatness: float
    measured_phase_gap: list
    max_imag_measured: float
    max_imag_predicted: float
    k0_scaled_max: float
    hierarchy: float
    flags: list = field(default_factory=list)

    @property
    def running_exponents(self):
        t = np.asarray(self.t_list)
        e = np.asarray(self.sup_errors)
        out = [np.nan]
        for i in range(1, t.size):
            if e[i] > 0 and e[i - 1] > 0:
                out.append(float(np.log(e[i] / e[i - 1]) / np.log(t[i] / t[i - 1])))
            else:
                out.append(np.nan)
        return out

    def to_json(self):
        d = asdict(self)
        d["s"] = [self.s.real, self.s.imag]
        d["running_exponents"] = self.running_exponents
        return json.dumps(d, indent=2, sort_keys=True, default=_nan_safe)

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "sup_error", "exponent_running", "phase_flatness"])
        for t, e, r in zip(self.t_list, self.sup_errors, self.running_exponents):
            w.writerow([f"{t:.17g}", f"{e:.17g}", f"{r:.17g}", f"{self.phase_flatness:.17g}"])
        return buf.getvalue()


def _nan_safe(v):
    return float(v)


def fit_exponent(t_list, errors):
    """Least-squares slope of ``log(error)`` against ``log(t)``; NaN when
    any error vanishes."""
    e = np.asarray(errors, dtype=float)
    if np.any(e <= 0) or e.size < 2:
        return float("nan")
    return float(np.polyfit(np.log(t_list), np.log(e), 1)[0])


def sample_field(field_: WaveField, x):
    """Trigonometric interpolation of a periodic field at arbitrary ``x``."""
    vh = np.fft.fft(field_.values) / field_.n
    xi = 2 * np.pi * np.fft.fftfreq(field_.n, d=field_.dx)
    # drop the unpaired Nyquist mode so the interpolant stays real for real data
    vh[field_.n // 2] = 0.0
    x = np.asarray(x, dtype=float)
    return np.exp(1j * np.outer(x + 0.5 * field_.L, xi)) @ vh


def validate_sector(datum: InitialDatum, M=1.0, t_list=(25.0, 50.0, 100.0, 200.0),
                    box: LongRunBox | None = None, painleve_sol=None, record=None,
                    y_grid=None):
    """Evolve ``datum`` and compare with the leading term in the sector."""
    t_list = sorted(float(t) for t in t_list)
    if len(t_list) < 4 or t_list[0] < 1:
        raise InvalidInputError("t_list needs at least 4 times, all >= 1")
    box = LongRunBox() if box is None else box
    if record is None:
        record = compute_s(datum)
    if record.winding_s33:
        raise SolitonsPresentError(
            f"s33 has {record.winding_s33} zero(s) in the upper half-plane")
    s = record.s_at_zero
    if painleve_sol is None:
        y = np.round(np.arange(-8.0, 4.0 + 1e-9, 0.01), 10) if y_grid is None else y_grid
        painleve_sol = solve_painleve(PainleveData(s, y))
    lead = LeadingTerm(painleve_sol)

    u0 = WaveField.from_function(datum.on_grid, box.L, box.n)
    _, snaps = evolve(u0, box.config(t_list[-1]), snapshot_times=t_list)

    sup, left, right, gaps = [], [], [], []
    imag_m = imag_p = 0.0
    k0max = 0.0
    flat = 0.0
    for snap in snaps:
        t = snap.t
        xs = np.linspace(-M * t ** (1 / 3), M * t ** (1 / 3), SECTOR_POINTS)
        meas = sample_field(snap, xs)
        pred = lead(xs, t)
        err = np.abs(meas - pred)
        sup.append(float(err.max()))
        left.append(float(err[xs < 0].max()))
        right.append(float(err[xs >= 0].max()))
        imag_m = max(imag_m, float(np.max(np.abs(meas.imag))))
        imag_p = max(imag_p, float(np.max(np.abs(pred.imag))))
        flat = max(flat, phase_spread(pred, floor=1e-12))
        core = np.abs(xs) <= 0.5 * M * t ** (1 / 3)
        gaps.append(_phase_gap(meas[core], pred[core]))
        k0max = max(k0max, max(SectorPoint(x, t, M).k0 for x in xs) * t ** (1 / 3))

    flags = []
    if t_list[-1] < 10 * t_list[0]:
        flags.append(f"t_list spans a factor {t_list[-1] / t_list[0]:.3g} (< 10)")
    if not np.any(np.asarray(sup) > 0):
        flags.append("zero-field: exponent undefined")
    if gaps[-1] >= 0.1:
        flags.append("measured phase differs from the prediction by >= 0.1 rad at the largest t")
    lead_window = (lead.y[0] + 0.05, lead.y[-1] - 0.05)
    return AsymptoticsReport(
        t_list=t_list, M=M, s=s, sup_errors=sup, left_errors=left, right_errors=right,
        exponent=fit_exponent(t_list, sup), left_exponent=fit_exponent(t_list, left),
        right_exponent=fit_exponent(t_list, right), phase_flatness=flat,
        measured_phase_gap=gaps, max_imag_measured=imag_m, max_imag_predicted=imag_p,
        k0_scaled_max=k0max,
        hierarchy=hierarchy_residual(lead.y, lead.u1, window=lead_window),
        flags=flags,
    )


def _phase_gap(meas, pred, floor=1e-12):
    """Largest phase difference (mod pi) between measured and predicted values."""
    ok = (np.abs(meas) > floor) & (np.abs(pred) > floor)
    if not np.any(ok):
        return 0.0
    rel = 0.5 * np.angle((meas[ok] * np.conj(pred[ok])) ** 2)
    return float(np.max(np.abs(rel)))
