"""Fourier-spectral reference evolution of the Sasa-Satsuma equation

    u_t = u_xxx + 6|u|^2 u_x + 3u(|u|^2)_x

on a periodic box ``[-L/2, L/2)``. The linear part is integrated exactly in
Fourier space and the nonlinear part with ETDRK4 (Cox-Matthews stages,
Kassam-Trefethen contour-integral coefficients).
"""

from __future__ import annotations

import csv
import io
import struct
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import BlowUpError, BoxTooSmallError, InvalidInputError

EDGE_TOL = 1e-8
_EDGE_POINTS = 4


def one_soliton(a, phi, x0, x, t):
    """Constant-phase one-soliton ``(a/sqrt 2) e^{i phi} sech(a(x + a^2 t - x0))``."""
    if a <= 0:
        raise InvalidInputError("soliton amplitude parameter a must be positive")
    arg = a * (np.asarray(x, dtype=float) + a * a * t - x0)
    # sqrt(2) a e^{arg} / (1 + e^{2 arg}) written to avoid overflow
    return np.exp(1j * phi) * (a / np.sqrt(2)) / np.cosh(arg)


def box_grid(L, n):
    return -0.5 * L + L * np.arange(n) / n


@dataclass
class WaveField:
    L: float
    n: int
    t: float
    values: np.ndarray

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=complex)
        if self.n < 256 or self.n & (self.n - 1):
            raise InvalidInputError("n must be a power of two >= 256")
        if self.values.shape != (self.n,):
            raise InvalidInputError("values must have n samples")
        if not self.L > 0:
            raise InvalidInputError("box length must be positive")

    @property
    def x(self):
        return box_grid(self.L, self.n)

    @property
    def dx(self):
        return self.L / self.n

    def edge_amplitude(self):
        v = np.abs(self.values)
        return float(max(v[:_EDGE_POINTS].max(), v[-_EDGE_POINTS:].max()))

    def check_decay(self, tol=None):
        tol = EDGE_TOL if tol is None else tol
        edge = self.edge_amplitude()
        if edge >= tol:
            raise BoxTooSmallError(
                f"|u| = {edge:.2e} at the box edge (t = {self.t}); enlarge the box")

    @classmethod
    def from_function(cls, func, L=80.0, n=1024, t=0.0):
        x = box_grid(L, n)
        return cls(L, n, t, func(x))

    def to_csv(self):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["x", "re_u", "im_u"])
        for x, u in zip(self.x, self.values):
            w.writerow([f"{x:.17g}", f"{u.real:.17g}", f"{u.imag:.17g}"])
        return buf.getvalue()

    def to_bytes(self):
        """Header ``<d q d`` (L, n, t) then interleaved Re/Im float64."""
        head = struct.pack("<dqd", float(self.L), int(self.n), float(self.t))
        body = np.empty(2 * self.n, dtype="<f8")
        body[0::2] = self.values.real
        body[1::2] = self.values.imag
        return head + body.tobytes()

    @classmethod
    def from_bytes(cls, blob):
        size = struct.calcsize("<dqd")
        L, n, t = struct.unpack("<dqd", blob[:size])
        body = np.frombuffer(blob[size:], dtype="<f8")
        if body.size != 2 * n:
            raise InvalidInputError(f"payload holds {body.size // 2} samples, header says {n}")
        return cls(L, n, t, body[0::2] + 1j * body[1::2])


@dataclass
class Sponge:
    """Damping ``-sigma(x) u`` switched on smoothly over ``[start, start + ramp]``
    and held at ``strength`` up to the box edge."""

    start: float
    ramp: float
    strength: float

    def profile(self, x):
        s = np.clip((x - self.start) / self.ramp, 0.0, 1.0)
        return self.strength * s * s * (3 - 2 * s)


@dataclass
class EvolveConfig:
    dt: float
    T: float
    dealias_fraction: float = 2.0 / 3.0
    scheme: str = "etdrk4"
    sponge: Optional[Sponge] = None
    contour_points: int = 32
    check_edges: bool = True
    backward: bool = False
    extra: dict = field(default_factory=dict)

    @property
    def signed_dt(self):
        return -self.dt if self.backward else self.dt

    def __post_init__(self):
        if not self.dt > 0:
            raise InvalidInputError("dt must be positive")
        if self.T < 0:
            raise InvalidInputError("T must be non-negative")
        if not 0.5 < self.dealias_fraction <= 1.0:
            raise InvalidInputError("dealias_fraction must lie in (1/2, 1]")
        if self.scheme != "etdrk4":
            raise InvalidInputError(f"unknown scheme {self.scheme!r}")

    def check_stability(self, field_: WaveField):
        """The linear part is exact; the explicit nonlinear part needs
        ``dt * kmax * 9 max|u|^2`` (its largest rate) inside the ETDRK4
        stability region, taken as 2.5."""
        kmax = self.dealias_fraction * np.pi * field_.n / field_.L
        rate = 9 * kmax * float(np.max(np.abs(field_.values))) ** 2
        if self.sponge is not None:
            rate = max(rate, self.sponge.strength)
        if self.dt * rate > 2.5:
            raise InvalidInputError(
                f"dt = {self.dt} too large: dt * nonlinear rate = {self.dt * rate:.2f} > 2.5")


class _Stepper:
    def __init__(self, L, n, cfg: EvolveConfig):
        self.xi = 2 * np.pi * np.fft.fftfreq(n, d=L / n)
        self.ik = 1j * self.xi
        self.ik[n // 2] = 0.0
        kmax = np.max(np.abs(self.xi))
        self.mask = (np.abs(self.xi) <= cfg.dealias_fraction * kmax).astype(float)
        lin = -1j * self.xi**3
        h = cfg.signed_dt
        self.e = np.exp(h * lin)
        self.e2 = np.exp(h * lin / 2)
        m = cfg.contour_points
        r = np.exp(2j * np.pi * (np.arange(1, m + 1) - 0.5) / m)
        lr = h * lin[:, None] + r[None, :]
        self.q = h * np.mean((np.exp(lr / 2) - 1) / lr, axis=1)
        self.f1 = h * np.mean((-4 - lr + np.exp(lr) * (4 - 3 * lr + lr**2)) / lr**3, axis=1)
        self.f2 = h * np.mean((2 + lr + np.exp(lr) * (lr - 2)) / lr**3, axis=1)
        self.f3 = h * np.mean((-4 - 3 * lr - lr**2 + np.exp(lr) * (4 - lr)) / lr**3, axis=1)
        x = box_grid(L, n)
        self.sigma = None if cfg.sponge is None else cfg.sponge.profile(x)

    def nonlinear(self, vh):
        u = np.fft.ifft(vh)
        ux = np.fft.ifft(self.ik * vh)
        mod2 = (u * np.conj(u)).real
        mod2x = 2 * (np.conj(u) * ux).real
        nl = 6 * mod2 * ux + 3 * u * mod2x
        if self.sigma is not None:
            nl = nl - self.sigma * u
        return self.mask * np.fft.fft(nl)

    def step(self, vh):
        na = self.nonlinear(vh)
        a = self.e2 * vh + self.q * na
        nb = self.nonlinear(a)
        b = self.e2 * vh + self.q * nb
        nc = self.nonlinear(b)
        c = self.e2 * a + self.q * (2 * nc - na)
        nd = self.nonlinear(c)
        return self.e * vh + self.f1 * na + 2 * self.f2 * (nb + nc) + self.f3 * nd


def evolve(u0: WaveField, cfg: EvolveConfig, snapshot_times=(), callback=None):
    """Evolve ``u0`` to ``u0.t + cfg.T`` (``u0.t - cfg.T`` with ``cfg.backward``).

    Returns the final :class:`WaveField`; with ``snapshot_times`` (absolute
    times that fall on the step lattice) returns ``(final, snapshots)``.
    """
    if cfg.check_edges:
        u0.check_decay()
    cfg.check_stability(u0)
    nsteps = int(round(cfg.T / cfg.dt))
    if abs(nsteps * cfg.dt - cfg.T) > 1e-9 * max(1.0, cfg.T):
        raise InvalidInputError("T must be an integer multiple of dt")
    stepper = _Stepper(u0.L, u0.n, cfg)
    h = cfg.signed_dt
    wanted = {}
    for ts in snapshot_times:
        j = int(round((ts - u0.t) / h))
        if j < 0 or j > nsteps or abs(u0.t + j * h - ts) > 1e-9 * max(1.0, abs(ts)):
            raise InvalidInputError(f"snapshot time {ts} is not on the step lattice")
        wanted[j] = ts
    snaps = []
    vh = np.fft.fft(u0.values)
    if 0 in wanted:
        snaps.append(WaveField(u0.L, u0.n, u0.t, u0.values.copy()))
    t = u0.t
    check_every = max(1, min(100, nsteps // 10 or 1))
    for j in range(1, nsteps + 1):
        vh = stepper.step(vh)
        t = u0.t + j * h
        if j % check_every == 0 or j == nsteps or j in wanted:
            if not np.all(np.isfinite(vh)):
                raise BlowUpError(f"non-finite field at t = {t}",
                                  last_stable_time=t - check_every * h)
        if j in wanted:
            snaps.append(WaveField(u0.L, u0.n, t, np.fft.ifft(vh)))
        if callback is not None:
            callback(t, vh)
    out = WaveField(u0.L, u0.n, t, np.fft.ifft(vh))
    if cfg.check_edges:
        out.check_decay()
    return (out, snaps) if snapshot_times else out


def conserved_l2(field_: WaveField):
    """``int |u|^2 dx`` (trapezoid rule, spectrally accurate on the periodic box)."""
    return float(np.sum(np.abs(field_.values) ** 2) * field_.dx)


def soliton_field(a=1.0, phi=0.0, x0=0.0, L=80.0, n=1024, t=0.0):
    return WaveField.from_function(lambda x: one_soliton(a, phi, x0, x, t), L, n, t)
