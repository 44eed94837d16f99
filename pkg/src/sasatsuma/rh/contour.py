"""Piecewise-linear contours discretized by Gauss-Legendre panels, and the
Cauchy operators on them.

Each oriented piece (segment or truncated ray) is cut into panels carrying
``order`` Gauss-Legendre nodes. Cauchy integrals of the piecewise polynomial
interpolant are evaluated by product integration: exact monomial moments
for targets close to a panel (including the boundary values on the panel
itself) and the plain Gauss rule elsewhere.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np

DEFAULT_ORDER = 16
# Targets with |zeta| below this (zeta = panel-normalized coordinate) get
# exact product-integration weights.
_NEAR = 2.0


@dataclass(frozen=True)
class Piece:
    """Oriented straight piece from ``start`` to ``end`` subdivided at the
    fractional ``breaks`` (increasing, from 0 to 1)."""

    start: complex
    end: complex
    breaks: tuple
    label: str = ""
    tag: int = 0

    def to_dict(self):
        return {
            "start": [self.start.real, self.start.imag],
            "end": [self.end.real, self.end.imag],
            "breaks": list(self.breaks),
            "label": self.label,
            "tag": self.tag,
        }


def graded_breaks(length, *, toward_start=True, toward_end=False, levels=6,
                  ratio=0.5, max_panel=0.5):
    """Fractional breakpoints refined geometrically toward the chosen
    endpoint(s) and capped at ``max_panel`` absolute panel length."""
    if length <= 0:
        raise ValueError("piece length must be positive")
    if toward_start and toward_end:
        half = graded_breaks(length / 2, toward_start=True, levels=levels,
                             ratio=ratio, max_panel=max_panel)
        left = [b / 2 for b in half]
        right = [1 - b / 2 for b in reversed(half)]
        return tuple(sorted(set(left[:-1] + [0.5] + right[1:])))
    inner = [ratio**j for j in range(levels, 0, -1)]
    pts = [0.0] + inner + [1.0]
    out = [0.0]
    for a, b in zip(pts[:-1], pts[1:]):
        n = max(1, int(np.ceil((b - a) * length / max_panel)))
        out.extend(list(a + (b - a) * np.arange(1, n + 1) / n))
    out = np.array(out)
    if not toward_start:
        out = 1 - out[::-1]
    return tuple(float(b) for b in out)


def ray(origin, angle, radius, *, outward=True, label="", tag=0, **grading):
    """Truncated ray from ``origin`` at ``angle``; graded toward ``origin``."""
    far = origin + radius * np.exp(1j * angle)
    br = graded_breaks(radius, toward_start=True, **grading)
    if outward:
        return Piece(complex(origin), complex(far), br, label, tag)
    return Piece(complex(far), complex(origin), tuple(1 - b for b in reversed(br)),
                 label, tag)


class Contour:
    """Union of oriented pieces with their quadrature.

    Attributes (one entry per node): ``z`` nodes, ``dz`` complex weights
    (``ds`` including orientation), ``panel`` owning panel index, ``tag``
    piece tag. Panel data: ``centers`` and ``halves`` (half the oriented
    panel vector).
    """

    def __init__(self, pieces, order=DEFAULT_ORDER):
        self.pieces = list(pieces)
        self.order = order
        tau, wts = np.polynomial.legendre.leggauss(order)
        self.tau, self.gl_weights = tau, wts
        centers, halves, tags = [], [], []
        for pc in self.pieces:
            br = np.asarray(pc.breaks)
            pts = pc.start + (pc.end - pc.start) * br
            for a, b in zip(pts[:-1], pts[1:]):
                centers.append((a + b) / 2)
                halves.append((b - a) / 2)
                tags.append(pc.tag)
        self.centers = np.array(centers, dtype=complex)
        self.halves = np.array(halves, dtype=complex)
        npan = len(centers)
        self.z = (self.centers[:, None] + self.halves[:, None] * tau[None, :]).ravel()
        self.dz = (self.halves[:, None] * wts[None, :]).ravel()
        self.panel = np.repeat(np.arange(npan), order)
        self.tag = np.repeat(np.array(tags), order)
        # Monomial moments -> nodal weights (inverse Vandermonde).
        self._v_inv = np.linalg.inv(np.vander(tau, order, increasing=True))

    @property
    def size(self):
        return self.z.size

    @property
    def n_panels(self):
        return self.centers.size

    def to_json(self):
        return json.dumps({"order": self.order,
                           "pieces": [p.to_dict() for p in self.pieces]})

    def _moments(self, zeta, side):
        """Monomial moments int_{-1}^{1} tau^k / (tau - zeta) dtau.

        ``side`` is +1/-1 for boundary values on the panel itself (zeta
        real in (-1, 1)), 0 for off-panel targets.
        """
        zeta = np.asarray(zeta, dtype=complex)
        if side == 0:
            i0 = np.log((zeta - 1) / (zeta + 1))
        else:
            x = zeta.real
            i0 = np.log((1 - x) / (1 + x)) + side * 1j * np.pi
        mom = np.empty(zeta.shape + (self.order,), dtype=complex)
        mom[..., 0] = i0
        for k in range(1, self.order):
            mom[..., k] = zeta * mom[..., k - 1] + (1 - (-1) ** k) / k
        return mom

    def cauchy_matrix(self, targets=None, side=-1):
        """Matrix ``K`` with ``(C f)(target_i) = sum_j K_ij f(z_j)``.

        ``targets=None`` means the contour's own nodes, where the boundary
        value from ``side`` (+1 left, -1 right of the orientation) is taken.
        Arbitrary off-contour targets use ``side=0``.
        """
        on_contour = targets is None
        tz = self.z if on_contour else np.asarray(targets, dtype=complex).ravel()
        diff = self.z[None, :] - tz[:, None]
        with np.errstate(divide="ignore", invalid="ignore"):
            kmat = self.dz[None, :] / diff
        p = self.order
        for j in range(self.n_panels):
            sl = slice(j * p, (j + 1) * p)
            zeta = (tz - self.centers[j]) / self.halves[j]
            near = np.abs(zeta) < _NEAR
            if on_contour:
                own = self.panel == j
                near &= ~own
                if np.any(own):
                    mom = self._moments(zeta[own], side)
                    kmat[np.ix_(own, np.arange(sl.start, sl.stop))] = mom @ self._v_inv
            if np.any(near):
                mom = self._moments(zeta[near], 0)
                kmat[np.ix_(near, np.arange(sl.start, sl.stop))] = mom @ self._v_inv
        return kmat / (2j * np.pi)

    def apply_cauchy(self, f, targets=None, side=-1):
        """Cauchy transform of nodal samples ``f`` (shape ``(N, ...)``)."""
        kmat = self.cauchy_matrix(targets, side)
        f = np.asarray(f)
        return np.tensordot(kmat, f, axes=(1, 0))

    def integrate(self, f):
        """Contour integral ``int f(z) dz`` of nodal samples."""
        return np.tensordot(self.dz, np.asarray(f), axes=(0, 0))
