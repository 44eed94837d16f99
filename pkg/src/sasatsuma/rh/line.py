"""Cauchy operators on the real line through the Moebius map to the circle.

With ``z = (k - i*lam)/(k + i*lam)`` the upper half-plane maps to the unit
disk and the line to the circle, traversed counterclockwise as ``k``
increases. For ``f`` vanishing at infinity with Fourier series
``f = sum a_n z^n`` on the circle,

    C_+ f = sum_{n>=0} a_n z^n - sum_{n>=0} a_n,   C_- f = C_+ f - f,

so both boundary operators are FFT projections, spectrally accurate for
smooth densities and exact for rational functions with poles off the line.
Nodes sit at ``theta_j = 2 pi (j + 1/2)/n``; the grid is symmetric under
``k -> -k`` (node ``j`` pairs with node ``n - 1 - j``) and avoids
``k = infinity``.
"""

from __future__ import annotations

import json

import numpy as np
from scipy.sparse.linalg import LinearOperator

from ..errors import InvalidInputError


class LineGrid:
    """Quadrature grid on the real line for ``n`` circle nodes."""

    def __init__(self, n, scale=3.0):
        if n < 8 or n % 2:
            raise InvalidInputError("LineGrid needs an even number of nodes >= 8")
        self.n = n
        self.scale = float(scale)
        self.theta = 2 * np.pi * (np.arange(n) + 0.5) / n
        half = self.theta / 2
        self.k = -self.scale / np.tan(half)
        self.z = self.k.astype(complex)
        self.dkdtheta = self.scale / (2 * np.sin(half) ** 2)
        self.dz = (self.dkdtheta * 2 * np.pi / n).astype(complex)
        modes = np.fft.fftfreq(n, d=1.0 / n)
        self._modes = modes
        self._shift = np.exp(-1j * np.pi * modes / n)
        self._nonneg = modes >= 0
        # Nyquist mode shared equally between the two halves.
        self._weight_pos = np.where(self._nonneg, 1.0, 0.0)
        self._weight_pos[n // 2] = 0.5

    @property
    def size(self):
        return self.n

    def spacing(self):
        """Local node spacing in ``k``."""
        return self.dkdtheta * 2 * np.pi / self.n

    def to_json(self):
        return json.dumps({"kind": "line", "n": self.n, "scale": self.scale})

    def coefficients(self, f):
        f = np.asarray(f, dtype=complex)
        return np.fft.fft(f, axis=0) * _bcast(self._shift, f) / self.n

    def _synth(self, a):
        return np.fft.ifft(a / _bcast(self._shift, a), axis=0) * self.n

    def c_plus(self, f):
        a = self.coefficients(f)
        ap = a * _bcast(self._weight_pos, a)
        return self._synth(ap) - ap.sum(axis=0)

    def c_minus(self, f):
        return self.c_plus(f) - np.asarray(f, dtype=complex)

    def apply_cauchy(self, f, targets, side=0):
        """Cauchy transform at off-line points."""
        a = self.coefficients(f)
        targets = np.asarray(targets, dtype=complex).ravel()
        zt = (targets - 1j * self.scale) / (targets + 1j * self.scale)
        const = (a * _bcast(self._weight_pos, a)).sum(axis=0)
        # The Nyquist mode has no analytic continuation off the circle.
        pos = self._nonneg & (self._modes < self.n // 2)
        neg = self._modes < 0
        neg[self.n // 2] = False
        out = np.empty((targets.size,) + a.shape[1:], dtype=complex)
        for i, (kt, zz) in enumerate(zip(targets, zt)):
            if kt.imag > 0:
                powers = zz ** self._modes[pos]
                out[i] = np.tensordot(powers, a[pos], axes=(0, 0)) - const
            elif kt.imag < 0:
                powers = zz ** self._modes[neg]
                out[i] = -np.tensordot(powers, a[neg], axes=(0, 0)) - const
            else:
                raise InvalidInputError("off-line evaluation needs Im k != 0")
        return out

    def integrate(self, f):
        return np.tensordot(self.dz, np.asarray(f), axes=(0, 0))

    def operators(self, dense=True):
        """``(C_-, C_+)`` as dense matrices or FFT-backed linear operators."""
        if dense:
            eye = np.eye(self.n, dtype=complex)
            cp = self.c_plus(eye)
            return cp - eye, cp
        return _FFTCauchy(self, -1), _FFTCauchy(self, +1)


class _FFTCauchy(LinearOperator):
    """Matrix-free boundary Cauchy operator acting along axis 0."""

    def __init__(self, grid, side):
        super().__init__(dtype=complex, shape=(grid.n, grid.n))
        self.grid = grid
        self.side = side

    def _matvec(self, x):
        return self.apply(x)

    def apply(self, f):
        return self.grid.c_plus(f) if self.side > 0 else self.grid.c_minus(f)


def _bcast(vec, like):
    return vec.reshape((-1,) + (1,) * (np.ndim(like) - 1))
