"""Uniformly sampled functions on the real line."""

from dataclasses import dataclass

import numpy as np
from scipy.interpolate import make_interp_spline


@dataclass(frozen=True)
class GridFunction:
    """Samples ``values[i] = g(x0 + i*dx)``.

    The values may be real or complex.  Instances are treated as immutable;
    operations return new objects.
    """

    x0: float
    dx: float
    values: np.ndarray

    def __post_init__(self):
        values = np.asarray(self.values)
        if values.ndim != 1:
            raise ValueError("values must be one-dimensional")
        if not self.dx > 0:
            raise ValueError("dx must be positive")
        if values.size < 3:
            raise ValueError("a grid needs at least 3 points")
        if not np.all(np.isfinite(values)):
            raise ValueError("grid values must be finite")
        object.__setattr__(self, "values", values)

    @classmethod
    def from_samples(cls, x, values):
        x = np.asarray(x, dtype=float)
        dx = x[1] - x[0]
        if not np.allclose(np.diff(x), dx, rtol=1e-9, atol=0):
            raise ValueError("sample points are not uniformly spaced")
        return cls(float(x[0]), float(dx), np.asarray(values))

    @property
    def n(self):
        return self.values.size

    @property
    def x(self):
        return self.x0 + self.dx * np.arange(self.n)

    @property
    def x_max(self):
        return self.x0 + self.dx * (self.n - 1)

    def with_values(self, values):
        return GridFunction(self.x0, self.dx, values)

    def norm(self):
        """L2 norm with the trapezoidal rule."""
        w = np.abs(self.values) ** 2
        return float(np.sqrt(self.dx * (w.sum() - 0.5 * (w[0] + w[-1]))))

    def inner(self, other):
        """Trapezoidal ``<self|other>`` (conjugate-linear in ``self``)."""
        _check_same_grid(self, other)
        w = np.conj(self.values) * other.values
        return complex(self.dx * (w.sum() - 0.5 * (w[0] + w[-1])))

    def normalized(self):
        return self.with_values(self.values / self.norm())

    def restrict(self, lo, hi):
        """Sub-grid of the nodes lying in ``[lo, hi]``."""
        x = self.x
        idx = np.nonzero((x >= lo - 1e-12 * self.dx) & (x <= hi + 1e-12 * self.dx))[0]
        return GridFunction(float(x[idx[0]]), self.dx, self.values[idx[0]:idx[-1] + 1])

    def spline(self, k=7):
        """Interpolating B-spline of degree ``k`` through the samples."""
        return make_interp_spline(self.x, self.values, k=k)


def _check_same_grid(a, b):
    if a.n != b.n or abs(a.x0 - b.x0) > 1e-12 * a.dx or abs(a.dx - b.dx) > 1e-14 * a.dx:
        raise ValueError("grid functions live on different grids")


def derivative(values, dx, order=1):
    """Fourth-order finite-difference derivative of uniformly spaced samples.

    Central five-point stencils in the interior, one-sided five-point stencils
    on the two nodes nearest each edge.
    """
    f = np.asarray(values)
    if f.size < 5:
        raise ValueError("need at least 5 samples for fourth-order stencils")
    out = np.empty_like(f)
    if order == 1:
        out[2:-2] = (f[:-4] - 8 * f[1:-3] + 8 * f[3:-1] - f[4:]) / (12 * dx)
        out[0] = (-25 * f[0] + 48 * f[1] - 36 * f[2] + 16 * f[3] - 3 * f[4]) / (12 * dx)
        out[1] = (-3 * f[0] - 10 * f[1] + 18 * f[2] - 6 * f[3] + f[4]) / (12 * dx)
        out[-1] = (25 * f[-1] - 48 * f[-2] + 36 * f[-3] - 16 * f[-4] + 3 * f[-5]) / (12 * dx)
        out[-2] = (3 * f[-1] + 10 * f[-2] - 18 * f[-3] + 6 * f[-4] - f[-5]) / (12 * dx)
    elif order == 2:
        if f.size < 6:
            raise ValueError("need at least 6 samples for one-sided second derivatives")
        out[2:-2] = (-f[:-4] + 16 * f[1:-3] - 30 * f[2:-2] + 16 * f[3:-1] - f[4:]) / (12 * dx**2)
        out[0] = (45 * f[0] - 154 * f[1] + 214 * f[2] - 156 * f[3] + 61 * f[4] - 10 * f[5]) / (12 * dx**2)
        out[1] = (10 * f[0] - 15 * f[1] - 4 * f[2] + 14 * f[3] - 6 * f[4] + f[5]) / (12 * dx**2)
        out[-1] = (45 * f[-1] - 154 * f[-2] + 214 * f[-3] - 156 * f[-4] + 61 * f[-5] - 10 * f[-6]) / (12 * dx**2)
        out[-2] = (10 * f[-1] - 15 * f[-2] - 4 * f[-3] + 14 * f[-4] - 6 * f[-5] + f[-6]) / (12 * dx**2)
    else:
        raise ValueError("order must be 1 or 2")
    return out
