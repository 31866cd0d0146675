"""Probability densities on the circle, kept in dual grid/spectral form.

A CircleDensity is a nonnegative trigonometric-polynomial density rho(theta)
with  int_0^{2pi} rho dtheta = 1  (so its zeroth Fourier coefficient in the
FourierField convention is 1/(2pi)).  Grid values and Fourier coefficients
are views of the same object and agree to spectral accuracy by construction.
The exact spectral CDF and its Newton-inverted quantile function are what
the transport and hydrodynamics modules build on.
"""

from __future__ import annotations

import math
from typing import Callable, Optional, Union

import numpy as np

from .errors import ConfigurationError
from .fields import FourierField

TWO_PI = 2.0 * math.pi


class CircleDensity:
    """Nonnegative unit-mass density on [0, 2pi) with synchronized
    grid and Fourier representations."""

    __slots__ = ("field", "grid_size", "_values")

    def __init__(self, field: FourierField, grid_size: int = 2048,
                 tol: float = 1e-8):
        if abs(TWO_PI * field.mean - 1.0) > tol:
            raise ConfigurationError(
                f"density mass {TWO_PI * field.mean:.12g} != 1")
        vals = field.values(max(grid_size, 4 * (field.cutoff + 1)))
        if float(vals.min()) < -tol:
            raise ConfigurationError(
                f"density dips negative (min {vals.min():.3e})")
        self.field = field
        self.grid_size = grid_size
        self._values = None

    # -- constructors ----------------------------------------------------

    @classmethod
    def uniform(cls, grid_size: int = 2048) -> "CircleDensity":
        return cls(FourierField.from_modes({0: 1.0 / TWO_PI}, 0), grid_size)

    @classmethod
    def from_values(cls, values: np.ndarray, cutoff: Optional[int] = None,
                    normalize: bool = False) -> "CircleDensity":
        """Build from samples on the uniform grid theta_j = 2pi j / G."""
        values = np.asarray(values, dtype=float)
        G = values.size
        if normalize:
            mass = TWO_PI * float(np.mean(values))
            if mass <= 0:
                raise ConfigurationError("cannot normalize nonpositive values")
            values = values / mass
        if cutoff is None:
            cutoff = G // 2 - 1 if G % 2 == 0 else (G - 1) // 2
        f = FourierField.from_grid(values, cutoff)
        return cls(f, max(G, 2048))

    @classmethod
    def from_callable(cls, fn: Callable, cutoff: int = 64,
                      grid_size: int = 2048,
                      normalize: bool = False) -> "CircleDensity":
        theta = TWO_PI * np.arange(4 * (cutoff + 1)) / (4 * (cutoff + 1))
        vals = np.asarray([fn(t) for t in theta], dtype=float)
        if normalize:
            vals = vals / (TWO_PI * float(np.mean(vals)))
        return cls(FourierField.from_grid(vals, cutoff), grid_size)

    # -- basic access ----------------------------------------------------

    @property
    def cutoff(self) -> int:
        return self.field.cutoff

    def values(self, grid_size: Optional[int] = None) -> np.ndarray:
        if grid_size is None:
            if self._values is None:
                self._values = self.field.values(self.grid_size)
            return self._values
        return self.field.values(grid_size)

    def __call__(self, theta) -> np.ndarray:
        return self.field(theta)

    def moment(self, m: int) -> complex:
        """int rho(theta) e^{i m theta} dtheta."""
        return TWO_PI * self.field.coeff(-m)

    def min_value(self) -> float:
        return float(self.values().min())

    def rotate(self, a: float) -> "CircleDensity":
        """Density of theta + a mod 2pi, i.e. rho(theta - a)."""
        M = self.cutoff
        n = np.arange(-M, M + 1)
        return CircleDensity(FourierField(self.field.coeffs * np.exp(-1j * n * a)),
                             self.grid_size)

    # -- distribution function and quantiles -----------------------------

    def cdf(self, theta) -> np.ndarray:
        """F(theta) = int_0^theta rho, evaluated exactly from the spectrum."""
        theta = np.asarray(theta, dtype=float)
        M = self.cutoff
        out = np.full(theta.shape, 0.0) + theta / TWO_PI
        for m in range(1, M + 1):
            c = self.field.coeff(m)
            if c != 0:
                # c e^{im t} + conj adds 2 Re[c (e^{im t} - 1)/(i m)]
                out = out + 2.0 * (c * (np.exp(1j * m * theta) - 1.0)
                                   / (1j * m)).real
        return out

    def quantile(self, t) -> np.ndarray:
        """Inverse CDF by Newton iteration with a bisection safeguard.

        Newton converges fast where the density is bounded below; near an
        isolated zero of the density the bracketing bisection still pins
        the quantile (the CDF remains strictly increasing).
        """
        t = np.atleast_1d(np.asarray(t, dtype=float))
        if np.any((t < -1e-12) | (t > 1 + 1e-12)):
            raise ConfigurationError("quantile levels must lie in [0, 1]")
        t = np.clip(t, 0.0, 1.0)
        x = TWO_PI * t          # exact for the uniform density; good start
        a = np.zeros_like(t)
        b = np.full_like(t, TWO_PI)
        for _ in range(100):
            f = self.cdf(x) - t
            a = np.where(f < 0, np.maximum(a, x), a)
            b = np.where(f > 0, np.minimum(b, x), b)
            step = f / np.maximum(self(x), 1e-12)
            x_new = x - step
            bad = (x_new <= a) | (x_new >= b)
            x_new = np.where(bad, 0.5 * (a + b), x_new)
            if np.max(np.abs(self.cdf(x_new) - t)) < 1e-14:
                x = x_new
                break
            x = x_new
        # polish in position: near a zero of the density the CDF residual is
        # an ill-conditioned measure of location, so finish with bisection
        # until the bracket itself is tight
        a = np.minimum(a, x)
        b = np.maximum(b, x)
        for _ in range(60):
            if np.max(b - a) < 1e-13:
                break
            mid = 0.5 * (a + b)
            low = self.cdf(mid) < t
            a = np.where(low, mid, a)
            b = np.where(low, b, mid)
        return 0.5 * (a + b)

    def __repr__(self):
        return (f"CircleDensity(cutoff={self.cutoff}, "
                f"min={self.min_value():.4g})")
