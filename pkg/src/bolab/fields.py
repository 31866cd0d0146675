"""Real trigonometric polynomials on the circle and their spectral operators.

A field is stored through its Fourier coefficients c_n for |n| <= M, with the
convention

    f(x) = sum_{n=-M}^{M} c_n e^{inx},      c_n = (1/2pi) int_0^{2pi} f e^{-inx} dx,

so that reality means c_{-n} = conj(c_n).  In the real basis

    f(x) = a_0/2 + sum_{j>=1} (a_j cos jx + b_j sin jx)

the two descriptions are linked by a_j = 2 Re c_j and b_j = -2 Im c_j.

All integrals over the circle are taken with the normalised measure dx/2pi
unless a function's docstring says otherwise.
"""

from __future__ import annotations

import functools
from dataclasses import dataclass, field

import numpy as np

from .errors import AliasingError, ConfigurationError, DomainError

TWO_PI = 2.0 * np.pi

# Reality defects larger than this (relative to the largest coefficient)
# are treated as user error rather than round-off.
_REALITY_TOL = 1e-9


def _as_coeff_array(coeffs) -> np.ndarray:
    c = np.asarray(coeffs, dtype=np.complex128)
    if c.ndim != 1 or c.size % 2 == 0:
        raise ConfigurationError(
            "coefficients must be a 1-d array of odd length (n = -M..M)")
    return c


@dataclass(frozen=True)
class FourierField:
    """Band-limited real function on the circle.

    Attributes
    ----------
    coeffs : complex array of shape (2M+1,)
        Fourier coefficients c_n ordered n = -M..M.
    grid_size : int
        Number of equispaced collocation points used when the field is
        evaluated or multiplied; must satisfy grid_size >= 2M+2.
    """

    coeffs: np.ndarray
    grid_size: int = 0

    def __post_init__(self):
        c = _as_coeff_array(self.coeffs)
        scale = float(np.max(np.abs(c))) or 1.0
        defect = float(np.max(np.abs(c - np.conj(c[::-1]))))
        if defect > _REALITY_TOL * scale:
            raise ConfigurationError(
                f"coefficients violate the reality condition c_-n = conj(c_n) "
                f"(defect {defect:.3e})")
        # Symmetrise so reality holds to machine precision from here on.
        c = 0.5 * (c + np.conj(c[::-1]))
        c.setflags(write=False)
        object.__setattr__(self, "coeffs", c)
        g = self.grid_size or default_grid_size(self.cutoff)
        if g < 2 * self.cutoff + 2:
            raise ConfigurationError(
                f"grid_size={g} too small for cutoff M={self.cutoff}")
        object.__setattr__(self, "grid_size", int(g))

    # -- construction -----------------------------------------------------

    @classmethod
    def zero(cls, cutoff: int, grid_size: int = 0) -> "FourierField":
        return cls(np.zeros(2 * cutoff + 1, dtype=np.complex128), grid_size)

    @classmethod
    def from_modes(cls, modes: dict, cutoff: int, grid_size: int = 0) -> "FourierField":
        """Build a field from {n: c_n}; conjugate modes are filled in."""
        c = np.zeros(2 * cutoff + 1, dtype=np.complex128)
        for n, v in modes.items():
            if abs(n) > cutoff:
                raise ConfigurationError(f"mode {n} beyond cutoff {cutoff}")
            c[cutoff + n] = v
            if -n not in modes:
                c[cutoff - n] = np.conj(v)
        return cls(c, grid_size)

    @classmethod
    def from_real_basis(cls, a, b, mean: float = 0.0, grid_size: int = 0) -> "FourierField":
        """Build from cosine amplitudes a_j and sine amplitudes b_j, j >= 1."""
        a = np.asarray(a, dtype=float)
        b = np.asarray(b, dtype=float)
        if a.shape != b.shape:
            raise ConfigurationError("a and b must have equal length")
        M = a.size
        c = np.zeros(2 * M + 1, dtype=np.complex128)
        c[M] = mean
        c[M + 1:] = 0.5 * (a - 1j * b)
        c[:M] = np.conj(c[M + 1:][::-1])
        return cls(c, grid_size)

    @classmethod
    def from_grid(cls, values, cutoff: int | None = None, grid_size: int = 0) -> "FourierField":
        """Recover coefficients from samples on the uniform grid x_k = 2pi k/G."""
        v = np.asarray(values, dtype=float)
        G = v.size
        max_cutoff = (G - 1) // 2
        M = max_cutoff if cutoff is None else int(cutoff)
        if M > max_cutoff:
            raise AliasingError(
                f"{G} samples only determine modes |n| <= {max_cutoff}, asked for {M}")
        spec = np.fft.fft(v) / G
        c = np.empty(2 * M + 1, dtype=np.complex128)
        ns = np.arange(-M, M + 1)
        c[:] = spec[ns % G]
        return cls(c, grid_size or max(G, default_grid_size(M)))

    @classmethod
    def from_callable(cls, fn, cutoff: int, grid_size: int = 0) -> "FourierField":
        G = grid_size or default_grid_size(cutoff)
        x = TWO_PI * np.arange(G) / G
        return cls.from_grid(fn(x), cutoff, G)

    # -- basic descriptors ------------------------------------------------

    @property
    def cutoff(self) -> int:
        return (len(self.coeffs) - 1) // 2

    @property
    def mean(self) -> float:
        """c_0 = int f dx/2pi."""
        return float(self.coeffs[self.cutoff].real)

    def coeff(self, n: int) -> complex:
        M = self.cutoff
        if abs(n) > M:
            return 0.0 + 0.0j
        return complex(self.coeffs[M + n])

    def cosine_amplitudes(self) -> np.ndarray:
        """a_j = 2 Re c_j for j = 1..M."""
        return 2.0 * self.coeffs[self.cutoff + 1:].real

    def sine_amplitudes(self) -> np.ndarray:
        """b_j = -2 Im c_j for j = 1..M."""
        return -2.0 * self.coeffs[self.cutoff + 1:].imag

    def wavenumbers(self) -> np.ndarray:
        M = self.cutoff
        return np.arange(-M, M + 1)

    # -- evaluation -------------------------------------------------------

    def grid(self, grid_size: int | None = None) -> np.ndarray:
        G = grid_size or self.grid_size
        return TWO_PI * np.arange(G) / G

    def values(self, grid_size: int | None = None) -> np.ndarray:
        """Samples on the uniform grid; exact for G >= 2M+2."""
        G = grid_size or self.grid_size
        M = self.cutoff
        if G < 2 * M + 2:
            raise AliasingError(f"{G} points cannot hold modes up to {M}")
        spec = np.zeros(G, dtype=np.complex128)
        ns = np.arange(-M, M + 1)
        spec[ns % G] = self.coeffs
        return np.fft.ifft(spec).real * G

    def __call__(self, x) -> np.ndarray:
        """Evaluate at arbitrary points (direct summation)."""
        x = np.asarray(x, dtype=float)
        ns = self.wavenumbers()
        ph = np.exp(1j * np.multiply.outer(x, ns))
        return (ph @ self.coeffs).real

    # -- algebra ----------------------------------------------------------

    def _binary(self, other: "FourierField", sign: float) -> "FourierField":
        M = max(self.cutoff, other.cutoff)
        c = np.zeros(2 * M + 1, dtype=np.complex128)
        s, o = self.cutoff, other.cutoff
        c[M - s:M + s + 1] += self.coeffs
        c[M - o:M + o + 1] += sign * other.coeffs
        return FourierField(c, max(self.grid_size, other.grid_size))

    def __add__(self, other):
        return self._binary(other, 1.0)

    def __sub__(self, other):
        return self._binary(other, -1.0)

    def __mul__(self, scalar):
        return FourierField(self.coeffs * float(scalar), self.grid_size)

    __rmul__ = __mul__

    def __neg__(self):
        return self * (-1.0)

    def pad(self, cutoff: int) -> "FourierField":
        if cutoff < self.cutoff:
            raise ConfigurationError("pad cannot shrink the band")
        c = np.zeros(2 * cutoff + 1, dtype=np.complex128)
        c[cutoff - self.cutoff:cutoff + self.cutoff + 1] = self.coeffs
        return FourierField(c, max(self.grid_size, default_grid_size(cutoff)))

    def truncate(self, cutoff: int) -> "FourierField":
        if cutoff >= self.cutoff:
            return self
        M = self.cutoff
        return FourierField(self.coeffs[M - cutoff:M + cutoff + 1], self.grid_size)

    def apply_multiplier(self, m) -> "FourierField":
        """Apply a Fourier multiplier m(n), given as callable or array over n=-M..M."""
        mult = m(self.wavenumbers()) if callable(m) else np.asarray(m)
        return FourierField(self.coeffs * mult, self.grid_size)

    def derivative(self, order: int = 1) -> "FourierField":
        return self.apply_multiplier(lambda n: (1j * n) ** order)


def default_grid_size(cutoff: int) -> int:
    """Smallest even grid >= 4(M+1): alias-free for cubic products at cutoff M."""
    g = 4 * (cutoff + 1)
    return g + (g % 2)


def product(f: FourierField, g: FourierField, cutoff: int | None = None) -> FourierField:
    """Pointwise product, dealiased by zero-padding.

    The returned band is |n| <= cutoff (default: max of the input cutoffs);
    coefficients in that band are exact.
    """
    M_out = cutoff if cutoff is not None else max(f.cutoff, g.cutoff)
    # Exactness requires a grid that resolves every mode of f*g that can
    # fold back into the output band.
    G = f.cutoff + g.cutoff + M_out + 1
    G = max(G, 2 * M_out + 2)
    vals = f.values(G) * g.values(G)
    M_eff = min(M_out, (G - 1) // 2)
    gs = max(f.grid_size, g.grid_size, default_grid_size(M_eff))
    return FourierField.from_grid(vals, M_eff, gs).pad(M_out)


# -- integrals and norms --------------------------------------------------

def integral(f: FourierField) -> float:
    """int f dx/2pi."""
    return f.mean


def inner(f: FourierField, g: FourierField) -> float:
    """int f g dx/2pi = sum_n c_n(f) conj(c_n(g))."""
    M = min(f.cutoff, g.cutoff)
    cf = f.coeffs[f.cutoff - M:f.cutoff + M + 1]
    cg = g.coeffs[g.cutoff - M:g.cutoff + M + 1]
    return float(np.sum(cf * np.conj(cg)).real)

def l2_norm_sq(f: FourierField) -> float:
    """int f^2 dx/2pi."""
    return float(np.sum(np.abs(f.coeffs) ** 2))


def sobolev_norm(f: FourierField, eta: float) -> float:
    """Norm of H^eta = C (+) dot-H^eta: (|c_0|^2 + sum_{n!=0} |n|^{2 eta} |c_n|^2)^(1/2).

    The mean enters additively with weight one for every eta, so negative
    orders are well defined on fields with nonzero mean.
    """
    ns = f.wavenumbers().astype(float)
    w = np.abs(ns) ** (2.0 * eta)
    w[f.cutoff] = 1.0
    return float(np.sqrt(np.sum(w * np.abs(f.coeffs) ** 2)))


def cubic_integral(f: FourierField) -> float:
    """int f^3 dx/2pi, exact via the field's own collocation grid.

    Raises AliasingError when grid_size < 3M+1, the threshold below which a
    cubic product aliases back into the quadrature.
    """
    if f.grid_size < 3 * f.cutoff + 1:
        raise AliasingError(
            f"grid_size={f.grid_size} aliases the cube of a cutoff-{f.cutoff} field "
            f"(need >= {3 * f.cutoff + 1})")
    v = f.values()
    return float(np.mean(v ** 3))


# -- Fourier multiplier operators ----------------------------------------

def hilbert_transform(f: FourierField) -> FourierField:
    """Conjugate function: multiplier -i sgn(n), with sgn(0) = 0."""
    return f.apply_multiplier(lambda n: -1j * np.sign(n))


def fractional_derivative(f: FourierField, s: float) -> FourierField:
    """|D|^s: multiplier |n|^s on n != 0.

    For s >= 0 the mean is annihilated; for s < 0 a nonzero mean is outside
    the operator's domain and raises DomainError.
    """
    if s < 0 and abs(f.mean) > 1e-13:
        raise DomainError("|D|^s with s<0 requires a mean-free field")
    ns = f.wavenumbers().astype(float)
    with np.errstate(divide="ignore"):
        mult = np.where(ns == 0, 0.0, np.abs(ns) ** s)
    return f.apply_multiplier(mult)


def poisson_smooth(f: FourierField, r: float) -> FourierField:
    """Harmonic-extension slice at radius r: multiplier r^|n|, 0 <= r < 1."""
    if not 0.0 <= r < 1.0:
        raise DomainError(f"Poisson radius must lie in [0,1), got {r}")
    return f.apply_multiplier(lambda n: r ** np.abs(n))


def log_kernel(f: FourierField) -> FourierField:
    """Smoothing by the -log(4 sin^2(theta/2)) kernel: c_n -> c_n/|n|, c_0 kept."""
    ns = f.wavenumbers().astype(float)
    mult = np.where(ns == 0, 1.0, 1.0 / np.maximum(np.abs(ns), 1.0))
    return f.apply_multiplier(mult)


def poisson_kernel_field(r: float, cutoff: int, center: float = 0.0,
                         grid_size: int = 0) -> FourierField:
    """Band-limited Poisson kernel P_r(x - center), coefficients r^|n| e^{-in c}."""
    if not 0.0 <= r < 1.0:
        raise DomainError(f"Poisson radius must lie in [0,1), got {r}")
    ns = np.arange(-cutoff, cutoff + 1)
    c = r ** np.abs(ns) * np.exp(-1j * ns * center)
    return FourierField(c, grid_size)


def poisson_kernel_values(r: float, theta) -> np.ndarray:
    """Closed form P_r(theta) = (1 - r^2)/(1 - 2 r cos(theta) + r^2)."""
    theta = np.asarray(theta, dtype=float)
    return (1.0 - r * r) / (1.0 - 2.0 * r * np.cos(theta) + r * r)


# -- half-order smoothing kernel ------------------------------------------

def sqrt_kernel_convolve(f: FourierField) -> FourierField:
    """Convolution with K(x) = sum_{n>=1} cos(nx)/sqrt(n): c_n -> c_n/(2 sqrt|n|).

    The kernel's own coefficients are 1/(2 sqrt|n|) on n != 0 and 0 at n = 0,
    so the output is always mean-free.
    """
    ns = f.wavenumbers().astype(float)
    with np.errstate(divide="ignore"):
        mult = np.where(ns == 0, 0.0, 0.5 / np.sqrt(np.maximum(np.abs(ns), 1.0)))
    return f.apply_multiplier(mult)


def sqrt_kernel_values(x) -> np.ndarray:
    """K(x) = sum_{n>=1} cos(nx)/sqrt(n) = Re Li_{1/2}(e^{ix}), elementwise.

    Uses mpmath's polylogarithm; accurate to well below 1e-12 away from the
    x = 0 singularity, where K ~ sqrt(pi/(2x)).
    """
    import mpmath

    x = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.empty_like(x)
    for i, xi in enumerate(x.ravel()):
        t = float(np.mod(xi, TWO_PI))
        if t == 0.0:
            out.ravel()[i] = np.inf
            continue
        out.ravel()[i] = float(mpmath.re(mpmath.polylog(0.5, mpmath.exp(1j * t))))
    return out


def sqrt_kernel_partial_sum(x, terms: int) -> np.ndarray:
    """Direct partial sum sum_{n=1}^{terms} cos(nx)/sqrt(n) (slowly convergent)."""
    x = np.asarray(x, dtype=float)
    n = np.arange(1, terms + 1)
    return np.cos(np.multiply.outer(x, n)) @ (1.0 / np.sqrt(n))


@functools.lru_cache(maxsize=None)
def smoothing_constant_quadrature(rel_tol: float = 1e-10) -> float:
    """kappa = ||K||^2_{L^{4/3}(dx/2pi)} for the half-order kernel, by quadrature.

    The substitution x = t^3 removes the x^{-2/3} endpoint singularity of
    |K|^{4/3}; the integrand is then bounded and smooth on (0, pi^{1/3}].
    """
    from scipy.integrate import quad

    def integrand(t):
        x = t ** 3
        return abs(float(sqrt_kernel_values(x)[0])) ** (4.0 / 3.0) * 3.0 * t * t

    upper = np.pi ** (1.0 / 3.0)
    # K changes sign once on (0, pi); |K|^{4/3} has a kink there, so split.
    kink = 0.7437729379660111 ** (1.0 / 3.0)
    val, err = quad(integrand, 0.0, upper, epsabs=1e-13, epsrel=rel_tol,
                    limit=400, points=[kink])
    if err > 1e-9:
        raise ConfigurationError(f"kernel quadrature failed to converge (err={err:.2e})")
    # K is even: the full-circle integral is twice the (0, pi] piece; divide by 2pi.
    norm_4_3 = (2.0 * val / TWO_PI) ** 0.75
    return norm_4_3 ** 2


# Frozen value of smoothing_constant_quadrature(); the test suite re-derives it.
SMOOTHING_CONSTANT = 0.8511123081734860


# -- harmonic extension ---------------------------------------------------

def dirichlet_energy(f: FourierField) -> float:
    """(1/pi) int_D |grad U|^2 r dr dtheta for the harmonic extension U of f.

    Closed form 2 sum_{n!=0} |n| |c_n|^2 = 2 ||f||^2_{dot-H^{1/2}}.
    """
    ns = np.abs(f.wavenumbers()).astype(float)
    return 2.0 * float(np.sum(ns * np.abs(f.coeffs) ** 2))


def dirichlet_energy_quadrature(f: FourierField, n_radial: int = 120,
                                grid_size: int | None = None) -> float:
    """Same energy by Gauss-Legendre in r and trapezoid in theta.

    |grad U|^2 = U_r^2 + U_theta^2 / r^2 with U(r, theta) the Poisson
    extension; both slices are band-limited so the angular rule is exact.
    """
    from numpy.polynomial.legendre import leggauss

    G = grid_size or f.grid_size
    M = f.cutoff
    ns = f.wavenumbers()
    nodes, weights = leggauss(n_radial)
    r = 0.5 * (nodes + 1.0)          # map [-1,1] -> [0,1]
    w = 0.5 * weights
    total = 0.0
    for ri, wi in zip(r, w):
        c_r = f.coeffs * np.abs(ns) * ri ** np.maximum(np.abs(ns) - 1, 0)
        c_r[M] = 0.0
        c_t = f.coeffs * (1j * ns) * ri ** np.abs(ns)
        u_r = FourierField(c_r, G).values(G)
        u_t = FourierField(c_t, G).values(G)
        sq = u_r ** 2 + (u_t / max(ri, 1e-300)) ** 2
        total += wi * np.mean(sq) * TWO_PI * ri
    return total / np.pi


def exponential_moment_bound(f: FourierField) -> tuple[float, float]:
    """Return (log int e^f dx/2pi, (1/4) Dirichlet energy + mean f).

    The first component never exceeds the second (sharp exponential-moment
    inequality for the harmonic extension).
    """
    v = f.values(max(f.grid_size, 8 * f.cutoff + 8, 256))
    lhs = float(np.log(np.mean(np.exp(v))))
    rhs = 0.25 * dirichlet_energy(f) + f.mean
    return lhs, rhs


# -- lattice sum identity -------------------------------------------------

def lattice_lorentzian_sum(x: float, eta: float, terms: int) -> float:
    """Truncated sum_{|j| <= terms} eta / ((j - x)^2 + eta^2)."""
    j = np.arange(-terms, terms + 1, dtype=float)
    return float(np.sum(eta / ((j - x) ** 2 + eta ** 2)))


def lattice_lorentzian_closed_form(x: float, eta: float) -> float:
    """(pi/2) sinh(2 pi eta) / (sin^2(pi x) + sinh^2(pi eta)), the full-lattice value."""
    return 0.5 * np.pi * np.sinh(2.0 * np.pi * eta) / (
        np.sin(np.pi * x) ** 2 + np.sinh(np.pi * eta) ** 2)
