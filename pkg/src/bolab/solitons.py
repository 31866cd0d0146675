"""Periodic multi-soliton pole dynamics and the Coulomb charge system.

A configuration of poles q_j = xi_j + i eta_j with eta_j > 0 encodes a real
periodic field

    u(x) = sum_j -k sinh(k eta_j) / (sinh^2(k eta_j / 2) + sin^2(k(x - xi_j)/2))
         = - sum_j 2k P_{exp(-k eta_j)}(k (x - xi_j)),

a superposition of Poisson kernels.  Moving the poles by the rational
trigonometric ODEs below makes u(x, t) an exact solution of the dispersive
wave equation handled in `bo` (with the coupling calibrated by
`calibrate_beta`).  The same pole motion arises as the canonical flow of a
two-dimensional Coulomb energy for charges at e^{i q_j} and their circle
inversions; `coulomb_flow` implements that flow and `balayage_potential` the
logarithmic potential of the swept-out boundary measure.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Tuple

import numpy as np
from scipy.integrate import solve_ivp
from scipy.optimize import minimize_scalar

from . import bo, fields
from .errors import ConfigurationError, SingularityError
from .fields import FourierField

EPS_COLLISION = 1e-8   # minimum pairwise |sin(k(q_m - q_l)/2)|
EPS_FLOOR = 1e-6       # minimum distance of poles to the real axis

# Orientation of the pole velocity field.  The three components (self drift,
# pole-pole interaction, pole-conjugate interaction) each carry a sign; the
# default orientation is the one under which the reconstructed field solves
# the wave equation (fixed once by minimising bo_residual over all eight
# sign choices; see the sign-audit test).
DEFAULT_SIGNS = (-1.0, -1.0, -1.0)


def _cot(z):
    return 1.0 / np.tan(z)


@dataclass(frozen=True)
class PoleConfiguration:
    """Poles q_j = xi_j + i eta_j (angle units) with wavenumber k > 0."""

    poles: np.ndarray
    k: float = 1.0

    def __post_init__(self):
        q = np.atleast_1d(np.asarray(self.poles, dtype=complex))
        if q.ndim != 1 or q.size == 0:
            raise ConfigurationError("poles must be a nonempty 1-d sequence")
        object.__setattr__(self, "poles", q)
        if not self.k > 0:
            raise ConfigurationError("wavenumber k must be positive")
        if np.any(q.imag <= 0):
            raise ConfigurationError("all poles must lie strictly above the real axis")

    @property
    def n(self) -> int:
        return self.poles.size

    @property
    def xi(self) -> np.ndarray:
        return self.poles.real

    @property
    def eta(self) -> np.ndarray:
        return self.poles.imag

    def min_separation(self) -> float:
        """min over pairs of |sin(k(q_m - q_l)/2)|; inf for a single pole."""
        if self.n == 1:
            return math.inf
        diff = self.poles[:, None] - self.poles[None, :]
        s = np.abs(np.sin(0.5 * self.k * diff))
        s[np.diag_indices(self.n)] = math.inf
        return float(s.min())

    def guard(self):
        """Raise SingularityError if the configuration is too close to blow-up."""
        if float(self.eta.min()) < EPS_FLOOR:
            raise SingularityError(
                f"pole height {self.eta.min():.3e} below floor {EPS_FLOOR:g}")
        if self.min_separation() < EPS_COLLISION:
            raise SingularityError(
                f"pole separation {self.min_separation():.3e} below {EPS_COLLISION:g}")


def _velocity(q: np.ndarray, k: float,
              signs: Sequence[float] = DEFAULT_SIGNS) -> np.ndarray:
    """Unguarded velocity field on raw pole positions.

    dq_j/dt = i k [ s0 * cot(k(q_j - conj q_j)/2)
                  + s1 * sum_{m != j} cot(k(q_m - q_j)/2)
                  + s2 * sum_{m != j} cot(k(q_j - conj q_m)/2) ].
    """
    s0, s1, s2 = signs
    n = q.size
    self_term = _cot(0.5 * k * (q - np.conj(q)))
    if n == 1:
        inter = np.zeros(1, dtype=complex)
        mixed = np.zeros(1, dtype=complex)
    else:
        off = ~np.eye(n, dtype=bool)
        dpp = q[None, :] - q[:, None]          # row j, col m: q_m - q_j
        dpc = q[:, None] - np.conj(q)[None, :]  # row j, col m: q_j - conj q_m
        inter = np.where(off, _cot(np.where(off, 0.5 * k * dpp, 1.0)), 0.0).sum(axis=1)
        mixed = np.where(off, _cot(np.where(off, 0.5 * k * dpc, 1.0)), 0.0).sum(axis=1)
    return 1j * k * (s0 * self_term + s1 * inter + s2 * mixed)


def pole_velocity(c: PoleConfiguration,
                  signs: Sequence[float] = DEFAULT_SIGNS) -> np.ndarray:
    """Velocities dq_j/dt of the pole system.

    A single pole drifts parallel to the real axis at speed k*coth(k eta)
    towards negative x under the default orientation (the self term is real
    and eta is stationary); interactions between distinct poles and between
    poles and their mirror images enter through periodic cotangents.
    """
    c.guard()
    return _velocity(c.poles, c.k, signs)


def pole_acceleration(c: PoleConfiguration) -> np.ndarray:
    """Accelerations of the equivalent second-order (Calogero-type) system:

    d^2 q_j / dt^2 = k^3 sum_{m != j} cosec^2(k(q_j-q_m)/2) cot(k(q_j-q_m)/2),

    i.e. minus the q_j-gradient of (k^2/2) * sum_{m != l} cosec^2(k(q_m-q_l)/2).
    Both velocity orientations satisfy this same second-order equation.
    """
    c.guard()
    q, k, n = c.poles, c.k, c.n
    if n == 1:
        return np.zeros(1, dtype=complex)
    off = ~np.eye(n, dtype=bool)
    d = 0.5 * k * (q[:, None] - q[None, :])
    dm = np.where(off, d, 1.0)
    term = np.where(off, _cot(dm) / np.sin(dm) ** 2, 0.0)
    return k ** 3 * term.sum(axis=1)


def kinetic_energy(c: PoleConfiguration,
                   velocities: Optional[np.ndarray] = None) -> complex:
    """Conserved energy (1/2) sum p_j^2 + (k^2/2) sum_{m != l} cosec^2(k(q_m-q_l)/2)
    with the momenta identified as p_j = dq_j/dt (complex-valued in general).
    """
    if velocities is None:
        velocities = pole_velocity(c)
    p = np.asarray(velocities, dtype=complex)
    total = 0.5 * np.sum(p ** 2)
    if c.n > 1:
        off = ~np.eye(c.n, dtype=bool)
        d = 0.5 * c.k * (c.poles[:, None] - c.poles[None, :])
        total += 0.5 * c.k ** 2 * np.sum(np.where(off, 1.0 / np.sin(
            np.where(off, d, 1.0)) ** 2, 0.0))
    return complex(total)


# -- time evolution -------------------------------------------------------

@dataclass
class PoleTrajectory:
    """Sampled pole trajectory with dense interpolation between samples."""
    times: np.ndarray
    poles: np.ndarray            # shape (n_times, n), complex
    config: PoleConfiguration
    signs: Tuple[float, float, float]
    _dense: Optional[Callable] = None

    def at(self, t: float) -> np.ndarray:
        """Pole positions at an arbitrary time inside the integration window."""
        if self._dense is None:
            raise ConfigurationError("trajectory has no dense interpolant")
        y = self._dense(t)
        n = y.size // 2
        return y[:n] + 1j * y[n:]

    def configuration(self, t: float) -> PoleConfiguration:
        return PoleConfiguration(self.at(t), self.config.k)


def _integrate(q0: np.ndarray, k: float, rhs_cplx, dt: float, T: float,
               signs) -> PoleTrajectory:
    n = q0.size

    def rhs(t, y):
        q = y[:n] + 1j * y[n:]
        v = rhs_cplx(q)
        return np.concatenate([v.real, v.imag])

    def floor_event(t, y):
        return float(y[n:].min()) - EPS_FLOOR

    def collision_event(t, y):
        q = y[:n] + 1j * y[n:]
        if n == 1:
            return 1.0
        diff = q[:, None] - q[None, :]
        s = np.abs(np.sin(0.5 * k * diff))
        s[np.diag_indices(n)] = math.inf
        return float(s.min()) - EPS_COLLISION

    floor_event.terminal = True
    collision_event.terminal = True

    y0 = np.concatenate([q0.real, q0.imag])
    t_eval = np.arange(0.0, T + 0.5 * dt, dt) if T > 0 else np.array([0.0])
    sol = solve_ivp(rhs, (0.0, max(T, dt * 1e-12)), y0, method="DOP853",
                    rtol=1e-10, atol=1e-12, dense_output=True,
                    t_eval=np.clip(t_eval, 0.0, T),
                    events=[floor_event, collision_event])
    if sol.status == 1:
        t_stop = min(float(ev[0]) for ev in sol.t_events if ev.size)
        raise SingularityError(
            f"pole flow reached a singularity guard at t = {t_stop:.6g}")
    if not sol.success:
        raise SingularityError(f"pole integration failed: {sol.message}")
    poles = sol.y[:n].T + 1j * sol.y[n:].T
    cfg = PoleConfiguration(q0, k)
    return PoleTrajectory(sol.t, poles, cfg, tuple(signs), sol.sol)


def evolve_poles(c: PoleConfiguration, dt: float, T: float,
                 signs: Sequence[float] = DEFAULT_SIGNS) -> PoleTrajectory:
    """Integrate the pole ODEs on [0, T] with output every dt.

    Adaptive 8th-order Runge-Kutta at tolerance 1e-10; terminates with a
    SingularityError if a pole approaches the real axis (height < 1e-6) or
    two poles approach collision (periodic separation < 1e-8).
    """
    if T < 0:
        raise ConfigurationError("evolution time T must be nonnegative")
    if dt <= 0:
        raise ConfigurationError("output spacing dt must be positive")
    c.guard()
    return _integrate(c.poles, c.k, lambda q: _velocity(q, c.k, signs),
                      dt, T, signs)


# -- field reconstruction -------------------------------------------------

def reconstruct_values(c: PoleConfiguration, x: np.ndarray) -> np.ndarray:
    """Closed-form field values u(x) = sum_j -k sinh(k eta_j) / (...) at
    arbitrary points (works for any real k > 0)."""
    x = np.asarray(x, dtype=float)
    k = c.k
    num = -k * np.sinh(k * c.eta)                      # (n,)
    den = (np.sinh(0.5 * k * c.eta) ** 2
           + np.sin(0.5 * k * (x[..., None] - c.xi)) ** 2)
    return np.sum(num / den, axis=-1)


def _auto_cutoff(c: PoleConfiguration, tiny: float = 1e-16) -> int:
    k_int = int(round(c.k))
    m_max = int(math.ceil(-math.log(tiny) / (c.k * float(c.eta.min()))))
    return k_int * min(max(m_max, 4), 4096)


def reconstruct_u(c: PoleConfiguration, cutoff: Optional[int] = None) -> FourierField:
    """Spectral form of the reconstructed field for integer wavenumber k.

    Modes live on multiples of k:  c_{mk} = -2k sum_j e^{-k eta_j |m|} e^{-i m k xi_j},
    so the mean is -2kn and the coefficients decay like e^{-k min(eta) |m|}.
    """
    k_int = int(round(c.k))
    if abs(c.k - k_int) > 1e-12 or k_int < 1:
        raise ConfigurationError(
            "spectral reconstruction needs a positive integer wavenumber; "
            "use reconstruct_values for fractional k")
    if cutoff is None:
        cutoff = _auto_cutoff(c)
    M = cutoff
    coeffs = np.zeros(2 * M + 1, dtype=complex)
    m_max = M // k_int
    for m in range(0, m_max + 1):
        val = -2.0 * k_int * np.sum(
            np.exp(-k_int * c.eta * m) * np.exp(-1j * m * k_int * c.xi))
        coeffs[M + m * k_int] = val
        coeffs[M - m * k_int] = np.conj(val)
    return FourierField(coeffs)


# -- PDE residual and coupling calibration --------------------------------

def bo_residual(c0: PoleConfiguration, beta: float, T: float,
                signs: Sequence[float] = DEFAULT_SIGNS,
                n_samples: int = 7, cutoff: Optional[int] = None,
                h: float = 1e-3) -> float:
    """Max over sampled times of || d_t u - rhs(u) ||_{L^2} for the field
    reconstructed along the pole flow; d_t u by 5-point central differencing
    of the Fourier coefficients on the dense trajectory output.
    """
    if T <= 4 * h:
        raise ConfigurationError("T too short for the differencing stencil")
    traj = evolve_poles(c0, min(T / 4, 0.25), T, signs)
    if cutoff is None:
        cutoff = _auto_cutoff(c0)

    def field_at(t):
        return reconstruct_u(PoleConfiguration(traj.at(t), c0.k), cutoff)

    worst = 0.0
    for t in np.linspace(2 * h, T - 2 * h, n_samples):
        cm2, cm1 = field_at(t - 2 * h).coeffs, field_at(t - h).coeffs
        cp1, cp2 = field_at(t + h).coeffs, field_at(t + 2 * h).coeffs
        dudt = (-cp2 + 8 * cp1 - 8 * cm1 + cm2) / (12 * h)
        resid = dudt - bo.rhs(field_at(t), beta).coeffs
        worst = max(worst, math.sqrt(float(np.sum(np.abs(resid) ** 2))))
    return worst


def calibrate_beta(c0: PoleConfiguration, T: float = 0.5,
                   bounds: Tuple[float, float] = (0.05, 4.0)) -> Tuple[float, float]:
    """Coupling for which the reconstructed pole field solves the wave
    equation: minimises bo_residual over beta.  Returns (beta_star, residual)."""
    res = minimize_scalar(lambda b: bo_residual(c0, b, T), bounds=bounds,
                          method="bounded", options={"xatol": 1e-8})
    return float(res.x), float(res.fun)


# -- Coulomb charge system ------------------------------------------------

@dataclass(frozen=True)
class CoulombField:
    """External potential data for the planar charge system.

    v(z, zbar) is the real scalar potential; its Wirtinger derivatives are
    supplied as callables (z, zbar) -> complex.  beta_gas scales the
    logarithmic pair interactions.
    """
    v: Optional[Callable] = None
    dv_dz: Optional[Callable] = None
    dv_dzbar: Optional[Callable] = None
    beta_gas: float = 1.0


ZERO_FIELD = CoulombField()


def coulomb_energy(c: PoleConfiguration, field: CoulombField = ZERO_FIELD) -> float:
    """E = sum_j v(z_j, zbar_j)
         - beta sum_j log|sin(k(z_j - zbar_j)/2)|
         - beta sum_{j != l} log|sin(k(z_j - z_l)/2)|
         - beta sum_{j != l} log|sin(k(z_j - zbar_l)/2)|.
    """
    c.guard()
    z, k, b = c.poles, c.k, field.beta_gas
    total = 0.0
    if field.v is not None:
        total += float(np.sum([np.real(field.v(zj, np.conj(zj))) for zj in z]))
    total -= b * float(np.sum(np.log(np.abs(np.sin(0.5 * k * (z - np.conj(z)))))))
    if c.n > 1:
        off = ~np.eye(c.n, dtype=bool)
        dpp = z[:, None] - z[None, :]
        dpc = z[:, None] - np.conj(z)[None, :]
        total -= b * float(np.sum(np.log(np.abs(np.sin(np.where(
            off, 0.5 * k * dpp, 1.0))))[off]))
        total -= b * float(np.sum(np.log(np.abs(np.sin(np.where(
            off, 0.5 * k * dpc, 1.0))))[off]))
    return total


def _coulomb_velocity(z: np.ndarray, k: float, field: CoulombField) -> np.ndarray:
    b = field.beta_gas
    n = z.size
    zb = np.conj(z)
    self_term = _cot(0.5 * k * (zb - z))
    if n == 1:
        cc = np.zeros(1, dtype=complex)
        cm = np.zeros(1, dtype=complex)
    else:
        off = ~np.eye(n, dtype=bool)
        dcc = zb[:, None] - zb[None, :]
        dcm = zb[:, None] - z[None, :]
        cc = np.where(off, _cot(np.where(off, 0.5 * k * dcc, 1.0)), 0.0).sum(axis=1)
        cm = np.where(off, _cot(np.where(off, 0.5 * k * dcm, 1.0)), 0.0).sum(axis=1)
    vel = 1j * b * k * (self_term + cc + cm)
    if field.dv_dzbar is not None:
        vel = vel - 2j * np.array([field.dv_dzbar(zj, np.conj(zj)) for zj in z])
    return vel


def coulomb_flow(c: PoleConfiguration,
                 field: CoulombField = ZERO_FIELD) -> np.ndarray:
    """Canonical flow dz_j/dt = -2i dE/d(zbar_j) of the Coulomb energy:

    dz_j/dt = -2i dv/dzbar(z_j, zbar_j)
              + i beta k [ cot(k(zbar_j - z_j)/2)
                         + sum_{l != j} cot(k(zbar_j - zbar_l)/2)
                         + sum_{l != j} cot(k(zbar_j - z_l)/2) ].

    With v = 0 and beta_gas = 1 this coincides with pole_velocity for a
    single charge; for several charges the two flows are conjugate-related
    (see velocity_conjugate_of_variant) rather than identical.
    """
    c.guard()
    return _coulomb_velocity(c.poles, c.k, field)


def velocity_conjugate_of_variant(c: PoleConfiguration) -> np.ndarray:
    """-conj of the sign variant (+1, -1, +1) of the pole velocity field.
    Equals coulomb_flow with v = 0 and beta_gas = 1 identically; exposed so
    the exact algebraic relationship between the two flows can be tested."""
    return -np.conj(_velocity(c.poles, c.k, (1.0, -1.0, 1.0)))


def evolve_coulomb(c: PoleConfiguration, field: CoulombField, dt: float,
                   T: float) -> PoleTrajectory:
    """Integrate the Coulomb canonical flow (same guards as evolve_poles)."""
    if T < 0:
        raise ConfigurationError("evolution time T must be nonnegative")
    if dt <= 0:
        raise ConfigurationError("output spacing dt must be positive")
    c.guard()
    return _integrate(c.poles, c.k, lambda z: _coulomb_velocity(z, c.k, field),
                      dt, T, (0.0, 0.0, 0.0))


# -- balayage potential ---------------------------------------------------

def balayage_potential(c: PoleConfiguration,
                       cutoff: Optional[int] = None) -> Tuple[FourierField, FourierField]:
    """Logarithmic potential of the swept-out boundary measure and the
    negated reconstructed field.

    w(x) = sum_j log|e^{ix} - e^{i q_j}| has Fourier coefficients
    w_m = -sum_j rho_j^{|m|} e^{-i m xi_j} / (2|m|) with rho_j = e^{-eta_j},
    and zero mean.  Returns (w, -u) with u from reconstruct_u; for k = 1
    the mean-free part of u equals 4 H(dw/dx) with H the circle Hilbert
    transform (conjugate function), which pins the conjugacy convention.
    """
    c.guard()
    if cutoff is None:
        cutoff = _auto_cutoff(c)
    M = cutoff
    rho = np.exp(-c.eta)
    coeffs = np.zeros(2 * M + 1, dtype=complex)
    for m in range(1, M + 1):
        val = -np.sum(rho ** m * np.exp(-1j * m * c.xi)) / (2 * m)
        coeffs[M + m] = val
        coeffs[M - m] = np.conj(val)
    w = FourierField(coeffs)
    minus_u = -1.0 * reconstruct_u(c, cutoff)
    return w, minus_u
