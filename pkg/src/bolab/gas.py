"""Circular log-gas at inverse temperature 2: sampling, Toeplitz
determinants, equilibrium measures, free entropy/information and linear
statistics.

The n-point energy is

    E~(theta; v) = (1/n) sum_j v(theta_j)
                 - (1/n^2) sum_{j<k} log(4 sin^2((theta_k - theta_j)/2)),

and the ensemble measure is  exp(-n^2 E~) dtheta.  At this temperature the
partition function collapses to an n x n Toeplitz determinant of Fourier
coefficients of e^{-n v}, which gives a determinant route to the limiting
free energy B(Q); the equilibrium density for a smooth potential follows
from closed-form spectral inversion of the log-kernel equation.

Convention: the circle Hilbert transform used by the free-information
functional is Hf(theta) = p.v. int cot((theta - phi)/2) f(phi) dphi, which
is 2pi times the Fourier-multiplier (-i sgn m) transform of `fields`.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Callable, Optional, Sequence, Tuple, Union

import numpy as np
from scipy.linalg import toeplitz
from scipy.special import gammaln

from . import fields
from .density import TWO_PI, CircleDensity
from .errors import ConfigurationError, NumericalDiagnostic, SupportCollapseError
from .fields import FourierField

N_MAX_DETERMINANT = 120

Potential = Union[None, Callable, FourierField]


def _potential_callable(v: Potential) -> Callable:
    if v is None:
        return lambda theta: np.zeros_like(np.asarray(theta, dtype=float))
    if isinstance(v, FourierField):
        return v
    return v


@dataclass(frozen=True)
class AngleEnsemble:
    """Sorted point configuration theta_1 <= ... <= theta_n in [0, 2pi)."""

    angles: np.ndarray

    def __post_init__(self):
        th = np.sort(np.mod(np.asarray(self.angles, dtype=float), TWO_PI))
        if th.ndim != 1 or th.size == 0:
            raise ConfigurationError("angles must be a nonempty 1-d sequence")
        object.__setattr__(self, "angles", th)

    @property
    def n(self) -> int:
        return self.angles.size

    def gaps(self) -> np.ndarray:
        """Successive gaps including the wrap-around one; sums to 2pi."""
        th = self.angles
        return np.diff(np.append(th, th[0] + TWO_PI))


def tilde_energy(e: AngleEnsemble, v: Potential = None) -> float:
    """(1/n) sum v(theta_j) - (1/n^2) sum_{j<k} log(4 sin^2(gap/2));
    +inf for coincident angles."""
    th = e.angles
    n = e.n
    vfn = _potential_callable(v)
    total = float(np.sum(vfn(th))) / n
    if n > 1:
        iu = np.triu_indices(n, k=1)
        s2 = 4.0 * np.sin(0.5 * (th[iu[1]] - th[iu[0]])) ** 2
        if np.any(s2 == 0.0):
            return math.inf
        total -= float(np.sum(np.log(s2))) / n ** 2
    return total


# -- Metropolis sampling --------------------------------------------------

@dataclass
class EnsembleSamples:
    """Thinned single-site Metropolis output for exp(-n^2 E~)."""
    angles: np.ndarray          # shape (n_samples, n), each row sorted
    acceptance_rate: float
    n: int
    seed: int

    def __len__(self):
        return self.angles.shape[0]

    def ensemble(self, i: int) -> AngleEnsemble:
        return AngleEnsemble(self.angles[i])


def mcmc_ensemble(v: Potential, n: int, steps: int, seed: int,
                  burn_in: Optional[int] = None, thin: int = 1,
                  step_scale: Optional[float] = None) -> EnsembleSamples:
    """Single-site random-walk Metropolis for the n-point gas.

    One step = one sweep over all sites.  `steps` counts post-burn-in
    sweeps; every `thin`-th sweep is recorded.  The target density is
    exp(-n^2 E~), i.e. site moves are accepted with probability
    exp(-n dv + sum_k Delta log 4 sin^2).
    """
    if n < 2:
        raise ConfigurationError("need at least two gas particles")
    rng = np.random.default_rng(seed)
    vfn = _potential_callable(v)
    if burn_in is None:
        burn_in = max(200, steps // 5)
    if step_scale is None:
        step_scale = 2.0 / n      # typical spacing 2pi/n
    th = np.sort(rng.uniform(0.0, TWO_PI, n))
    vth = np.asarray(vfn(th), dtype=float)
    n_keep = steps // thin
    out = np.empty((n_keep, n))
    accepted = 0
    proposed = 0
    kept = 0
    idx = np.arange(n)
    for sweep in range(burn_in + steps):
        order = rng.permutation(n)
        noise = step_scale * rng.standard_normal(n)
        log_u = np.log(rng.random(n))
        for j in order:
            new = (th[j] + noise[j]) % TWO_PI
            others = idx != j
            old_int = np.log(4.0 * np.sin(0.5 * (th[others] - th[j])) ** 2)
            new_int = 4.0 * np.sin(0.5 * (th[others] - new)) ** 2
            if np.any(new_int == 0.0):
                continue
            v_new = float(vfn(new))
            dlog = (np.sum(np.log(new_int)) - np.sum(old_int)
                    - n * (v_new - vth[j]))
            proposed += 1
            if log_u[j] < dlog:
                th[j] = new
                vth[j] = v_new
                accepted += 1
        if sweep >= burn_in and (sweep - burn_in) % thin == thin - 1:
            if kept < n_keep:
                out[kept] = np.sort(th)
                kept += 1
    rate = accepted / max(proposed, 1)
    if not 0.05 <= rate <= 0.95:
        warnings.warn(f"gas acceptance rate {rate:.3f} outside [0.05, 0.95]",
                      RuntimeWarning)
    return EnsembleSamples(out[:kept], rate, n, seed)


# -- Toeplitz partition functions -----------------------------------------

def _fourier_symbol(v: Potential, n: int, modes: int) -> np.ndarray:
    """d_m = int e^{i m theta - n v(theta)} dtheta for m = 0..modes-1,
    by trapezoid on a grid fine enough for spectral accuracy."""
    vfn = _potential_callable(v)
    v_cut = v.cutoff if isinstance(v, FourierField) else 16
    G = max(512, 8 * n * max(v_cut, 1), 8 * modes)
    theta = TWO_PI * np.arange(G) / G
    f = np.exp(-n * np.asarray(vfn(theta), dtype=float))
    spec = np.fft.ifft(f)            # (1/G) sum_j f_j e^{+2pi i m j / G}
    return TWO_PI * spec[np.arange(modes) % G]


def _oscillation(v: Potential) -> float:
    vfn = _potential_callable(v)
    theta = TWO_PI * np.arange(1024) / 1024
    vals = np.asarray(vfn(theta), dtype=float)
    return float(vals.max() - vals.min())


def _log_det_toeplitz_mp(v: Potential, n: int) -> float:
    """High-precision determinant of the moment matrix: the conditioning
    is ~ exp(n * osc(v)), which overwhelms double precision for large n."""
    import mpmath as mp

    vfn = _potential_callable(v)
    digits = int(n * _oscillation(v) / math.log(10.0)) + 40
    v_cut = v.cutoff if isinstance(v, FourierField) else 16
    G = max(1024, 8 * n * max(v_cut, 1))
    theta = TWO_PI * np.arange(G) / G
    v_vals = np.asarray(vfn(theta), dtype=float)
    with mp.workdps(digits):
        f = [mp.e ** (-n * mp.mpf(val)) for val in v_vals]
        h = mp.mpf(2) * mp.pi / G
        d = []
        for m in range(n):
            acc = mp.mpc(0)
            for j in range(G):
                acc += f[j] * mp.expjpi(mp.mpf(2 * m * j) / G)
            d.append(acc * h)
        T = mp.matrix(n, n)
        for j in range(n):
            for k in range(n):
                m = j - k
                T[j, k] = d[m] if m >= 0 else mp.conj(d[-m])
        det = mp.det(T)
        if mp.re(det) <= 0:
            raise NumericalDiagnostic("Toeplitz determinant nonpositive")
        return float(mp.log(mp.re(det)))


def log_toeplitz_partition(v: Potential, n: int) -> float:
    """log of n! * det[d_{j-k}]_{j,k=1..n}, the gas partition function
    int exp(-n^2 E~) dtheta^n at inverse temperature 2."""
    if not 1 <= n <= N_MAX_DETERMINANT:
        raise ConfigurationError(f"determinant size must be in [1, {N_MAX_DETERMINANT}]")
    if n * _oscillation(v) > 25.0:     # double precision cannot hold the det
        return float(gammaln(n + 1) + _log_det_toeplitz_mp(v, n))
    d = _fourier_symbol(v, n, n)
    T = toeplitz(d)                   # Hermitian: row from conj by symmetry
    sign, logdet = np.linalg.slogdet(T)
    if sign.real <= 0:
        raise NumericalDiagnostic(f"Toeplitz determinant nonpositive (sign {sign})")
    if n > 2 and np.linalg.cond(T) > 1e12:
        warnings.warn("Toeplitz matrix ill-conditioned", RuntimeWarning)
    return float(gammaln(n + 1) + logdet)


def toeplitz_partition(v: Potential, n: int) -> float:
    """n! * det of the Fourier-coefficient Toeplitz matrix (overflows for
    large n; prefer log_toeplitz_partition beyond n ~ 100)."""
    return math.exp(log_toeplitz_partition(v, n))


def bq_estimate(Q: Potential, n_list: Sequence[int]) -> Tuple[float, np.ndarray]:
    """Limiting free energy B(Q) = lim (1/n^2) log(n! det T_n(e^{-nQ})).

    Returns (extrapolated limit, per-n sequence).  The finite-n sequence
    carries log(n)/n and 1/n corrections, so the limit is extracted by a
    least-squares Richardson fit against [1, log n / n, 1/n, 1/n^2].
    """
    n_arr = np.asarray(sorted(n_list), dtype=int)
    if n_arr.size < 4:
        raise ConfigurationError("need at least four n values to extrapolate")
    s = np.array([log_toeplitz_partition(Q, int(n)) / n ** 2 for n in n_arr])
    nf = n_arr.astype(float)
    A = np.vstack([np.ones_like(nf), np.log(nf) / nf, 1.0 / nf, 1.0 / nf ** 2]).T
    coef, *_ = np.linalg.lstsq(A, s, rcond=None)
    resid = s - A @ coef
    if np.max(np.abs(resid)) > 1e-3:
        warnings.warn("Richardson fit residual large; extrapolation suspect",
                      RuntimeWarning)
    return float(coef[0]), s


# -- equilibrium measures -------------------------------------------------

def equilibrium_density(Q: FourierField, grid_size: int = 2048) -> CircleDensity:
    """Closed-form spectral inversion of the log-kernel equation
    Q = 2 int log|e^{i theta} - e^{i phi}| rho(phi) dphi + C:

    for Q = sum_m (A_m cos + B_m sin),
    rho = 1/(2pi) - (1/2pi) sum_m m (A_m cos m theta + B_m sin m theta),
    i.e. rho_hat_m = 1/(2pi) at m=0 and -|m| Q_hat_m / (2pi) otherwise.
    Raises SupportCollapseError if the formal inverse dips negative.
    """
    if not isinstance(Q, FourierField):
        raise ConfigurationError("potential must be supplied spectrally")
    M = Q.cutoff
    ns = np.arange(-M, M + 1)
    c = -np.abs(ns) * Q.coeffs / TWO_PI
    c[M] = 1.0 / TWO_PI
    try:
        return CircleDensity(FourierField(c), grid_size)
    except ConfigurationError as exc:
        raise SupportCollapseError(
            "equilibrium density not everywhere positive; full-support "
            f"regime violated ({exc})") from exc


def equilibrium_energy(Q: FourierField, rho: CircleDensity) -> float:
    """E_Q(rho) = int Q rho dtheta - int int log|e^{it}-e^{is}| rho rho dt ds,
    evaluated spectrally (the log kernel has coefficients -1/(2|m|))."""
    M = max(Q.cutoff, rho.cutoff)
    qc = Q.pad(M).coeffs if Q.cutoff < M else Q.coeffs
    rc = rho.field.pad(M).coeffs if rho.cutoff < M else rho.field.coeffs
    # int Q rho dtheta = 2pi sum_m Q_m conj(rho_m)
    lin = TWO_PI * float(np.sum(qc * np.conj(rc)).real)
    m = np.arange(1, M + 1, dtype=float)
    quad = -TWO_PI ** 2 * float(np.sum(np.abs(rc[M + 1:]) ** 2 / m))
    return lin - quad


# -- free entropy and information -----------------------------------------

def free_entropy_routes(omega: CircleDensity, rho0: CircleDensity,
                        grid_size: int = 2048) -> Tuple[float, float]:
    """Relative free entropy -int int log|e^{it}-e^{is}| d(omega-rho0)^{x2}
    by two independent routes: (fourier, quadrature).

    Fourier: sum_{m>=1} (2pi)^2 |delta_hat_m|^2 / m.  Quadrature: double
    trapezoid after subtracting the second-order periodic jet
    delta(t) + delta'(t) sin(u) + delta''(t)(1 - cos u), u = s - t, whose
    kernel integrals are exactly 0, 0 and pi, since the log kernel has
    cosine coefficients -1/m and zero mean.  The remaining integrand
    vanishes cubically at the diagonal, so the trapezoid rule converges
    fast despite the logarithm.
    """
    M = max(omega.cutoff, rho0.cutoff)
    dc = (omega.field.pad(M).coeffs - rho0.field.pad(M).coeffs
          if omega.cutoff != M or rho0.cutoff != M
          else omega.field.coeffs - rho0.field.coeffs)
    delta = FourierField(dc)
    m = np.arange(1, M + 1, dtype=float)
    fourier = TWO_PI ** 2 * float(np.sum(np.abs(dc[M + 1:]) ** 2 / m))

    G = grid_size
    theta = TWO_PI * np.arange(G) / G
    d_vals = delta.values(G)
    dp_vals = delta.derivative().values(G)
    dpp_vals = delta.derivative(2).values(G)
    diff = theta[None, :] - theta[:, None]
    log_k = np.log(np.abs(2.0 * np.sin(0.5 * diff))
                   + np.eye(G))          # diagonal handled below
    smooth = (d_vals[None, :] - d_vals[:, None]
              - dp_vals[:, None] * np.sin(diff)
              - dpp_vals[:, None] * (1.0 - np.cos(diff))) * log_k
    np.fill_diagonal(smooth, 0.0)
    h = TWO_PI / G
    potential = smooth.sum(axis=1) * h   # U(theta_i) = int log|..| delta ds
    potential += dpp_vals * math.pi
    quadrature = -float(np.sum(potential * d_vals) * h)
    return fourier, quadrature


def free_entropy(omega: CircleDensity, rho0: CircleDensity,
                 check_tol: float = 1e-6) -> float:
    """Relative free entropy; the quadrature route must confirm the
    spectral one to check_tol or a NumericalDiagnostic is raised."""
    fourier, quadrature = free_entropy_routes(omega, rho0)
    if abs(fourier - quadrature) > check_tol:
        raise NumericalDiagnostic(
            f"free-entropy routes disagree: {fourier:.9g} vs {quadrature:.9g}")
    return fourier


def hilbert_gas(delta: FourierField) -> FourierField:
    """p.v. int cot((theta - phi)/2) f(phi) dphi = 2pi x multiplier form."""
    return TWO_PI * fields.hilbert_transform(delta)


def free_information(omega: CircleDensity, rho0: CircleDensity,
                     grid_size: int = 2048) -> float:
    """I_F(omega | rho0) = int (H(omega - rho0))^2 omega dtheta with the
    cotangent-kernel Hilbert transform."""
    M = max(omega.cutoff, rho0.cutoff)
    delta = FourierField(omega.field.pad(M).coeffs - rho0.field.pad(M).coeffs)
    h_vals = hilbert_gas(delta).values(grid_size)
    w_vals = omega.values(grid_size)
    return float(np.mean(h_vals ** 2 * w_vals) * TWO_PI)


# -- linear statistics ----------------------------------------------------

def linear_stat(e: AngleEnsemble, g: Union[FourierField, Callable]) -> float:
    """sum_j g(theta_j)."""
    return float(np.sum(g(e.angles)))


@dataclass
class CLTReport:
    n: int
    mean: float
    variance: float
    classical_variance: float      # sum_{m>=1} m |g_hat_m|^2
    ks_statistic: float
    tail_sigma: float
    tail_r_squared: float


def _ks_against_normal(x: np.ndarray) -> float:
    from scipy.stats import kstest
    mu, sd = float(np.mean(x)), float(np.std(x, ddof=1))
    if sd == 0:
        return 1.0
    return float(kstest((x - mu) / sd, "norm").statistic)


def classical_variance(g: FourierField) -> float:
    """Strong-Szego limiting variance of sum_j g(theta_j) for the beta = 2
    gas: sum_{m in Z} |m| |g_hat_m|^2 = 2 sum_{m>=1} m |g_hat_m|^2 (equal to
    the half-order Sobolev seminorm squared of g)."""
    M = g.cutoff
    m = np.arange(1, M + 1, dtype=float)
    return 2.0 * float(np.sum(m * np.abs(g.coeffs[M + 1:]) ** 2))


def clt_experiment(g: FourierField, n: int, samples: int, seed: int,
                   v: Potential = None, thin: int = 2) -> CLTReport:
    """Monte Carlo distribution of the linear statistic sum_j g(theta_j).

    Requires mean-zero g.  Reports the sample variance (n-independent in
    the limit), the classical spectral variance for comparison, a KS
    statistic against the fitted normal, and a sub-Gaussian tail fit of
    sqrt(n) * (mean-statistic - mean).
    """
    if abs(g.mean) > 1e-12:
        raise ConfigurationError("linear-statistic test function must have zero mean")
    chain = mcmc_ensemble(v, n, steps=samples * thin, seed=seed, thin=thin)
    ga = g.cosine_amplitudes()
    gb = g.sine_amplitudes()
    ms = np.arange(1, g.cutoff + 1)
    th = chain.angles                                   # (S, n)
    stats = np.zeros(th.shape[0])
    for m, am, bm in zip(ms, ga, gb):
        stats += am * np.cos(m * th).sum(axis=1) + bm * np.sin(m * th).sum(axis=1)
    mu = float(np.mean(stats))
    var = float(np.var(stats, ddof=1))
    ks = _ks_against_normal(stats)
    scaled = math.sqrt(n) * (stats / n - mu / n)
    sigma, r2 = _tail_fit(scaled)
    return CLTReport(n, mu, var, classical_variance(g), ks, sigma, r2)


def _tail_fit(x: np.ndarray) -> Tuple[float, float]:
    """Sub-Gaussian tail fit log P(|X - mean| >= s) ~ -s^2/(2 sigma^2)
    with Mills-ratio correction terms; returns (sigma, R^2)."""
    dev = np.abs(x - np.mean(x))
    std = float(np.std(x))
    if std == 0:
        return 0.0, 1.0
    levels = np.linspace(0.8 * std, min(3.0 * std, 0.95 * float(dev.max())), 25)
    tail = np.array([np.mean(dev >= s) for s in levels])
    keep = tail > 0
    s, y = levels[keep], np.log(tail[keep])
    A = np.vstack([s ** 2, np.ones_like(s), np.log(s)]).T
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    sigma2 = -0.5 / coef[0] if coef[0] < 0 else math.inf
    resid = y - A @ coef
    ss = float(np.sum((y - np.mean(y)) ** 2))
    r2 = 1.0 - float(np.sum(resid ** 2)) / ss if ss > 0 else 1.0
    return math.sqrt(max(sigma2, 0.0)) if math.isfinite(sigma2) else math.inf, r2


def curvature_margin(Q: FourierField, grid_size: int = 4096) -> float:
    """Curvature margin kappa_1 = 1/2 + min_theta Q''(theta).

    The largest kappa for which Q'' >= kappa - 1/2 holds on the whole
    circle; the free transportation inequality uses the prefactor
    2/(1 - 2 kappa_1) and so requires kappa_1 < 1/2.
    """
    q2 = Q.derivative(2).values(grid_size)
    return 0.5 + float(q2.min())
