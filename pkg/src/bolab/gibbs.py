"""Random-walk Metropolis sampler for the invariant ensemble on the mass ball.

The target measure on mean-free fields with cutoff M is

    dnu  propto  I{ int u^2 dx/2pi <= N } exp( -beta int u^3 dx/2pi )
                 prod_{j=1}^{M} e^{-j (a_j^2 + b_j^2)/2} da_j db_j,

written in the real mode coordinates (a_j, b_j).  Under the coefficient
convention of fields.FourierField the ball constraint reads
(1/2) sum_j (a_j^2 + b_j^2) <= N.  The normaliser is never computed.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.special import logsumexp

from . import fields
from .errors import ConfigurationError
from .fields import FourierField


@dataclass(frozen=True)
class GibbsParams:
    beta: float
    n_ball: float          # L^2-ball radius N in units of int u^2 dx/2pi
    modes: int             # cutoff M
    steps: int
    burn_in: int
    seed: int
    proposal_scale: float = 1.0   # s0; per-mode scale is s0/sqrt(j)

    def __post_init__(self):
        if not (self.n_ball > 0 or math.isinf(self.n_ball)):
            raise ConfigurationError("ball radius must be positive (inf allowed)")
        if self.modes < 1:
            raise ConfigurationError("need at least one mode")
        if not self.steps > self.burn_in >= 0:
            raise ConfigurationError("need steps > burn_in >= 0")


def state_to_field(state: np.ndarray, grid_size: int = 0) -> FourierField:
    """Map the flat chain state (a_1..a_M, b_1..b_M) to a mean-free field."""
    M = state.size // 2
    return FourierField.from_real_basis(state[:M], state[M:], 0.0, grid_size)


def ball_mass(state: np.ndarray) -> float:
    """int u^2 dx/2pi = (1/2) sum_j (a_j^2 + b_j^2)."""
    return 0.5 * float(np.sum(state ** 2))


def log_weight(state: np.ndarray, p: GibbsParams) -> float:
    """Unnormalised log density; -inf outside the mass ball."""
    if ball_mass(state) > p.n_ball:
        return -math.inf
    M = p.modes
    js = np.arange(1, M + 1, dtype=float)
    gauss = -0.5 * float(np.sum(js * (state[:M] ** 2 + state[M:] ** 2)))
    if p.beta == 0.0:
        return gauss
    u = state_to_field(state)
    return -p.beta * fields.cubic_integral(u) + gauss


def sample_free(modes: int, rng: np.random.Generator) -> FourierField:
    """One draw of the free (beta=0, N=inf) measure: Var a_j = Var b_j = 1/j."""
    js = np.sqrt(np.arange(1, modes + 1, dtype=float))
    a = rng.standard_normal(modes) / js
    b = rng.standard_normal(modes) / js
    return FourierField.from_real_basis(a, b)


@dataclass
class SampleSet:
    """Post-burn-in chain output; rows of draws are (a_1..a_M, b_1..b_M)."""
    draws: np.ndarray
    acceptance_rate: float
    params: GibbsParams
    proposal_scale_final: float

    def __len__(self):
        return self.draws.shape[0]

    def field(self, i: int) -> FourierField:
        return state_to_field(self.draws[i])

    def pairings(self, f: FourierField) -> np.ndarray:
        """<f, u_i> = int f u_i dx/2pi for every draw, vectorised."""
        M = self.params.modes
        fa = np.zeros(M)
        fb = np.zeros(M)
        mf = min(M, f.cutoff)
        fa[:mf] = f.cosine_amplitudes()[:mf]
        fb[:mf] = f.sine_amplitudes()[:mf]
        # <f,u> = (1/2)(fa.a + fb.b) under the adopted basis convention
        return 0.5 * (self.draws[:, :M] @ fa + self.draws[:, M:] @ fb)


def log_accept_ratio(state: np.ndarray, proposal: np.ndarray, p: GibbsParams) -> float:
    """log alpha for the symmetric random-walk kernel: just the weight ratio."""
    return log_weight(proposal, p) - log_weight(state, p)


def metropolis(p: GibbsParams) -> SampleSet:
    """Random-walk Metropolis chain targeting exp(log_weight).

    Per-mode Gaussian proposals with scale s0/sqrt(j); s0 is adapted towards
    30-50% acceptance during burn-in and then frozen.  Fully reproducible
    from the seed.
    """
    rng = np.random.default_rng(p.seed)
    M = p.modes
    js = np.sqrt(np.arange(1, M + 1, dtype=float))
    mode_scale = np.concatenate([1.0 / js, 1.0 / js])
    s0 = p.proposal_scale

    # start from a free draw pulled into the ball if necessary
    state = np.concatenate([rng.standard_normal(M) / js, rng.standard_normal(M) / js])
    if math.isfinite(p.n_ball) and ball_mass(state) > p.n_ball:
        state *= 0.99 * math.sqrt(p.n_ball / ball_mass(state))
    lw = log_weight(state, p)

    draws = np.empty((p.steps - p.burn_in, 2 * M))
    accepted_post = 0
    window_acc = 0
    window_len = 100
    kept = 0
    for step in range(p.steps):
        proposal = state + s0 * mode_scale * rng.standard_normal(2 * M)
        lw_prop = log_weight(proposal, p)
        if math.log(rng.random()) < lw_prop - lw:
            state, lw = proposal, lw_prop
            window_acc += 1
            if step >= p.burn_in:
                accepted_post += 1
        if step < p.burn_in and (step + 1) % window_len == 0:
            rate = window_acc / window_len
            if rate < 0.30:
                s0 *= 0.8
            elif rate > 0.50:
                s0 *= 1.25
            window_acc = 0
        if step >= p.burn_in:
            draws[kept] = state
            kept += 1
    rate = accepted_post / max(p.steps - p.burn_in, 1)
    if not 0.05 <= rate <= 0.95:
        warnings.warn(f"acceptance rate {rate:.3f} outside [0.05, 0.95]",
                      RuntimeWarning)
    return SampleSet(draws, rate, p, s0)


# -- diagnostics ----------------------------------------------------------

def lmgf(f: FourierField, samples: SampleSet) -> float:
    """Centered log moment generating function log E e^{<f,u>} - E<f,u>."""
    if len(samples) == 0:
        raise ConfigurationError("empty sample set")
    vals = samples.pairings(f)
    return float(logsumexp(vals) - np.log(vals.size) - np.mean(vals))


def free_pairing_variance(f: FourierField, modes: int) -> float:
    """Analytic Var <f,u> under the free measure: (1/4) sum_j (fa_j^2+fb_j^2)/j."""
    mf = min(modes, f.cutoff)
    js = np.arange(1, mf + 1, dtype=float)
    fa = f.cosine_amplitudes()[:mf]
    fb = f.sine_amplitudes()[:mf]
    return 0.25 * float(np.sum((fa ** 2 + fb ** 2) / js))


@dataclass
class TailReport:
    levels: np.ndarray
    tail_prob: np.ndarray
    sigma_fit: float
    r_squared: float
    mean: float
    variance: float


def concentration_diag(samples: SampleSet, f: FourierField,
                       n_levels: int = 25) -> TailReport:
    """Empirical tails of <f,u> with a sub-Gaussian fit.

    Fits log P(|X - mean| >= s) = -s^2/(2 sigma^2) by least squares on the
    levels with nonzero empirical mass and reports the fit quality.
    """
    x = samples.pairings(f)
    mu = float(np.mean(x))
    dev = np.abs(x - mu)
    smax = float(np.max(dev)) if x.size else 0.0
    if smax == 0.0:
        return TailReport(np.zeros(1), np.ones(1), 0.0, 1.0, mu, 0.0)
    std = float(np.std(x))
    levels = np.linspace(0.8 * std, min(3.0 * std, 0.95 * smax), n_levels)
    tail = np.array([np.mean(dev >= s) for s in levels])
    keep = tail > 0
    s = levels[keep]
    y = np.log(tail[keep])
    # fit y = -s^2/(2 sigma^2) + c + d log s; intercept and log term absorb
    # the Mills-ratio prefactor of genuine Gaussian tails
    A = np.vstack([s ** 2, np.ones_like(s), np.log(s)]).T
    coef, *_ = np.linalg.lstsq(A, y, rcond=None)
    slope = float(coef[0])
    sigma2 = -0.5 / slope if slope < 0 else math.inf
    resid = y - A @ coef
    ss_tot = float(np.sum((y - np.mean(y)) ** 2))
    r2 = 1.0 - float(np.sum(resid ** 2)) / ss_tot if ss_tot > 0 else 1.0
    return TailReport(levels, tail, math.sqrt(max(sigma2, 0.0)), r2, mu,
                      float(np.var(x)))


def rejection_truncated_pair(n_ball: float, size: int,
                             rng: np.random.Generator) -> np.ndarray:
    """Oracle sampler for M=1, beta=0: standard Gaussian pair (a,b) conditioned
    on (a^2+b^2)/2 <= n_ball, by plain rejection.  Returns shape (size, 2)."""
    out = np.empty((size, 2))
    got = 0
    while got < size:
        cand = rng.standard_normal((2 * size, 2))
        ok = 0.5 * np.sum(cand ** 2, axis=1) <= n_ball
        take = cand[ok][:size - got]
        out[got:got + take.shape[0]] = take
        got += take.shape[0]
    return out
