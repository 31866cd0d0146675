import numpy as np
import pytest

from bolab import bo, fields
from bolab.errors import ConfigurationError, DomainError
from bolab.fields import FourierField, TWO_PI

from conftest import random_field


def test_rhs_matches_hamiltonian_structure():
    u = random_field(31, cutoff=8, scale=0.5)
    for beta in (0.0, 0.7, -1.3):
        a = bo.rhs(u, beta)
        b = bo.poisson_bracket_rhs(u, beta)
        assert np.max(np.abs(a.coeffs - b.coeffs)) < 1e-13


def test_linear_flow_exact():
    u0 = random_field(32, cutoff=6)
    traj = bo.evolve(u0, 0.0, 0.5, 0.01)
    ns = u0.wavenumbers()
    phase = np.exp(-1j * np.sign(ns) * ns.astype(float) ** 2 * 0.5)
    assert np.max(np.abs(traj.final.coeffs - phase * u0.coeffs)) < 1e-13


def test_conserved_quantities():
    u0 = random_field(33, cutoff=10, scale=0.3)
    beta = 0.8
    traj = bo.evolve(u0, beta, 0.2, 1e-3, store_every=50)
    m0 = bo.mass(u0)
    e0 = bo.hamiltonian(u0, beta)
    for s in traj.states:
        assert abs(bo.mass(s) - m0) < 1e-10
        assert abs(bo.hamiltonian(s, beta) - e0) < 1e-8


def test_evolve_reversible():
    u0 = random_field(34, cutoff=8, scale=0.3)
    fwd = bo.evolve(u0, 0.5, 0.1, 1e-3).final
    back = bo.evolve(fwd, 0.5, -0.1, 1e-3).final
    assert np.max(np.abs(back.coeffs - u0.coeffs)) < 1e-9


def test_evolve_validates_step():
    u0 = random_field(35, cutoff=4)
    with pytest.raises(ConfigurationError):
        bo.evolve(u0, 1.0, 0.1, 0.03)   # not an integer multiple
    with pytest.raises(ConfigurationError):
        bo.evolve(u0, 1.0, 0.1, -1e-3)


def test_travelling_wave_formulas():
    w = bo.TravellingWave(0.5, 1.0)
    assert w.speed == pytest.approx(5.0 / 3.0, abs=1e-15)
    assert w.mass == pytest.approx(5.0 / 3.0, abs=1e-15)
    f = w.profile(128)
    assert bo.mass(f) == pytest.approx(w.mass, abs=1e-12)
    assert bo.steady_identity_residual(w, 128) < 1e-10
    assert bo.travelling_wave_residual(w, 128) < 1e-9
    with pytest.raises(DomainError):
        bo.TravellingWave(1.2, 1.0)
    with pytest.raises(DomainError):
        bo.TravellingWave(0.5, 0.0)


def test_travelling_wave_translates_left():
    w = bo.TravellingWave(0.5, 1.0)
    u0 = w.profile(64)
    T = 0.125
    final = bo.evolve(u0, 1.0, T, 1e-3).final
    expect = w.profile(64, t=T)
    assert np.max(np.abs(final.coeffs - expect.coeffs)) < 1e-8
    # and the profile moves towards negative x: the center (minimum of the
    # negative spike) shifts by -c T
    x = np.linspace(-np.pi, np.pi, 20001)
    c_meas = -x[np.argmin(final(x))] / T
    assert c_meas == pytest.approx(w.speed, abs=1e-2)


def test_hessian_form_is_second_variation():
    u = random_field(36, cutoff=6, scale=0.4)
    h = random_field(37, cutoff=6)
    beta = 0.9
    eps = 1e-4
    fd = (bo.hamiltonian(u + eps * h, beta) - 2 * bo.hamiltonian(u, beta)
          + bo.hamiltonian(u - eps * h, beta)) / eps ** 2
    assert bo.hessian_form(u, h, beta, cubic_factor=2.0) == pytest.approx(
        fd, abs=1e-6)


def test_smoothed_hessian_lower_bound():
    kappa = fields.SMOOTHING_CONSTANT
    beta = 0.3
    for seed in range(15):
        u = random_field(400 + seed, cutoff=8, scale=0.4)
        h = random_field(500 + seed, cutoff=8)
        lower = (1.0 - kappa * abs(beta) * np.sqrt(bo.mass(u))) \
            * fields.l2_norm_sq(h)
        assert bo.smoothed_hessian_form(u, h, beta) >= lower - 1e-10


def test_convexity_probe_bound():
    kappa = fields.SMOOTHING_CONSTANT
    beta = 0.05 / kappa
    probe = bo.convexity_probe(beta, 1.0, cutoff=16, trials=50, seed=3)
    assert probe >= 1.0 - 0.05 - 1e-9


def test_mode_split():
    u = random_field(38, cutoff=8)
    low, high = bo.mode_split(u, 3)
    assert np.max(np.abs((low + high).coeffs - u.coeffs)) < 1e-15
    assert all(low.coeff(n) == 0 for n in range(4, 9))
    assert all(high.coeff(n) == 0 for n in range(0, 4))
    sup = np.max(np.abs(low.values(512)))
    assert sup <= np.sqrt(2 * 3 + 1) * np.sqrt(bo.mass(u)) + 1e-12
    with pytest.raises(ConfigurationError):
        bo.mode_split(u, 9)


def test_perturbation_potential_within_envelope():
    beta, n_mass, k = 0.5, 2.0, 3
    for seed in range(10):
        u = random_field(600 + seed, cutoff=8)
        u = u * np.sqrt(n_mass / bo.mass(u))
        w = bo.perturbation_potential(u, beta, k)
        assert abs(w) <= bo.perturbation_bound(beta, n_mass, k)


def test_harmonic_sum_direction():
    h = bo.harmonic_sum_direction(20)
    kh = fields.sqrt_kernel_convolve(h)
    harmonic = np.sum(1.0 / np.arange(1, 21))
    assert kh(np.array([0.0]))[0] == pytest.approx(harmonic, abs=1e-12)
    assert fields.l2_norm_sq(h) == pytest.approx(2 * harmonic, abs=1e-12)
