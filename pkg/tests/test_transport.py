import math

import numpy as np
import pytest
from scipy.optimize import brentq

from bolab import gas, transport
from bolab.density import TWO_PI, CircleDensity
from bolab.errors import ConfigurationError
from bolab.fields import FourierField

from conftest import random_density


def zero_touch_target():
    return CircleDensity.from_callable(lambda t: (1 + np.cos(t)) / TWO_PI,
                                       cutoff=4)


def test_metric_axioms():
    for i in range(8):
        a = random_density(100 + i)
        b = random_density(200 + i)
        c = random_density(300 + i)
        dab = transport.w2_circle(a, b)
        dba = transport.w2_circle(b, a)
        assert abs(dab - dba) < 1e-10
        assert dab <= transport.w2_circle(a, c) + transport.w2_circle(c, b) + 1e-9
        assert transport.w2_circle(a, a) < 1e-8


def test_rotation_invariance():
    a = random_density(11)
    b = random_density(12)
    d0 = transport.w2_circle(a, b)
    d1 = transport.w2_circle(a.rotate(1.3), b.rotate(1.3))
    assert abs(d0 - d1) < 1e-7


def test_atom_distances():
    for aa in (0.3, 1.0, 2.0, 3.0):
        e0 = gas.AngleEnsemble(np.array([0.0]))
        e1 = gas.AngleEnsemble(np.array([aa]))
        d = transport.w2_circle(e0, e1)
        assert d == pytest.approx(min(aa, TWO_PI - aa), abs=1e-3)


def test_rotation_cost_upper_bound():
    rho = random_density(13)
    a = 0.25
    d = transport.w2_circle(rho, rho.rotate(a))
    assert 0.0 < d <= a + 1e-9


def test_chordal_below_arc():
    a = random_density(14)
    b = random_density(15)
    assert transport.w2_circle(a, b, chordal=True) <= transport.w2_circle(a, b) + 1e-12


def test_monotone_map_against_root_finder():
    u = CircleDensity.uniform()
    w = zero_touch_target()

    def cdf1(y):
        return (y + math.sin(y)) / TWO_PI

    phi = transport.monotone_map(u, w)
    xs = np.linspace(0.1, TWO_PI - 0.1, 41)
    worst = max(abs(phi(x)[()] - brentq(lambda y: cdf1(y) - x / TWO_PI,
                                        0, TWO_PI, xtol=1e-14))
                for x in xs)
    # accuracy is limited by the conditioning of the flat CDF point at pi
    assert worst < 2e-5

    # a pair bounded below inverts to near machine accuracy
    r0 = random_density(16)
    r1 = random_density(17)
    phi2 = transport.monotone_map(r0, r1)
    worst = max(abs(phi2(x)[()] - brentq(
        lambda y: r1.cdf(np.array([y]))[0] - r0.cdf(np.array([x]))[0],
        0, TWO_PI, xtol=1e-15)) for x in xs)
    assert worst < 1e-10


def test_monotone_map_derivative():
    r0 = random_density(18)
    r1 = random_density(19)
    phi = transport.monotone_map(r0, r1)
    x = np.linspace(0.3, 5.9, 15)
    h = 1e-6
    fd = (phi(x + h) - phi(x - h)) / (2 * h)
    assert np.max(np.abs(fd - phi.derivative(x))) < 1e-7


def test_monotone_map_cover_periodicity():
    r0 = random_density(20)
    r1 = random_density(21)
    phi = transport.monotone_map(r0, r1)
    x = np.linspace(0.0, TWO_PI, 9)
    assert np.max(np.abs(phi(x + TWO_PI) - phi(x) - TWO_PI)) < 1e-10


def test_push_forward_moments():
    r0 = random_density(22)
    r1 = random_density(23)
    shift = transport.optimal_shift(r0, r1)
    phi = transport.monotone_map(r0, r1, shift, grid_size=8192)
    x = phi.grid
    w0 = r0(x)
    for m in range(1, 6):
        lhs = np.mean(np.exp(1j * m * phi.values) * w0) * TWO_PI
        rhs = r1.moment(m)
        assert abs(lhs - rhs) < 1e-7


def test_geodesic_kinetic_energy_is_w2_squared():
    u = CircleDensity.uniform()
    w = zero_touch_target()
    path = transport.displacement_geodesic(u, w, steps=11)
    assert path.densities[0] is u and path.densities[-1] is w
    w2 = transport.w2_circle(u, w)
    assert abs(path.kinetic_energy() - w2 ** 2) < 1e-6
    assert path.continuity_residual() < 1e-6
    assert min(d.min_value() for d in path.densities[1:-1]) > -1e-4

    r0 = random_density(24)
    r1 = random_density(25)
    p2 = transport.displacement_geodesic(r0, r1, steps=11)
    assert abs(p2.kinetic_energy() - transport.w2_circle(r0, r1) ** 2) < 1e-6
    with pytest.raises(ConfigurationError):
        transport.displacement_geodesic(r0, r1, steps=1)


def test_free_transport_inequality():
    Q = FourierField.from_modes({1: 0.25, -1: 0.25}, 1)  # 2g cos, g = 0.25
    # equality case: omega = rho0 gives 0 <= 0
    rep0 = transport.free_transport_check(gas.equilibrium_density(Q), Q)
    assert rep0.holds and rep0.lhs < 1e-12
    for i in range(5):
        rep = transport.free_transport_check(random_density(1000 + i), Q)
        assert rep.holds
    with pytest.raises(ConfigurationError):
        transport.free_transport_check(random_density(1), FourierField.zero(1))


def test_hwi_converse():
    u = CircleDensity.uniform()
    rep = transport.hwi_converse_check(u, zero_touch_target(), steps=9)
    assert rep.holds
    for i in range(3):
        rep = transport.hwi_converse_check(random_density(2000 + i),
                                           random_density(3000 + i), steps=9)
        assert rep.holds


def test_ensemble_vs_density():
    # quantile-placed atoms approximate the density in W2
    rho = random_density(26)
    n = 400
    atoms = gas.AngleEnsemble(rho.quantile((np.arange(n) + 0.5) / n))
    assert transport.w2_circle(atoms, rho) < 0.05
