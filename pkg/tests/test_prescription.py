import pickle

import numpy as np
import pytest

from pmclab.prescription import (H3_report, AffineRadial, Constant, Cutoff, GaussianBump,
                                 RadialIncreasing, Slab, Truncated, ball_energy, barrier_radius,
                                 check_H1, check_H2, check_H4, epsilon_R, h4_threshold,
                                 make_prescription, sphere_area)

# mpmath oracles, frozen
ZETA_09 = 1.378937920163149273e-4
EPS_10 = 0.10014338002651601341
EPS_20 = 0.088866936740582404

FAMILIES = [Constant(2.0), GaussianBump(), RadialIncreasing(), AffineRadial(), Slab(),
            Truncated(GaussianBump(), 3.0), Truncated(RadialIncreasing(), 2.0)]


def test_cutoff_values():
    z = Cutoff()
    assert z(-1.0) == 1.0 and z(0.0) == 1.0 and z(1.0) == 0.0 and z(2.0) == 0.0
    assert z(0.5) == pytest.approx(0.5, abs=1e-15)
    assert abs(z(0.9) - ZETA_09) < 1e-16
    r = np.linspace(-0.5, 1.5, 2001)
    assert np.all(np.diff(z(r)) <= 0)


def test_cutoff_derivative_matches_fd():
    z = Cutoff()
    r = np.linspace(0.01, 0.99, 97)
    h = 1e-6
    fd = (z(r + h) - z(r - h)) / (2 * h)
    assert np.max(np.abs(fd - z.derivative(r))) < 1e-8
    assert z.derivative(np.array([-0.1, 0.0, 1.0, 1.2])).tolist() == [0, 0, 0, 0]


def test_epsilon_R_oracle():
    assert abs(epsilon_R(Cutoff(), 10.0) - EPS_10) < 1e-12
    assert abs(epsilon_R(Cutoff(), 20.0) - EPS_20) < 1e-12
    eps = epsilon_R(Cutoff(), 10.0)
    r = np.linspace(1 - 2 * eps, 1.0, 5000)
    assert np.all(Cutoff()(r) < 1 / (4 * (r + 10.0)))
    assert barrier_radius(10.0) == pytest.approx(11.0 - 2 * EPS_10, abs=1e-12)


def test_epsilon_R_rejects_small_R():
    with pytest.raises(ValueError):
        epsilon_R(Cutoff(), 0.0)
    with pytest.raises(ValueError):
        epsilon_R(Cutoff(), 0.2)


@pytest.mark.parametrize("p", FAMILIES, ids=lambda p: type(p).__name__ + str(getattr(p, "R", "")))
def test_gradients_match_fd(p, rng):
    x = rng.normal(size=(40, 3)) * 1.5
    x[0] = [0.0, 0.0, 0.0]
    h = 1e-6
    fd = np.stack([(p.value(x + h * e) - p.value(x - h * e)) / (2 * h) for e in np.eye(3)], -1)
    v, g = p.value_and_grad(x)
    assert np.allclose(v, p.value(x), rtol=0, atol=0)
    assert np.max(np.abs(fd - g)) < 1e-6
    assert np.max(np.abs(p.grad(x) - g)) < 1e-14


@pytest.mark.parametrize("p", FAMILIES[:5], ids=lambda p: type(p).__name__)
def test_pickle_round_trip(p, rng):
    x = rng.normal(size=(5, 3))
    q = pickle.loads(pickle.dumps(p))
    assert np.array_equal(q.value(x), p.value(x))


def test_sup_bounds(rng):
    x = rng.normal(size=(2000, 3)) * 4
    for p in [Constant(), GaussianBump(), RadialIncreasing(), Slab()]:
        assert np.all(p.value(x) <= p.sup + 1e-14)
    assert AffineRadial().sup is None or np.all(AffineRadial().value(x) <= AffineRadial().sup)


def test_truncated_vanishes_outside():
    t = Truncated(GaussianBump(), 3.0)
    x = np.array([[4.01, 0, 0], [0, 5.0, 0]])
    assert np.all(t.value(x) == 0) and np.all(t.grad(x) == 0)
    assert t.value(np.array([[1.0, 0, 0]])) == pytest.approx(GaussianBump().value(np.array([[1.0, 0, 0]])))
    with pytest.raises(ValueError):
        Truncated(Constant(), 0.0)


def test_make_prescription():
    assert isinstance(make_prescription("constant", [3]), Constant)
    assert make_prescription("gaussian", [2, 0.5, 2]).params == (2.0, 0.5, 2.0)
    assert isinstance(make_prescription("slab", [0, 0, 1, 0.2]), Slab)
    with pytest.raises(ValueError):
        make_prescription("quartic", [])
    with pytest.raises(ValueError):
        Constant(-1.0)


def test_ball_energy_and_threshold():
    assert sphere_area(2) == pytest.approx(4 * np.pi, rel=1e-15)
    assert ball_energy(2.0, 1.0) == pytest.approx(4 * np.pi / 3, rel=1e-15)
    assert h4_threshold(2.0) == pytest.approx(4 * np.pi / 3, rel=1e-15)


def test_check_H1_decay():
    rep = check_H1(GaussianBump())
    assert rep.passed and rep.margin > 0
    assert len(rep.details["deviation"]) == 5
    assert not check_H1(AffineRadial()).passed


def test_check_H2_gaussian_margin():
    rho, sigma = 3.0, 0.5
    rep = check_H2(GaussianBump(), rho, sigma)
    # h is radial, so |x . grad h| = c A (2 r^2 / s^2) exp(-r^2 / s^2) with c = 2, A = 1/2, s = 2
    r = np.geomspace(rho, 1000.0, 512)
    e = np.exp(-r**2 / 4)
    oracle = np.max(r**2 / 2 * e - sigma * 2 * (1 + 0.5 * e))
    assert rep.passed
    assert rep.margin == pytest.approx(-oracle, rel=1e-12)
    with pytest.raises(ValueError):
        check_H2(GaussianBump(), rho, 1.5)
    with pytest.raises(ValueError):
        check_H2(GaussianBump(), rho, sigma, n_dirs=0)


def test_check_H4_and_H3():
    rep = check_H4(4.0, Constant(2.0))
    assert rep.passed and rep.margin == pytest.approx(4 * np.pi / 3 - 4.0)
    assert not check_H4(4.2, Constant(2.0)).passed
    h3 = H3_report()
    assert h3.passed is None and h3.to_dict()["pass"] is None
